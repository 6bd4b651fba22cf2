#pragma once

#include <complex>
#include <vector>

namespace solstab {

using cd = std::complex<double>;

// Cached FFTW plans for one transform size. Forward transforms carry the 1/N
// factor so spectral coefficients are true Fourier-series coefficients:
//   u(x_j) = sum_m uhat[m] e^{i k_m x_j},  k_m = (pi/L) * signed(m).
// Plans are created once per size (FFTW_ESTIMATE, so planning is deterministic
// and results are bit-reproducible across runs) and shared; execution uses the
// array-execute API and is reentrant.
class FftPlan {
public:
    static const FftPlan& get(int n);

    void forward(const cd* in, cd* out) const;   // includes 1/n scaling
    void backward(const cd* in, cd* out) const;  // unscaled inverse

    int size() const { return n_; }

private:
    explicit FftPlan(int n);
    int n_;
    void* fwd_;
    void* bwd_;
};

void fft_forward(std::vector<cd>& v);
void fft_backward(std::vector<cd>& v);

} // namespace solstab
