#include "solstab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace solstab {

namespace {
std::mutex plan_mutex;
std::map<int, FftPlan*>& plan_registry() {
    static std::map<int, FftPlan*> reg;
    return reg;
}
} // namespace

FftPlan::FftPlan(int n) : n_(n) {
    std::vector<cd> buf(static_cast<size_t>(n));
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    fwd_ = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) throw std::runtime_error("fftw plan creation failed");
}

const FftPlan& FftPlan::get(int n) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto& reg = plan_registry();
    auto it = reg.find(n);
    if (it == reg.end()) it = reg.emplace(n, new FftPlan(n)).first;
    return *it->second;
}

void FftPlan::forward(const cd* in, cd* out) const {
    fftw_execute_dft(static_cast<fftw_plan>(fwd_),
                     reinterpret_cast<fftw_complex*>(const_cast<cd*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    const double s = 1.0 / n_;
    for (int i = 0; i < n_; ++i) out[i] *= s;
}

void FftPlan::backward(const cd* in, cd* out) const {
    fftw_execute_dft(static_cast<fftw_plan>(bwd_),
                     reinterpret_cast<fftw_complex*>(const_cast<cd*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

void fft_forward(std::vector<cd>& v) {
    FftPlan::get(static_cast<int>(v.size())).forward(v.data(), v.data());
}

void fft_backward(std::vector<cd>& v) {
    FftPlan::get(static_cast<int>(v.size())).backward(v.data(), v.data());
}

} // namespace solstab
