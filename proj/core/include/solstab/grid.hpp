#pragma once

#include <complex>
#include <map>
#include <span>
#include <vector>

#include "solstab/fft.hpp"

namespace solstab {

// Uniform periodic grid on [-L, L). N points, x_j = -L + j*h, h = 2L/N.
struct GridSpec {
    double half_width = 0.0; // L
    int n = 0;               // N, even, >= 16
    double spacing = 0.0;    // h = 2L/N

    double x(int j) const { return -half_width + spacing * j; }
    // Signed Fourier index for FFT bin m (0..n-1): 0,1,...,N/2-1,-N/2,...,-1.
    int mode(int m) const { return m <= n / 2 - 1 ? m : m - n; }
    // Wavenumber of bin m; the grid carries modes e^{i k x} with k = (pi/L)*mode.
    double wavenumber(int m) const;

    bool operator==(const GridSpec& o) const {
        return n == o.n && half_width == o.half_width;
    }
};

GridSpec make_grid(double half_width, int n);

struct ComplexField {
    GridSpec grid;
    std::vector<cd> values;

    ComplexField() = default;
    explicit ComplexField(const GridSpec& g) : grid(g), values(g.n, cd(0.0)) {}
    ComplexField(const GridSpec& g, std::vector<cd> v);

    int size() const { return grid.n; }
};

// Two-component field (f, g). When it represents the complexified pair
// (f, conj f) the conjugate_pair flag is set and can be checked.
struct SpinorField {
    GridSpec grid;
    std::vector<cd> upper;
    std::vector<cd> lower;
    bool conjugate_pair = false;

    SpinorField() = default;
    explicit SpinorField(const GridSpec& g)
        : grid(g), upper(g.n, cd(0.0)), lower(g.n, cd(0.0)) {}

    int size() const { return grid.n; }
};

// Builds (f, conj f) and sets the flag.
SpinorField spinor_from_field(const ComplexField& f);
// Max |lower - conj(upper)|; used to assert the conjugate_pair invariant.
double conjugate_pair_defect(const SpinorField& s);

struct NormSuite {
    double l2 = 0.0;
    double linf = 0.0;
    double h2 = 0.0;
    double sigma = 0.0;       // h2 + || |x| u' ||_2 + || |x|^2 u ||_2
    double weighted_x = 0.0;  // || |x| u ||_2
    double weighted_x2 = 0.0; // || |x|^2 u ||_2
    // Largest |u| on the outer 5% of the grid relative to max |u|; weighted
    // norms are periodization-contaminated when this is not small.
    double boundary_ratio = 0.0;
    std::map<double, double> lp; // requested extra L^p norms
};

// All integrals by the trapezoid rule (= rectangle rule on the periodic grid),
// H^2 through the (1+k^2+k^4)^{1/2} multiplier in frequency.
NormSuite norm_suite(const ComplexField& f, std::span<const double> extra_p = {});

double l2_norm(const ComplexField& f);
double lp_norm(const ComplexField& f, double p);
double linf_norm(const ComplexField& f);
double l2_norm(const SpinorField& f);
double linf_norm(const SpinorField& f);

cd inner_product(const ComplexField& a, const ComplexField& b); // int a conj(b)
cd inner_product(const SpinorField& a, const SpinorField& b);

// Fourier-multiplier derivative of given order (1 or 2). Order 1 zeroes the
// Nyquist mode; order 2 applies -k^2 including Nyquist.
ComplexField spectral_derivative(const ComplexField& f, int order);
void spectral_derivative_inplace(std::vector<cd>& vals, const GridSpec& g, int order);

std::vector<cd> to_frequency(const ComplexField& f);
ComplexField from_frequency(const GridSpec& g, std::vector<cd> freq);

// Pointwise phases e^{i x^2 / 4t}; t > 0 required (singular at t = 0).
ComplexField galilean_multiplier(double t, const GridSpec& grid);
void apply_phase(ComplexField& f, const ComplexField& phase);

// Smooth mask ~ 1 in |x| <= (1-edge) L, -> 0 at the boundary; used when
// multiplying by the sawtooth coordinate x.
std::vector<double> boundary_taper(const GridSpec& g, double edge_fraction = 0.1);

// Throws when the field carries more than `tol` relative magnitude near +-L.
void assert_boundary_negligible(const ComplexField& f, double tol = 1e-8);

} // namespace solstab
