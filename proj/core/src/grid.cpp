#include "solstab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace solstab {

namespace {
constexpr double pi = std::numbers::pi;

void check_finite(const std::vector<cd>& v, const char* what) {
    for (const cd& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::invalid_argument(std::string(what) + ": non-finite entry");
}
} // namespace

double GridSpec::wavenumber(int m) const {
    return pi / half_width * mode(m);
}

GridSpec make_grid(double half_width, int n) {
    if (half_width <= 0.0) throw std::invalid_argument("make_grid: L must be positive");
    if (n < 16 || n % 2 != 0)
        throw std::invalid_argument("make_grid: N too small/odd (need even N >= 16)");
    GridSpec g;
    g.half_width = half_width;
    g.n = n;
    g.spacing = 2.0 * half_width / n;
    return g;
}

ComplexField::ComplexField(const GridSpec& g, std::vector<cd> v) : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != g.n)
        throw std::invalid_argument("ComplexField: length mismatch with grid");
    check_finite(values, "ComplexField");
}

SpinorField spinor_from_field(const ComplexField& f) {
    SpinorField s(f.grid);
    s.upper = f.values;
    for (int j = 0; j < f.grid.n; ++j) s.lower[j] = std::conj(f.values[j]);
    s.conjugate_pair = true;
    return s;
}

double conjugate_pair_defect(const SpinorField& s) {
    double d = 0.0;
    for (int j = 0; j < s.grid.n; ++j)
        d = std::max(d, std::abs(s.lower[j] - std::conj(s.upper[j])));
    return d;
}

std::vector<cd> to_frequency(const ComplexField& f) {
    std::vector<cd> v = f.values;
    fft_forward(v);
    return v;
}

ComplexField from_frequency(const GridSpec& g, std::vector<cd> freq) {
    fft_backward(freq);
    ComplexField f(g);
    f.values = std::move(freq);
    return f;
}

void spectral_derivative_inplace(std::vector<cd>& vals, const GridSpec& g, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("spectral_derivative: order must be 1 or 2");
    fft_forward(vals);
    const int n = g.n;
    for (int m = 0; m < n; ++m) {
        const double k = g.wavenumber(m);
        if (order == 1) {
            // Nyquist mode has no well-defined odd derivative on the real grid
            vals[m] *= (g.mode(m) == -n / 2) ? cd(0.0) : cd(0.0, k);
        } else {
            vals[m] *= -k * k;
        }
    }
    fft_backward(vals);
}

ComplexField spectral_derivative(const ComplexField& f, int order) {
    check_finite(f.values, "spectral_derivative");
    ComplexField out = f;
    spectral_derivative_inplace(out.values, f.grid, order);
    return out;
}

double l2_norm(const ComplexField& f) {
    double s = 0.0;
    for (const cd& z : f.values) s += std::norm(z);
    return std::sqrt(s * f.grid.spacing);
}

double lp_norm(const ComplexField& f, double p) {
    if (p <= 0.0) throw std::invalid_argument("lp_norm: p must be positive");
    if (!std::isfinite(p)) return linf_norm(f);
    double s = 0.0;
    for (const cd& z : f.values) s += std::pow(std::abs(z), p);
    return std::pow(s * f.grid.spacing, 1.0 / p);
}

double linf_norm(const ComplexField& f) {
    double m = 0.0;
    for (const cd& z : f.values) m = std::max(m, std::abs(z));
    return m;
}

double l2_norm(const SpinorField& f) {
    double s = 0.0;
    for (const cd& z : f.upper) s += std::norm(z);
    for (const cd& z : f.lower) s += std::norm(z);
    return std::sqrt(s * f.grid.spacing);
}

double linf_norm(const SpinorField& f) {
    double m = 0.0;
    for (const cd& z : f.upper) m = std::max(m, std::abs(z));
    for (const cd& z : f.lower) m = std::max(m, std::abs(z));
    return m;
}

cd inner_product(const ComplexField& a, const ComplexField& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("inner_product: grid mismatch");
    cd s(0.0);
    for (int j = 0; j < a.grid.n; ++j) s += a.values[j] * std::conj(b.values[j]);
    return s * a.grid.spacing;
}

cd inner_product(const SpinorField& a, const SpinorField& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("inner_product: grid mismatch");
    cd s(0.0);
    for (int j = 0; j < a.grid.n; ++j) {
        s += a.upper[j] * std::conj(b.upper[j]);
        s += a.lower[j] * std::conj(b.lower[j]);
    }
    return s * a.grid.spacing;
}

NormSuite norm_suite(const ComplexField& f, std::span<const double> extra_p) {
    check_finite(f.values, "norm_suite");
    const GridSpec& g = f.grid;
    NormSuite ns;
    ns.l2 = l2_norm(f);
    ns.linf = linf_norm(f);

    // H^2 via (1 + k^2 + k^4)^{1/2} in frequency
    std::vector<cd> freq = to_frequency(f);
    double h2sq = 0.0;
    for (int m = 0; m < g.n; ++m) {
        const double k = g.wavenumber(m);
        h2sq += (1.0 + k * k + k * k * k * k) * std::norm(freq[m]);
    }
    ns.h2 = std::sqrt(h2sq * 2.0 * g.half_width);

    ComplexField du = spectral_derivative(f, 1);
    double wx = 0.0, wx2 = 0.0, wdx = 0.0;
    for (int j = 0; j < g.n; ++j) {
        const double x = g.x(j);
        wx += x * x * std::norm(f.values[j]);
        wx2 += x * x * x * x * std::norm(f.values[j]);
        wdx += x * x * std::norm(du.values[j]);
    }
    ns.weighted_x = std::sqrt(wx * g.spacing);
    ns.weighted_x2 = std::sqrt(wx2 * g.spacing);
    ns.sigma = ns.h2 + std::sqrt(wdx * g.spacing) + ns.weighted_x2;

    double edge = 0.0;
    const int strip = std::max(1, g.n / 20);
    for (int j = 0; j < strip; ++j) {
        edge = std::max(edge, std::abs(f.values[j]));
        edge = std::max(edge, std::abs(f.values[g.n - 1 - j]));
    }
    ns.boundary_ratio = ns.linf > 0.0 ? edge / ns.linf : 0.0;

    for (double p : extra_p) ns.lp[p] = lp_norm(f, p);
    return ns;
}

ComplexField galilean_multiplier(double t, const GridSpec& grid) {
    if (t <= 0.0) throw std::invalid_argument("galilean_multiplier: t must be positive");
    ComplexField phase(grid);
    for (int j = 0; j < grid.n; ++j) {
        const double x = grid.x(j);
        phase.values[j] = std::polar(1.0, x * x / (4.0 * t));
    }
    return phase;
}

void apply_phase(ComplexField& f, const ComplexField& phase) {
    if (!(f.grid == phase.grid)) throw std::invalid_argument("apply_phase: grid mismatch");
    for (int j = 0; j < f.grid.n; ++j) f.values[j] *= phase.values[j];
}

std::vector<double> boundary_taper(const GridSpec& g, double edge_fraction) {
    std::vector<double> m(static_cast<size_t>(g.n), 1.0);
    const double x0 = (1.0 - edge_fraction) * g.half_width;
    for (int j = 0; j < g.n; ++j) {
        const double ax = std::abs(g.x(j));
        if (ax > x0) {
            const double s = (ax - x0) / (g.half_width - x0); // 0..1
            m[j] = 0.5 * (1.0 + std::cos(pi * std::min(1.0, s)));
        }
    }
    return m;
}

void assert_boundary_negligible(const ComplexField& f, double tol) {
    const double mx = linf_norm(f);
    if (mx == 0.0) return;
    double edge = 0.0;
    const int strip = std::max(1, f.grid.n / 20);
    for (int j = 0; j < strip; ++j) {
        edge = std::max(edge, std::abs(f.values[j]));
        edge = std::max(edge, std::abs(f.values[f.grid.n - 1 - j]));
    }
    if (edge > tol * mx)
        throw std::runtime_error("field not negligible near +-L (periodization risk)");
}

} // namespace solstab
