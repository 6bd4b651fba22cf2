#include "solstab/rng.hpp"

#include <cmath>
#include <numbers>

namespace solstab {

double Rng::uniform() {
    // 53-bit mantissa from the top bits
    return (eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
}

cd Rng::complex_normal() {
    const double re = normal();
    const double im = normal();
    return cd(re, im) * std::numbers::sqrt2 / 2.0;
}

ComplexField random_smooth_field(const GridSpec& g, Rng& rng, double kmax, double width) {
    std::vector<cd> freq(static_cast<size_t>(g.n), cd(0.0));
    for (int m = 0; m < g.n; ++m) {
        const double k = g.wavenumber(m);
        const double env = std::exp(-0.5 * (k / kmax) * (k / kmax));
        if (env > 1e-12) freq[m] = rng.complex_normal() * env;
    }
    ComplexField f = from_frequency(g, std::move(freq));
    for (int j = 0; j < g.n; ++j) {
        const double x = g.x(j);
        f.values[j] *= std::exp(-(x / width) * (x / width));
    }
    return f;
}

SpinorField random_smooth_spinor(const GridSpec& g, Rng& rng, double kmax, double width) {
    SpinorField s(g);
    s.upper = random_smooth_field(g, rng, kmax, width).values;
    s.lower = random_smooth_field(g, rng, kmax, width).values;
    s.conjugate_pair = false;
    return s;
}

ComplexField random_even_field(const GridSpec& g, Rng& rng, double kmax, double width) {
    const int nmodes = 6;
    std::vector<double> c(nmodes);
    for (double& v : c) v = rng.normal();
    ComplexField f(g);
    for (int j = 0; j < g.n; ++j) {
        const double x = g.x(j);
        double v = 0.0;
        for (int q = 0; q < nmodes; ++q)
            v += c[q] * std::cos(q * kmax / nmodes * x);
        f.values[j] = v * std::exp(-(x / width) * (x / width));
    }
    // exact evenness on the grid: symmetrize about j = 0 (x = -L self-paired)
    for (int j = 1; j < g.n / 2; ++j) {
        const cd avg = 0.5 * (f.values[j] + f.values[g.n - j]);
        f.values[j] = avg;
        f.values[g.n - j] = avg;
    }
    return f;
}

} // namespace solstab
