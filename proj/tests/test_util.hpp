#pragma once

#include <cmath>

#include "solstab/grid.hpp"

namespace solstab::test {

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

inline double field_diff_l2(const SpinorField& a, const SpinorField& b) {
    double s = 0.0;
    for (int j = 0; j < a.grid.n; ++j) {
        s += std::norm(a.upper[j] - b.upper[j]);
        s += std::norm(a.lower[j] - b.lower[j]);
    }
    return std::sqrt(s * a.grid.spacing);
}

inline double field_diff_l2(const ComplexField& a, const ComplexField& b) {
    double s = 0.0;
    for (int j = 0; j < a.grid.n; ++j) s += std::norm(a.values[j] - b.values[j]);
    return std::sqrt(s * a.grid.spacing);
}

inline ComplexField plane_wave(const GridSpec& g, int mode_index) {
    ComplexField f(g);
    const double k = g.wavenumber(mode_index);
    for (int j = 0; j < g.n; ++j) f.values[j] = std::polar(1.0, k * g.x(j));
    return f;
}

inline SpinorField axpy(cd a, const SpinorField& x, cd b, const SpinorField& y) {
    SpinorField out(x.grid);
    for (int j = 0; j < x.grid.n; ++j) {
        out.upper[j] = a * x.upper[j] + b * y.upper[j];
        out.lower[j] = a * x.lower[j] + b * y.lower[j];
    }
    return out;
}

} // namespace solstab::test
