#pragma once

#include <cstdint>
#include <random>

#include "solstab/grid.hpp"

namespace solstab {

// mt19937_64 with explicit Box-Muller so streams are pinned to the seed and
// do not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    double uniform();                    // [0, 1)
    double uniform(double a, double b);
    double normal();
    cd complex_normal();

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Smooth random field: random low-mode Fourier coefficients with a Gaussian
// spectral envelope of width kmax, localized in space by e^{-(x/width)^2}.
ComplexField random_smooth_field(const GridSpec& g, Rng& rng, double kmax = 3.0,
                                 double width = 6.0);
SpinorField random_smooth_spinor(const GridSpec& g, Rng& rng, double kmax = 3.0,
                                 double width = 6.0);
// Even (radial-class) real bump with random mode content.
ComplexField random_even_field(const GridSpec& g, Rng& rng, double kmax = 2.0,
                               double width = 5.0);

} // namespace solstab
