#include "doctest.h"

#include <cmath>

#include "solstab/grid.hpp"
#include "solstab/rng.hpp"
#include "test_util.hpp"

using namespace solstab;
using solstab::test::field_diff_l2;
using solstab::test::plane_wave;
using solstab::test::rel_err;

TEST_SUITE_BEGIN("grid");

TEST_CASE("make_grid spacing and endpoints") {
    const GridSpec g = make_grid(40.0, 1024);
    CHECK(g.spacing == doctest::Approx(0.078125).epsilon(1e-15));
    CHECK_THROWS(make_grid(40.0, 15));
    CHECK_THROWS(make_grid(40.0, 14)); // even but < 16
    CHECK_THROWS(make_grid(-1.0, 64));

    const GridSpec g2 = make_grid(20.0, 512);
    CHECK(g2.x(0) == doctest::Approx(-20.0));
    CHECK(g2.x(511) == doctest::Approx(20.0 - 2.0 * 20.0 / 512.0));
}

TEST_CASE("spectral derivative on Fourier eigenfunctions") {
    const GridSpec g = make_grid(40.0, 256);
    const int mi = 7;
    const double k = g.wavenumber(mi);
    ComplexField f = plane_wave(g, mi);
    const ComplexField df = spectral_derivative(f, 1);
    double err = 0.0;
    for (int j = 0; j < g.n; ++j)
        err = std::max(err, std::abs(df.values[j] - cd(0.0, k) * f.values[j]));
    CHECK(err < 1e-12);

    ComplexField c(g);
    for (auto& v : c.values) v = 3.7;
    const ComplexField d2 = spectral_derivative(c, 2);
    CHECK(linf_norm(d2) < 1e-12);

    CHECK_THROWS(spectral_derivative(f, 3));
}

TEST_CASE("sech second derivative closed form") {
    const GridSpec g = make_grid(40.0, 1024);
    ComplexField f(g);
    for (int j = 0; j < g.n; ++j) f.values[j] = 1.0 / std::cosh(g.x(j));
    const ComplexField d2 = spectral_derivative(f, 2);
    // sech'' = sech - 2 sech^3
    double num = 0.0, den = 0.0;
    for (int j = 0; j < g.n; ++j) {
        const double s = 1.0 / std::cosh(g.x(j));
        const double want = s - 2.0 * s * s * s;
        num += std::norm(d2.values[j] - want);
        den += want * want;
    }
    CHECK(std::sqrt(num / den) < 1e-10);
}

TEST_CASE("norm suite values and homogeneity") {
    const GridSpec g = make_grid(40.0, 1024);
    ComplexField z(g);
    const NormSuite n0 = norm_suite(z);
    CHECK(n0.l2 == 0.0);
    CHECK(n0.sigma == 0.0);

    ComplexField f(g);
    for (int j = 0; j < g.n; ++j) f.values[j] = std::sqrt(2.0) / std::cosh(g.x(j));
    const NormSuite ns = norm_suite(f, std::array<double, 1>{3.0});
    CHECK(std::abs(ns.l2 * ns.l2 - 4.0) < 1e-8);
    CHECK(ns.lp.count(3.0) == 1);
    CHECK(ns.sigma >= ns.h2);

    ComplexField f2 = f;
    for (auto& v : f2.values) v *= 2.0;
    const NormSuite n2 = norm_suite(f2);
    CHECK(rel_err(n2.l2, 2.0 * ns.l2) < 1e-13);
    CHECK(rel_err(n2.h2, 2.0 * ns.h2) < 1e-13);
    CHECK(rel_err(n2.sigma, 2.0 * ns.sigma) < 1e-13);
    CHECK(rel_err(n2.weighted_x2, 2.0 * ns.weighted_x2) < 1e-13);
}

TEST_CASE("parseval") {
    const GridSpec g = make_grid(30.0, 512);
    Rng rng(42);
    ComplexField f = random_smooth_field(g, rng);
    const std::vector<cd> freq = to_frequency(f);
    double fsum = 0.0;
    for (const cd& z : freq) fsum += std::norm(z);
    const double l2f = std::sqrt(fsum * 2.0 * g.half_width);
    CHECK(rel_err(l2f, l2_norm(f)) < 1e-12);
}

TEST_CASE("first derivative twice equals second derivative on band-limited fields") {
    const GridSpec g = make_grid(30.0, 256);
    Rng rng(7);
    std::vector<cd> freq(static_cast<size_t>(g.n), cd(0.0));
    for (int m = 0; m < g.n; ++m)
        if (std::abs(g.mode(m)) <= g.n / 4) freq[static_cast<size_t>(m)] = rng.complex_normal();
    const ComplexField f = from_frequency(g, std::move(freq));
    const ComplexField d11 = spectral_derivative(spectral_derivative(f, 1), 1);
    const ComplexField d2 = spectral_derivative(f, 2);
    CHECK(field_diff_l2(d11, d2) < 1e-10 * std::max(1.0, l2_norm(d2)));
}

TEST_CASE("galilean multiplier") {
    const GridSpec g = make_grid(40.0, 512);
    CHECK_THROWS(galilean_multiplier(0.0, g));
    CHECK_THROWS(galilean_multiplier(-2.0, g));

    const ComplexField far = galilean_multiplier(1e12, g);
    double dev = 0.0;
    for (const cd& z : far.values) dev = std::max(dev, std::abs(z - 1.0));
    CHECK(dev < g.half_width * g.half_width / (4.0 * 1e12) + 1e-15);

    const ComplexField ph = galilean_multiplier(20.0, g);
    CHECK(std::abs(ph.values[g.n / 2] - 1.0) < 1e-15); // x = 0

    Rng rng(3);
    ComplexField f = random_smooth_field(g, rng);
    const double before = l2_norm(f);
    ComplexField fp = f;
    apply_phase(fp, ph);
    CHECK(rel_err(l2_norm(fp), before) < 1e-14);
    CHECK(rel_err(lp_norm(fp, 4.0), lp_norm(f, 4.0)) < 1e-14);

    // conjugate application restores the field
    ComplexField conj_ph(g);
    for (int j = 0; j < g.n; ++j) conj_ph.values[j] = std::conj(ph.values[j]);
    apply_phase(fp, conj_ph);
    CHECK(field_diff_l2(fp, f) < 1e-14 * before + 1e-15);
}

TEST_CASE("spinor conjugate pair flag") {
    const GridSpec g = make_grid(30.0, 128);
    Rng rng(5);
    const ComplexField f = random_smooth_field(g, rng);
    const SpinorField s = spinor_from_field(f);
    CHECK(s.conjugate_pair);
    CHECK(conjugate_pair_defect(s) == 0.0);
}

TEST_SUITE_END();
