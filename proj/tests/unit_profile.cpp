#include "doctest.h"

#include <cmath>

#include "solstab/profile.hpp"
#include "test_util.hpp"

using namespace solstab;
using solstab::test::rel_err;

TEST_SUITE_BEGIN("profile");

TEST_CASE("closed form cubic soliton") {
    const GridSpec g = make_grid(40.0, 1024);
    const SolitonProfile p = closed_form_profile(3.0, 2.0, g);
    CHECK(rel_err(p.phi[static_cast<size_t>(g.n / 2)], std::sqrt(2.0)) < 1e-14);
    CHECK(std::abs(p.mass - 4.0) < 1e-8);
    CHECK(std::abs(p.mass_dalpha - 2.0) < 1e-6);
    CHECK(p.ode_residual < 1e-8);
    CHECK(p.phi.front() < 1e-10);

    // evenness about x = 0
    double dev = 0.0;
    for (int j = 1; j < g.n / 2; ++j)
        dev = std::max(dev, std::abs(p.phi[static_cast<size_t>(j)] -
                                     p.phi[static_cast<size_t>(g.n - j)]));
    CHECK(dev < 1e-10);

    // quadrature mass agrees with the closed form
    double qm = 0.0;
    for (double v : p.phi) qm += v * v;
    CHECK(std::abs(qm * g.spacing - 4.0) < 1e-8);

    // phi_alpha(0) = 1/sqrt(2)
    CHECK(rel_err(p.phi_alpha[static_cast<size_t>(g.n / 2)], 1.0 / std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("shooting matches the closed form for pure power") {
    const GridSpec g = make_grid(40.0, 1024);
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    const SolitonProfile shot = shoot_profile(nl, 2.0, g);
    const SolitonProfile exact = closed_form_profile(3.0, 2.0, g);
    double dev = 0.0;
    for (int j = 0; j < g.n; ++j)
        dev = std::max(dev, std::abs(shot.phi[static_cast<size_t>(j)] -
                                     exact.phi[static_cast<size_t>(j)]));
    CHECK(dev < 1e-6);
    CHECK(shot.ode_residual < 1e-8);
    CHECK(std::abs(shot.mass_dalpha - 2.0) < 1e-4);
}

TEST_CASE("shooting for a combined nonlinearity") {
    const GridSpec g = make_grid(40.0, 1024);
    const NonlinearitySpec nl = NonlinearitySpec::combined({{1.0, 1.0}, {0.1, 2.0}});
    const SolitonProfile p = shoot_profile(nl, 2.0, g);
    CHECK(p.ode_residual < 1e-8);
    for (double v : p.phi) CHECK(v >= -1e-14);
    double dev = 0.0;
    for (int j = 1; j < g.n / 2; ++j)
        dev = std::max(dev, std::abs(p.phi[static_cast<size_t>(j)] -
                                     p.phi[static_cast<size_t>(g.n - j)]));
    CHECK(dev < 1e-10);
}

TEST_CASE("shooting preconditions") {
    const GridSpec g = make_grid(40.0, 1024);
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    CHECK_THROWS(shoot_profile(nl, 0.0, g));
    CHECK_THROWS(shoot_profile(nl, -1.0, g));
}

TEST_CASE("alpha derivative by finite differences") {
    const GridSpec g = make_grid(40.0, 1024);
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    SolitonProfile p = shoot_profile(nl, 2.0, g);
    profile_alpha_derivative(nl, p, 5e-3);
    CHECK(rel_err(p.phi_alpha[static_cast<size_t>(g.n / 2)], 1.0 / std::sqrt(2.0)) < 1e-4);

    // chain rule: d/dalpha ||phi||^2 = <2 phi, phi_alpha>
    double ip = 0.0;
    for (int j = 0; j < g.n; ++j)
        ip += 2.0 * p.phi[static_cast<size_t>(j)] * p.phi_alpha[static_cast<size_t>(j)];
    CHECK(rel_err(ip * g.spacing, p.mass_dalpha) < 1e-4);

    CHECK_THROWS(profile_alpha_derivative(nl, p, 0.1));
    CHECK_THROWS(profile_alpha_derivative(nl, p, 1e-5));
}

TEST_CASE("scaling of the cubic family") {
    const GridSpec g = make_grid(40.0, 1024);
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    for (double alpha : {1.6, 2.0, 2.4}) {
        const SolitonProfile p = shoot_profile(nl, alpha, g);
        CHECK(rel_err(p.phi[static_cast<size_t>(g.n / 2)], alpha / std::sqrt(2.0)) < 1e-6);
        CHECK(rel_err(p.mass, 2.0 * alpha) < 1e-6);
    }
}

TEST_CASE("hypothesis B gate") {
    const GridSpec g = make_grid(40.0, 1024);
    const SolitonProfile cubic = closed_form_profile(3.0, 2.0, g);
    CHECK_NOTHROW(require_hypothesis_b(cubic));
    // p = 5 is mass-critical: d/dalpha ||phi||^2 = 0
    const SolitonProfile critical = closed_form_profile(5.0, 2.0, g);
    CHECK(std::abs(critical.mass_dalpha) < 1e-10);
    CHECK_THROWS(require_hypothesis_b(critical));
}

TEST_CASE("soliton field phases") {
    const GridSpec g = make_grid(40.0, 512);
    const SolitonProfile p = closed_form_profile(3.0, 2.0, g);
    const ComplexField w0 = soliton_field(p, 0.0);
    for (int j = 0; j < g.n; ++j) {
        CHECK(w0.values[j].imag() == 0.0);
        CHECK(w0.values[j].real() >= 0.0);
    }
    const ComplexField wpi = soliton_field(p, std::acos(-1.0));
    double dev = 0.0;
    for (int j = 0; j < g.n; ++j)
        dev = std::max(dev, std::abs(wpi.values[j] + p.phi[static_cast<size_t>(j)]));
    CHECK(dev < 1e-14);
    for (double beta : {0.3, 1.9}) {
        const ComplexField w = soliton_field(p, beta);
        CHECK(rel_err(l2_norm(w) * l2_norm(w), p.mass) < 1e-8);
    }
}

TEST_SUITE_END();
