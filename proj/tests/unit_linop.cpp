#include "doctest.h"

#include <cmath>

#include "solstab/linop.hpp"
#include "solstab/rng.hpp"
#include "test_util.hpp"

using namespace solstab;
using solstab::test::axpy;
using solstab::test::rel_err;

namespace {

SpinorField plane_wave_spinor(const GridSpec& g, int mode_index, bool upper) {
    SpinorField s(g);
    const double k = g.wavenumber(mode_index);
    for (int j = 0; j < g.n; ++j) {
        const cd v = std::polar(1.0, k * g.x(j));
        (upper ? s.upper[j] : s.lower[j]) = v;
    }
    return s;
}

SpinorField theta3(const SpinorField& f) {
    SpinorField out = f;
    for (int j = 0; j < f.grid.n; ++j) out.lower[j] = -out.lower[j];
    return out;
}

} // namespace

TEST_SUITE_BEGIN("linop");

TEST_CASE("kernel relations of the assembled operator") {
    const GridSpec g = make_grid(40.0, 1024);
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    const SolitonProfile p = closed_form_profile(3.0, 2.0, g);
    const LinearizedOperator H = assemble_operator(p, nl);
    const auto [r1, r2] = kernel_residuals(H, p);
    CHECK(r1 < 1e-7);
    CHECK(r2 < 1e-5);
}

TEST_CASE("free operator is diagonal in Fourier") {
    const GridSpec g = make_grid(40.0, 256);
    const LinearizedOperator H0 = LinearizedOperator::free_operator(g, 2.0);
    const int mi = 11;
    const double k = g.wavenumber(mi);
    const SpinorField x = plane_wave_spinor(g, mi, true);
    const SpinorField y = H0.apply(x);
    double dev = 0.0;
    for (int j = 0; j < g.n; ++j)
        dev = std::max(dev, std::abs(y.upper[j] - (k * k + H0.tau()) * x.upper[j]));
    CHECK(dev < 1e-10);
    CHECK(l2_norm(y) > 0.0);
}

TEST_CASE("theta3 symmetry of H") {
    const GridSpec g = make_grid(25.0, 256);
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    const SolitonProfile p = closed_form_profile(3.0, 2.0, g);
    const LinearizedOperator H = assemble_operator(p, nl);
    Rng rng(11);
    for (int trial = 0; trial < 4; ++trial) {
        const SpinorField u = random_smooth_spinor(g, rng);
        const SpinorField v = random_smooth_spinor(g, rng);
        const cd lhs = inner_product(H.apply(u), theta3(v));
        const cd rhs = inner_product(u, theta3(H.apply(v)));
        CHECK(std::abs(lhs - rhs) < 1e-10 * (l2_norm(u) * l2_norm(v)));
    }
}

TEST_CASE("discrete spectrum of the cubic operator") {
    const GridSpec g = make_grid(25.0, 256);
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    const SolitonProfile p = closed_form_profile(3.0, 2.0, g);
    const LinearizedOperator H = assemble_operator(p, nl);
    const SpectralReport rep = discrete_spectrum(H, &p);
    CHECK(rep.zero_cluster_size >= 2);

    // lambda -> -conj(lambda) symmetry of whatever gap eigenvalues appear
    for (const cd& lam : rep.discrete_eigs) {
        bool found = false;
        for (const cd& mu : rep.discrete_eigs)
            if (std::abs(mu + std::conj(lam)) < 1e-6 * std::max(1.0, std::abs(lam)))
                found = true;
        CHECK(found);
    }
}

TEST_CASE("free operator has an empty gap") {
    const GridSpec g = make_grid(25.0, 256);
    const LinearizedOperator H0 = LinearizedOperator::free_operator(g, 2.0);
    const SpectralReport rep = discrete_spectrum(H0, nullptr);
    CHECK(rep.discrete_eigs.empty());
    CHECK(rep.zero_cluster_size == 0);
}

TEST_CASE("edge resonance probe") {
    const GridSpec g = make_grid(25.0, 256);
    const LinearizedOperator H0 = LinearizedOperator::free_operator(g, 2.0);
    const EdgeProbe free_plus = edge_resonance_probe(H0, H0.tau());
    CHECK(free_plus.resonant);
    CHECK(std::abs(free_plus.growth_rate) < 0.1);

    CHECK_THROWS(edge_resonance_probe(H0, 0.3));

    // generic potential of moderate strength: no bounded solution at the edge
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    const SolitonProfile p = closed_form_profile(3.0, 2.0, g);
    const LinearizedOperator H = assemble_operator(p, nl);
    std::vector<double> v1(H.V1()), v2(H.V2());
    for (auto& v : v1) v *= 0.3;
    for (auto& v : v2) v *= 0.15;
    const LinearizedOperator Hgen(g, 2.0, v1, v2);
    const EdgeProbe gen = edge_resonance_probe(Hgen, Hgen.tau());
    CHECK_FALSE(gen.resonant);
}

TEST_CASE("assumption A(iii) verdicts") {
    const GridSpec g = make_grid(25.0, 256);
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    const SolitonProfile p = closed_form_profile(3.0, 2.0, g);
    const LinearizedOperator H = assemble_operator(p, nl);
    const SpectralReport rep = verify_assumption_a3(H, p, nl);
    CHECK_FALSE(rep.assumption_a3_pass); // pure powers must be reported as failing

    // free case: fail with an edge-resonance reason
    SolitonProfile zero;
    zero.alpha = 2.0;
    zero.grid = g;
    zero.phi.assign(static_cast<size_t>(g.n), 0.0);
    zero.phi_alpha.assign(static_cast<size_t>(g.n), 0.0);
    const LinearizedOperator H0 = LinearizedOperator::free_operator(g, 2.0);
    const SpectralReport rep0 = verify_assumption_a3(H0, zero, nl);
    CHECK_FALSE(rep0.assumption_a3_pass);
    bool has_edge_reason = false;
    for (const auto& r : rep0.failure_reasons)
        if (r.find("edge resonance") != std::string::npos) has_edge_reason = true;
    CHECK(has_edge_reason);
}

TEST_CASE("kernel residuals shrink under refinement") {
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    const GridSpec g1 = make_grid(40.0, 1024);
    const GridSpec g2 = make_grid(40.0, 2048);
    const SolitonProfile p1 = shoot_profile(nl, 2.0, g1);
    const SolitonProfile p2 = shoot_profile(nl, 2.0, g2);
    const auto [a1, b1] = kernel_residuals(assemble_operator(p1, nl), p1);
    const auto [a2, b2] = kernel_residuals(assemble_operator(p2, nl), p2);
    CHECK(a1 / a2 >= 4.0);
    CHECK(b1 / b2 >= 4.0);
}

TEST_CASE("gap count is stable under refinement") {
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    const GridSpec g1 = make_grid(25.0, 256);
    const GridSpec g2 = make_grid(25.0, 512);
    const GridSpec g3 = make_grid(35.0, 512);
    size_t counts[3];
    const GridSpec* grids[3] = {&g1, &g2, &g3};
    for (int i = 0; i < 3; ++i) {
        const SolitonProfile p = closed_form_profile(3.0, 2.0, *grids[i]);
        const LinearizedOperator H = assemble_operator(p, nl);
        counts[i] = discrete_spectrum(H, &p).discrete_eigs.size();
    }
    CHECK(counts[0] == counts[1]);
    CHECK(counts[0] == counts[2]);
}

TEST_CASE("linearity of the operator action") {
    const GridSpec g = make_grid(25.0, 256);
    const NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    const SolitonProfile p = closed_form_profile(3.0, 2.0, g);
    const LinearizedOperator H = assemble_operator(p, nl);
    Rng rng(2);
    const SpinorField u = random_smooth_spinor(g, rng);
    const SpinorField v = random_smooth_spinor(g, rng);
    const cd a(0.3, -1.1), b(2.0, 0.7);
    const SpinorField lhs = H.apply(axpy(a, u, b, v));
    const SpinorField rhs = axpy(a, H.apply(u), b, H.apply(v));
    CHECK(solstab::test::field_diff_l2(lhs, rhs) < 1e-12 * (l2_norm(lhs) + 1.0));
}

TEST_SUITE_END();
