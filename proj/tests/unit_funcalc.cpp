#include "doctest.h"

#include <cmath>
#include <memory>
#include <numbers>

#include "solstab/commutator.hpp"
#include "solstab/funcalc.hpp"
#include "solstab/rng.hpp"
#include "test_util.hpp"

using namespace solstab;
using solstab::test::axpy;
using solstab::test::field_diff_l2;
using solstab::test::rel_err;

namespace {

struct Fixture {
    GridSpec g;
    NonlinearitySpec nl;
    SolitonProfile prof;
    LinearizedOperator H;
    SpectralReport spec;
    Contour contour;
    std::shared_ptr<ContourCalculus> calc;

    explicit Fixture(double s = 1.75, int n = 256, double L = 25.0)
        : g(make_grid(L, n)),
          nl(NonlinearitySpec::pure_power(3.0)),
          prof(closed_form_profile(3.0, 2.0, g)),
          H(assemble_operator(prof, nl)),
          spec(discrete_spectrum(H, &prof)),
          contour(build_contour(H, s, 1e-8, &spec)),
          calc(std::make_shared<ContourCalculus>(H, contour)) {}
};

SpinorField plane_spinor(const GridSpec& g, int mode_index, bool upper) {
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

TEST_SUITE_BEGIN("funcalc");

TEST_CASE("contour construction and winding") {
    Fixture fx;
    CHECK(fx.contour.a == doctest::Approx(0.5).epsilon(0.2)); // tau = 1, cluster at 0
    CHECK(fx.contour.winding_number(cd(0.0, 0.0)) == 0);
    CHECK(fx.contour.winding_number(cd(1.5, 0.0)) == 1);
    CHECK(fx.contour.winding_number(cd(-1.5, 0.0)) == 1);
    CHECK(fx.contour.winding_number(cd(0.0, 2.0)) == 0);
    CHECK(fx.contour.tail_radius_spec >= fx.contour.truncation_radius);
    CHECK_THROWS(build_contour(fx.H, 2.5, 1e-8));
    CHECK_THROWS(build_contour(fx.H, 0.0, 1e-8));
}

TEST_CASE("resolvent on the free operator is a Fourier divide") {
    const GridSpec g = make_grid(25.0, 256);
    const LinearizedOperator H0 = LinearizedOperator::free_operator(g, 2.0);
    const int mi = 9;
    const double k = g.wavenumber(mi);
    const cd lambda(0.4, 0.3);
    const SpinorField x = plane_spinor(g, mi, true);
    const SpinorField y = resolvent_apply(H0, lambda, x);
    double dev = 0.0;
    for (int j = 0; j < g.n; ++j)
        dev = std::max(dev, std::abs(y.upper[j] - x.upper[j] / (lambda - (k * k + 1.0))));
    CHECK(dev < 1e-11);
}

TEST_CASE("resolvent refuses spectrum points") {
    Fixture fx;
    Rng rng(3);
    const SpinorField x = random_smooth_spinor(fx.g, rng);
    CHECK_THROWS(resolvent_apply(fx.H, cd(0.0, 0.0), x)); // kernel of H
}

TEST_CASE("resolvent norm probe against the Lemma bracket") {
    Fixture fx;
    const cd lambda(0.5, 1.0);
    const ResolventProbe probe = resolvent_norm_probe(fx.H, lambda);
    CHECK(probe.norm_2to2 > 0.0);
    CHECK(probe.bound_bracket > 0.0);
    // a single moderate constant covers the measurement
    CHECK(probe.norm_2to2 <= 20.0 * probe.bound_bracket);
}

TEST_CASE("free fractional power matches the symbol through the direct quadrature") {
    const GridSpec g = make_grid(25.0, 256);
    const LinearizedOperator H0 = LinearizedOperator::free_operator(g, 2.0);
    for (double s : {1.0, 1.5, 1.75}) {
        const Contour contour = build_contour(H0, s, 1e-8);
        const ContourCalculus calc(H0, contour);
        for (int mi : {0, 3, 17}) {
            const double z = 1.0 + g.wavenumber(mi) * g.wavenumber(mi);
            // upper component
            SpinorField x = plane_spinor(g, mi, true);
            SpinorField y = calc.apply_power_direct(0.5 * s - 1.0, H0.apply(x));
            cd got = y.upper[g.n / 2] / x.upper[g.n / 2];
            CHECK(std::abs(got - std::pow(z, 0.5 * s)) < 1e-6 * std::pow(z, 0.5 * s));
            // lower component carries the branch-rotated symbol
            SpinorField xl = plane_spinor(g, mi, false);
            SpinorField yl = calc.apply_power_direct(0.5 * s - 1.0, H0.apply(xl));
            cd gotl = yl.lower[g.n / 2] / xl.lower[g.n / 2];
            const cd want = std::polar(std::pow(z, 0.5 * s), 0.5 * s * std::numbers::pi);
            CHECK(std::abs(gotl - want) < 1e-6 * std::abs(want));
        }
    }
}

TEST_CASE("branch choice conjugates the output on real data") {
    const GridSpec g = make_grid(25.0, 256);
    const LinearizedOperator H0 = LinearizedOperator::free_operator(g, 2.0);
    const double s = 1.75;
    ContourOptions below;
    below.branch = BranchSide::from_below;
    const Contour cup = build_contour(H0, s, 1e-8);
    const Contour cdn = build_contour(H0, s, 1e-8, nullptr, below);
    const ContourCalculus up(H0, cup), dn(H0, cdn);
    // real input field in both components
    SpinorField x(g);
    for (int j = 0; j < g.n; ++j) {
        const double b = std::exp(-0.1 * g.x(j) * g.x(j));
        x.upper[j] = b;
        x.lower[j] = 0.7 * b;
    }
    const SpinorField yu = up.apply_power_direct(0.5 * s - 1.0, H0.apply(x));
    const SpinorField yd = dn.apply_power_direct(0.5 * s - 1.0, H0.apply(x));
    double dev = 0.0;
    for (int j = 0; j < g.n; ++j) {
        dev = std::max(dev, std::abs(yd.upper[j] - std::conj(yu.upper[j])));
        dev = std::max(dev, std::abs(yd.lower[j] - std::conj(yu.lower[j])));
    }
    CHECK(dev < 1e-8 * linf_norm(yu));
}

TEST_CASE("peeled and direct evaluations agree on the perturbed operator") {
    Fixture fx;
    Rng rng(11);
    const SpinorField x = random_smooth_spinor(fx.g, rng);
    const SpinorField y = fx.H.apply(x);
    const SpinorField peeled = fx.calc->apply_power(0.5 * 1.75 - 1.0, y);
    const SpinorField direct = fx.calc->apply_power_direct(0.5 * 1.75 - 1.0, y);
    CHECK(field_diff_l2(peeled, direct) < 2e-5 * l2_norm(peeled));
}

TEST_CASE("fractional power annihilates the generalized kernel") {
    Fixture fx;
    const SpinorField x1 = xi1(fx.prof);
    const SpinorField x2 = xi2(fx.prof);
    const SpinorField y1 = fractional_power_apply(fx.H, 1.75, x1, *fx.calc);
    const SpinorField y2 = fractional_power_apply(fx.H, 1.75, x2, *fx.calc);
    const double scale1 = norm_suite(ComplexField(fx.g, x1.upper)).h2;
    CHECK(l2_norm(y1) < 1e-6 * scale1);
    CHECK(l2_norm(y2) < 1e-5 * scale1);
}

TEST_CASE("continuous projector") {
    Fixture fx;
    const ContinuousProjector pc = continuous_projector(fx.H, fx.calc);
    const SpinorField p1 = pc.apply(xi1(fx.prof));
    const SpinorField p2 = pc.apply(xi2(fx.prof));
    CHECK(l2_norm(p1) < 1e-6 * l2_norm(xi1(fx.prof)));
    CHECK(l2_norm(p2) < 1e-6 * l2_norm(xi2(fx.prof)));

    Rng rng(17);
    for (int trial = 0; trial < 3; ++trial) {
        const SpinorField v = random_smooth_spinor(fx.g, rng);
        const SpinorField pv = pc.apply(v);
        const SpinorField ppv = pc.apply(pv);
        CHECK(field_diff_l2(ppv, pv) < 1e-6 * std::max(1.0, l2_norm(pv)));
        // theta3-orthogonality against the discrete modes
        const cd ip1 = inner_product(pv, theta3(xi1(fx.prof)));
        const cd ip2 = inner_product(pv, theta3(xi2(fx.prof)));
        CHECK(std::abs(ip1) < 1e-8 * l2_norm(v) * l2_norm(xi1(fx.prof)));
        CHECK(std::abs(ip2) < 1e-8 * l2_norm(v) * l2_norm(xi2(fx.prof)));
    }
}

TEST_CASE("projector agrees with the eigendecomposition route") {
    Fixture fx;
    const ContinuousProjector pc = continuous_projector(fx.H, fx.calc);
    const Eigen::MatrixXcd dense = eigenbasis_continuous_projector(fx.H, fx.spec.zero_cluster_tol);
    Rng rng(23);
    for (int trial = 0; trial < 3; ++trial) {
        const SpinorField v = random_smooth_spinor(fx.g, rng);
        const SpinorField a = pc.apply(v);
        const SpinorField b = apply_dense(dense, v);
        CHECK(field_diff_l2(a, b) < 1e-5 * std::max(1.0, l2_norm(v)));
    }
}

TEST_CASE("inverse and semigroup relations on the continuous subspace") {
    Fixture fx;
    const double s = 1.75;
    const ContinuousProjector pc = continuous_projector(fx.H, fx.calc);
    Rng rng(29);
    const SpinorField v = pc.apply(random_smooth_spinor(fx.g, rng));

    // round trip [H]^{-s/2} H^{s/2} v = v
    const SpinorField hs = fractional_power_apply(fx.H, s, v, *fx.calc);
    const SpinorField back = negative_power_apply(fx.H, -0.5 * s, hs, *fx.calc);
    CHECK(field_diff_l2(back, v) < 1e-5 * l2_norm(v));

    // negative-power semigroup
    const SpinorField nb1 = negative_power_apply(fx.H, -0.6, v, *fx.calc);
    const SpinorField nb2 = negative_power_apply(fx.H, -0.9, nb1, *fx.calc);
    const SpinorField nboth = negative_power_apply(fx.H, -1.5, v, *fx.calc);
    CHECK(field_diff_l2(nb2, nboth) < 1e-5 * l2_norm(nboth));

    // half-power semigroup through the positive calculus
    const SpinorField h1 = fractional_power_apply(fx.H, 0.5 * s, v, *fx.calc);
    const SpinorField h2 = fractional_power_apply(fx.H, 0.5 * s, h1, *fx.calc);
    CHECK(field_diff_l2(h2, hs) < 1e-5 * l2_norm(hs));
}

TEST_CASE("contour independence") {
    Fixture fx;
    ContourOptions opt;
    opt.a = 0.5 * (fx.contour.a + fx.H.tau());
    const Contour cprime = build_contour(fx.H, fx.contour.s, fx.contour.tol, &fx.spec, opt);
    const ContourCalculus calc2(fx.H, cprime);
    Rng rng(31);
    const SpinorField v = random_smooth_spinor(fx.g, rng);
    for (double beta : {-1.0, -0.875}) {
        const SpinorField a = fx.calc->apply_power(beta, v);
        const SpinorField b = calc2.apply_power(beta, v);
        CHECK(field_diff_l2(a, b) < 1e-6 * std::max(1.0, l2_norm(a)));
    }
}

TEST_CASE("quadrature converges under panel refinement") {
    Fixture coarse(1.75);
    ContourOptions fine_opt;
    fine_opt.gl_order = 24;
    fine_opt.panel_growth = 1.25;
    for (double s : {1.0, 1.75}) {
        const Contour cc = build_contour(coarse.H, s, 1e-8, &coarse.spec);
        const Contour cf = build_contour(coarse.H, s, 1e-8, &coarse.spec, fine_opt);
        const ContourCalculus calc_c(coarse.H, cc), calc_f(coarse.H, cf);
        Rng rng(37);
        const SpinorField x = random_smooth_spinor(coarse.g, rng);
        const SpinorField y = coarse.H.apply(x);
        const SpinorField a = calc_c.apply_power(0.5 * s - 1.0, y);
        const SpinorField b = calc_f.apply_power(0.5 * s - 1.0, y);
        CHECK(field_diff_l2(a, b) < 1e-8 * std::max(1.0, l2_norm(a)));
    }
}

TEST_CASE("difference from the free power is Lp-bounded") {
    Fixture fx;

    // zero input guard
    const SpinorField z(fx.g);
    const FreeComparison zc = compare_to_free(fx.H, 1.75, z, *fx.calc);
    CHECK(zc.ratio_l2 == 0.0);

    // V = 0: difference vanishes
    const LinearizedOperator H0 = LinearizedOperator::free_operator(fx.g, 2.0);
    const Contour c0 = build_contour(H0, 1.75, 1e-8);
    const ContourCalculus calc0(H0, c0);
    Rng rng(41);
    const SpinorField w = random_smooth_spinor(fx.g, rng);
    const FreeComparison f0 = compare_to_free(H0, 1.75, w, calc0);
    CHECK(f0.ratio_l2 < 1e-9);

    // plane-wave-modulated bumps: H2 norm grows, the ratio stays bounded
    double ratio_low = 0.0, ratio_high = 0.0, h2_low = 0.0, h2_high = 0.0;
    for (int k : {2, 80}) {
        SpinorField x(fx.g);
        for (int j = 0; j < fx.g.n; ++j) {
            const double xx = fx.g.x(j);
            const cd mod = std::polar(1.0, fx.g.wavenumber(k) * xx);
            x.upper[j] = mod * std::exp(-0.08 * xx * xx);
            x.lower[j] = 0.5 * std::conj(mod) * std::exp(-0.08 * xx * xx);
        }
        const FreeComparison fc = compare_to_free(fx.H, 1.75, x, *fx.calc);
        const double h2 = norm_suite(ComplexField(fx.g, x.upper)).h2;
        if (k == 2) {
            ratio_low = fc.ratio_l2;
            h2_low = h2;
        } else {
            ratio_high = fc.ratio_l2;
            h2_high = h2;
        }
    }
    CHECK(h2_high > 20.0 * h2_low);
    CHECK(ratio_high < 5.0 * std::max(ratio_low, 1e-6));
}

TEST_CASE("sampled Sobolev-type bound on the continuous subspace") {
    Fixture fx(1.75, 256, 25.0);
    const ContinuousProjector pc = continuous_projector(fx.H, fx.calc);
    Rng rng(43);
    double worst = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
        const SpinorField v = pc.apply(random_smooth_spinor(fx.g, rng));
        const SpinorField hv = fractional_power_apply(fx.H, 1.75, v, *fx.calc);
        const double num = linf_norm(v);
        const double den = l2_norm(hv);
        if (den > 1e-12) worst = std::max(worst, num / den);
    }
    CHECK(worst > 0.0);
    CHECK(worst < 100.0); // a single moderate constant covers the sample
}

TEST_SUITE_END();
