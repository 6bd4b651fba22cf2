#include "solstab/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace solstab {

namespace {

// F(phi^2) <= graft_level * tau defines where the asymptotic tail model takes
// over. The model carries the first nonlinear correction,
//   tail(x) = B e^{-kappa x} - sum_i d_i e^{-r_i kappa x},
//   d_i = c_i B^{r_i} / (tau (r_i^2 - 1)),  r_i = 2 q_i + 1,
// so the graft can sit this far in without losing accuracy; grafting earlier
// keeps the amplitude secant well-conditioned (d mu / dA ~ e^{kappa x_g}).
constexpr double graft_level = 1e-6;

struct TailModel {
    double kappa = 0.0;
    double B = 0.0;
    std::vector<std::pair<double, double>> dr; // (d_i, r_i)

    double value(double x) const {
        double v = B * std::exp(-kappa * x);
        for (const auto& [d, r] : dr) v -= d * std::exp(-r * kappa * x);
        return v;
    }
};

TailModel make_tail(const NonlinearitySpec& nl, double tau, double phi_g, double x_g) {
    TailModel tm;
    tm.kappa = std::sqrt(tau);
    tm.B = phi_g * std::exp(tm.kappa * x_g);
    // one fixed-point refinement of B against the value match at x_g
    for (int pass = 0; pass < 2; ++pass) {
        tm.dr.clear();
        for (const auto& [c, q] : nl.terms()) {
            const double r = 2.0 * q + 1.0;
            tm.dr.push_back({c * std::pow(tm.B, r) / (tau * (r * r - 1.0)), r});
        }
        double corr = 0.0;
        for (const auto& [d, r] : tm.dr) corr += d * std::exp(-r * tm.kappa * x_g);
        tm.B = (phi_g + corr) * std::exp(tm.kappa * x_g);
    }
    return tm;
}

// phi'(x_g) predicted by the tail model with B matched to phi(x_g)
double tail_slope(const NonlinearitySpec& nl, double tau, double phi_g, double x_g) {
    const TailModel tm = make_tail(nl, tau, phi_g, x_g);
    double s = -tm.kappa * tm.B * std::exp(-tm.kappa * x_g);
    for (const auto& [d, r] : tm.dr) s += d * r * tm.kappa * std::exp(-r * tm.kappa * x_g);
    return s;
}

struct OdeState {
    double phi;
    double dphi;
};

OdeState rhs(const NonlinearitySpec& nl, double tau, const OdeState& s) {
    return {s.dphi, tau * s.phi - nl.F(s.phi * s.phi) * s.phi};
}

OdeState rk4_step(const NonlinearitySpec& nl, double tau, const OdeState& s, double h) {
    const OdeState k1 = rhs(nl, tau, s);
    const OdeState k2 = rhs(nl, tau, {s.phi + 0.5 * h * k1.phi, s.dphi + 0.5 * h * k1.dphi});
    const OdeState k3 = rhs(nl, tau, {s.phi + 0.5 * h * k2.phi, s.dphi + 0.5 * h * k2.dphi});
    const OdeState k4 = rhs(nl, tau, {s.phi + h * k3.phi, s.dphi + h * k3.dphi});
    return {s.phi + h / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi),
            s.dphi + h / 6.0 * (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi)};
}

enum class Outcome { crossed, returned, undecided };

// Integrate from x=0 with phi(0)=a, phi'(0)=0. Overshoot amplitudes cross
// zero; undershoot amplitudes turn at a positive minimum and rebound (or, for
// small a left of the potential well, climb far above the start).
Outcome classify(const NonlinearitySpec& nl, double tau, double a, double xmax, double h) {
    OdeState s{a, 0.0};
    for (double x = 0.0; x < xmax; x += h) {
        s = rk4_step(nl, tau, s, h);
        if (s.phi < 0.0) return Outcome::crossed;
        if (!std::isfinite(s.phi) || s.phi > 1.5 * a) return Outcome::returned;
        if (s.dphi > 0.0 && s.phi < 0.95 * a) return Outcome::returned;
    }
    return Outcome::undecided;
}

// Slope mismatch against the tail model at the graft point. The homoclinic
// amplitude is its (steep) zero; trajectories that rebound or cross before
// reaching it are assigned large values of the matching sign.
double tail_mismatch(const NonlinearitySpec& nl, double tau, double a, double x_graft,
                     double h) {
    OdeState s{a, 0.0};
    const long nsteps = std::lround(x_graft / h);
    for (long i = 0; i < nsteps; ++i) {
        s = rk4_step(nl, tau, s, h);
        if (!std::isfinite(s.phi)) return 1e10;
        if (s.phi < 0.0) return -1e10;                    // overshoot
        if (s.dphi > 0.0 && s.phi < 0.5 * a) return 1e10; // undershoot rebound
    }
    return s.dphi - tail_slope(nl, tau, s.phi, x_graft);
}

// Amplitude of the homoclinic from the energy condition tau a^2 = G(a^2),
// used to seed the bisection bracket.
double energy_amplitude_guess(const NonlinearitySpec& nl, double tau) {
    auto q = [&](double y) { return tau * y - nl.G(y); };
    double ylo = 1e-8, yhi = 1e-8;
    while (yhi < 1e12 && q(yhi) > 0.0) {
        ylo = yhi;
        yhi *= 1.5;
    }
    if (q(yhi) > 0.0) return -1.0;
    for (int i = 0; i < 200; ++i) {
        const double ymid = 0.5 * (ylo + yhi);
        (q(ymid) > 0.0 ? ylo : yhi) = ymid;
    }
    return std::sqrt(0.5 * (ylo + yhi));
}

struct ShotProfile {
    std::vector<double> phi_half; // phi at x_j, j = N/2 .. N-1 (x in [0, L))
    double amplitude;
    double boundary_value; // tail value at x = L
    int j_graft = 0;
    double phi_graft = 0.0;
    double dphi_graft = 0.0;
};

// Core shooting solve on x >= 0 with dense output at the grid points.
ShotProfile shoot_half(const NonlinearitySpec& nl, double alpha, const GridSpec& g,
                       int refine) {
    if (alpha <= 0.0) throw std::invalid_argument("shoot_profile: alpha must be positive (no decay scale)");
    const double tau = 0.25 * alpha * alpha;
    // decay rate sqrt(tau) enters through the tail model
    const double L = g.half_width;
    const double h = g.spacing / refine;

    // bracket the homoclinic amplitude
    double a0 = energy_amplitude_guess(nl, tau);
    double lo = 0.0, hi = 0.0;
    if (a0 > 0.0) {
        lo = 0.9 * a0;
        hi = 1.1 * a0;
    } else {
        lo = 1e-3;
        hi = 1.0;
    }
    int guard = 0;
    while (classify(nl, tau, lo, L + 5.0, h) != Outcome::returned) {
        lo *= 0.5;
        if (++guard > 60) throw std::runtime_error("shoot_profile: no homoclinic found in bracket");
    }
    guard = 0;
    while (classify(nl, tau, hi, L + 5.0, h) != Outcome::crossed) {
        hi *= 1.6;
        if (++guard > 60) throw std::runtime_error("shoot_profile: no homoclinic found in bracket");
    }
    for (int i = 0; i < 90 && (hi - lo) > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        const Outcome oc = classify(nl, tau, mid, L + 5.0, h);
        if (oc == Outcome::undecided) break; // hugging the separatrix: converged
        (oc == Outcome::returned ? lo : hi) = mid;
    }
    double a = 0.5 * (lo + hi);

    // locate the graft point: first grid node where the nonlinearity is
    // negligible against tau (tail ODE linear to working precision); stop at
    // the descent minimum if the trajectory rebounds or crosses first
    const int nhalf = g.n / 2; // nodes x_0..x_{nhalf-1} on [0, L)
    int j_graft = -1;
    {
        OdeState s{a, 0.0};
        int j_min = 1;
        double phi_min = a;
        for (int j = 1; j < nhalf; ++j) {
            for (int r = 0; r < refine; ++r) s = rk4_step(nl, tau, s, h);
            if (s.phi <= 0.0 || (s.dphi > 0.0 && s.phi < 0.5 * a)) break;
            if (s.phi < phi_min) {
                phi_min = s.phi;
                j_min = j;
            }
            if (nl.F(s.phi * s.phi) <= graft_level * tau) {
                j_graft = j;
                break;
            }
        }
        if (j_graft < 0) j_graft = j_min;
        if (j_graft < 2)
            throw std::runtime_error("shoot_profile: resolution insufficient (no decay window)");
    }
    const double x_graft = j_graft * g.spacing;

    // secant polish of the amplitude on the tail mismatch
    {
        double a1 = a * (1.0 - 4e-13), a2 = a * (1.0 + 4e-13);
        double m1 = tail_mismatch(nl, tau, a1, x_graft, h);
        double m2 = tail_mismatch(nl, tau, a2, x_graft, h);
        for (int i = 0; i < 60 && m2 != m1; ++i) {
            const double an = a2 - m2 * (a2 - a1) / (m2 - m1);
            if (!std::isfinite(an) || an <= 0.0) break;
            a1 = a2;
            m1 = m2;
            a2 = an;
            m2 = tail_mismatch(nl, tau, a2, x_graft, h);
            if (std::abs(a2 - a1) < 1e-16 * a2) break;
        }
        if (std::abs(m2) < std::abs(tail_mismatch(nl, tau, a, x_graft, h))) a = a2;
    }

    // final dense-output integration + tail-model continuation
    ShotProfile out;
    out.amplitude = a;
    out.phi_half.assign(static_cast<size_t>(nhalf), 0.0);
    OdeState s{a, 0.0};
    out.phi_half[0] = a;
    for (int j = 1; j <= j_graft; ++j) {
        for (int r = 0; r < refine; ++r) s = rk4_step(nl, tau, s, h);
        out.phi_half[static_cast<size_t>(j)] = s.phi;
    }
    const TailModel tail = make_tail(nl, tau, s.phi, x_graft);
    for (int j = j_graft + 1; j < nhalf; ++j)
        out.phi_half[static_cast<size_t>(j)] = tail.value(j * g.spacing);
    out.boundary_value = tail.value(L);
    out.j_graft = j_graft;
    out.phi_graft = s.phi;
    out.dphi_graft = s.dphi;
    return out;
}

// d(phi)/d(alpha) by the variational equation integrated alongside phi:
//   psi'' = W psi + tau_a phi,  W = tau - F(phi^2) - 2 F'(phi^2) phi^2,
// even initial data psi'(0) = 0 with psi(0) and the tail-amplitude derivative
// B_a fixed by matching psi to d(tail)/d(alpha) at the graft point.
struct ShotVariation {
    std::vector<double> psi_half;
    double boundary_value;
};

ShotVariation variational_half(const NonlinearitySpec& nl, double alpha, const GridSpec& g,
                               int refine, const ShotProfile& shot) {
    const double tau = 0.25 * alpha * alpha;
    const double tau_a = 0.5 * alpha;
    const double kappa = 0.5 * alpha;
    const double kappa_a = 0.5;
    const double h = g.spacing / refine;
    const int nhalf = g.n / 2;
    const int jg = shot.j_graft;
    const double xg = jg * g.spacing;

    // tail-derivative coefficients: d(tail)/dalpha = B_a P(x) + Q(x)
    const TailModel tm = make_tail(nl, tau, shot.phi_graft, xg);
    auto pfun = [&](double x) {
        double v = std::exp(-kappa * x);
        for (const auto& [d, r] : tm.dr) v -= d * r / tm.B * std::exp(-r * kappa * x);
        return v;
    };
    auto dpfun = [&](double x) {
        double v = -kappa * std::exp(-kappa * x);
        for (const auto& [d, r] : tm.dr) v += d * r / tm.B * r * kappa * std::exp(-r * kappa * x);
        return v;
    };
    auto qfun = [&](double x) {
        double v = -tm.B * kappa_a * x * std::exp(-kappa * x);
        for (const auto& [d, r] : tm.dr)
            v += d * (tau_a / tau + r * kappa_a * x) * std::exp(-r * kappa * x);
        return v;
    };
    auto dqfun = [&](double x) {
        double v = -tm.B * kappa_a * (1.0 - kappa * x) * std::exp(-kappa * x);
        for (const auto& [d, r] : tm.dr)
            v += d * (r * kappa_a - r * kappa * (tau_a / tau + r * kappa_a * x)) *
                 std::exp(-r * kappa * x);
        return v;
    };

    // Backward integration from the graft point keeps the growing mode
    // damped, so psi carries only relative rounding noise. The dependence on
    // B_a is affine: run A seeds (Q, Q') with the tau_a phi source, run B
    // seeds (P, P') without it; B_a then zeroes psi'(0) (evenness).
    struct Y {
        double p, dp, sa, dsa, sb, dsb;
    };
    auto deriv = [&](const Y& y) {
        const double ph2 = y.p * y.p;
        const double w = tau - nl.F(ph2) - 2.0 * nl.dF(ph2) * ph2;
        return Y{y.dp,       tau * y.p - nl.F(ph2) * y.p,
                 y.dsa,      w * y.sa + tau_a * y.p,
                 y.dsb,      w * y.sb};
    };
    auto step = [&](Y y, double hh) {
        auto add = [](const Y& a, const Y& b, double c) {
            return Y{a.p + c * b.p,   a.dp + c * b.dp,  a.sa + c * b.sa,
                     a.dsa + c * b.dsa, a.sb + c * b.sb, a.dsb + c * b.dsb};
        };
        const Y k1 = deriv(y);
        const Y k2 = deriv(add(y, k1, 0.5 * hh));
        const Y k3 = deriv(add(y, k2, 0.5 * hh));
        const Y k4 = deriv(add(y, k3, hh));
        Y out = y;
        out = add(out, k1, hh / 6.0);
        out = add(out, k2, hh / 3.0);
        out = add(out, k3, hh / 3.0);
        out = add(out, k4, hh / 6.0);
        return out;
    };

    std::vector<double> va(static_cast<size_t>(jg + 1)), vb(static_cast<size_t>(jg + 1));
    Y y{shot.phi_graft, shot.dphi_graft, qfun(xg), dqfun(xg), pfun(xg), dpfun(xg)};
    va[static_cast<size_t>(jg)] = y.sa;
    vb[static_cast<size_t>(jg)] = y.sb;
    for (int j = jg - 1; j >= 0; --j) {
        for (int r = 0; r < refine; ++r) y = step(y, -h);
        va[static_cast<size_t>(j)] = y.sa;
        vb[static_cast<size_t>(j)] = y.sb;
    }
    if (std::abs(y.dsb) < 1e-300)
        throw std::runtime_error("shoot_profile: variational matching degenerate");
    const double b_a = -y.dsa / y.dsb;

    ShotVariation out;
    out.psi_half.assign(static_cast<size_t>(nhalf), 0.0);
    for (int j = 0; j <= jg; ++j)
        out.psi_half[static_cast<size_t>(j)] =
            va[static_cast<size_t>(j)] + b_a * vb[static_cast<size_t>(j)];
    for (int j = jg + 1; j < nhalf; ++j) {
        const double x = j * g.spacing;
        out.psi_half[static_cast<size_t>(j)] = b_a * pfun(x) + qfun(x);
    }
    out.boundary_value = b_a * pfun(g.half_width) + qfun(g.half_width);
    return out;
}

std::vector<double> mirror_to_grid(const GridSpec& g, const ShotProfile& shot) {
    // phi_half[j] = phi(x) at x = j*h for j = 0..N/2-1; extend evenly and
    // fill x = -L (j = 0 in grid indexing) by the tail value at L.
    std::vector<double> full(static_cast<size_t>(g.n), 0.0);
    const int nh = g.n / 2;
    for (int j = 0; j < nh; ++j)
        full[static_cast<size_t>(nh + j)] = shot.phi_half[static_cast<size_t>(j)];
    for (int j = 1; j < nh; ++j)
        full[static_cast<size_t>(nh - j)] = shot.phi_half[static_cast<size_t>(j)];
    full[0] = shot.boundary_value;
    return full;
}

double quadrature_mass(const GridSpec& g, const std::vector<double>& phi) {
    double s = 0.0;
    for (double v : phi) s += v * v;
    return s * g.spacing;
}

} // namespace

double profile_residual(const NonlinearitySpec& nl, double alpha, const GridSpec& g,
                        const std::vector<double>& phi) {
    const double tau = 0.25 * alpha * alpha;
    ComplexField f(g);
    for (int j = 0; j < g.n; ++j) f.values[j] = phi[static_cast<size_t>(j)];
    ComplexField d2 = spectral_derivative(f, 2);
    double s = 0.0;
    for (int j = 0; j < g.n; ++j) {
        const double v = phi[static_cast<size_t>(j)];
        const double r = d2.values[j].real() - tau * v + nl.F(v * v) * v;
        s += r * r;
    }
    return std::sqrt(s * g.spacing);
}

SolitonProfile closed_form_profile(double p, double alpha, const GridSpec& grid) {
    if (p <= 1.0) throw std::invalid_argument("closed_form_profile: need p > 1");
    if (alpha <= 0.0) throw std::invalid_argument("closed_form_profile: need alpha > 0");
    const double omega = 0.25 * alpha * alpha;
    const double r = 2.0 / (p - 1.0);
    const double c = std::pow(omega * (p + 1.0) / 2.0, 1.0 / (p - 1.0));
    const double b = (p - 1.0) * std::sqrt(omega) / 2.0;

    SolitonProfile prof;
    prof.alpha = alpha;
    prof.grid = grid;
    prof.omega = -omega;
    prof.phi.resize(static_cast<size_t>(grid.n));
    prof.phi_alpha.resize(static_cast<size_t>(grid.n));
    for (int j = 0; j < grid.n; ++j) {
        const double x = grid.x(j);
        const double sech = 1.0 / std::cosh(b * x);
        const double phi = c * std::pow(sech, r);
        prof.phi[static_cast<size_t>(j)] = phi;
        prof.phi_alpha[static_cast<size_t>(j)] =
            phi * (2.0 / ((p - 1.0) * alpha) - 0.5 * x * std::tanh(b * x));
    }

    // mass = C^2 S(4/(p-1)) / b with S(q) = sqrt(pi) Gamma(q/2) / Gamma((q+1)/2)
    const double q = 4.0 / (p - 1.0);
    const double s_int = std::sqrt(std::numbers::pi) *
                         std::exp(std::lgamma(q / 2.0) - std::lgamma((q + 1.0) / 2.0));
    prof.mass = c * c * s_int / b;
    prof.mass_dalpha = prof.mass * (5.0 - p) / ((p - 1.0) * alpha);

    NonlinearitySpec nl = NonlinearitySpec::pure_power(p);
    prof.ode_residual = profile_residual(nl, alpha, grid, prof.phi);
    if (prof.ode_residual > 1e-8)
        throw std::runtime_error("closed_form_profile: grid too coarse (residual check fails)");
    return prof;
}

SolitonProfile shoot_profile(const NonlinearitySpec& nl, double alpha, const GridSpec& grid,
                             int ode_refine) {
    ShotProfile half = shoot_half(nl, alpha, grid, ode_refine);

    SolitonProfile prof;
    prof.alpha = alpha;
    prof.grid = grid;
    prof.omega = -0.25 * alpha * alpha;
    prof.phi = mirror_to_grid(grid, half);
    prof.mass = quadrature_mass(grid, prof.phi);

    prof.ode_residual = profile_residual(nl, alpha, grid, prof.phi);
    if (prof.ode_residual > 1e-8)
        throw std::runtime_error("shoot_profile: resolution insufficient (residual above tolerance)");

    // phi_alpha from the variational equation (same integrator, same grid
    // scaling as phi itself); finite differences of nearby solves are noisier
    // and stay available through profile_alpha_derivative
    const ShotVariation var = variational_half(nl, alpha, grid, ode_refine, half);
    {
        std::vector<double> full(static_cast<size_t>(grid.n), 0.0);
        const int nh = grid.n / 2;
        for (int j = 0; j < nh; ++j)
            full[static_cast<size_t>(nh + j)] = var.psi_half[static_cast<size_t>(j)];
        for (int j = 1; j < nh; ++j)
            full[static_cast<size_t>(nh - j)] = var.psi_half[static_cast<size_t>(j)];
        full[0] = var.boundary_value;
        prof.phi_alpha = std::move(full);
    }
    double ip = 0.0;
    for (int j = 0; j < grid.n; ++j)
        ip += 2.0 * prof.phi[static_cast<size_t>(j)] * prof.phi_alpha[static_cast<size_t>(j)];
    prof.mass_dalpha = ip * grid.spacing;
    return prof;
}

std::vector<double> profile_alpha_derivative(const NonlinearitySpec& nl,
                                             SolitonProfile& profile, double dalpha) {
    if (dalpha < 1e-4 || dalpha > 1e-2)
        throw std::invalid_argument("profile_alpha_derivative: dalpha out of range [1e-4, 1e-2]");
    const GridSpec& g = profile.grid;
    const double a = profile.alpha;
    const int refine = 20;

    auto solve = [&](double alpha) {
        return mirror_to_grid(g, shoot_half(nl, alpha, g, refine));
    };

    const std::vector<double> pp = solve(a + dalpha);
    const std::vector<double> pm = solve(a - dalpha);
    const std::vector<double> pp2 = solve(a + 0.5 * dalpha);
    const std::vector<double> pm2 = solve(a - 0.5 * dalpha);

    std::vector<double> da(static_cast<size_t>(g.n));
    for (int j = 0; j < g.n; ++j) {
        const double d1 = (pp[static_cast<size_t>(j)] - pm[static_cast<size_t>(j)]) / (2.0 * dalpha);
        const double d2 = (pp2[static_cast<size_t>(j)] - pm2[static_cast<size_t>(j)]) / dalpha;
        da[static_cast<size_t>(j)] = (4.0 * d2 - d1) / 3.0;
    }
    profile.phi_alpha = da;

    const double m1 = (quadrature_mass(g, pp) - quadrature_mass(g, pm)) / (2.0 * dalpha);
    const double m2 = (quadrature_mass(g, pp2) - quadrature_mass(g, pm2)) / dalpha;
    profile.mass_dalpha = (4.0 * m2 - m1) / 3.0;
    return da;
}

ComplexField soliton_field(const SolitonProfile& profile, double beta) {
    ComplexField w(profile.grid);
    const cd phase = std::polar(1.0, -beta);
    for (int j = 0; j < profile.grid.n; ++j)
        w.values[j] = phase * profile.phi[static_cast<size_t>(j)];
    return w;
}

void require_profile_quality(const SolitonProfile& p, double boundary_tol, double residual_tol) {
    const double tail = std::abs(p.phi.front());
    if (tail >= boundary_tol)
        throw std::runtime_error("profile: phi(+-L) above decay gate (enlarge L)");
    if (p.ode_residual >= residual_tol)
        throw std::runtime_error("profile: stationary ODE residual above tolerance");
    for (double v : p.phi)
        if (v < -1e-12) throw std::runtime_error("profile: negativity detected");
}

void require_hypothesis_b(const SolitonProfile& p, double tol) {
    if (std::abs(p.mass_dalpha) <= tol)
        throw std::runtime_error("Hypothesis B violated: d/dalpha ||phi||_2^2 vanishes");
}

} // namespace solstab
