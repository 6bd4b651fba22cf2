#include "solstab/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace solstab {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

ProfileFamily::ProfileFamily(NonlinearitySpec nl, GridSpec grid, int ode_refine)
    : nl_(std::move(nl)), grid_(grid), ode_refine_(ode_refine) {}

const SolitonProfile& ProfileFamily::node(long long idx) const {
    auto it = cache_.find(idx);
    if (it == cache_.end()) {
        const double alpha = static_cast<double>(idx) * lattice_;
        it = cache_.emplace(idx, shoot_profile(nl_, alpha, grid_, ode_refine_)).first;
    }
    return it->second;
}

SolitonProfile ProfileFamily::at(double alpha) const {
    if (alpha <= 0.0) throw std::invalid_argument("ProfileFamily: alpha must be positive");
    if (nl_.is_pure_power()) return closed_form_profile(nl_.power(), alpha, grid_);

    // cubic Hermite between lattice nodes (phi, phi_alpha at both ends)
    const long long i0 = static_cast<long long>(std::floor(alpha / lattice_));
    const double a0 = static_cast<double>(i0) * lattice_;
    const double s = (alpha - a0) / lattice_;
    if (s < 1e-12) return node(i0);
    const SolitonProfile& p0 = node(i0);
    const SolitonProfile& p1 = node(i0 + 1);

    SolitonProfile out;
    out.alpha = alpha;
    out.grid = grid_;
    out.omega = -0.25 * alpha * alpha;
    const int n = grid_.n;
    out.phi.resize(static_cast<size_t>(n));
    out.phi_alpha.resize(static_cast<size_t>(n));
    const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    const double h10 = s * (1.0 - s) * (1.0 - s);
    const double h01 = s * s * (3.0 - 2.0 * s);
    const double h11 = s * s * (s - 1.0);
    for (int j = 0; j < n; ++j) {
        const size_t u = static_cast<size_t>(j);
        out.phi[u] = h00 * p0.phi[u] + h10 * lattice_ * p0.phi_alpha[u] + h01 * p1.phi[u] +
                     h11 * lattice_ * p1.phi_alpha[u];
        out.phi_alpha[u] = (1.0 - s) * p0.phi_alpha[u] + s * p1.phi_alpha[u];
    }
    out.mass = (1.0 - s) * p0.mass + s * p1.mass +
               lattice_ * s * (1.0 - s) * 0.5 * (p0.mass_dalpha - p1.mass_dalpha);
    out.mass_dalpha = (1.0 - s) * p0.mass_dalpha + s * p1.mass_dalpha;
    out.ode_residual = std::max(p0.ode_residual, p1.ode_residual);
    return out;
}

std::pair<double, double> orthogonality_residuals(const ComplexField& u, double t, double beta,
                                                  const SolitonProfile& prof) {
    const GridSpec& g = u.grid;
    const cd eib = std::polar(1.0, beta);
    cd s1(0.0), s2(0.0);
    for (int j = 0; j < g.n; ++j) {
        const double x = g.x(j);
        const cd minv = std::polar(1.0, -x * x / (4.0 * t)); // conj(M(t))
        const size_t ju = static_cast<size_t>(j);
        const cd f = eib * u.values[j] - prof.phi[ju];
        // conj(M v1) = i phi M(-t), conj(M v2) = -(2/alpha) phi_a M(-t)
        s1 += f * cd(0.0, 1.0) * prof.phi[ju] * minv;
        s2 += f * (-2.0 / prof.alpha) * prof.phi_alpha[ju] * minv;
    }
    return {std::imag(s1 * g.spacing), std::imag(s2 * g.spacing)};
}

namespace {

Eigen::Matrix2d fd_jacobian(const ComplexField& u, double t, double alpha, double beta,
                            const ProfileFamily& family) {
    const double da = 1e-7 * std::max(1.0, std::abs(alpha));
    const double db = 1e-7;
    Eigen::Matrix2d j;
    const auto rap = orthogonality_residuals(u, t, beta, family.at(alpha + da));
    const auto ram = orthogonality_residuals(u, t, beta, family.at(alpha - da));
    const auto rbp = orthogonality_residuals(u, t, beta + db, family.at(alpha));
    const auto rbm = orthogonality_residuals(u, t, beta - db, family.at(alpha));
    j(0, 0) = (rap.first - ram.first) / (2.0 * da);
    j(1, 0) = (rap.second - ram.second) / (2.0 * da);
    j(0, 1) = (rbp.first - rbm.first) / (2.0 * db);
    j(1, 1) = (rbp.second - rbm.second) / (2.0 * db);
    return j;
}

} // namespace

Eigen::Matrix2d orthogonality_jacobian(const ModulationState& state, const ComplexField& u,
                                       double t, const ProfileFamily& family) {
    return fd_jacobian(u, t, state.alpha, state.beta, family);
}

ModulationState solve_orthogonality(const ComplexField& u, double t,
                                    const ModulationState& guess, const ProfileFamily& family,
                                    const OrthogonalityOptions& opt) {
    const double unorm = std::max(l2_norm(u), 1e-300);
    const double tol = opt.tol_rel * unorm;
    double alpha = guess.alpha;
    double beta = guess.beta;

    auto res_norm = [](const std::pair<double, double>& r) {
        return std::max(std::abs(r.first), std::abs(r.second));
    };

    auto newton = [&](double& a, double& b) -> std::pair<bool, std::pair<double, double>> {
        std::pair<double, double> r = orthogonality_residuals(u, t, b, family.at(a));
        int it = 0;
        for (; it < opt.max_iters && res_norm(r) > tol; ++it) {
            const Eigen::Matrix2d J = fd_jacobian(u, t, a, b, family);
            const double det = J.determinant();
            if (std::abs(det) < 1e-14)
                throw std::runtime_error("solve_orthogonality: Jacobian singular (Hypothesis B?)");
            Eigen::Vector2d rv(r.first, r.second);
            Eigen::Vector2d step = J.fullPivLu().solve(rv);
            double damp = 1.0;
            for (int half = 0; half < 12; ++half) {
                const double an = a - damp * step[0];
                const double bn = b - damp * step[1];
                if (an > 0.0) {
                    const auto rn = orthogonality_residuals(u, t, bn, family.at(an));
                    if (res_norm(rn) < res_norm(r) || res_norm(rn) <= tol) {
                        a = an;
                        b = bn;
                        r = rn;
                        break;
                    }
                }
                damp *= 0.5;
                if (half == 11) return {false, r};
            }
        }
        return {res_norm(r) <= tol, r};
    };

    auto [ok, r] = newton(alpha, beta);

    if (!ok && opt.allow_bracket) {
        // eliminate beta pointwise from r1, then bracket alpha through r2
        auto beta_of_alpha = [&](double a, bool& valid) {
            const SolitonProfile prof = family.at(a);
            cd c(0.0), d(0.0);
            for (int j = 0; j < u.grid.n; ++j) {
                const double x = u.grid.x(j);
                const cd minv = std::polar(1.0, -x * x / (4.0 * t));
                c += u.values[j] * prof.phi[static_cast<size_t>(j)] * minv;
                d += prof.phi[static_cast<size_t>(j)] * prof.phi[static_cast<size_t>(j)] * minv;
            }
            c *= u.grid.spacing;
            d *= u.grid.spacing;
            valid = std::abs(c) >= std::abs(d.real());
            if (!valid) return guess.beta;
            const double delta = std::acos(std::clamp(d.real() / std::abs(c), -1.0, 1.0));
            const double b1 = -std::arg(c) + delta, b2 = -std::arg(c) - delta;
            auto wrap = [&](double b) {
                double w = b - guess.beta;
                w -= two_pi * std::round(w / two_pi);
                return std::abs(w);
            };
            return wrap(b1) < wrap(b2) ? b1 : b2;
        };
        auto r2_of_alpha = [&](double a, bool& valid) {
            const double b = beta_of_alpha(a, valid);
            if (!valid) return 0.0;
            return orthogonality_residuals(u, t, b, family.at(a)).second;
        };
        const int scan = 41;
        double alo = 0.0, ahi = 0.0;
        bool found = false;
        double prev_a = 0.0, prev_r = 0.0;
        bool prev_ok = false;
        for (int i = 0; i < scan; ++i) {
            const double a = guess.alpha * (0.7 + 0.6 * i / (scan - 1));
            bool valid = false;
            const double rr = r2_of_alpha(a, valid);
            if (valid && prev_ok && prev_r * rr <= 0.0) {
                alo = prev_a;
                ahi = a;
                found = true;
                break;
            }
            prev_a = a;
            prev_r = rr;
            prev_ok = valid;
        }
        if (found) {
            for (int i = 0; i < 80; ++i) {
                const double mid = 0.5 * (alo + ahi);
                bool valid = false;
                const double rm = r2_of_alpha(mid, valid);
                if (!valid) break;
                bool vlo = false;
                (r2_of_alpha(alo, vlo) * rm <= 0.0 ? ahi : alo) = mid;
            }
            alpha = 0.5 * (alo + ahi);
            bool valid = false;
            beta = beta_of_alpha(alpha, valid);
            std::tie(ok, r) = newton(alpha, beta);
        }
    }
    if (!ok && res_norm(r) > 1e-10 * unorm)
        throw std::runtime_error("solve_orthogonality: Newton diverged");

    ModulationState st;
    st.t = t;
    st.alpha = alpha;
    // 2 pi continuity against the guess
    st.beta = beta - two_pi * std::round((beta - guess.beta) / two_pi);
    st.omega = -0.25 * alpha * alpha;
    st.gamma = st.beta - st.omega * t; // frozen-omega convention; trackers override
    st.ortho_residuals = orthogonality_residuals(u, t, st.beta, family.at(alpha));
    return st;
}

RateReport modulation_rates(const ComplexField& f, const std::array<ModulationState, 3>& window,
                            const NonlinearitySpec& nl) {
    RateReport rep;
    const double t = window[1].t;
    const double finf = linf_norm(f);
    const double fm = lp_norm(f, nl.m());
    const double fn = lp_norm(f, nl.n());
    rep.bound = finf * finf + std::pow(finf, nl.m() - 1.0) * fm +
                std::pow(finf, nl.n() - 1.0) * fn + finf / (t * t) + finf / t;

    const double dt0 = window[1].t - window[0].t;
    const double dt1 = window[2].t - window[1].t;
    if (dt0 <= 0.0 || dt1 <= 0.0)
        throw std::invalid_argument("modulation_rates: window not increasing in t");
    rep.measured_gamma_dot = (window[2].gamma - window[0].gamma) / (dt0 + dt1);
    rep.measured_omega_dot = (window[2].omega - window[0].omega) / (dt0 + dt1);
    const double measured = std::abs(rep.measured_gamma_dot) + std::abs(rep.measured_omega_dot);
    rep.ratio = rep.bound > 0.0 ? measured / rep.bound : 0.0;
    return rep;
}

namespace {

// N(phi, f) = F(|phi+f|^2)(phi+f) - F(phi^2) phi - F(phi^2) f - F'(phi^2) phi^2 (f + conj f)
cd nonlinear_remainder(const NonlinearitySpec& nl, double phi, cd f) {
    const double y0 = phi * phi;
    const cd w = phi + f;
    return nl.F(std::norm(w)) * w - nl.F(y0) * phi - nl.F(y0) * f -
           nl.dF(y0) * y0 * (f + std::conj(f));
}

} // namespace

ComplexField DTerms::sum() const {
    ComplexField s(d0.grid);
    for (int j = 0; j < d0.grid.n; ++j)
        s.values[j] = d0.values[j] + d1.values[j] + d2.values[j] + d3.values[j] + d4.values[j];
    return s;
}

DTerms evaluate_d_terms(const ComplexField& g, const ModulationState& now,
                        const ModulationState& ref, double gamma_dot, double omega_dot,
                        const NonlinearitySpec& nl, const ProfileFamily& family) {
    const GridSpec& grid = g.grid;
    const SolitonProfile pnow = family.at(now.alpha);
    const SolitonProfile pref = family.at(ref.alpha);

    DTerms dt{ComplexField(grid), ComplexField(grid), ComplexField(grid), ComplexField(grid),
              ComplexField(grid), 0.0};
    // Omega = Phi_1 - Phi = beta(t) - omega_1 t - gamma_1
    dt.omega_phase = now.beta - ref.omega * now.t - ref.gamma;
    const cd eiO = std::polar(1.0, dt.omega_phase);
    const cd emiO = std::conj(eiO);
    const cd em2iO = emiO * emiO;

    for (int j = 0; j < grid.n; ++j) {
        const size_t ju = static_cast<size_t>(j);
        const double ph = pnow.phi[ju], ph1 = pref.phi[ju];
        const double y = ph * ph, y1 = ph1 * ph1;
        const double fnow = nl.F(y), fref = nl.F(y1);
        const double fpnow = nl.dF(y) * y, fpref = nl.dF(y1) * y1;
        const cd gv = g.values[j];
        const cd gb = std::conj(gv);

        dt.d0.values[j] =
            emiO * (-gamma_dot * ph + cd(0.0, 2.0 / now.alpha) * omega_dot * pnow.phi_alpha[ju]);
        dt.d1.values[j] = -((fnow + fpnow) - (fref + fpref)) * gv;
        dt.d2.values[j] = -fpnow * (em2iO - 1.0) * gb;
        dt.d3.values[j] = -(fpnow - fpref) * gb;
        dt.d4.values[j] = -emiO * nonlinear_remainder(nl, ph, eiO * gv);
    }
    return dt;
}

ComplexField direct_forcing(const ComplexField& u, const ModulationState& now,
                            const ModulationState& ref, double gamma_dot, double omega_dot,
                            const NonlinearitySpec& nl, const ProfileFamily& family) {
    const GridSpec& grid = u.grid;
    const SolitonProfile pnow = family.at(now.alpha);
    const SolitonProfile pref = family.at(ref.alpha);
    const double tau1 = 0.25 * ref.alpha * ref.alpha;

    // chi = u - w, g = e^{-i Phi_1} chi, Phi_1 = -omega_1 t - gamma_1
    const double phi1_phase = -ref.omega * now.t - ref.gamma;
    const cd emiP1 = std::polar(1.0, -phi1_phase);
    const cd emib = std::polar(1.0, -now.beta);
    ComplexField gfield(grid);
    for (int j = 0; j < grid.n; ++j)
        gfield.values[j] =
            emiP1 * (u.values[j] - emib * pnow.phi[static_cast<size_t>(j)]);

    // i u_t from the PDE; i w_t from the modulated-soliton derivative
    const ComplexField lap_u = spectral_derivative(u, 2);
    const ComplexField lap_g = spectral_derivative(gfield, 2);
    const double alpha_dot = -2.0 * omega_dot / now.alpha;

    ComplexField out(grid);
    for (int j = 0; j < grid.n; ++j) {
        const size_t ju = static_cast<size_t>(j);
        const cd iut = -lap_u.values[j] - nl.F(std::norm(u.values[j])) * u.values[j];
        const cd iwt = emib * ((now.omega + gamma_dot) * pnow.phi[ju] +
                               cd(0.0, 1.0) * alpha_dot * pnow.phi_alpha[ju]);
        const cd ichit = iut - iwt;
        const cd igt = emiP1 * ichit - ref.omega * gfield.values[j];
        const double y1 = pref.phi[ju] * pref.phi[ju];
        const cd gv = gfield.values[j];
        const cd lg = -lap_g.values[j] + tau1 * gv - nl.F(y1) * gv -
                      nl.dF(y1) * y1 * (gv + std::conj(gv));
        out.values[j] = igt - lg;
    }
    return out;
}

ComplexField d4_integral_form(const ComplexField& g, const ModulationState& now,
                              const ModulationState& ref, const NonlinearitySpec& nl,
                              const ProfileFamily& family, int quad_order) {
    const GridSpec& grid = g.grid;
    const SolitonProfile pnow = family.at(now.alpha);
    const double omega_phase = now.beta - ref.omega * now.t - ref.gamma;
    const cd eiO = std::polar(1.0, omega_phase);
    const cd emiO = std::conj(eiO);

    // Gauss-Legendre on [0, 1]
    std::vector<double> xs(static_cast<size_t>(quad_order)), ws(static_cast<size_t>(quad_order));
    {
        // reuse the Legendre recurrence through a tiny local computation
        for (int i = 0; i < quad_order; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (quad_order + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int jj = 0; jj < quad_order; ++jj) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * jj + 1.0) * z * p1 - jj * p2) / (jj + 1.0);
                }
                pp = quad_order * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / pp;
                z -= dz;
                if (std::abs(dz) < 1e-15) break;
            }
            xs[static_cast<size_t>(i)] = 0.5 * (1.0 - z);
            ws[static_cast<size_t>(i)] = 1.0 / ((1.0 - z * z) * pp * pp);
        }
    }

    ComplexField out(grid);
    for (int j = 0; j < grid.n; ++j) {
        const double phi = pnow.phi[static_cast<size_t>(j)];
        const cd gt = eiO * g.values[j];
        const cd gtb = std::conj(gt);
        cd acc(0.0);
        for (int q = 0; q < quad_order; ++q) {
            const double tq = xs[static_cast<size_t>(q)];
            const cd w = phi + tq * gt;
            const cd wb = std::conj(w);
            const double y = std::norm(w);
            const double f1 = nl.dF(y), f2 = nl.d2F(y);
            const cd a1 = gt * gt * wb * wb * w * f2;
            const cd a2 = 2.0 * std::norm(gt) * w * w * wb * f2;
            const cd a3 = gtb * gtb * w * w * w * f2;
            const cd a4 = 2.0 * gt * gt * wb * f1;
            const cd a5 = 4.0 * std::norm(gt) * w * f1;
            acc += ws[static_cast<size_t>(q)] * (1.0 - tq) * (a1 + a2 + a3 + a4 + a5);
        }
        out.values[j] = -emiO * acc;
    }
    return out;
}

LimitParameters limit_parameters(const std::vector<ModulationState>& series) {
    if (series.size() < 3) throw std::runtime_error("limit_parameters: insufficient horizon");
    const double t0 = series.front().t, tend = series.back().t;
    if (!(tend >= 10.0 * t0)) throw std::runtime_error("limit_parameters: insufficient horizon");

    const size_t n = series.size();
    const size_t half = n / 2;

    auto extrapolate = [&](auto value) {
        double winf = value(series.back());
        double c = 0.0, q = 1.0;
        double scale = 0.0;
        for (size_t i = half; i < n; ++i) scale = std::max(scale, std::abs(value(series[i])));
        bool flat = true;
        for (size_t i = half; i < n; ++i)
            if (std::abs(value(series[i]) - winf) > 1e-13 * std::max(1.0, scale)) flat = false;
        if (flat) return std::tuple<double, double, double, double>{winf, 0.0, 0.0, 0.0};

        for (int iter = 0; iter < 4; ++iter) {
            // fit exponent from log |value - winf|
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            int cnt = 0;
            for (size_t i = half; i < n; ++i) {
                const double d = std::abs(value(series[i]) - winf);
                if (d <= 1e-15 * std::max(1.0, scale)) continue;
                const double lx = std::log(series[i].t), ly = std::log(d);
                sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
                ++cnt;
            }
            if (cnt >= 3) {
                const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
                q = std::clamp(-slope, 0.3, 6.0);
            }
            // linear LS for (winf, c) against 1, t^{-q}
            double s11 = 0, s1b = 0, sbb = 0, s1y = 0, sby = 0;
            for (size_t i = half; i < n; ++i) {
                const double b = std::pow(series[i].t, -q);
                const double yv = value(series[i]);
                s11 += 1.0; s1b += b; sbb += b * b; s1y += yv; sby += b * yv;
            }
            const double det = s11 * sbb - s1b * s1b;
            if (std::abs(det) < 1e-30) break;
            winf = (sbb * s1y - s1b * sby) / det;
            c = (s11 * sby - s1b * s1y) / det;
        }
        double rms = 0.0;
        int cnt = 0;
        for (size_t i = half; i < n; ++i) {
            const double r = value(series[i]) - (winf + c * std::pow(series[i].t, -q));
            rms += r * r;
            ++cnt;
        }
        rms = std::sqrt(rms / std::max(1, cnt));
        const double tail = std::abs(c) * std::pow(tend, -q);
        return std::tuple<double, double, double, double>{winf, c, q, rms + tail};
    };

    const auto [winf, c, q, tail] = extrapolate([](const ModulationState& s) { return s.omega; });
    const auto [ginf, gc, gq, gtail] =
        extrapolate([](const ModulationState& s) { return s.gamma; });

    LimitParameters lp;
    lp.omega_plus = winf;
    lp.fitted_decay = q;
    lp.tail_estimate = tail + gtail;

    // gamma_+ = gamma_inf + int_0^inf (omega - omega_+), pre-series part frozen
    double integral = t0 * (series.front().omega - winf);
    for (size_t i = 0; i + 1 < series.size(); ++i) {
        const double dtp = series[i + 1].t - series[i].t;
        integral += 0.5 * dtp *
                    ((series[i].omega - winf) + (series[i + 1].omega - winf));
    }
    if (q > 1.0 + 1e-9 && c != 0.0) integral += c * std::pow(tend, 1.0 - q) / (q - 1.0);
    lp.gamma_plus = ginf + integral;
    (void)gc;
    (void)gq;
    return lp;
}

} // namespace solstab
