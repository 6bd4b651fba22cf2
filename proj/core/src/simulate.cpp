#include "solstab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "solstab/rng.hpp"

namespace solstab {

void step_nls(ComplexField& u, double dt, const NonlinearitySpec& nl) {
    const GridSpec& g = u.grid;
    auto half_kick = [&]() {
        for (int j = 0; j < g.n; ++j) {
            const double y = std::norm(u.values[j]);
            u.values[j] *= std::polar(1.0, 0.5 * dt * nl.F(y));
        }
    };
    half_kick();
    fft_forward(u.values);
    for (int m = 0; m < g.n; ++m) {
        const double k = g.wavenumber(m);
        u.values[static_cast<size_t>(m)] *= std::polar(1.0, -k * k * dt);
    }
    fft_backward(u.values);
    half_kick();

    double mx = 0.0;
    for (const cd& z : u.values) mx = std::max(mx, std::abs(z));
    if (!std::isfinite(mx) || mx > 1e8)
        throw std::runtime_error("step_nls: blow-up guard tripped");
}

double mass(const ComplexField& u) {
    double s = 0.0;
    for (const cd& z : u.values) s += std::norm(z);
    return s * u.grid.spacing;
}

double energy(const ComplexField& u, const NonlinearitySpec& nl) {
    const ComplexField du = spectral_derivative(u, 1);
    double e = 0.0;
    for (int j = 0; j < u.grid.n; ++j)
        e += std::norm(du.values[j]) - nl.G(std::norm(u.values[j]));
    return e * u.grid.spacing;
}

double calibrate_dt(const SolitonProfile& profile, const NonlinearitySpec& nl, double dt0,
                    double tol) {
    const double omega = profile.omega;
    double dt = dt0;
    for (int trial = 0; trial < 24; ++trial) {
        ComplexField u = soliton_field(profile, 0.0);
        const long nsteps = std::lround(std::ceil(1.0 / dt));
        const double dth = 1.0 / static_cast<double>(nsteps);
        for (long i = 0; i < nsteps; ++i) step_nls(u, dth, nl);
        // exact: e^{-i omega t} phi at t = 1
        double err = 0.0;
        const cd phase = std::polar(1.0, -omega);
        for (int j = 0; j < u.grid.n; ++j)
            err += std::norm(u.values[j] - phase * profile.phi[static_cast<size_t>(j)]);
        err = std::sqrt(err * u.grid.spacing);
        if (err < tol) return dth;
        dt *= 0.5;
    }
    throw std::runtime_error("calibrate_dt: could not reach the splitting tolerance");
}

ComplexField build_perturbation(const GridSpec& g, const PerturbationSpec& spec) {
    ComplexField p(g);
    switch (spec.shape) {
        case PerturbationSpec::Shape::none:
            break;
        case PerturbationSpec::Shape::gaussian:
            for (int j = 0; j < g.n; ++j) {
                const double x = g.x(j);
                p.values[j] = spec.amplitude * std::exp(-(x / spec.width) * (x / spec.width));
            }
            break;
        case PerturbationSpec::Shape::fourier_mode:
            for (int j = 0; j < g.n; ++j) {
                const double x = g.x(j);
                p.values[j] = spec.amplitude * std::cos(std::numbers::pi / g.half_width *
                                                        spec.mode * x) *
                              std::exp(-(x / spec.width) * (x / spec.width));
            }
            break;
        case PerturbationSpec::Shape::random_even: {
            Rng rng(spec.seed);
            ComplexField r = random_even_field(g, rng, 2.0, spec.width);
            const double nrm = linf_norm(r);
            if (nrm > 0.0)
                for (int j = 0; j < g.n; ++j) p.values[j] = spec.amplitude * r.values[j] / nrm;
            break;
        }
    }
    // evenness is enforced exactly (radial class)
    for (int j = 1; j < g.n / 2; ++j) {
        const cd avg = 0.5 * (p.values[j] + p.values[g.n - j]);
        p.values[j] = avg;
        p.values[g.n - j] = avg;
    }
    return p;
}

std::pair<double, double> decay_fit(const std::vector<double>& t,
                                    const std::vector<double>& value, double t_a, double t_b) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_a || t[i] > t_b) continue;
        if (!(value[i] > 0.0))
            throw std::invalid_argument("decay_fit: nonpositive value in window");
        const double lx = std::log(t[i]), ly = std::log(value[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++cnt;
    }
    if (cnt < 3) throw std::invalid_argument("decay_fit: window too small");
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / cnt;
    double rms = 0.0;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_a || t[i] > t_b) continue;
        const double r = std::log(value[i]) - (slope * std::log(t[i]) + intercept);
        rms += r * r;
    }
    return {slope, std::sqrt(rms / cnt)};
}

GrowthCheck wellposedness_growth_check(const GrowthSeries& series, double slack) {
    if (series.t.size() < 8 || series.t.back() < 2.0 * series.t.front())
        throw std::runtime_error("growth check: insufficient horizon");
    const double t_a = series.t.front() + 0.5 * (series.t.back() - series.t.front());
    const double t_b = series.t.back();
    GrowthCheck gc;
    auto [q1, r1] = decay_fit(series.t, series.weighted_x, t_a, t_b);
    auto [q2, r2] = decay_fit(series.t, series.weighted_dx, t_a, t_b);
    auto [q3, r3] = decay_fit(series.t, series.weighted_x2, t_a, t_b);
    gc.q_weighted_x = q1;
    gc.q_weighted_dx = q2;
    gc.q_weighted_x2 = q3;
    gc.fit_rms = std::max({r1, r2, r3});
    gc.pass = q1 <= 1.0 + slack && q2 <= 3.0 + slack && q3 <= 4.0 + slack;
    return gc;
}

GrowthSeries run_dispersive_growth(const GridSpec& g, const NonlinearitySpec& nl,
                                   double amplitude, double width, double t_start, double t_end,
                                   double dt, double sample_dt) {
    ComplexField u(g);
    for (int j = 0; j < g.n; ++j) {
        const double x = g.x(j);
        u.values[j] = amplitude * std::exp(-x * x / (2.0 * width * width));
    }
    GrowthSeries out;
    const long per_sample = std::max<long>(1, std::lround(sample_dt / dt));
    double t = t_start;
    long step = 0;
    auto record = [&]() {
        const NormSuite ns = norm_suite(u);
        out.t.push_back(t);
        out.weighted_x.push_back(ns.weighted_x);
        ComplexField du = spectral_derivative(u, 1);
        double wdx = 0.0;
        for (int j = 0; j < g.n; ++j) {
            const double x = g.x(j);
            wdx += x * x * std::norm(du.values[j]);
        }
        out.weighted_dx.push_back(std::sqrt(wdx * g.spacing));
        out.weighted_x2.push_back(ns.weighted_x2);
    };
    record();
    while (t < t_end - 0.5 * dt) {
        step_nls(u, dt, nl);
        t += dt;
        if (++step % per_sample == 0) record();
    }
    return out;
}

ExperimentResult run_stability_experiment(const SimulationConfig& cfg) {
    ExperimentResult res;
    const GridSpec& g = cfg.grid;
    ProfileFamily family(cfg.nl, g);
    const SolitonProfile prof0 = family.at(cfg.alpha0);
    require_profile_quality(prof0);
    require_hypothesis_b(prof0);

    // spectral verdict at capped resolution (gap eigenvalues are stable under
    // refinement; the dense solve above ~512 modes is not worth the wall time)
    {
        const int nv = std::min(g.n, cfg.verdict_max_n);
        const GridSpec gv = (nv == g.n) ? g : make_grid(g.half_width, nv);
        SolitonProfile pv = (nv == g.n) ? prof0 : family.at(cfg.alpha0);
        if (nv != g.n) {
            ProfileFamily fv(cfg.nl, gv);
            pv = fv.at(cfg.alpha0);
        }
        const LinearizedOperator Hv = assemble_operator(pv, cfg.nl);
        res.spectral_verdict = verify_assumption_a3(Hv, pv, cfg.nl);
    }

    const double h = cfg.start_time;
    if (h < 1.0) throw std::invalid_argument("stability experiment: start time must be >= 1");
    double dt = cfg.dt;
    if (dt <= 0.0) dt = calibrate_dt(prof0, cfg.nl, std::min(1e-3, 0.1 * g.spacing * g.spacing));
    res.dt_used = dt;

    const ComplexField pert = build_perturbation(g, cfg.perturbation);
    res.outside_perturbative_regime = cfg.perturbation.amplitude > 0.05;

    ComplexField u = soliton_field(prof0, cfg.beta0);
    for (int j = 0; j < g.n; ++j) u.values[j] += pert.values[j];

    const double mass0 = mass(u);
    const double energy0 = energy(u, cfg.nl);

    const long per_sample =
        cfg.sample_every > 0 ? cfg.sample_every : std::max<long>(1, std::lround(cfg.sample_dt / dt));

    ModulationState state;
    state.t = h;
    state.alpha = cfg.alpha0;
    state.beta = cfg.beta0;
    state.omega = -0.25 * cfg.alpha0 * cfg.alpha0;

    std::vector<std::vector<cd>> snapshots;
    std::vector<double> extra_p{cfg.nl.m(), cfg.nl.n()};

    double cum_omega = 0.0;
    bool first_sample = true;
    double t = h;
    long step = 0;
    const long total_steps = std::lround((cfg.end_time - h) / dt);

    auto sample = [&](double tnow) {
        ModulationState st;
        try {
            st = solve_orthogonality(u, tnow, state, family);
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << e.what() << " [t=" << tnow << ", step=" << step
               << ", |u|_inf=" << linf_norm(u) << ", mass=" << mass(u) << "]";
            throw std::runtime_error(os.str());
        }
        if (first_sample) {
            cum_omega = h * st.omega; // frozen pre-h convention
            first_sample = false;
        } else {
            cum_omega += 0.5 * (st.omega + state.omega) * (tnow - state.t);
        }
        st.gamma = st.beta - cum_omega;
        state = st;

        const SolitonProfile pr = family.at(st.alpha);
        ComplexField f(g);
        const cd eib = std::polar(1.0, st.beta);
        for (int j = 0; j < g.n; ++j)
            f.values[j] = eib * u.values[j] - pr.phi[static_cast<size_t>(j)];
        const NormSuite ns = norm_suite(f, extra_p);

        res.trajectory.push_back(st);
        res.chi_norms.push_back(ns);
        const double tb = std::sqrt(1.0 + tnow * tnow);
        const double mq = (ns.lp.at(cfg.nl.m()) + ns.lp.at(cfg.nl.n()) + ns.linf) *
                          std::pow(tb, cfg.s);
        res.m_sup = std::max(res.m_sup, mq);
        res.m_series.push_back(res.m_sup);

        res.growth.t.push_back(tnow);
        const NormSuite nu = norm_suite(u);
        res.growth.weighted_x.push_back(nu.weighted_x);
        res.growth.weighted_x2.push_back(nu.weighted_x2);
        {
            ComplexField du = spectral_derivative(u, 1);
            double wdx = 0.0;
            for (int j = 0; j < g.n; ++j) {
                const double x = g.x(j);
                wdx += x * x * std::norm(du.values[j]);
            }
            res.growth.weighted_dx.push_back(std::sqrt(wdx * g.spacing));
        }
        if (cfg.keep_snapshots) snapshots.push_back(u.values);
    };

    sample(t);
    while (step < total_steps) {
        try {
            step_nls(u, dt, cfg.nl);
        } catch (const std::exception&) {
            res.blow_up = true;
            res.outside_perturbative_regime = true;
            break;
        }
        ++step;
        t = h + dt * static_cast<double>(step);
        if (step % per_sample == 0 || step == total_steps) sample(t);
    }

    res.mass_drift = std::abs(mass(u) - mass0) / mass0;
    res.energy_drift =
        std::abs(energy(u, cfg.nl) - energy0) / std::max(1e-300, t - h);

    // Lemma-2.2 rate audit over interior samples
    res.rate_bound.assign(res.trajectory.size(), 0.0);
    res.rate_measured.assign(res.trajectory.size(), 0.0);
    for (size_t i = 1; i + 1 < res.trajectory.size(); ++i) {
        std::array<ModulationState, 3> win{res.trajectory[i - 1], res.trajectory[i],
                                           res.trajectory[i + 1]};
        ComplexField f(g);
        if (cfg.keep_snapshots) {
            const cd eib = std::polar(1.0, res.trajectory[i].beta);
            const SolitonProfile pr = family.at(res.trajectory[i].alpha);
            for (int j = 0; j < g.n; ++j)
                f.values[j] = eib * snapshots[i][static_cast<size_t>(j)] -
                              pr.phi[static_cast<size_t>(j)];
        }
        const RateReport rr = modulation_rates(f, win, cfg.nl);
        res.rate_bound[i] = rr.bound;
        res.rate_measured[i] =
            std::abs(rr.measured_gamma_dot) + std::abs(rr.measured_omega_dot);
        res.rate_worst_ratio = std::max(res.rate_worst_ratio, rr.ratio);
    }

    if (res.m_sup > 1e3) res.outside_perturbative_regime = true;

    // limits and decay diagnostics
    res.transient_end = h + 0.15 * (cfg.end_time - h);
    try {
        res.limits = limit_parameters(res.trajectory);
    } catch (const std::exception&) {
        res.limits.reset();
    }
    {
        std::vector<double> ts, chi_inf;
        for (size_t i = 0; i < res.trajectory.size(); ++i) {
            ts.push_back(res.trajectory[i].t);
            chi_inf.push_back(std::max(res.chi_norms[i].linf, 1e-300));
        }
        try {
            res.decay_fit_chi = decay_fit(ts, chi_inf, res.transient_end, cfg.end_time);
        } catch (const std::exception&) {
            res.decay_fit_chi = {0.0, -1.0};
        }
    }
    if (res.limits && cfg.keep_snapshots) {
        const double a_plus = 2.0 * std::sqrt(std::max(1e-300, -res.limits->omega_plus));
        const SolitonProfile pp = family.at(a_plus);
        for (size_t i = 0; i < res.trajectory.size(); ++i) {
            const double tt = res.trajectory[i].t;
            const double beta_plus = res.limits->omega_plus * tt + res.limits->gamma_plus;
            const cd ph = std::polar(1.0, -beta_plus);
            double mx = 0.0;
            for (int j = 0; j < g.n; ++j)
                mx = std::max(mx, std::abs(snapshots[i][static_cast<size_t>(j)] -
                                           ph * pp.phi[static_cast<size_t>(j)]));
            res.chi_inf_vs_limit.push_back(mx);
        }
    }
    return res;
}

} // namespace solstab
