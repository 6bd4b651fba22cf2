#pragma once

#include <cstdint>
#include <optional>

#include "solstab/linop.hpp"
#include "solstab/modulation.hpp"

namespace solstab {

struct PerturbationSpec {
    enum class Shape { none, gaussian, fourier_mode, random_even };
    Shape shape = Shape::gaussian;
    double amplitude = 1e-3;
    double width = 4.0; // gaussian envelope width
    int mode = 2;       // fourier_mode wavenumber index
    uint64_t seed = 1;
};

struct SimulationConfig {
    GridSpec grid;
    NonlinearitySpec nl = NonlinearitySpec::pure_power(3.0);
    double alpha0 = 2.0;
    double beta0 = 0.0;
    double start_time = 20.0; // h
    double dt = 0.0;          // 0 -> calibrate against the soliton
    double end_time = 400.0;  // T
    PerturbationSpec perturbation;
    double s = 1.75 + 1e-3;
    double sample_dt = 0.5;
    int sample_every = 0; // 0 -> from sample_dt
    bool keep_snapshots = true;
    int verdict_max_n = 512; // dense eigensolve cap for the recorded verdict
};

struct GrowthCheck {
    double q_weighted_x = 0.0;
    double q_weighted_dx = 0.0;
    double q_weighted_x2 = 0.0;
    bool pass = false;
    double fit_rms = 0.0;
};

struct GrowthSeries {
    std::vector<double> t;
    std::vector<double> weighted_x;  // || |x| u ||_2
    std::vector<double> weighted_dx; // || |x| u' ||_2
    std::vector<double> weighted_x2; // || |x|^2 u ||_2
};

struct ExperimentResult {
    std::vector<ModulationState> trajectory;
    std::vector<NormSuite> chi_norms; // remainder vs the instantaneous soliton
    std::vector<double> chi_inf_vs_limit;
    std::vector<double> m_series; // (||f||_m + ||f||_n + ||f||_inf) <t>^s
    double m_sup = 0.0;
    std::vector<double> rate_bound;    // Lemma-2.2 right-hand side, C = 1
    std::vector<double> rate_measured; // |gamma'| + |omega'|
    double rate_worst_ratio = 0.0;
    GrowthSeries growth;
    std::pair<double, double> decay_fit_chi{0.0, 0.0}; // exponent, fit rms
    double mass_drift = 0.0;                           // relative, over the run
    double energy_drift = 0.0;                         // absolute drift per unit time
    std::optional<LimitParameters> limits;
    std::optional<SpectralReport> spectral_verdict;
    bool outside_perturbative_regime = false;
    bool blow_up = false;
    double dt_used = 0.0;
    double transient_end = 0.0;
};

// One Strang step of i u_t = -Delta u - F(|u|^2) u: half nonlinear phase,
// full linear Fourier step, half nonlinear. Conserves mass to rounding.
void step_nls(ComplexField& u, double dt, const NonlinearitySpec& nl);

double mass(const ComplexField& u);
double energy(const ComplexField& u, const NonlinearitySpec& nl); // int |u'|^2 - G(|u|^2)

// Halve dt until the splitting error per unit time on the exact soliton is
// below tol. Returns the accepted dt.
double calibrate_dt(const SolitonProfile& profile, const NonlinearitySpec& nl, double dt0,
                    double tol = 1e-8);

ComplexField build_perturbation(const GridSpec& g, const PerturbationSpec& spec);

ExperimentResult run_stability_experiment(const SimulationConfig& cfg);

// Least-squares slope of log(value) against log(t) over [t_a, t_b].
std::pair<double, double> decay_fit(const std::vector<double>& t,
                                    const std::vector<double>& value, double t_a, double t_b);

// Growth exponents of the weighted norms against the Appendix-A bounds
// (1 + t, 1 + t^3, 1 + t^4) with slack 0.25.
GrowthCheck wellposedness_growth_check(const GrowthSeries& series, double slack = 0.25);

// Dispersive reference run (no soliton): evolve a small Gaussian and record
// the weighted-norm series.
GrowthSeries run_dispersive_growth(const GridSpec& g, const NonlinearitySpec& nl,
                                   double amplitude, double width, double t_start, double t_end,
                                   double dt, double sample_dt);

} // namespace solstab
