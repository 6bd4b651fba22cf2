#pragma once

#include <Eigen/Dense>

#include <array>
#include <map>
#include <memory>

#include "solstab/profile.hpp"

namespace solstab {

// phi(alpha), phi_alpha(alpha) on demand. Pure powers use the closed form;
// combined nonlinearities use cached shooting solves on an alpha lattice with
// cubic Hermite interpolation in between.
class ProfileFamily {
public:
    ProfileFamily(NonlinearitySpec nl, GridSpec grid, int ode_refine = 20);

    SolitonProfile at(double alpha) const;
    const NonlinearitySpec& nonlinearity() const { return nl_; }
    const GridSpec& grid() const { return grid_; }

private:
    NonlinearitySpec nl_;
    GridSpec grid_;
    int ode_refine_;
    double lattice_ = 1e-4;
    mutable std::map<long long, SolitonProfile> cache_;
    const SolitonProfile& node(long long idx) const;
};

struct ModulationState {
    double t = 0.0;
    double beta = 0.0;
    double omega = 0.0; // -alpha^2/4
    double gamma = 0.0; // beta - int_0^t omega
    double alpha = 0.0;
    std::pair<double, double> ortho_residuals{0.0, 0.0};
    int newton_iters = 0;
};

struct OrthogonalityOptions {
    double tol_rel = 1e-12; // residual tolerance relative to ||u||_2
    int max_iters = 40;
    bool allow_bracket = true; // bisection pre-bracket on Newton failure
};

// Orthogonality residuals r_i = Im< e^{i beta} u - phi(alpha), M(t) v_i >,
// v_1 = -i phi, v_2 = -(2/alpha) phi_alpha.
std::pair<double, double> orthogonality_residuals(const ComplexField& u, double t, double beta,
                                                  const SolitonProfile& prof);

// Damped Newton on (alpha, beta) with 2 pi phase continuity against the
// guess; throws "Newton diverged" / "Jacobian singular".
ModulationState solve_orthogonality(const ComplexField& u, double t,
                                    const ModulationState& guess, const ProfileFamily& family,
                                    const OrthogonalityOptions& opt = {});

// d(r_1, r_2)/d(alpha, beta); leading part diag(-mass'/2, -mass'/alpha) at
// f = 0, t -> infinity.
Eigen::Matrix2d orthogonality_jacobian(const ModulationState& state, const ComplexField& u,
                                       double t, const ProfileFamily& family);

struct RateReport {
    double bound = 0.0; // paper right-hand side with C = 1
    double measured_gamma_dot = 0.0;
    double measured_omega_dot = 0.0;
    double ratio = 0.0; // (|g'| + |w'|) / bound
};

// bound = ||f||_inf^2 + ||f||_inf^{m-1} ||f||_m + ||f||_inf^{n-1} ||f||_n
//         + t^{-2} ||f||_inf + t^{-1} ||f||_inf,
// measured rates by centered differences over the 3-state window.
RateReport modulation_rates(const ComplexField& f, const std::array<ModulationState, 3>& window,
                            const NonlinearitySpec& nl);

struct DTerms {
    ComplexField d0, d1, d2, d3, d4;
    double omega_phase = 0.0; // Omega = Phi_1 - Phi (x-independent, b = v = 0)

    ComplexField sum() const;
};

// Forcing decomposition of the g-equation against the frozen operator at
// alpha_1. With the linearization signs used here D1..D4 carry the opposite
// sign to the display convention that pairs with +F potentials; D0 is
// unchanged. The decomposition satisfies sum() = direct_forcing(...) exactly.
DTerms evaluate_d_terms(const ComplexField& g, const ModulationState& now,
                        const ModulationState& ref, double gamma_dot, double omega_dot,
                        const NonlinearitySpec& nl, const ProfileFamily& family);

// Independent route: D = i g_t - L(alpha_1) g assembled from the PDE
// right-hand side and the w(t) derivative formula.
ComplexField direct_forcing(const ComplexField& u, const ModulationState& now,
                            const ModulationState& ref, double gamma_dot, double omega_dot,
                            const NonlinearitySpec& nl, const ProfileFamily& family);

// D4 via the integral remainder sum_{i} int_0^1 (1-tau) A_i dtau.
ComplexField d4_integral_form(const ComplexField& g, const ModulationState& now,
                              const ModulationState& ref, const NonlinearitySpec& nl,
                              const ProfileFamily& family, int quad_order = 12);

struct LimitParameters {
    double omega_plus = 0.0;
    double gamma_plus = 0.0;
    double tail_estimate = 0.0;
    double fitted_decay = 0.0; // exponent q of omega - omega_inf ~ t^{-q}
};

// omega_+ by power-law tail extrapolation, gamma_+ = gamma_inf +
// int_0^inf (omega - omega_+) with the pre-series part frozen at omega(t_0).
LimitParameters limit_parameters(const std::vector<ModulationState>& series);

} // namespace solstab
