#pragma once

#include "solstab/grid.hpp"
#include "solstab/nonlinearity.hpp"

namespace solstab {

// Stationary state: positive even decaying solution of
//   phi'' = (alpha^2/4) phi - F(phi^2) phi
// sampled on the grid, together with its alpha-derivative.
struct SolitonProfile {
    double alpha = 0.0;
    GridSpec grid;
    std::vector<double> phi;
    std::vector<double> phi_alpha;
    double omega = 0.0;       // -alpha^2/4
    double mass = 0.0;        // ||phi||_2^2
    double mass_dalpha = 0.0; // d/dalpha ||phi||_2^2
    double ode_residual = 0.0;

    double tau() const { return 0.25 * alpha * alpha; }
};

// L^2 collocation residual || phi'' - tau phi + F(phi^2) phi ||_2 with the
// spectral second derivative.
double profile_residual(const NonlinearitySpec& nl, double alpha, const GridSpec& g,
                        const std::vector<double>& phi);

// Pure power: phi = (omega (p+1)/2)^{1/(p-1)} sech^{2/(p-1)}((p-1) sqrt(omega) x / 2),
// mass and phi_alpha from the closed form.
SolitonProfile closed_form_profile(double p, double alpha, const GridSpec& grid);

// Shooting construction for general F: bisection on phi(0) between returning
// (blow-up) and sign-crossing trajectories, Newton polish of the amplitude on
// the decaying-tail mismatch, RK4 interior + exponential tail continuation.
// ode_refine = integrator substeps per grid spacing.
SolitonProfile shoot_profile(const NonlinearitySpec& nl, double alpha, const GridSpec& grid,
                             int ode_refine = 20);

// Central finite difference of two shooting solves, Richardson extrapolated;
// writes the result into profile.phi_alpha and returns it.
std::vector<double> profile_alpha_derivative(const NonlinearitySpec& nl,
                                             SolitonProfile& profile, double dalpha);

// w(x; sigma) = e^{-i beta} phi(x; alpha)
ComplexField soliton_field(const SolitonProfile& profile, double beta);

// Gates used before stability experiments; throw on violation.
void require_profile_quality(const SolitonProfile& p, double boundary_tol = 1e-10,
                             double residual_tol = 1e-8);
void require_hypothesis_b(const SolitonProfile& p, double tol = 1e-6);

} // namespace solstab
