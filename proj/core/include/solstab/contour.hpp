#pragma once

#include <optional>
#include <vector>

#include "solstab/linop.hpp"

namespace solstab {

// Branch of lambda^p used on the two wedges of the contour. The principal
// branch is unusable (the left wedge surrounds its cut), so a single branch
// analytic on both wedges is fixed by the cut placement: from_above continues
// through arg = +pi (cut on the negative imaginary axis), from_below through
// arg = -pi. The two choices give complex-conjugate left-wedge symbols on
// real data.
enum class BranchSide { from_above, from_below };

struct ContourNode {
    cd lambda;
    cd weight;    // Gauss-Legendre weight x d(lambda)/dt x traversal sign
    double theta; // branch argument, lambda^p = |lambda|^p e^{i p theta}
};

struct ContourOptions {
    double a = 0.0;   // 0 -> choose from the spectral gap
    double eps = 0.2; // ray slope
    int gl_order = 16;
    double panel_growth = 1.4;
    BranchSide branch = BranchSide::from_above;
};

// The curve Gamma: two anticlockwise wedges with vertices +-a opening around
// the essential spectrum rays +-[tau, inf). Quadrature nodes split into a
// near set (out to truncation_radius, used with full resolvent solves) and a
// far set (out to tail_radius_spec, cheap nodes for the direct evaluation of
// the slowly decaying raw integrand).
struct Contour {
    double a = 0.0;
    double eps = 0.0;
    double s = 0.0;
    double tol = 0.0;
    double truncation_radius = 0.0; // R covered by the solve nodes
    double tail_radius_spec = 0.0;  // R from the |lambda|^{s/2-2} tail rule
    BranchSide branch = BranchSide::from_above;
    int gl_order = 0;
    int panels_per_ray = 0;
    std::vector<ContourNode> nodes;     // near set
    std::vector<ContourNode> nodes_far; // far extension

    cd power(const ContourNode& nd, double p) const;
    cd branch_value(const ContourNode& nd) const { return power(nd, 0.5 * s - 1.0); }
    // lambda^p for a point off the contour, on this contour's branch.
    cd power_at(cd lambda, double p) const;

    // Winding number of the closed wedge boundaries (rays + far arc) about z.
    int winding_number(cd z) const;
};

// a in (max gap |Re|, tau), eps small, truncation radii from the analytic
// tail bounds; throws "no admissible a" when gap eigenvalues crowd tau.
Contour build_contour(const LinearizedOperator& H, double s, double tol,
                      const SpectralReport* report = nullptr, ContourOptions opt = {});

} // namespace solstab
