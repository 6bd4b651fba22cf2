#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>

#include "solstab/grid.hpp"
#include "solstab/nonlinearity.hpp"
#include "solstab/profile.hpp"

namespace solstab {

// Discretization of the matrix linearization H = H0 + V acting on (f, g):
//
//   H = [ -Delta + tau + V1,      V2        ]
//       [      -V2,          Delta - tau - V1 ]
//
// with V1 = -(F(phi^2) + F'(phi^2) phi^2), V2 = -F'(phi^2) phi^2; these signs
// make the symmetry relations H xi_1 = 0, H xi_2 = i xi_1 hold for
// xi_1 = (-i phi, i phi), xi_2 = -(2/alpha)(phi_a, phi_a).
class LinearizedOperator {
public:
    LinearizedOperator(const GridSpec& g, double alpha, std::vector<double> v1,
                       std::vector<double> v2);

    static LinearizedOperator free_operator(const GridSpec& g, double alpha);

    const GridSpec& grid() const { return grid_; }
    double alpha() const { return alpha_; }
    double tau() const { return tau_; }
    const std::vector<double>& V1() const { return v1_; }
    const std::vector<double>& V2() const { return v2_; }
    bool is_free() const { return free_; }
    double potential_sup() const; // max_x ||V(x)||_2 (2x2 spectral norm)

    SpinorField apply(const SpinorField& x) const;
    SpinorField apply_free(const SpinorField& x) const;
    SpinorField apply_adjoint(const SpinorField& x) const; // H^T (real entries)
    SpinorField apply_potential(const SpinorField& x) const;

    // Frequency-space action on stacked coefficients; used by solvers.
    void apply_freq(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const;
    void apply_adjoint_freq(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const;

    // Free symbols +-(tau + k^2) for component c in {0, 1} and FFT bin m.
    double free_symbol(int c, int m) const;

    // Dense 2N x 2N real matrix, materialized on demand and cached.
    const Eigen::MatrixXd& dense_matrix() const;

private:
    GridSpec grid_;
    double alpha_;
    double tau_;
    std::vector<double> v1_, v2_;
    bool free_ = false;
    mutable std::shared_ptr<Eigen::MatrixXd> dense_;
};

LinearizedOperator assemble_operator(const SolitonProfile& profile, const NonlinearitySpec& nl);

// Generalized-kernel spinors of the radial problem.
SpinorField xi1(const SolitonProfile& profile);
SpinorField xi2(const SolitonProfile& profile);
// (||H xi1||_2, ||H xi2 - i xi1||_2)
std::pair<double, double> kernel_residuals(const LinearizedOperator& H,
                                           const SolitonProfile& profile);

struct EdgeProbe {
    bool resonant = false;
    double growth_rate = 0.0;
    double matching_determinant = 0.0; // min over even/odd sectors, normalized
};

struct SpectralReport {
    std::vector<cd> discrete_eigs;            // gap eigenvalues |Re| < tau - delta
    std::pair<double, double> kernel_residuals{0.0, 0.0};
    bool resonance_at_plus = false;
    bool resonance_at_minus = false;
    std::vector<cd> embedded_eig_suspects;
    bool assumption_a3_pass = false;
    std::vector<std::string> failure_reasons;
    double zero_cluster_tol = 0.0;
    int zero_cluster_size = 0;
    double gap_edge_margin = 0.0;
};

struct SpectrumOptions {
    double edge_margin_factor = 0.05; // delta_edge = factor * tau
    double max_dense_n = 4096;        // refuse dense solve beyond this N
};

// All eigenvalues of the dense matrix; gap/cluster/embedded classification.
// Also returns eigenvectors through the optional outputs for projector work.
SpectralReport discrete_spectrum(const LinearizedOperator& H, const SolitonProfile* profile,
                                 const SpectrumOptions& opt = {},
                                 Eigen::MatrixXcd* eigvecs = nullptr,
                                 Eigen::VectorXcd* eigvals = nullptr);

// Evans-style matching-determinant probe for a bounded solution of
// (lambda - H)u = 0 at lambda = +-tau, integrating the bounded-at-infinity
// channels from x = L toward 0 and testing the parity conditions at 0.
EdgeProbe edge_resonance_probe(const LinearizedOperator& H, double edge,
                               double det_tol = 1e-4);

SpectralReport verify_assumption_a3(const LinearizedOperator& H, const SolitonProfile& profile,
                                    const NonlinearitySpec& nl, const SpectrumOptions& opt = {});

} // namespace solstab
