#pragma once

#include <map>
#include <memory>

#include "solstab/contour.hpp"

namespace solstab {

// Solves (lambda - H) y = x to relative residual rtol; throws
// "lambda on spectrum" when the preconditioned GMRES cannot reach it.
SpinorField resolvent_apply(const LinearizedOperator& H, cd lambda, const SpinorField& x,
                            double rtol = 1e-10);

// Evaluates (1/2pi i) \oint_Gamma lambda^p (lambda - H)^{-1} y dlambda over
// both wedges. The evaluation peels the resolvent exactly,
//   R = R0 + R0 V R0 + R0 V R V R0,
// so the free part is a Fourier symbol, the single-V term is a closed-form
// divided difference over mode pairs, and only the twice-peeled remainder
// (integrand ~ lambda^{p-3}) is quadratured with per-node solves.
class ContourCalculus {
public:
    ContourCalculus(const LinearizedOperator& H, const Contour& contour);

    SpinorField apply_power(double p, const SpinorField& y) const;
    // Raw quadrature of the same integral with a solve per node (near + far
    // sets); the cross-check path, exact for the free operator.
    SpinorField apply_power_direct(double p, const SpinorField& y) const;
    // Single-V and remainder parts only (= the deviation from the free
    // calculus applied to y).
    SpinorField apply_power_correction(double p, const SpinorField& y) const;

    const Contour& contour() const { return contour_; }
    const LinearizedOperator& op() const { return H_; }

private:
    struct Freq {
        Eigen::VectorXcd up, lo;
    };
    Freq to_freq(const SpinorField& y) const;
    SpinorField from_freq(const Freq& f) const;
    void add_free(double p, const Freq& in, Freq& acc) const;
    void add_divided_difference(double p, const Freq& in, Freq& acc) const;
    void add_remainder(double p, const Freq& in, Freq& acc) const;
    const Eigen::VectorXcd& symbol_power(double p, int comp) const;

    const LinearizedOperator& H_;
    Contour contour_;
    Eigen::VectorXcd vhat1_, vhat2_; // Fourier coefficients of V1, V2
    mutable std::map<double, std::array<Eigen::VectorXcd, 2>> symbol_cache_;
};

// H^{s/2} x per the contour definition, evaluated as the calculus applied to
// H x (annihilates the generalized kernel to residual precision).
SpinorField fractional_power_apply(const LinearizedOperator& H, double s, const SpinorField& x,
                                   const ContourCalculus& calc);
// [H]^beta x, beta < 0.
SpinorField negative_power_apply(const LinearizedOperator& H, double beta, const SpinorField& x,
                                 const ContourCalculus& calc);

// Riesz-type projector onto the continuous spectral part.
class ContinuousProjector {
public:
    ContinuousProjector(const LinearizedOperator& H, std::shared_ptr<const ContourCalculus> calc)
        : H_(&H), calc_(std::move(calc)) {}
    SpinorField apply(const SpinorField& x) const;

private:
    const LinearizedOperator* H_;
    std::shared_ptr<const ContourCalculus> calc_;
};

ContinuousProjector continuous_projector(const LinearizedOperator& H,
                                         std::shared_ptr<const ContourCalculus> calc);

// Free fractional power by Fourier symbol: upper (tau+k^2)^{s/2}, lower the
// branch-consistent (-tau-k^2)^{s/2}.
SpinorField free_fractional_power(const LinearizedOperator& H, double s, const SpinorField& x,
                                  BranchSide branch = BranchSide::from_above);

struct FreeComparison {
    double diff_l2 = 0.0;     // ||H^{s/2} x - H0^{s/2} x||_2
    double ratio_l2 = 0.0;    // diff / ||x||_2
    double ratio_linf = 0.0;  // diff / ||x||_inf
};
FreeComparison compare_to_free(const LinearizedOperator& H, double s, const SpinorField& x,
                               const ContourCalculus& calc);

struct ResolventProbe {
    cd lambda;
    double norm_2to2 = 0.0;     // power-iteration estimate of ||(lambda-H)^{-1}||
    double bound_bracket = 0.0; // (Re sqrt(tau-lambda))^{-2} + (Re sqrt(lambda+tau))^{-2}
};
double resolvent_bound_bracket(double tau, cd lambda);
ResolventProbe resolvent_norm_probe(const LinearizedOperator& H, cd lambda, int iterations = 14,
                                    uint64_t seed = 7);

// Eigendecomposition route: dense spectral projector onto the continuous
// part (identity minus the invariant-subspace projector of the zero cluster).
Eigen::MatrixXcd eigenbasis_continuous_projector(const LinearizedOperator& H,
                                                 double cluster_tol);
SpinorField apply_dense(const Eigen::MatrixXcd& mat, const SpinorField& x);

// Fraction of H^2-weighted spectral mass in the top 20% wavenumber band;
// the domain check for fractional powers.
double h2_band_fraction(const SpinorField& x);

} // namespace solstab
