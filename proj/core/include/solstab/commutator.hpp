#pragma once

#include <memory>

#include "solstab/funcalc.hpp"

namespace solstab {

// U(t) = diag(M(t), M(-t)) with M(t) = e^{i x^2 / 4t}; |t| >= start_time.
SpinorField u_apply(double t, const SpinorField& f, double start_time = 1.0);

// The vector field |J_V(t)|^s = U(t) (t^2 H)^{s/2} U(-t); the t^2 scaling is
// factored out exactly as t^s H^{s/2}.
struct VectorFieldOp {
    double s = 1.75;
    double t = 0.0;
    double start_time = 1.0; // h
    const LinearizedOperator* H = nullptr;
    std::shared_ptr<const ContourCalculus> calc;
};

VectorFieldOp make_vector_field_op(const LinearizedOperator& H,
                                   std::shared_ptr<const ContourCalculus> calc, double s,
                                   double t, double start_time);

SpinorField j_v_apply(const VectorFieldOp& op, const SpinorField& f);

// B(s) = s K^{s/2} + [x grad, K^{s/2}] (defining form). The double-resolvent
// representation is (1/2pi i) \oint lambda^{s/2} R W3 R dlambda with
// W3 = 2 tau theta3 + 2V + x dV/dx; the 2 tau theta3 block comes from
// [x grad, K] = -2K + 2 tau theta3 + (2V + x V') and carries the free part
// (symbol s tau (tau+k^2)^{s/2-1}), without it the two forms cannot agree.
SpinorField b_apply(const LinearizedOperator& H, double s, const SpinorField& f,
                    const ContourCalculus& calc);
SpinorField b_apply_defining(const LinearizedOperator& H, double s, const SpinorField& f,
                             const ContourCalculus& calc);
// Fourier-side oracle for V = 0: symbols s tau (tau+k^2)^{s/2-1} and
// -s tau (-tau-k^2)^{s/2-1} on the contour branch.
SpinorField b_apply_free_oracle(const LinearizedOperator& H, double s, const SpinorField& f,
                                BranchSide branch = BranchSide::from_above);

// A = -U(t) (t^2 K)^{s/2} [V, U(-t)] - [V, U(t)] (t^2 K)^{s/2} U(-t);
// [V, U(t)] = (M(-t) - M(t)) [[0, V2], [V2, 0]].
SpinorField a_apply(const VectorFieldOp& op, const SpinorField& f);

// x d/dx with the boundary taper on the sawtooth coordinate.
SpinorField x_grad_apply(const SpinorField& f, double taper_edge = 0.1);

// Relative residual of
//   [i dt E2 - K, |J_V|^s] f = i t^{s-1} U(t) B(s) U(-t) f + A f
// with the left side from a centered time difference of t -> |J_V(t)|^s f(t)
// along the linear flow i f_t = K f.
double commutator_identity_residual(const VectorFieldOp& op, const SpinorField& f, double dt);

} // namespace solstab
