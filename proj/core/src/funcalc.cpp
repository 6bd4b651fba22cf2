#include "solstab/funcalc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "solstab/rng.hpp"

namespace solstab {

namespace {

constexpr double pi = std::numbers::pi;

// Preconditioned GMRES for (lambda - H) y = b: solves (I - R0 V) y = R0 b in
// frequency space, where R0 = (lambda - H0)^{-1} is diagonal. No restarts;
// the preconditioned operator is identity plus a localized compact part.
struct ResolventSolver {
    const LinearizedOperator* H;
    cd lambda;
    bool adjoint = false;

    void apply_r0(Eigen::VectorXcd& v) const {
        const int n = H->grid().n;
        for (int m = 0; m < n; ++m) {
            v[m] /= (lambda - H->free_symbol(0, m));
            v[n + m] /= (lambda - H->free_symbol(1, m));
        }
    }

    // w -> w - R0 V w  (V^T in the adjoint case)
    void apply_op(const Eigen::VectorXcd& w, Eigen::VectorXcd& out) const {
        const int n = H->grid().n;
        std::vector<cd> up(static_cast<size_t>(n)), lo(static_cast<size_t>(n));
        for (int m = 0; m < n; ++m) {
            up[static_cast<size_t>(m)] = w[m];
            lo[static_cast<size_t>(m)] = w[n + m];
        }
        fft_backward(up);
        fft_backward(lo);
        const auto& v1 = H->V1();
        const auto& v2 = H->V2();
        for (int j = 0; j < n; ++j) {
            const cd u = up[static_cast<size_t>(j)], l = lo[static_cast<size_t>(j)];
            const double a = v1[static_cast<size_t>(j)], b = v2[static_cast<size_t>(j)];
            if (!adjoint) {
                up[static_cast<size_t>(j)] = a * u + b * l;
                lo[static_cast<size_t>(j)] = -b * u - a * l;
            } else {
                up[static_cast<size_t>(j)] = a * u - b * l;
                lo[static_cast<size_t>(j)] = b * u - a * l;
            }
        }
        fft_forward(up);
        fft_forward(lo);
        out.resize(2 * n);
        for (int m = 0; m < n; ++m) {
            out[m] = up[static_cast<size_t>(m)];
            out[n + m] = lo[static_cast<size_t>(m)];
        }
        apply_r0(out);
        out = w - out;
    }

    // true residual b - (lambda - H) y
    double true_residual(const Eigen::VectorXcd& y, const Eigen::VectorXcd& b) const {
        Eigen::VectorXcd hy;
        if (!adjoint)
            H->apply_freq(y, hy);
        else
            H->apply_adjoint_freq(y, hy);
        return (b - (lambda * y - hy)).norm();
    }

    // Solve in frequency space; b and the result use stacked [upper; lower]
    // Fourier coefficients. Termination is on the true (unpreconditioned)
    // residual, checked periodically from the small least-squares solution.
    Eigen::VectorXcd solve(const Eigen::VectorXcd& b, double rtol, int max_iter = 250) const {
        const double bnorm = b.norm();
        Eigen::VectorXcd x = Eigen::VectorXcd::Zero(b.size());
        if (bnorm == 0.0) return x;

        Eigen::VectorXcd rhs = b;
        apply_r0(rhs);
        if (H->is_free()) {
            if (true_residual(rhs, b) > std::max(rtol, 1e-13) * bnorm)
                throw std::runtime_error("resolvent: lambda on spectrum");
            return rhs;
        }

        const double beta = rhs.norm();
        if (beta == 0.0) return x;

        std::vector<Eigen::VectorXcd> basis;
        basis.push_back(rhs / beta);
        Eigen::MatrixXcd Hm = Eigen::MatrixXcd::Zero(max_iter + 1, max_iter);

        auto assemble = [&](int k) {
            Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(k + 1);
            e1[0] = beta;
            const Eigen::VectorXcd y =
                Hm.topLeftCorner(k + 1, k).colPivHouseholderQr().solve(e1);
            Eigen::VectorXcd cand = Eigen::VectorXcd::Zero(b.size());
            for (int i = 0; i < k; ++i) cand += y[i] * basis[static_cast<size_t>(i)];
            return cand;
        };

        for (int k = 0; k < max_iter; ++k) {
            Eigen::VectorXcd w;
            apply_op(basis[static_cast<size_t>(k)], w);
            for (int i = 0; i <= k; ++i) {
                Hm(i, k) = basis[static_cast<size_t>(i)].dot(w);
                w -= Hm(i, k) * basis[static_cast<size_t>(i)];
            }
            const double hsub = w.norm();
            Hm(k + 1, k) = hsub;

            const bool check = hsub < 1e-14 * beta || k >= max_iter - 1 ||
                               (k < 24 ? (k % 4 == 3) : (k % 8 == 7));
            if (check) {
                x = assemble(k + 1);
                if (true_residual(x, b) <= rtol * bnorm) return x;
                if (hsub < 1e-14 * beta) break; // stagnated
            }
            if (hsub == 0.0) break;
            basis.push_back(w / hsub);
        }
        x = assemble(static_cast<int>(basis.size()));
        if (true_residual(x, b) > rtol * bnorm)
            throw std::runtime_error("resolvent: lambda on spectrum");
        return x;
    }
};

} // namespace

SpinorField resolvent_apply(const LinearizedOperator& H, cd lambda, const SpinorField& x,
                            double rtol) {
    const int n = H.grid().n;
    Eigen::VectorXcd b(2 * n);
    {
        std::vector<cd> up = x.upper, lo = x.lower;
        fft_forward(up);
        fft_forward(lo);
        for (int m = 0; m < n; ++m) {
            b[m] = up[static_cast<size_t>(m)];
            b[n + m] = lo[static_cast<size_t>(m)];
        }
    }
    ResolventSolver solver{&H, lambda, false};
    Eigen::VectorXcd y = solver.solve(b, rtol);
    SpinorField out(H.grid());
    std::vector<cd> up(static_cast<size_t>(n)), lo(static_cast<size_t>(n));
    for (int m = 0; m < n; ++m) {
        up[static_cast<size_t>(m)] = y[m];
        lo[static_cast<size_t>(m)] = y[n + m];
    }
    fft_backward(up);
    fft_backward(lo);
    out.upper = std::move(up);
    out.lower = std::move(lo);
    return out;
}

ContourCalculus::ContourCalculus(const LinearizedOperator& H, const Contour& contour)
    : H_(H), contour_(contour) {
    const int n = H.grid().n;
    std::vector<cd> v1(static_cast<size_t>(n)), v2(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        v1[static_cast<size_t>(j)] = H.V1()[static_cast<size_t>(j)];
        v2[static_cast<size_t>(j)] = H.V2()[static_cast<size_t>(j)];
    }
    fft_forward(v1);
    fft_forward(v2);
    vhat1_.resize(n);
    vhat2_.resize(n);
    for (int m = 0; m < n; ++m) {
        vhat1_[m] = v1[static_cast<size_t>(m)];
        vhat2_[m] = v2[static_cast<size_t>(m)];
    }
}

ContourCalculus::Freq ContourCalculus::to_freq(const SpinorField& y) const {
    Freq f;
    const int n = H_.grid().n;
    std::vector<cd> up = y.upper, lo = y.lower;
    fft_forward(up);
    fft_forward(lo);
    f.up.resize(n);
    f.lo.resize(n);
    for (int m = 0; m < n; ++m) {
        f.up[m] = up[static_cast<size_t>(m)];
        f.lo[m] = lo[static_cast<size_t>(m)];
    }
    return f;
}

SpinorField ContourCalculus::from_freq(const Freq& f) const {
    const int n = H_.grid().n;
    SpinorField out(H_.grid());
    std::vector<cd> up(static_cast<size_t>(n)), lo(static_cast<size_t>(n));
    for (int m = 0; m < n; ++m) {
        up[static_cast<size_t>(m)] = f.up[m];
        lo[static_cast<size_t>(m)] = f.lo[m];
    }
    fft_backward(up);
    fft_backward(lo);
    out.upper = std::move(up);
    out.lower = std::move(lo);
    return out;
}

const Eigen::VectorXcd& ContourCalculus::symbol_power(double p, int comp) const {
    auto it = symbol_cache_.find(p);
    if (it == symbol_cache_.end()) {
        const int n = H_.grid().n;
        std::array<Eigen::VectorXcd, 2> arr;
        arr[0].resize(n);
        arr[1].resize(n);
        for (int m = 0; m < n; ++m) {
            for (int c = 0; c < 2; ++c) {
                const double z = H_.free_symbol(c, m);
                arr[static_cast<size_t>(c)][m] = contour_.power_at(cd(z, 0.0), p);
            }
        }
        it = symbol_cache_.emplace(p, std::move(arr)).first;
    }
    return it->second[static_cast<size_t>(comp)];
}

void ContourCalculus::add_free(double p, const Freq& in, Freq& acc) const {
    const Eigen::VectorXcd& gu = symbol_power(p, 0);
    const Eigen::VectorXcd& gl = symbol_power(p, 1);
    acc.up.array() += gu.array() * in.up.array();
    acc.lo.array() += gl.array() * in.lo.array();
}

void ContourCalculus::add_divided_difference(double p, const Freq& in, Freq& acc) const {
    const int n = H_.grid().n;
    const Eigen::VectorXcd& gu = symbol_power(p, 0);
    const Eigen::VectorXcd& gl = symbol_power(p, 1);

    // out_c[m] += sum_{c',m'} DD(z_c(m), z_c'(m')) Vhat_{cc'}[m-m'] in_c'[m']
    // with the V blocks (V1, V2; -V2, -V1). Same-component pairs can collide
    // (k'^2 = k^2); the divided difference then switches to the derivative.
    auto dd_same = [&](double z1, double z2, cd g1, cd g2) -> cd {
        const double d = z1 - z2;
        if (std::abs(d) > 1e-7 * (std::abs(z1) + std::abs(z2)))
            return (g1 - g2) / d;
        // g'((z1+z2)/2) with the leading even Taylor correction
        const double zm = 0.5 * (z1 + z2);
        const cd gm = contour_.power_at(cd(zm, 0.0), p);
        const double r = 0.5 * d / zm;
        return p * gm / zm * (1.0 + (p - 1.0) * (p - 2.0) / 6.0 * r * r);
    };

    for (int m = 0; m < n; ++m) {
        const double zu = H_.free_symbol(0, m);
        const double zl = H_.free_symbol(1, m);
        cd accu(0.0), accl(0.0);
        for (int mp = 0; mp < n; ++mp) {
            const int dmi = (m - mp) % n;
            const int dm = dmi < 0 ? dmi + n : dmi;
            const cd w1 = vhat1_[dm];
            const cd w2 = vhat2_[dm];
            const double zup = H_.free_symbol(0, mp);
            const double zlp = H_.free_symbol(1, mp);
            // upper row: V11 = V1 (upper-upper), V12 = V2 (upper-lower)
            accu += dd_same(zu, zup, gu[m], gu[mp]) * w1 * in.up[mp];
            accu += (gu[m] - gl[mp]) / (zu - zlp) * w2 * in.lo[mp];
            // lower row: V21 = -V2, V22 = -V1
            accl += (gl[m] - gu[mp]) / (zl - zup) * (-w2) * in.up[mp];
            accl += dd_same(zl, zlp, gl[m], gl[mp]) * (-w1) * in.lo[mp];
        }
        acc.up[m] += accu;
        acc.lo[m] += accl;
    }
}

void ContourCalculus::add_remainder(double p, const Freq& in, Freq& acc) const {
    const int n = H_.grid().n;
    const auto& v1 = H_.V1();
    const auto& v2 = H_.V2();

    auto mult_v = [&](std::vector<cd>& up, std::vector<cd>& lo) {
        fft_backward(up);
        fft_backward(lo);
        for (int j = 0; j < n; ++j) {
            const cd u = up[static_cast<size_t>(j)], l = lo[static_cast<size_t>(j)];
            const double a = v1[static_cast<size_t>(j)], b = v2[static_cast<size_t>(j)];
            up[static_cast<size_t>(j)] = a * u + b * l;
            lo[static_cast<size_t>(j)] = -b * u - a * l;
        }
        fft_forward(up);
        fft_forward(lo);
    };

    Eigen::VectorXcd accv = Eigen::VectorXcd::Zero(2 * n);
    std::vector<cd> up(static_cast<size_t>(n)), lo(static_cast<size_t>(n));
    Eigen::VectorXcd b(2 * n);

    for (const ContourNode& nd : contour_.nodes) {
        const cd lam = nd.lambda;
        // t1 = R0 in
        for (int m = 0; m < n; ++m) {
            up[static_cast<size_t>(m)] = in.up[m] / (lam - H_.free_symbol(0, m));
            lo[static_cast<size_t>(m)] = in.lo[m] / (lam - H_.free_symbol(1, m));
        }
        mult_v(up, lo); // t2 = V t1
        for (int m = 0; m < n; ++m) {
            b[m] = up[static_cast<size_t>(m)];
            b[n + m] = lo[static_cast<size_t>(m)];
        }
        ResolventSolver solver{&H_, lam, false};
        Eigen::VectorXcd t3 = solver.solve(b, 1e-12);
        for (int m = 0; m < n; ++m) {
            up[static_cast<size_t>(m)] = t3[m];
            lo[static_cast<size_t>(m)] = t3[n + m];
        }
        mult_v(up, lo); // t4 = V t3
        const cd coef = nd.weight * contour_.power(nd, p) / (2.0 * pi * cd(0.0, 1.0));
        for (int m = 0; m < n; ++m) {
            accv[m] += coef * up[static_cast<size_t>(m)] / (lam - H_.free_symbol(0, m));
            accv[n + m] += coef * lo[static_cast<size_t>(m)] / (lam - H_.free_symbol(1, m));
        }
    }
    for (int m = 0; m < n; ++m) {
        acc.up[m] += accv[m];
        acc.lo[m] += accv[n + m];
    }
}

SpinorField ContourCalculus::apply_power(double p, const SpinorField& y) const {
    const int n = H_.grid().n;
    Freq in = to_freq(y);
    Freq acc;
    acc.up = Eigen::VectorXcd::Zero(n);
    acc.lo = Eigen::VectorXcd::Zero(n);
    add_free(p, in, acc);
    if (!H_.is_free()) {
        add_divided_difference(p, in, acc);
        add_remainder(p, in, acc);
    }
    return from_freq(acc);
}

SpinorField ContourCalculus::apply_power_correction(double p, const SpinorField& y) const {
    const int n = H_.grid().n;
    Freq in = to_freq(y);
    Freq acc;
    acc.up = Eigen::VectorXcd::Zero(n);
    acc.lo = Eigen::VectorXcd::Zero(n);
    if (!H_.is_free()) {
        add_divided_difference(p, in, acc);
        add_remainder(p, in, acc);
    }
    return from_freq(acc);
}

SpinorField ContourCalculus::apply_power_direct(double p, const SpinorField& y) const {
    const int n = H_.grid().n;
    Freq in = to_freq(y);
    Eigen::VectorXcd b(2 * n);
    for (int m = 0; m < n; ++m) {
        b[m] = in.up[m];
        b[n + m] = in.lo[m];
    }
    Eigen::VectorXcd accv = Eigen::VectorXcd::Zero(2 * n);
    auto run = [&](const std::vector<ContourNode>& nodes) {
        for (const ContourNode& nd : nodes) {
            ResolventSolver solver{&H_, nd.lambda, false};
            const Eigen::VectorXcd t = solver.solve(b, 1e-12);
            accv += (nd.weight * contour_.power(nd, p) / (2.0 * pi * cd(0.0, 1.0))) * t;
        }
    };
    run(contour_.nodes);
    run(contour_.nodes_far);
    Freq acc;
    acc.up.resize(n);
    acc.lo.resize(n);
    for (int m = 0; m < n; ++m) {
        acc.up[m] = accv[m];
        acc.lo[m] = accv[n + m];
    }
    return from_freq(acc);
}

double h2_band_fraction(const SpinorField& x) {
    const GridSpec& g = x.grid;
    std::vector<cd> up = x.upper, lo = x.lower;
    fft_forward(up);
    fft_forward(lo);
    double total = 0.0, band = 0.0;
    const double kmax = pi / g.half_width * (g.n / 2);
    for (int m = 0; m < g.n; ++m) {
        const double k = g.wavenumber(m);
        const double w = (1.0 + k * k) * (1.0 + k * k) *
                         (std::norm(up[static_cast<size_t>(m)]) + std::norm(lo[static_cast<size_t>(m)]));
        total += w;
        if (std::abs(k) >= 0.8 * kmax) band += w;
    }
    return total > 0.0 ? band / total : 0.0;
}

SpinorField fractional_power_apply(const LinearizedOperator& H, double s, const SpinorField& x,
                                   const ContourCalculus& calc) {
    if (!(s > 0.0 && s < 2.0))
        throw std::invalid_argument("fractional_power_apply: s out of range (0, 2)");
    if (l2_norm(x) == 0.0) return SpinorField(H.grid());
    if (h2_band_fraction(x) > 1e-4)
        throw std::invalid_argument("fractional_power_apply: input not in the discretized H^2 domain");
    const SpinorField y = H.apply(x);
    return calc.apply_power(0.5 * s - 1.0, y);
}

SpinorField negative_power_apply(const LinearizedOperator& H, double beta, const SpinorField& x,
                                 const ContourCalculus& calc) {
    (void)H;
    if (!(beta < 0.0)) throw std::invalid_argument("negative_power_apply: beta must be negative");
    return calc.apply_power(beta, x);
}

SpinorField ContinuousProjector::apply(const SpinorField& x) const {
    const SpinorField y = H_->apply(x);
    return calc_->apply_power(-1.0, y);
}

ContinuousProjector continuous_projector(const LinearizedOperator& H,
                                         std::shared_ptr<const ContourCalculus> calc) {
    return ContinuousProjector(H, std::move(calc));
}

SpinorField free_fractional_power(const LinearizedOperator& H, double s, const SpinorField& x,
                                  BranchSide branch) {
    const GridSpec& g = H.grid();
    std::vector<cd> up = x.upper, lo = x.lower;
    fft_forward(up);
    fft_forward(lo);
    const double phase = branch == BranchSide::from_above ? pi : -pi;
    for (int m = 0; m < g.n; ++m) {
        const double z = H.free_symbol(0, m); // tau + k^2 > 0
        up[static_cast<size_t>(m)] *= std::pow(z, 0.5 * s);
        lo[static_cast<size_t>(m)] *= std::polar(std::pow(z, 0.5 * s), 0.5 * s * phase);
    }
    fft_backward(up);
    fft_backward(lo);
    SpinorField out(g);
    out.upper = std::move(up);
    out.lower = std::move(lo);
    return out;
}

FreeComparison compare_to_free(const LinearizedOperator& H, double s, const SpinorField& x,
                               const ContourCalculus& calc) {
    FreeComparison fc;
    const double n2 = l2_norm(x);
    if (n2 == 0.0) return fc;
    const SpinorField hx = fractional_power_apply(H, s, x, calc);
    const SpinorField h0x = free_fractional_power(H, s, x, calc.contour().branch);
    double d = 0.0;
    for (int j = 0; j < H.grid().n; ++j) {
        d += std::norm(hx.upper[j] - h0x.upper[j]);
        d += std::norm(hx.lower[j] - h0x.lower[j]);
    }
    fc.diff_l2 = std::sqrt(d * H.grid().spacing);
    fc.ratio_l2 = fc.diff_l2 / n2;
    const double ninf = linf_norm(x);
    fc.ratio_linf = ninf > 0.0 ? fc.diff_l2 / ninf : 0.0;
    return fc;
}

double resolvent_bound_bracket(double tau, cd lambda) {
    const cd r1 = std::sqrt(cd(tau, 0.0) - lambda);
    const cd r2 = std::sqrt(lambda + cd(tau, 0.0));
    const double a = r1.real(), b = r2.real();
    return 1.0 / (a * a) + 1.0 / (b * b);
}

ResolventProbe resolvent_norm_probe(const LinearizedOperator& H, cd lambda, int iterations,
                                    uint64_t seed) {
    const int n = H.grid().n;
    Rng rng(seed);
    Eigen::VectorXcd v(2 * n);
    for (int i = 0; i < 2 * n; ++i) v[i] = rng.complex_normal();
    v /= v.norm();

    ResolventSolver fwd{&H, lambda, false};
    ResolventSolver adj{&H, std::conj(lambda), true};

    double sigma = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXcd w = fwd.solve(v, 1e-11);
        sigma = w.norm();
        Eigen::VectorXcd u = adj.solve(w, 1e-11);
        const double un = u.norm();
        if (un == 0.0) break;
        v = u / un;
    }
    ResolventProbe probe;
    probe.lambda = lambda;
    probe.norm_2to2 = sigma;
    probe.bound_bracket = resolvent_bound_bracket(H.tau(), lambda);
    if (!(probe.bound_bracket > 0.0) || !std::isfinite(probe.bound_bracket))
        throw std::runtime_error("resolvent probe: bracket not finite (lambda on spectrum?)");
    return probe;
}

Eigen::MatrixXcd eigenbasis_continuous_projector(const LinearizedOperator& H,
                                                 double cluster_tol) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(H.dense_matrix());
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigenbasis projector: eigensolver failed");
    const Eigen::VectorXcd vals = es.eigenvalues();
    const Eigen::MatrixXcd vecs = es.eigenvectors();
    const Eigen::MatrixXcd vinv = vecs.inverse();
    Eigen::VectorXcd mask(vals.size());
    for (int i = 0; i < vals.size(); ++i)
        mask[i] = std::abs(vals[i]) < cluster_tol ? cd(0.0) : cd(1.0);
    return vecs * mask.asDiagonal() * vinv;
}

SpinorField apply_dense(const Eigen::MatrixXcd& mat, const SpinorField& x) {
    const int n = x.grid.n;
    Eigen::VectorXcd v(2 * n);
    for (int j = 0; j < n; ++j) {
        v[j] = x.upper[j];
        v[n + j] = x.lower[j];
    }
    const Eigen::VectorXcd w = mat * v;
    SpinorField out(x.grid);
    for (int j = 0; j < n; ++j) {
        out.upper[j] = w[j];
        out.lower[j] = w[n + j];
    }
    return out;
}

} // namespace solstab
