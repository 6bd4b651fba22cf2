#include "solstab/commutator.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace solstab {

namespace {
constexpr double pi = std::numbers::pi;

void galilean_phases(const GridSpec& g, double t, std::vector<cd>& plus, std::vector<cd>& minus) {
    plus.resize(static_cast<size_t>(g.n));
    minus.resize(static_cast<size_t>(g.n));
    for (int j = 0; j < g.n; ++j) {
        const double x = g.x(j);
        const double th = x * x / (4.0 * t);
        plus[static_cast<size_t>(j)] = std::polar(1.0, th);
        minus[static_cast<size_t>(j)] = std::polar(1.0, -th);
    }
}

// (M(-t) - M(t)) [[0, V2], [V2, 0]] g
SpinorField potential_commutator(const LinearizedOperator& H, double t, const SpinorField& g) {
    SpinorField out(g.grid);
    const auto& v2 = H.V2();
    for (int j = 0; j < g.grid.n; ++j) {
        const double x = g.grid.x(j);
        const double th = x * x / (4.0 * t);
        const cd diff = std::polar(1.0, -th) - std::polar(1.0, th); // M(-t) - M(t)
        out.upper[j] = diff * v2[static_cast<size_t>(j)] * g.lower[j];
        out.lower[j] = diff * v2[static_cast<size_t>(j)] * g.upper[j];
    }
    return out;
}

} // namespace

SpinorField u_apply(double t, const SpinorField& f, double start_time) {
    if (std::abs(t) < start_time)
        throw std::invalid_argument("u_apply: |t| below the start time");
    SpinorField out = f;
    std::vector<cd> plus, minus;
    galilean_phases(f.grid, t, plus, minus);
    for (int j = 0; j < f.grid.n; ++j) {
        out.upper[j] *= plus[static_cast<size_t>(j)];
        out.lower[j] *= minus[static_cast<size_t>(j)];
    }
    out.conjugate_pair = f.conjugate_pair;
    return out;
}

VectorFieldOp make_vector_field_op(const LinearizedOperator& H,
                                   std::shared_ptr<const ContourCalculus> calc, double s,
                                   double t, double start_time) {
    if (!(s > 0.5 && s < 2.0))
        throw std::invalid_argument("vector field op: s out of range (1/2, 2)");
    if (t < start_time) throw std::invalid_argument("vector field op: t below start time");
    VectorFieldOp op;
    op.s = s;
    op.t = t;
    op.start_time = start_time;
    op.H = &H;
    op.calc = std::move(calc);
    return op;
}

SpinorField j_v_apply(const VectorFieldOp& op, const SpinorField& f) {
    const SpinorField g = u_apply(-op.t, f, op.start_time);
    SpinorField y = fractional_power_apply(*op.H, op.s, g, *op.calc);
    const double ts = std::pow(op.t, op.s);
    for (int j = 0; j < y.grid.n; ++j) {
        y.upper[j] *= ts;
        y.lower[j] *= ts;
    }
    return u_apply(op.t, y, op.start_time);
}

SpinorField x_grad_apply(const SpinorField& f, double taper_edge) {
    const GridSpec& g = f.grid;
    const std::vector<double> mask = boundary_taper(g, taper_edge);
    SpinorField out(g);
    std::vector<cd> du = f.upper, dl = f.lower;
    spectral_derivative_inplace(du, g, 1);
    spectral_derivative_inplace(dl, g, 1);
    for (int j = 0; j < g.n; ++j) {
        const double xm = g.x(j) * mask[static_cast<size_t>(j)];
        out.upper[j] = xm * du[static_cast<size_t>(j)];
        out.lower[j] = xm * dl[static_cast<size_t>(j)];
    }
    return out;
}

SpinorField b_apply_defining(const LinearizedOperator& H, double s, const SpinorField& f,
                             const ContourCalculus& calc) {
    const SpinorField kf = fractional_power_apply(H, s, f, calc);
    const SpinorField xdf = x_grad_apply(f);
    const SpinorField k_xdf = fractional_power_apply(H, s, xdf, calc);
    const SpinorField xd_kf = x_grad_apply(kf);
    SpinorField out(H.grid());
    for (int j = 0; j < H.grid().n; ++j) {
        out.upper[j] = s * kf.upper[j] + xd_kf.upper[j] - k_xdf.upper[j];
        out.lower[j] = s * kf.lower[j] + xd_kf.lower[j] - k_xdf.lower[j];
    }
    return out;
}

SpinorField b_apply_free_oracle(const LinearizedOperator& H, double s, const SpinorField& f,
                                BranchSide branch) {
    const GridSpec& g = H.grid();
    const double tau = H.tau();
    std::vector<cd> up = f.upper, lo = f.lower;
    fft_forward(up);
    fft_forward(lo);
    const double phase = branch == BranchSide::from_above ? pi : -pi;
    for (int m = 0; m < g.n; ++m) {
        const double z = tau + g.wavenumber(m) * g.wavenumber(m);
        up[static_cast<size_t>(m)] *= s * tau * std::pow(z, 0.5 * s - 1.0);
        lo[static_cast<size_t>(m)] *=
            -s * tau * std::polar(std::pow(z, 0.5 * s - 1.0), (0.5 * s - 1.0) * phase);
    }
    fft_backward(up);
    fft_backward(lo);
    SpinorField out(g);
    out.upper = std::move(up);
    out.lower = std::move(lo);
    return out;
}

SpinorField b_apply(const LinearizedOperator& H, double s, const SpinorField& f,
                    const ContourCalculus& calc) {
    if (!(s > 0.0 && s < 2.0)) throw std::invalid_argument("b_apply: s out of range");
    const GridSpec& g = H.grid();
    const int n = g.n;
    const Contour& contour = calc.contour();

    // W3 = 2 tau theta3 + 2V + x V'; same block structure as V with entries
    // w1 = 2 tau + 2 V1 + x V1', w2 = 2 V2 + x V2'.
    std::vector<double> w1(static_cast<size_t>(n)), w2(static_cast<size_t>(n));
    {
        ComplexField v1f(g), v2f(g);
        for (int j = 0; j < n; ++j) {
            v1f.values[j] = H.V1()[static_cast<size_t>(j)];
            v2f.values[j] = H.V2()[static_cast<size_t>(j)];
        }
        const ComplexField dv1 = spectral_derivative(v1f, 1);
        const ComplexField dv2 = spectral_derivative(v2f, 1);
        for (int j = 0; j < n; ++j) {
            const double x = g.x(j);
            w1[static_cast<size_t>(j)] =
                2.0 * H.tau() + 2.0 * H.V1()[static_cast<size_t>(j)] + x * dv1.values[j].real();
            w2[static_cast<size_t>(j)] =
                2.0 * H.V2()[static_cast<size_t>(j)] + x * dv2.values[j].real();
        }
    }

    auto mult_block = [&](const std::vector<double>& a, const std::vector<double>& b,
                          SpinorField& v) {
        for (int j = 0; j < n; ++j) {
            const cd u = v.upper[j], l = v.lower[j];
            v.upper[j] = a[static_cast<size_t>(j)] * u + b[static_cast<size_t>(j)] * l;
            v.lower[j] = -b[static_cast<size_t>(j)] * u - a[static_cast<size_t>(j)] * l;
        }
    };
    auto r0_apply = [&](cd lam, SpinorField& v) {
        fft_forward(v.upper);
        fft_forward(v.lower);
        for (int m = 0; m < n; ++m) {
            v.upper[static_cast<size_t>(m)] /= (lam - H.free_symbol(0, m));
            v.lower[static_cast<size_t>(m)] /= (lam - H.free_symbol(1, m));
        }
        fft_backward(v.upper);
        fft_backward(v.lower);
    };

    // exact leading term: divided differences of lambda^{s/2} against W3
    SpinorField lead(g);
    {
        std::vector<cd> what1(w1.begin(), w1.end()), what2(w2.begin(), w2.end());
        fft_forward(what1);
        fft_forward(what2);
        std::vector<cd> fu = f.upper, fl = f.lower;
        fft_forward(fu);
        fft_forward(fl);
        const double p = 0.5 * s;
        std::vector<cd> gu(static_cast<size_t>(n)), gl(static_cast<size_t>(n));
        for (int m = 0; m < n; ++m) {
            gu[static_cast<size_t>(m)] = contour.power_at(cd(H.free_symbol(0, m), 0.0), p);
            gl[static_cast<size_t>(m)] = contour.power_at(cd(H.free_symbol(1, m), 0.0), p);
        }
        std::vector<cd> ou(static_cast<size_t>(n), cd(0.0)), ol(static_cast<size_t>(n), cd(0.0));
        auto dd = [&](double z1, double z2, cd g1, cd g2) -> cd {
            const double d = z1 - z2;
            if (std::abs(d) > 1e-7 * (std::abs(z1) + std::abs(z2))) return (g1 - g2) / d;
            const double zm = 0.5 * (z1 + z2);
            const cd gm = contour.power_at(cd(zm, 0.0), p);
            const double r = 0.5 * d / zm;
            return p * gm / zm * (1.0 + (p - 1.0) * (p - 2.0) / 6.0 * r * r);
        };
        for (int m = 0; m < n; ++m) {
            const double zu = H.free_symbol(0, m), zl = H.free_symbol(1, m);
            cd au(0.0), al(0.0);
            for (int mp = 0; mp < n; ++mp) {
                const int dmi = (m - mp) % n;
                const int dm = dmi < 0 ? dmi + n : dmi;
                const double zup = H.free_symbol(0, mp), zlp = H.free_symbol(1, mp);
                au += dd(zu, zup, gu[static_cast<size_t>(m)], gu[static_cast<size_t>(mp)]) *
                          what1[static_cast<size_t>(dm)] * fu[static_cast<size_t>(mp)] +
                      (gu[static_cast<size_t>(m)] - gl[static_cast<size_t>(mp)]) / (zu - zlp) *
                          what2[static_cast<size_t>(dm)] * fl[static_cast<size_t>(mp)];
                al += (gl[static_cast<size_t>(m)] - gu[static_cast<size_t>(mp)]) / (zl - zup) *
                          (-what2[static_cast<size_t>(dm)]) * fu[static_cast<size_t>(mp)] +
                      dd(zl, zlp, gl[static_cast<size_t>(m)], gl[static_cast<size_t>(mp)]) *
                          (-what1[static_cast<size_t>(dm)]) * fl[static_cast<size_t>(mp)];
            }
            ou[static_cast<size_t>(m)] = au;
            ol[static_cast<size_t>(m)] = al;
        }
        fft_backward(ou);
        fft_backward(ol);
        lead.upper = std::move(ou);
        lead.lower = std::move(ol);
    }
    if (H.is_free()) return lead;

    // remainder: R W3 R - R0 W3 R0 = R0 W3 R0 V R + R0 V R W3 R, two solves/node
    SpinorField acc(g);
    for (const ContourNode& nd : contour.nodes) {
        const cd lam = nd.lambda;
        SpinorField q1 = resolvent_apply(H, lam, f, 1e-11); // R f
        SpinorField q2 = q1;
        mult_block(w1, w2, q2); // W3 R f

        // term2 = R0 V R W3 R f
        SpinorField t2 = resolvent_apply(H, lam, q2, 1e-11);
        t2 = H.apply_potential(t2);
        r0_apply(lam, t2);

        // term1 = R0 W3 R0 V R f
        SpinorField t1 = H.apply_potential(q1);
        r0_apply(lam, t1);
        mult_block(w1, w2, t1);
        r0_apply(lam, t1);

        const cd coef = nd.weight * contour.power(nd, 0.5 * s) / (2.0 * pi * cd(0.0, 1.0));
        for (int j = 0; j < n; ++j) {
            acc.upper[j] += coef * (t1.upper[j] + t2.upper[j]);
            acc.lower[j] += coef * (t1.lower[j] + t2.lower[j]);
        }
    }
    for (int j = 0; j < n; ++j) {
        acc.upper[j] += lead.upper[j];
        acc.lower[j] += lead.lower[j];
    }
    return acc;
}

SpinorField a_apply(const VectorFieldOp& op, const SpinorField& f) {
    const LinearizedOperator& H = *op.H;
    const double t = op.t;
    const double ts = std::pow(t, op.s);

    // term1 = -U(t) (t^2 K)^{s/2} [V, U(-t)] f;  [V, U(-t)] = -[V, U(t)]-form
    SpinorField c1 = potential_commutator(H, -t, f);
    SpinorField y1 = fractional_power_apply(H, op.s, c1, *op.calc);
    y1 = u_apply(t, y1, op.start_time);

    // term2 = -[V, U(t)] (t^2 K)^{s/2} U(-t) f
    SpinorField g = u_apply(-t, f, op.start_time);
    SpinorField y2 = fractional_power_apply(H, op.s, g, *op.calc);
    y2 = potential_commutator(H, t, y2);

    SpinorField out(H.grid());
    for (int j = 0; j < H.grid().n; ++j) {
        out.upper[j] = -ts * (y1.upper[j] + y2.upper[j]);
        out.lower[j] = -ts * (y1.lower[j] + y2.lower[j]);
    }
    return out;
}

namespace {

// Linear spinor flow i f_t = K f by Strang splitting; the potential substep
// uses the closed form of e^{-i V h} (V^2 = (V1^2 - V2^2) I pointwise).
SpinorField linear_flow(const LinearizedOperator& H, const SpinorField& f0, double dt,
                        int substeps) {
    const GridSpec& g = H.grid();
    const int n = g.n;
    const double h = dt / substeps;
    SpinorField f = f0;

    auto half_potential = [&](SpinorField& v, double hh) {
        for (int j = 0; j < n; ++j) {
            const double a = H.V1()[static_cast<size_t>(j)], b = H.V2()[static_cast<size_t>(j)];
            const double mu2 = a * a - b * b;
            const double mu = std::sqrt(std::max(0.0, mu2));
            double c, sn;
            if (mu > 1e-14) {
                c = std::cos(mu * hh);
                sn = std::sin(mu * hh) / mu;
            } else {
                c = 1.0;
                sn = hh;
            }
            const cd u = v.upper[j], l = v.lower[j];
            v.upper[j] = c * u - cd(0.0, 1.0) * sn * (a * u + b * l);
            v.lower[j] = c * l - cd(0.0, 1.0) * sn * (-b * u - a * l);
        }
    };
    auto full_free = [&](SpinorField& v, double hh) {
        fft_forward(v.upper);
        fft_forward(v.lower);
        for (int m = 0; m < n; ++m) {
            v.upper[static_cast<size_t>(m)] *= std::polar(1.0, -H.free_symbol(0, m) * hh);
            v.lower[static_cast<size_t>(m)] *= std::polar(1.0, -H.free_symbol(1, m) * hh);
        }
        fft_backward(v.upper);
        fft_backward(v.lower);
    };

    for (int k = 0; k < substeps; ++k) {
        half_potential(f, 0.5 * h);
        full_free(f, h);
        half_potential(f, 0.5 * h);
    }
    return f;
}

} // namespace

double commutator_identity_residual(const VectorFieldOp& op, const SpinorField& f, double dt) {
    if (dt <= 0.0 || dt < 1e-12) throw std::invalid_argument("identity residual: dt underflow");
    if (op.t - dt < op.start_time)
        throw std::invalid_argument("identity residual: t - dt below start time");
    const LinearizedOperator& H = *op.H;

    VectorFieldOp opp = op;
    // f(t +- dt) along the linear flow
    const SpinorField fp = linear_flow(H, f, dt, 16);
    const SpinorField fm = linear_flow(H, f, -dt, 16);

    opp.t = op.t + dt;
    const SpinorField jp = j_v_apply(opp, fp);
    opp.t = op.t - dt;
    const SpinorField jm = j_v_apply(opp, fm);
    const SpinorField jf = j_v_apply(op, f);
    const SpinorField kjf = H.apply(jf);

    SpinorField lhs(H.grid());
    const cd idt(0.0, 1.0 / (2.0 * dt));
    for (int j = 0; j < H.grid().n; ++j) {
        lhs.upper[j] = idt * (jp.upper[j] - jm.upper[j]) - kjf.upper[j];
        lhs.lower[j] = idt * (jp.lower[j] - jm.lower[j]) - kjf.lower[j];
    }

    // rhs = i t^{s-1} U(t) B(s) U(-t) f + A f
    SpinorField g = u_apply(-op.t, f, op.start_time);
    SpinorField bs = b_apply_defining(H, op.s, g, *op.calc);
    bs = u_apply(op.t, bs, op.start_time);
    const SpinorField af = a_apply(op, f);
    const cd its = cd(0.0, 1.0) * std::pow(op.t, op.s - 1.0);
    SpinorField rhs(H.grid());
    for (int j = 0; j < H.grid().n; ++j) {
        rhs.upper[j] = its * bs.upper[j] + af.upper[j];
        rhs.lower[j] = its * bs.lower[j] + af.lower[j];
    }

    double num = 0.0;
    for (int j = 0; j < H.grid().n; ++j) {
        num += std::norm(lhs.upper[j] - rhs.upper[j]);
        num += std::norm(lhs.lower[j] - rhs.lower[j]);
    }
    const double den = std::max({l2_norm(rhs), l2_norm(lhs), 1e-300});
    return std::sqrt(num * H.grid().spacing) / den;
}

} // namespace solstab
