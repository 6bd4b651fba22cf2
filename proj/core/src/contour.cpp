#include "solstab/contour.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace solstab {

namespace {
constexpr double pi = std::numbers::pi;

// Gauss-Legendre nodes/weights on [-1, 1], computed by Newton on Legendre
// polynomials (standard recurrence).
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(static_cast<size_t>(n));
    w.resize(static_cast<size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[static_cast<size_t>(i)] = -z;
        x[static_cast<size_t>(n - 1 - i)] = z;
        w[static_cast<size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[static_cast<size_t>(n - 1 - i)] = w[static_cast<size_t>(i)];
    }
}

double branch_theta(cd lambda, BranchSide side) {
    double th = std::arg(lambda);
    if (side == BranchSide::from_above) {
        if (th < -0.5 * pi) th += 2.0 * pi; // arg in (-pi/2, 3pi/2)
    } else {
        if (th > 0.5 * pi) th -= 2.0 * pi; // arg in (-3pi/2, pi/2)
    }
    return th;
}

// Lay Gauss-Legendre panels on t in [0, t_end] for one ray
// lambda(t) = vertex + t * dir, appending weight = gl_w * dir * sign.
// Panel lengths grow geometrically but are capped by the distance from the
// ray to the essential-spectrum edge at Re lambda = +-tau; the resolvent
// peaks there with width ~ eps (tau - a) and longer panels lose the
// Gauss-Legendre convergence factor.
void lay_ray(std::vector<ContourNode>& out, cd vertex, cd dir, double sign, double t_start,
             double t_end, double first_len, double growth, int order, BranchSide side,
             double edge_dist, double eps, int* panel_count = nullptr) {
    std::vector<double> gx, gw;
    gauss_legendre(order, gx, gw);

    auto len_cap = [&](double t) {
        if (t > 4.0 * edge_dist) return 0.45 * t;
        const double gap = edge_dist - t;
        const double d = std::sqrt(std::max(0.0, gap) * std::max(0.0, gap) + eps * t * eps * t);
        return 0.6 * std::max(d, 0.25 * eps * edge_dist);
    };

    double t0 = t_start;
    double len = first_len;
    // skip ahead so panel lengths keep the geometric profile from t = 0
    while (t0 > 0.0 && len < t0 * (growth - 1.0)) len *= growth;
    int count = 0;
    while (t0 < t_end) {
        const double use = std::min(len, len_cap(t0));
        const double t1 = std::min(t0 + use, t_end);
        for (int i = 0; i < order; ++i) {
            const double t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * gx[static_cast<size_t>(i)];
            ContourNode nd;
            nd.lambda = vertex + t * dir;
            nd.weight = 0.5 * (t1 - t0) * gw[static_cast<size_t>(i)] * dir * sign;
            nd.theta = branch_theta(nd.lambda, side);
            out.push_back(nd);
        }
        t0 = t1;
        len = std::max(len * growth, use * growth);
        ++count;
    }
    if (panel_count) *panel_count += count;
}

} // namespace

cd Contour::power(const ContourNode& nd, double p) const {
    return std::polar(std::pow(std::abs(nd.lambda), p), p * nd.theta);
}

cd Contour::power_at(cd lambda, double p) const {
    const double th = branch_theta(lambda, branch);
    return std::polar(std::pow(std::abs(lambda), p), p * th);
}

int Contour::winding_number(cd z) const {
    // Closed anticlockwise boundary of each wedge: out along the first ray,
    // around the far arc (positive sweep), back along the second ray.
    auto wedge_winding = [&](double sgn) {
        const cd vertex(sgn * a, 0.0);
        const double t_end = (truncation_radius - a) / std::sqrt(1.0 + eps * eps);
        const cd d_first = sgn > 0 ? cd(1.0, -eps) : cd(-1.0, eps);
        const cd d_second = sgn > 0 ? cd(1.0, eps) : cd(-1.0, -eps);
        std::vector<cd> poly;
        const int m = 256;
        for (int i = 0; i <= m; ++i) poly.push_back(vertex + (t_end * i / m) * d_first);
        const cd end_first = vertex + t_end * d_first;
        const cd end_second = vertex + t_end * d_second;
        const double th0 = std::arg(end_first);
        double th1 = std::arg(end_second);
        if (th1 <= th0) th1 += 2.0 * pi; // positive (anticlockwise) sweep
        const double r0 = std::abs(end_first), r1 = std::abs(end_second);
        for (int i = 1; i <= m; ++i) {
            const double f = static_cast<double>(i) / m;
            poly.push_back(std::polar(r0 + (r1 - r0) * f, th0 + (th1 - th0) * f));
        }
        for (int i = m; i >= 0; --i) poly.push_back(vertex + (t_end * i / m) * d_second);
        double total = 0.0;
        for (size_t i = 0; i + 1 < poly.size(); ++i)
            total += std::arg((poly[i + 1] - z) / (poly[i] - z));
        return static_cast<int>(std::lround(total / (2.0 * pi)));
    };
    return wedge_winding(1.0) + wedge_winding(-1.0);
}

Contour build_contour(const LinearizedOperator& H, double s, double tol,
                      const SpectralReport* report, ContourOptions opt) {
    if (!(s > 0.0 && s < 2.0)) throw std::invalid_argument("build_contour: s out of range (0, 2)");
    if (!(tol > 0.0)) throw std::invalid_argument("build_contour: tol must be positive");
    const double tau = H.tau();

    double max_gap = 0.0;
    if (report)
        for (const cd& lam : report->discrete_eigs) max_gap = std::max(max_gap, std::abs(lam.real()));

    double a = opt.a;
    if (a <= 0.0) {
        if (tau - max_gap < 0.02 * tau)
            throw std::runtime_error("build_contour: no admissible a (gap eigenvalues crowd tau)");
        a = 0.5 * (max_gap + tau);
    }
    if (a >= tau) throw std::invalid_argument("build_contour: a must satisfy a < tau");

    Contour c;
    c.a = a;
    c.eps = opt.eps;
    c.s = s;
    c.tol = tol;
    c.branch = opt.branch;
    c.gl_order = opt.gl_order;

    // Raw Eq.-(20) integrand ~ |lambda|^{s/2-2}: tail C R^{s/2-1}/(1-s/2) < tol.
    const double vsup = std::max(1.0, H.potential_sup());
    const double cgeom = (1.0 + 1.0 / opt.eps) / (2.0 * pi);
    const double c_spec = vsup * cgeom;
    c.tail_radius_spec = std::pow(tol * (1.0 - 0.5 * s) / c_spec, 1.0 / (0.5 * s - 1.0));
    // Twice-peeled remainder ~ |lambda|^{s/2-3}: tail C2 R^{s/2-2}/(2-s/2) < tol.
    const double c_rem = vsup * vsup * cgeom;
    c.truncation_radius = std::pow(tol * (2.0 - 0.5 * s) / c_rem, 1.0 / (0.5 * s - 2.0));
    c.truncation_radius = std::max(c.truncation_radius, 10.0 * tau + 10.0);
    c.tail_radius_spec = std::max(c.tail_radius_spec, c.truncation_radius);

    const double slant = std::sqrt(1.0 + c.eps * c.eps);
    const double t_near = (c.truncation_radius - a) / slant;
    const double t_far = (c.tail_radius_spec - a) / slant;
    const double first_len = 0.5 * a;

    const cd vr(a, 0.0), vl(-a, 0.0);
    const double edge_dist = tau - a;
    int panels = 0;
    // right wedge, anticlockwise: out along the lower ray, in along the upper
    lay_ray(c.nodes, vr, cd(1.0, -c.eps), +1.0, 0.0, t_near, first_len, opt.panel_growth,
            opt.gl_order, opt.branch, edge_dist, c.eps, &panels);
    lay_ray(c.nodes, vr, cd(1.0, c.eps), -1.0, 0.0, t_near, first_len, opt.panel_growth,
            opt.gl_order, opt.branch, edge_dist, c.eps);
    // left wedge, anticlockwise: in along the lower ray (against its
    // parametrization), out along the upper
    lay_ray(c.nodes, vl, cd(-1.0, -c.eps), -1.0, 0.0, t_near, first_len, opt.panel_growth,
            opt.gl_order, opt.branch, edge_dist, c.eps);
    lay_ray(c.nodes, vl, cd(-1.0, c.eps), +1.0, 0.0, t_near, first_len, opt.panel_growth,
            opt.gl_order, opt.branch, edge_dist, c.eps);
    c.panels_per_ray = panels;

    if (t_far > t_near) {
        lay_ray(c.nodes_far, vr, cd(1.0, -c.eps), +1.0, t_near, t_far, first_len,
                opt.panel_growth, opt.gl_order, opt.branch, edge_dist, c.eps);
        lay_ray(c.nodes_far, vr, cd(1.0, c.eps), -1.0, t_near, t_far, first_len,
                opt.panel_growth, opt.gl_order, opt.branch, edge_dist, c.eps);
        lay_ray(c.nodes_far, vl, cd(-1.0, -c.eps), -1.0, t_near, t_far, first_len,
                opt.panel_growth, opt.gl_order, opt.branch, edge_dist, c.eps);
        lay_ray(c.nodes_far, vl, cd(-1.0, c.eps), +1.0, t_near, t_far, first_len,
                opt.panel_growth, opt.gl_order, opt.branch, edge_dist, c.eps);
    }

    // winding check: gap eigenvalues (and 0) must lie between the wedges
    if (c.winding_number(cd(0.0, 0.0)) != 0)
        throw std::runtime_error("build_contour: contour encloses the origin");
    if (report) {
        for (const cd& lam : report->discrete_eigs)
            if (c.winding_number(lam) != 0)
                throw std::runtime_error("build_contour: contour encloses a gap eigenvalue");
    }
    // and the essential spectrum must be enclosed once
    if (c.winding_number(cd(tau * 1.5, 0.0)) != 1 || c.winding_number(cd(-tau * 1.5, 0.0)) != 1)
        throw std::runtime_error("build_contour: essential spectrum not enclosed");

    return c;
}

} // namespace solstab
