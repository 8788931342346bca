#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "feederflow/errors.hpp"
#include "feederflow/nonlinear.hpp"

namespace feederflow {
namespace {

// Refines a uniformly sampled function by local cubic (quadratic for 3-sample
// grids) Lagrange interpolation; `refine` subintervals per original interval.
Eigen::ArrayXd refine_samples(const Eigen::ArrayXd& f, int refine) {
    const Eigen::Index n = f.size();
    Eigen::ArrayXd out(refine * (n - 1) + 1);
    if (n == 3) {
        for (Eigen::Index k = 0; k < n - 1; ++k)
            for (int j = 0; j < refine; ++j) {
                const double t = static_cast<double>(k) + static_cast<double>(j) / refine;
                out(refine * k + j) = 0.5 * (t - 1.0) * (t - 2.0) * f(0) - t * (t - 2.0) * f(1) +
                                      0.5 * t * (t - 1.0) * f(2);
            }
    } else {
        for (Eigen::Index k = 0; k < n - 1; ++k) {
            const Eigen::Index b = std::clamp<Eigen::Index>(k - 1, 0, n - 4);
            for (int j = 0; j < refine; ++j) {
                const double t = static_cast<double>(k - b) + static_cast<double>(j) / refine;
                const double l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
                const double l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
                const double l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
                const double l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
                out(refine * k + j) = l0 * f(b) + l1 * f(b + 1) + l2 * f(b + 2) + l3 * f(b + 3);
            }
        }
    }
    out(out.size() - 1) = f(n - 1);
    return out;
}

// Fourth-order cumulative antiderivative on a uniform grid (cubic through the
// four samples around each interval; one-sided at the ends).
Eigen::ArrayXd cumulative_cubic(const Eigen::ArrayXd& f, double h) {
    const Eigen::Index m = f.size();
    Eigen::ArrayXd out(m);
    out(0) = 0.0;
    for (Eigen::Index j = 0; j + 1 < m; ++j) {
        double inc;
        if (j == 0)
            inc = h * (9.0 * f(0) + 19.0 * f(1) - 5.0 * f(2) + f(3)) / 24.0;
        else if (j + 2 == m)
            inc = h * (9.0 * f(m - 1) + 19.0 * f(m - 2) - 5.0 * f(m - 3) + f(m - 4)) / 24.0;
        else
            inc = h * (-f(j - 1) + 13.0 * f(j) + 13.0 * f(j + 1) - f(j + 2)) / 24.0;
        out(j + 1) = out(j) + inc;
    }
    return out;
}

struct Integrated {
    Eigen::ArrayXd v, w;  // on the half-step grid (even fine indices)
};

// Classical 4-stage one-step integration of dv/dx = w, dw/dx = s^2/v^3 - kap/v
// from v(0) = 1, w(0) = eta. Steps span two fine intervals so every stage sits
// on the fine grid. Returns nothing if v collapses.
std::optional<Integrated> integrate_vw(const Eigen::ArrayXd& s_f, const Eigen::ArrayXd& kap_f,
                                       double h_fine, double eta) {
    const Eigen::Index nf = s_f.size();
    const Eigen::Index ne = (nf - 1) / 2 + 1;
    Integrated out{Eigen::ArrayXd(ne), Eigen::ArrayXd(ne)};
    double v = 1.0, w = eta;
    out.v(0) = v;
    out.w(0) = w;
    const double H = 2.0 * h_fine;
    auto fw = [&](Eigen::Index i, double vv) {
        return s_f(i) * s_f(i) / (vv * vv * vv) - kap_f(i) / vv;
    };
    for (Eigen::Index i = 0; i + 2 <= nf - 1; i += 2) {
        if (v <= 1e-9) return std::nullopt;
        const double k1v = w, k1w = fw(i, v);
        const double v2 = v + 0.5 * H * k1v;
        if (v2 <= 1e-9) return std::nullopt;
        const double k2v = w + 0.5 * H * k1w, k2w = fw(i + 1, v2);
        const double v3 = v + 0.5 * H * k2v;
        if (v3 <= 1e-9) return std::nullopt;
        const double k3v = w + 0.5 * H * k2w, k3w = fw(i + 1, v3);
        const double v4 = v + H * k3v;
        if (v4 <= 1e-9) return std::nullopt;
        const double k4v = w + H * k3w, k4w = fw(i + 2, v4);
        v += H / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        w += H / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        if (v <= 1e-9) return std::nullopt;
        out.v(i / 2 + 1) = v;
        out.w(i / 2 + 1) = w;
    }
    return out;
}

}  // namespace

Profile shooting_oracle(const FeederNetwork& net, const DensityProfile& d, const Grid& grid,
                        const ShootingOptions& options) {
    if (net.segments.size() != 1)
        throw std::invalid_argument("shooting_oracle: single-segment networks only");
    if (grid.segments.size() != 1 || d.p_tilde.size() != 1 ||
        d.p_tilde[0].size() != grid.segments[0].x.size())
        throw GridMismatch("shooting_oracle: density/grid mismatch");

    const auto& sg = grid.segments[0];
    const Eigen::Index n = sg.x.size();
    constexpr int refine = 4;
    const double h_fine = sg.h / refine;

    const double G = net.segments[0].conductance_G;
    const double B = net.segments[0].susceptance_B;
    const double Y2 = G * G + B * B;
    const Eigen::ArrayXd p_f = d.epsilon * refine_samples(d.p_tilde[0], refine);
    const Eigen::ArrayXd q_f = d.epsilon * refine_samples(d.q_tilde[0], refine);
    const Eigen::ArrayXd rs_f = (B * p_f - G * q_f) / Y2;
    const Eigen::ArrayXd kap_f = (G * p_f + B * q_f) / Y2;

    // s by quadrature from its terminal condition s(L) = 0
    const Eigen::ArrayXd Frs = cumulative_cubic(rs_f, h_fine);
    const Eigen::ArrayXd s_f = Frs - Frs(Frs.size() - 1);

    auto phi = [&](double eta) -> double {
        const auto r = integrate_vw(s_f, kap_f, h_fine, eta);
        if (!r) return std::numeric_limits<double>::quiet_NaN();
        return r->w(r->w.size() - 1);
    };

    // bracket the initial gradient around its first-order estimate
    const Eigen::ArrayXd Fk = cumulative_cubic(kap_f, h_fine);
    const double eta_est = Fk(Fk.size() - 1);
    const double hw = options.bracket_halfwidth > 0.0 ? options.bracket_halfwidth
                                                      : std::max(0.5, 4.0 * std::abs(eta_est));
    const double lo = eta_est - hw, hi = eta_est + hw;

    const int m = std::max(3, options.sweep_points);
    std::vector<double> etas(m), vals(m);
    for (int i = 0; i < m; ++i) {
        etas[i] = lo + (hi - lo) * i / (m - 1);
        vals[i] = phi(etas[i]);
    }

    double a = 0.0, b = 0.0, fa = 0.0;
    bool found = false;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < m; ++i) {
        if (!std::isfinite(vals[i]) || !std::isfinite(vals[i + 1])) continue;
        if (vals[i] == 0.0 || vals[i] * vals[i + 1] < 0.0) {
            const double mid = 0.5 * (etas[i] + etas[i + 1]);
            const double dist = std::abs(mid - eta_est);
            if (dist < best_dist) {
                best_dist = dist;
                a = etas[i];
                b = etas[i + 1];
                fa = vals[i];
                found = true;
            }
        }
    }
    if (!found)
        throw BracketFailure(lo, hi,
                             "shooting_oracle: no sign change of w(L) over the eta bracket");

    double eta = 0.5 * (a + b), feta = phi(eta);
    for (int it = 0; it < options.max_bisections && !(std::abs(feta) <= options.tol); ++it) {
        if (!std::isfinite(feta)) {
            a = eta;  // collapse side: too steep an initial sag
        } else if (fa * feta <= 0.0) {
            b = eta;
        } else {
            a = eta;
            fa = feta;
        }
        eta = 0.5 * (a + b);
        feta = phi(eta);
    }
    if (!(std::abs(feta) <= options.tol))
        throw NonConvergence(options.max_bisections, std::abs(feta),
                             "shooting_oracle: bisection did not reach tolerance");

    const auto r = integrate_vw(s_f, kap_f, h_fine, eta);
    if (!r)
        throw VoltageCollapse(0, 0.0, "shooting_oracle: accepted eta collapsed on re-integration");

    // theta by quadrature of -s/v^2 on the half-step grid
    const Eigen::Index ne = r->v.size();
    Eigen::ArrayXd integrand(ne);
    for (Eigen::Index i = 0; i < ne; ++i) integrand(i) = -s_f(2 * i) / (r->v(i) * r->v(i));
    const Eigen::ArrayXd theta_e = cumulative_cubic(integrand, sg.h / 2.0);

    Profile out = flat_profile(grid);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.theta[0](k) = theta_e(2 * k);
        out.v[0](k) = r->v(2 * k);
        out.s[0](k) = s_f(4 * k);
        out.w[0](k) = r->w(2 * k);
    }
    return out;
}

}  // namespace feederflow
