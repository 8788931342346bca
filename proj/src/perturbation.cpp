#include "feederflow/perturbation.hpp"

#include <cmath>
#include <stdexcept>

#include "feederflow/errors.hpp"
#include "feederflow/quadrature.hpp"

namespace feederflow {
namespace {

using ArrayList = std::vector<Eigen::ArrayXd>;

void check_grid(const FeederNetwork& net, const DensityProfile& d, const Grid& grid) {
    if (grid.segments.size() != net.segments.size() || d.p_tilde.size() != grid.segments.size())
        throw GridMismatch("perturbation: density/grid/network sizes disagree");
    for (std::size_t e = 0; e < grid.segments.size(); ++e)
        if (d.p_tilde[e].size() != grid.segments[e].x.size() ||
            d.q_tilde[e].size() != grid.segments[e].x.size())
            throw GridMismatch("perturbation: density not sampled on this grid");
}

/// Leaf-to-root integration of y' = rhs with y = 0 at leaves. At a junction the
/// upstream end value is the sum of the downstream segments' start values; at
/// an SVR it is svr_factor(n) times the downstream start value.
template <typename SvrFactor>
ArrayList integrate_from_leaves(const FeederNetwork& net, const Topology& topo, const Grid& grid,
                                const ArrayList& rhs, SvrFactor svr_factor) {
    ArrayList y(net.segments.size());
    for (int e : topo.post_order) {
        const auto& sg = grid.segments[e];
        const int dn = topo.down_node_of_segment[e];
        double end_value = 0.0;
        switch (net.nodes[dn].kind) {
            case NodeKind::Leaf:
                end_value = 0.0;
                break;
            case NodeKind::Junction:
                for (int c : topo.down_segments_of_node[dn]) end_value += y[c](0);
                break;
            case NodeKind::Svr: {
                const int c = topo.down_segments_of_node[dn].front();
                end_value = svr_factor(net.nodes[dn].turn_ratio) * y[c](0);
                break;
            }
            case NodeKind::Root:
                break;  // cannot happen on a downstream node
        }
        Eigen::ArrayXd T = cumulative_trapezoid(rhs[e], sg.h);
        y[e] = end_value - (T(T.size() - 1) - T);
    }
    return y;
}

/// Root-to-leaf integration of y' = rhs with y = 0 at the root. Value continuity
/// at junctions; at an SVR the downstream start value is svr_factor(n) times the
/// upstream end value.
template <typename SvrFactor>
ArrayList integrate_from_root(const FeederNetwork& net, const Topology& topo, const Grid& grid,
                              const ArrayList& rhs, SvrFactor svr_factor) {
    ArrayList y(net.segments.size());
    for (int e : topo.pre_order) {
        const auto& sg = grid.segments[e];
        const int un = topo.up_node_of_segment[e];
        double start_value = 0.0;
        if (net.nodes[un].kind != NodeKind::Root) {
            const int parent = topo.up_segment_of_node[un];
            const double parent_end = y[parent](y[parent].size() - 1);
            start_value = net.nodes[un].kind == NodeKind::Svr
                              ? svr_factor(net.nodes[un].turn_ratio) * parent_end
                              : parent_end;
        }
        y[e] = start_value + cumulative_trapezoid(rhs[e], sg.h);
    }
    return y;
}

ArrayList zeros_like(const Grid& grid) {
    ArrayList z;
    z.reserve(grid.segments.size());
    for (const auto& sg : grid.segments) z.emplace_back(Eigen::ArrayXd::Zero(sg.x.size()));
    return z;
}

struct Coefficients {
    ArrayList rs;     // (B p~ - G q~) / (G^2 + B^2)
    ArrayList kappa;  // (G p~ + B q~) / (G^2 + B^2)
};

Coefficients coefficients(const FeederNetwork& net, const DensityProfile& d) {
    Coefficients c;
    c.rs.reserve(net.segments.size());
    c.kappa.reserve(net.segments.size());
    for (std::size_t e = 0; e < net.segments.size(); ++e) {
        const double G = net.segments[e].conductance_G;
        const double B = net.segments[e].susceptance_B;
        const double Y2 = G * G + B * B;
        c.rs.emplace_back((B * d.p_tilde[e] - G * d.q_tilde[e]) / Y2);
        c.kappa.emplace_back((G * d.p_tilde[e] + B * d.q_tilde[e]) / Y2);
    }
    return c;
}

void require_lower(int n, const PerturbationSeries& lower, int vw_needed, int full_needed) {
    if (lower.max_vw_order < vw_needed || lower.max_full_order < std::min(full_needed, 4))
        throw MissingLowerOrder("order " + std::to_string(n) +
                                " needs all lower orders; have v/w up to " +
                                std::to_string(lower.max_vw_order));
}

// Per-order SVR jump factors from the tap-changer matching conditions:
// v_n(xi-) = v_n(xi+)/n  and  w_n(xi-) = n w(xi+); theta_n and s_n continuous.
constexpr auto svr_v = [](double n) { return n; };          // downstream start = n * upstream end
constexpr auto svr_w = [](double n) { return n; };          // upstream end = n * downstream start
constexpr auto svr_continuous = [](double) { return 1.0; };

/// Right-hand side of dtheta_n/dx for n = 1..4 in terms of lower-order fields.
ArrayList theta_rhs(int n, const Grid& grid, const ArrayList& s1, const ArrayList& v1,
                    const ArrayList& v2, const ArrayList& v3) {
    ArrayList rhs = zeros_like(grid);
    for (std::size_t e = 0; e < rhs.size(); ++e) {
        switch (n) {
            case 1:
                rhs[e] = -s1[e];
                break;
            case 2:
                rhs[e] = 2.0 * v1[e] * s1[e];
                break;
            case 3:
                rhs[e] = -4.0 * v1[e].square() * s1[e] + (2.0 * v2[e] + v1[e].square()) * s1[e];
                break;
            case 4: {
                const Eigen::ArrayXd t3 =
                    -4.0 * v1[e].square() * s1[e] + (2.0 * v2[e] + v1[e].square()) * s1[e];
                const Eigen::ArrayXd t2 = 2.0 * v1[e] * s1[e];
                rhs[e] = -2.0 * v1[e] * t3 - (2.0 * v2[e] + v1[e].square()) * t2 +
                         2.0 * (v3[e] + v1[e] * v2[e]) * s1[e];
                break;
            }
            default:
                break;
        }
    }
    return rhs;
}

}  // namespace

OrderFields solve_order(int n, const FeederNetwork& net, const DensityProfile& d, const Grid& grid,
                        const PerturbationSeries& lower) {
    if (n < 1 || n > 4)
        throw std::invalid_argument("solve_order: n must be in 1..4");
    check_grid(net, d, grid);
    if (n > 1) require_lower(n, lower, n - 1, n - 1);

    const Topology topo = build_topology(net);
    const Coefficients c = coefficients(net, d);

    OrderFields f;
    const ArrayList zero = zeros_like(grid);
    const ArrayList* s1 = n > 1 ? &lower.order(1).s : nullptr;
    const ArrayList* v1 = n > 1 ? &lower.order(1).v : nullptr;
    const ArrayList* v2 = n > 2 ? &lower.order(2).v : nullptr;
    const ArrayList* v3 = n > 3 ? &lower.order(3).v : nullptr;

    // s_n: the source term exists at order 1 only, so s_n vanishes for n >= 2.
    ArrayList s_rhs = n == 1 ? c.rs : zero;
    f.s = integrate_from_leaves(net, topo, grid, s_rhs, svr_continuous);

    ArrayList w_rhs(grid.segments.size());
    for (std::size_t e = 0; e < w_rhs.size(); ++e) {
        switch (n) {
            case 1: w_rhs[e] = -c.kappa[e]; break;
            case 2: w_rhs[e] = (*s1)[e].square() + c.kappa[e] * (*v1)[e]; break;
            case 3: w_rhs[e] = -3.0 * (*s1)[e].square() * (*v1)[e] + c.kappa[e] * (*v2)[e]; break;
            case 4: w_rhs[e] = -3.0 * (*s1)[e].square() * (*v2)[e] + c.kappa[e] * (*v3)[e]; break;
        }
    }
    f.w = integrate_from_leaves(net, topo, grid, w_rhs, svr_w);
    f.v = integrate_from_root(net, topo, grid, f.w, svr_v);

    const ArrayList t_rhs = theta_rhs(n, grid, n == 1 ? f.s : *s1, n == 1 ? zero : *v1,
                                      n > 2 ? *v2 : zero, n > 3 ? *v3 : zero);
    f.theta = integrate_from_root(net, topo, grid, t_rhs, svr_continuous);
    return f;
}

std::pair<std::vector<Eigen::ArrayXd>, std::vector<Eigen::ArrayXd>> solve_vw_order(
    int n, const FeederNetwork& net, const DensityProfile& d, const Grid& grid,
    const PerturbationSeries& lower) {
    if (n < 3)
        throw std::invalid_argument("solve_vw_order: recursion starts at n = 3");
    check_grid(net, d, grid);
    require_lower(n, lower, n - 1, 1);

    const Topology topo = build_topology(net);
    const Coefficients c = coefficients(net, d);
    const ArrayList& s1 = lower.order(1).s;
    const ArrayList& vm1 = lower.order(n - 1).v;
    const ArrayList& vm2 = lower.order(n - 2).v;

    ArrayList w_rhs(grid.segments.size());
    for (std::size_t e = 0; e < w_rhs.size(); ++e)
        w_rhs[e] = -3.0 * s1[e].square() * vm2[e] + c.kappa[e] * vm1[e];

    ArrayList w = integrate_from_leaves(net, topo, grid, w_rhs, svr_w);
    ArrayList v = integrate_from_root(net, topo, grid, w, svr_v);
    return {std::move(v), std::move(w)};
}

PerturbationSeries compute_series(const FeederNetwork& net, const DensityProfile& d,
                                  const Grid& grid, int order) {
    if (order < 1)
        throw std::invalid_argument("compute_series: order must be >= 1");
    check_grid(net, d, grid);

    PerturbationSeries series;
    series.grid = grid;
    series.epsilon = d.epsilon;
    for (int n = 1; n <= std::min(order, 4); ++n) {
        series.orders.push_back(solve_order(n, net, d, grid, series));
        series.max_full_order = n;
        series.max_vw_order = n;
    }
    for (int n = 5; n <= order; ++n) {
        auto [v, w] = solve_vw_order(n, net, d, grid, series);
        OrderFields f;
        f.v = std::move(v);
        f.w = std::move(w);
        series.orders.push_back(std::move(f));
        series.max_vw_order = n;
    }
    return series;
}

Profile assemble(const PerturbationSeries& series, double epsilon, int order) {
    if (order < 1 || order > series.max_vw_order)
        throw std::invalid_argument("assemble: order exceeds available terms");

    Profile p = flat_profile(series.grid);
    const int full_cap = std::min(order, series.max_full_order);
    double epsn = 1.0;
    for (int n = 1; n <= order; ++n) {
        epsn *= epsilon;
        const auto& f = series.order(n);
        for (std::size_t e = 0; e < p.v.size(); ++e) {
            p.v[e] += epsn * f.v[e];
            p.w[e] += epsn * f.w[e];
            if (n <= full_cap) {
                p.theta[e] += epsn * f.theta[e];
                p.s[e] += epsn * f.s[e];
            }
        }
    }
    return p;
}

ImpactResult ev_impact(const FeederNetwork& net, const PerturbationSeries& series,
                       const ImpactSpec& spec) {
    if (spec.eps_ev < 0.0 || spec.eps_load < 0.0)
        throw std::invalid_argument("ev_impact: shares must be non-negative");
    const double eps = spec.eps_ev + spec.eps_load;
    if (std::abs(eps - series.epsilon) > 1e-12 * std::max(1.0, series.epsilon))
        throw std::invalid_argument("ev_impact: eps_ev + eps_load must equal the series' epsilon");
    if (spec.order < 1 || spec.order > series.max_vw_order)
        throw std::invalid_argument("ev_impact: order exceeds available terms");

    ImpactResult r;
    r.delta_v.reserve(series.grid.segments.size());
    for (const auto& sg : series.grid.segments) r.delta_v.emplace_back(Eigen::ArrayXd::Zero(sg.x.size()));

    double en = 1.0, eln = 1.0;
    for (int n = 1; n <= spec.order; ++n) {
        en *= eps;
        eln *= spec.eps_load;
        const double weight = en - eln;
        const auto& vn = series.order(n).v;
        for (std::size_t e = 0; e < r.delta_v.size(); ++e) r.delta_v[e] += weight * vn[e];
    }

    r.max_abs = 0.0;
    for (std::size_t e = 0; e < r.delta_v.size(); ++e) {
        Eigen::Index k;
        const double m = r.delta_v[e].abs().maxCoeff(&k);
        if (m >= r.max_abs) {
            r.max_abs = m;
            r.segment = net.segments[e].id;
            r.x_km = series.grid.segments[e].x(k);
        }
    }
    return r;
}

}  // namespace feederflow
