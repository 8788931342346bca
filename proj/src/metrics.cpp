#include "feederflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "feederflow/errors.hpp"
#include "feederflow/perturbation.hpp"
#include "feederflow/quadrature.hpp"

namespace feederflow {

ProfileDiff diff(const Profile& a, const Profile& b) {
    if (a.v.size() != b.v.size())
        throw GridMismatch("diff: profiles live on different networks");
    ProfileDiff d;
    for (std::size_t e = 0; e < a.v.size(); ++e) {
        if (a.v[e].size() != b.v[e].size())
            throw GridMismatch("diff: profiles live on different grids");
        d.e_theta.push_back(a.theta[e] - b.theta[e]);
        d.e_v.push_back(a.v[e] - b.v[e]);
        d.e_s.push_back(a.s[e] - b.s[e]);
        d.e_w.push_back(a.w[e] - b.w[e]);
    }
    return d;
}

double l2_like(const std::vector<Eigen::ArrayXd>& e, const Grid& grid) {
    if (e.size() != grid.segments.size())
        throw GridMismatch("l2_like: field does not match grid");
    double acc = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
        acc += trapezoid(e[i].square(), grid.segments[i].h);
    return std::sqrt(acc);
}

double linf_like(const std::vector<Eigen::ArrayXd>& e, const Grid& grid) {
    if (e.size() != grid.segments.size())
        throw GridMismatch("linf_like: field does not match grid");
    double m = 0.0;
    for (const auto& a : e)
        if (a.size() > 0) m = std::max(m, a.abs().maxCoeff());
    return m;
}

namespace {

struct FarLeaf {
    std::size_t segment;
    Eigen::Index sample;
};

FarLeaf far_leaf(const FeederNetwork& net, const Topology& topo, const Grid& grid) {
    FarLeaf best{0, 0};
    double best_len = -1.0;
    for (std::size_t e = 0; e < net.segments.size(); ++e) {
        if (net.nodes[topo.down_node_of_segment[e]].kind != NodeKind::Leaf) continue;
        const double len = topo.upstream_arclength[e] + net.segments[e].length_km;
        if (len > best_len) {
            best_len = len;
            best = {e, grid.segments[e].x.size() - 1};
        }
    }
    return best;
}

}  // namespace

std::vector<ConvergenceRow> convergence_report(const FeederNetwork& net,
                                               const DensityProfile& density, const Grid& grid,
                                               const std::vector<int>& orders,
                                               const SolveOptions& options) {
    if (orders.empty()) return {};
    const int max_order = *std::max_element(orders.begin(), orders.end());
    if (*std::min_element(orders.begin(), orders.end()) < 1)
        throw std::invalid_argument("convergence_report: orders must be >= 1");

    const Topology topo = build_topology(net);
    const Profile reference = solve_tpbv(net, density, grid, options);
    const PerturbationSeries series = compute_series(net, density, grid, max_order);

    const std::size_t root_seg =
        static_cast<std::size_t>(topo.down_segments_of_node[topo.root_node].front());
    const FarLeaf leaf = far_leaf(net, topo, grid);

    std::vector<ConvergenceRow> rows;
    rows.reserve(orders.size());
    for (int order : orders) {
        const Profile p = assemble(series, density.epsilon, order);
        const ProfileDiff d = diff(p, reference);
        ConvergenceRow row;
        row.order = order;
        row.dw_root = std::abs(d.e_w[root_seg](0));
        row.dv_far_leaf = std::abs(d.e_v[leaf.segment](leaf.sample));
        row.dtheta_far_leaf = std::abs(d.e_theta[leaf.segment](leaf.sample));
        row.l2_v = l2_like(d.e_v, grid);
        row.linf_v = linf_like(d.e_v, grid);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace feederflow
