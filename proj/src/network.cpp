#include "feederflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace feederflow {

int FeederNetwork::node_index(std::string_view id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id) return static_cast<int>(i);
    return -1;
}

int FeederNetwork::segment_index(std::string_view id) const {
    for (std::size_t i = 0; i < segments.size(); ++i)
        if (segments[i].id == id) return static_cast<int>(i);
    return -1;
}

const char* to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::NonPositiveLength: return "NonPositiveLength";
        case ViolationCode::ZeroAdmittance: return "ZeroAdmittance";
        case ViolationCode::DuplicateId: return "DuplicateId";
        case ViolationCode::UnknownNode: return "UnknownNode";
        case ViolationCode::NoRoot: return "NoRoot";
        case ViolationCode::MultipleRoots: return "MultipleRoots";
        case ViolationCode::RootHasUpstream: return "RootHasUpstream";
        case ViolationCode::LeafDegree: return "LeafDegree";
        case ViolationCode::JunctionDegree: return "JunctionDegree";
        case ViolationCode::SvrDegree: return "SvrDegree";
        case ViolationCode::NonPositiveTurnRatio: return "NonPositiveTurnRatio";
        case ViolationCode::NotATree: return "NotATree";
    }
    return "Unknown";
}

std::vector<Violation> validate(const FeederNetwork& net) {
    std::vector<Violation> out;
    auto add = [&](ViolationCode c, const std::string& entity, std::string msg) {
        out.push_back({c, entity, std::move(msg)});
    };

    std::set<std::string> seg_ids, node_ids;
    for (const auto& s : net.segments) {
        if (!seg_ids.insert(s.id).second)
            add(ViolationCode::DuplicateId, s.id, "duplicate segment id");
    }
    for (const auto& n : net.nodes) {
        if (!node_ids.insert(n.id).second)
            add(ViolationCode::DuplicateId, n.id, "duplicate node id");
    }

    for (const auto& s : net.segments) {
        if (!(s.length_km > 0.0))
            add(ViolationCode::NonPositiveLength, s.id, "segment length must be > 0 km");
        if (s.conductance_G * s.conductance_G + s.susceptance_B * s.susceptance_B <= 0.0)
            add(ViolationCode::ZeroAdmittance, s.id, "G^2 + B^2 must be > 0");
        if (net.node_index(s.upstream_node) < 0)
            add(ViolationCode::UnknownNode, s.id, "upstream node '" + s.upstream_node + "' not defined");
        if (net.node_index(s.downstream_node) < 0)
            add(ViolationCode::UnknownNode, s.id, "downstream node '" + s.downstream_node + "' not defined");
    }

    int roots = 0;
    for (const auto& n : net.nodes)
        if (n.kind == NodeKind::Root) ++roots;
    if (roots == 0) add(ViolationCode::NoRoot, "", "network has no Root node");
    if (roots > 1) add(ViolationCode::MultipleRoots, "", "network has more than one Root node");

    // Per-node degree in the reference direction (away from the root).
    for (const auto& n : net.nodes) {
        int up = 0, down = 0;
        for (const auto& s : net.segments) {
            if (s.downstream_node == n.id) ++up;
            if (s.upstream_node == n.id) ++down;
        }
        switch (n.kind) {
            case NodeKind::Root:
                if (up != 0)
                    add(ViolationCode::RootHasUpstream, n.id, "Root must have no upstream segment");
                if (down < 1)
                    add(ViolationCode::JunctionDegree, n.id, "Root must feed at least one segment");
                break;
            case NodeKind::Junction:
                if (up != 1 || down < 2)
                    add(ViolationCode::JunctionDegree, n.id,
                        "Junction needs exactly one upstream and >= 2 downstream segments");
                break;
            case NodeKind::Svr:
                if (up != 1 || down != 1)
                    add(ViolationCode::SvrDegree, n.id,
                        "Svr needs exactly one upstream and one downstream segment");
                if (!(n.turn_ratio > 0.0))
                    add(ViolationCode::NonPositiveTurnRatio, n.id, "turn ratio must be > 0");
                break;
            case NodeKind::Leaf:
                if (up != 1 || down != 0)
                    add(ViolationCode::LeafDegree, n.id,
                        "Leaf needs exactly one upstream segment and none downstream");
                break;
        }
    }

    // Tree check: |segments| = |nodes| - 1 and everything reachable from the root.
    if (roots == 1 && out.empty()) {
        if (net.segments.size() + 1 != net.nodes.size()) {
            add(ViolationCode::NotATree, "", "expected |segments| = |nodes| - 1");
        } else {
            int root = -1;
            for (std::size_t i = 0; i < net.nodes.size(); ++i)
                if (net.nodes[i].kind == NodeKind::Root) root = static_cast<int>(i);
            std::vector<bool> node_seen(net.nodes.size(), false);
            std::vector<int> stack{root};
            node_seen[root] = true;
            std::size_t seen = 1;
            while (!stack.empty()) {
                int n = stack.back();
                stack.pop_back();
                for (const auto& s : net.segments) {
                    if (s.upstream_node != net.nodes[n].id) continue;
                    int d = net.node_index(s.downstream_node);
                    if (d >= 0 && !node_seen[d]) {
                        node_seen[d] = true;
                        ++seen;
                        stack.push_back(d);
                    }
                }
            }
            if (seen != net.nodes.size())
                add(ViolationCode::NotATree, "", "graph is not connected from the Root");
        }
    }
    return out;
}

Topology build_topology(const FeederNetwork& net) {
    if (!validate(net).empty())
        throw std::invalid_argument("build_topology: network is not valid");

    Topology t;
    const auto n_nodes = net.nodes.size();
    const auto n_segs = net.segments.size();
    t.up_node_of_segment.resize(n_segs);
    t.down_node_of_segment.resize(n_segs);
    t.up_segment_of_node.assign(n_nodes, -1);
    t.down_segments_of_node.assign(n_nodes, {});
    t.upstream_arclength.assign(n_segs, 0.0);

    for (std::size_t e = 0; e < n_segs; ++e) {
        const auto& s = net.segments[e];
        const int u = net.node_index(s.upstream_node);
        const int d = net.node_index(s.downstream_node);
        t.up_node_of_segment[e] = u;
        t.down_node_of_segment[e] = d;
        t.down_segments_of_node[u].push_back(static_cast<int>(e));
        t.up_segment_of_node[d] = static_cast<int>(e);
    }
    for (std::size_t i = 0; i < n_nodes; ++i)
        if (net.nodes[i].kind == NodeKind::Root) t.root_node = static_cast<int>(i);

    // Depth-first from the root; children in declaration order for determinism.
    std::vector<int> stack(t.down_segments_of_node[t.root_node].rbegin(),
                           t.down_segments_of_node[t.root_node].rend());
    while (!stack.empty()) {
        int e = stack.back();
        stack.pop_back();
        t.pre_order.push_back(e);
        const int d = t.down_node_of_segment[e];
        const auto& kids = t.down_segments_of_node[d];
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
            t.upstream_arclength[*it] = t.upstream_arclength[e] + net.segments[e].length_km;
            stack.push_back(*it);
        }
    }
    t.post_order.assign(t.pre_order.rbegin(), t.pre_order.rend());
    return t;
}

Eigen::Index Grid::total_samples() const {
    Eigen::Index n = 0;
    for (const auto& s : segments) n += s.x.size();
    return n;
}

Grid discretize(const FeederNetwork& net, double target_h_km) {
    if (!(target_h_km > 0.0))
        throw std::invalid_argument("discretize: target_h_km must be > 0");

    Grid grid;
    grid.segments.reserve(net.segments.size());
    for (const auto& s : net.segments) {
        if (target_h_km >= s.length_km / 2.0)
            throw std::invalid_argument("discretize: target_h_km >= length/2 on segment '" + s.id +
                                        "' (need at least 3 samples)");
        const double ratio = s.length_km / target_h_km;
        auto intervals = static_cast<Eigen::Index>(std::llround(ratio));
        // exact divisions stay exact; otherwise round the count up so h <= target
        if (intervals < 1 || std::abs(intervals * target_h_km - s.length_km) > 1e-9 * s.length_km)
            intervals = static_cast<Eigen::Index>(std::ceil(ratio - 1e-12));
        Grid::SegmentGrid sg;
        sg.h = s.length_km / static_cast<double>(intervals);
        sg.x = Eigen::ArrayXd::LinSpaced(intervals + 1, 0.0, s.length_km);
        sg.x(intervals) = s.length_km;  // end abscissa exact by construction
        grid.segments.push_back(std::move(sg));
    }
    return grid;
}

}  // namespace feederflow
