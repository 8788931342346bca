#pragma once

#include <string>
#include <vector>

#include "feederflow/density.hpp"
#include "feederflow/network.hpp"

namespace testnets {

inline feederflow::FeederNetwork single_feeder(double length = 5.0, double G = 3.881,
                                               double B = 6.856) {
    feederflow::FeederNetwork net;
    net.segments.push_back({"feeder", length, G, B, "bank", "end"});
    net.nodes.push_back({"bank", feederflow::NodeKind::Root, 1.0});
    net.nodes.push_back({"end", feederflow::NodeKind::Leaf, 1.0});
    return net;
}

/// Three loads and two EV stations alternating at 0.5 km around the midpoint,
/// 80% total loading on the simple 5 km feeder.
inline std::vector<feederflow::PointInjection> fig_injections(double scale = 1.0) {
    using feederflow::InjectionCategory;
    return {
        {"feeder", 1.5, -0.133 * scale, 0.0, InjectionCategory::Load},
        {"feeder", 2.0, -0.200 * scale, 0.0, InjectionCategory::Ev},
        {"feeder", 2.5, -0.133 * scale, 0.0, InjectionCategory::Load},
        {"feeder", 3.0, -0.200 * scale, 0.0, InjectionCategory::Ev},
        {"feeder", 3.5, -0.133 * scale, 0.0, InjectionCategory::Load},
    };
}

inline feederflow::FeederNetwork branched(double G = 2.329, double B = 4.113) {
    feederflow::FeederNetwork net;
    net.segments.push_back({"A", 1.0, G, B, "bank", "T"});
    net.segments.push_back({"B", 0.76, G, B, "T", "endB"});
    net.segments.push_back({"C", 0.76, G, B, "T", "endC"});
    net.nodes.push_back({"bank", feederflow::NodeKind::Root, 1.0});
    net.nodes.push_back({"T", feederflow::NodeKind::Junction, 1.0});
    net.nodes.push_back({"endB", feederflow::NodeKind::Leaf, 1.0});
    net.nodes.push_back({"endC", feederflow::NodeKind::Leaf, 1.0});
    return net;
}

inline std::vector<feederflow::PointInjection> branched_injections() {
    using feederflow::InjectionCategory;
    return {
        {"A", 0.35, -0.06, -0.018, InjectionCategory::Load},
        {"A", 0.75, -0.08, 0.0, InjectionCategory::Ev},
        {"B", 0.25, -0.05, -0.015, InjectionCategory::Load},
        {"B", 0.55, -0.07, 0.0, InjectionCategory::Ev},
        {"C", 0.20, -0.04, -0.012, InjectionCategory::Load},
        {"C", 0.45, -0.05, -0.015, InjectionCategory::Load},
        {"C", 0.65, -0.05, 0.0, InjectionCategory::Ev},
    };
}

inline feederflow::FeederNetwork svr_feeder(double turn_ratio = 1.02) {
    feederflow::FeederNetwork net;
    net.segments.push_back({"up", 2.5, 3.881, 6.856, "bank", "reg"});
    net.segments.push_back({"down", 2.5, 3.881, 6.856, "reg", "end"});
    net.nodes.push_back({"bank", feederflow::NodeKind::Root, 1.0});
    net.nodes.push_back({"reg", feederflow::NodeKind::Svr, turn_ratio});
    net.nodes.push_back({"end", feederflow::NodeKind::Leaf, 1.0});
    return net;
}

inline std::vector<feederflow::PointInjection> svr_injections() {
    using feederflow::InjectionCategory;
    return {
        {"up", 1.5, -0.133, 0.0, InjectionCategory::Load},
        {"up", 2.0, -0.200, 0.0, InjectionCategory::Ev},
        {"up", 2.2, -0.133, 0.0, InjectionCategory::Load},
        {"down", 0.5, -0.200, 0.0, InjectionCategory::Ev},
        {"down", 1.0, -0.133, 0.0, InjectionCategory::Load},
    };
}

inline feederflow::DensityProfile zero_density(const feederflow::Grid& grid, double epsilon = 0.01) {
    feederflow::DensityProfile d;
    d.epsilon = epsilon;
    for (const auto& sg : grid.segments) {
        d.p_tilde.emplace_back(Eigen::ArrayXd::Zero(sg.x.size()));
        d.q_tilde.emplace_back(Eigen::ArrayXd::Zero(sg.x.size()));
    }
    return d;
}

}  // namespace testnets
