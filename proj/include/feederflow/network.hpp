#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <vector>

namespace feederflow {

enum class NodeKind { Root, Junction, Svr, Leaf };

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Leaf;
    double turn_ratio = 1.0;  // meaningful for Svr nodes only
};

/// One feeder section with constant electrical parameters. The reference
/// direction runs upstream_node -> downstream_node, i.e. away from the root.
struct Segment {
    std::string id;
    double length_km = 0.0;
    double conductance_G = 0.0;  // per-unit siemens per km
    double susceptance_B = 0.0;  // per-unit siemens per km
    std::string upstream_node;
    std::string downstream_node;
};

/// Rooted tree of feeder segments. Immutable after construction by convention;
/// all solvers take it by const reference and never mutate it.
struct FeederNetwork {
    std::vector<Segment> segments;
    std::vector<Node> nodes;

    int node_index(std::string_view id) const;     // -1 if absent
    int segment_index(std::string_view id) const;  // -1 if absent
};

enum class ViolationCode {
    NonPositiveLength,
    ZeroAdmittance,
    DuplicateId,
    UnknownNode,
    NoRoot,
    MultipleRoots,
    RootHasUpstream,
    LeafDegree,
    JunctionDegree,
    SvrDegree,
    NonPositiveTurnRatio,
    NotATree,
};

struct Violation {
    ViolationCode code;
    std::string entity;   // offending segment/node id ("" for global violations)
    std::string message;
};

const char* to_string(ViolationCode code);

/// Checks every structural and parameter invariant. Violations are data, not
/// failures: an empty result means the network is a well-formed rooted tree.
std::vector<Violation> validate(const FeederNetwork& network);

/// Derived adjacency for a valid network (validate() returned empty).
/// Segment traversal orders are topological: pre_order visits every segment
/// after its upstream segment, post_order the reverse.
struct Topology {
    int root_node = -1;
    std::vector<int> up_node_of_segment;
    std::vector<int> down_node_of_segment;
    std::vector<int> up_segment_of_node;              // -1 for the root
    std::vector<std::vector<int>> down_segments_of_node;
    std::vector<int> pre_order;                       // root -> leaves
    std::vector<int> post_order;                      // leaves -> root
    std::vector<double> upstream_arclength;           // root to segment start, km
};

/// Builds the adjacency; throws std::invalid_argument if the network is invalid.
Topology build_topology(const FeederNetwork& network);

/// Per-segment uniform sampling. Sample 0 sits on the segment's upstream end,
/// the last sample exactly on its downstream end.
struct Grid {
    struct SegmentGrid {
        double h = 0.0;      // spacing, km
        Eigen::ArrayXd x;    // abscissae in segment-local km, size >= 3
    };
    std::vector<SegmentGrid> segments;

    Eigen::Index total_samples() const;
};

/// Uniform per-segment grid with spacing <= target_h_km chosen so that segment
/// ends are exactly on-grid. Deterministic; throws std::invalid_argument when
/// target_h_km is not positive or >= length/2 for some segment.
Grid discretize(const FeederNetwork& network, double target_h_km);

}  // namespace feederflow
