#pragma once

#include <string>
#include <vector>

#include "feederflow/density.hpp"
#include "feederflow/network.hpp"

namespace feederflow {

/// A network description file: topology, parameters and point injections.
struct NetworkBundle {
    FeederNetwork network;
    std::vector<PointInjection> injections;
};

/// Parses a network description JSON document. Throws std::runtime_error with
/// the parse location on malformed input and std::invalid_argument on schema
/// problems (missing keys, unknown kinds or categories).
NetworkBundle parse_network_json(const std::string& text);

/// Reads and parses a network description file.
NetworkBundle load_network_file(const std::string& path);

}  // namespace feederflow
