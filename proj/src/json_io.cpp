#include "feederflow/json_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace feederflow {
namespace {

std::string lowered(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

NodeKind parse_kind(const std::string& s, const std::string& node_id) {
    const std::string k = lowered(s);
    if (k == "root") return NodeKind::Root;
    if (k == "junction") return NodeKind::Junction;
    if (k == "svr") return NodeKind::Svr;
    if (k == "leaf") return NodeKind::Leaf;
    throw std::invalid_argument("node '" + node_id + "': unknown kind '" + s + "'");
}

InjectionCategory parse_category(const std::string& s) {
    const std::string k = lowered(s);
    if (k == "ev") return InjectionCategory::Ev;
    if (k == "load") return InjectionCategory::Load;
    throw std::invalid_argument("injection: unknown category '" + s + "'");
}

}  // namespace

NetworkBundle parse_network_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);  // throws with line/column

    NetworkBundle b;
    if (!j.contains("segments") || !j.contains("nodes"))
        throw std::invalid_argument("network file needs top-level 'segments' and 'nodes'");

    for (const auto& js : j.at("segments")) {
        Segment s;
        s.id = js.at("id").get<std::string>();
        s.length_km = js.at("length_km").get<double>();
        s.conductance_G = js.at("G").get<double>();
        s.susceptance_B = js.at("B").get<double>();
        s.upstream_node = js.at("upstream").get<std::string>();
        s.downstream_node = js.at("downstream").get<std::string>();
        b.network.segments.push_back(std::move(s));
    }
    for (const auto& jn : j.at("nodes")) {
        Node n;
        n.id = jn.at("id").get<std::string>();
        n.kind = parse_kind(jn.at("kind").get<std::string>(), n.id);
        if (jn.contains("turn_ratio")) n.turn_ratio = jn.at("turn_ratio").get<double>();
        b.network.nodes.push_back(std::move(n));
    }
    if (j.contains("injections")) {
        for (const auto& ji : j.at("injections")) {
            PointInjection inj;
            inj.segment = ji.at("segment").get<std::string>();
            inj.xi_km = ji.at("xi_km").get<double>();
            inj.active_power_P = ji.at("P_pu").get<double>();
            inj.reactive_power_Q = ji.value("Q_pu", 0.0);
            inj.category = parse_category(ji.value("category", std::string("load")));
            b.injections.push_back(std::move(inj));
        }
    }
    return b;
}

NetworkBundle load_network_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open network file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_network_json(text);
}

}  // namespace feederflow
