// feederflow: voltage-profile solver and EV-impact assessment for radial
// distribution feeders. Subcommands: validate, solve, expand, impact, sweep,
// compare. All CSV output uses a header row and '.' decimal separator.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "feederflow/errors.hpp"
#include "feederflow/json_io.hpp"
#include "feederflow/metrics.hpp"
#include "feederflow/nonlinear.hpp"
#include "feederflow/perturbation.hpp"

namespace ff = feederflow;
using nlohmann::json;

namespace {

int log_level() {
    const char* v = std::getenv("FEEDERFLOW_LOG");
    if (!v) return 1;
    const std::string s(v);
    if (s == "debug") return 2;
    if (s == "quiet") return 0;
    return 1;
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[feederflow] " << msg << "\n";
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

/// write-then-rename so partially written outputs never appear
void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

struct CommonArgs {
    std::string network_path;
    std::string out_dir = ".";
    double grid_h_km = 0.002;
    double sigma_km = 0.05;
    double epsilon = 0.01;
    int order = 4;
    double eps_ev_fraction = 0.4;
};

struct Scenario {
    ff::NetworkBundle bundle;
    ff::Grid grid;
    ff::DensityProfile density;
};

Scenario prepare(const CommonArgs& args) {
    Scenario sc;
    sc.bundle = ff::load_network_file(args.network_path);
    const auto violations = ff::validate(sc.bundle.network);
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << "network is invalid:";
        for (const auto& v : violations)
            msg << " [" << ff::to_string(v.code) << (v.entity.empty() ? "" : " " + v.entity) << "] "
                << v.message << ";";
        throw std::invalid_argument(msg.str());
    }
    sc.grid = ff::discretize(sc.bundle.network, args.grid_h_km);
    ff::CoarseGrainSpec cg;
    cg.sigma_km = args.sigma_km;
    sc.density = ff::coarse_grain(sc.bundle.network, sc.bundle.injections, cg, sc.grid, args.epsilon);
    return sc;
}

std::string profile_csv(const ff::FeederNetwork& net, const ff::Grid& grid, const ff::Profile& p) {
    std::ostringstream out;
    out << "segment_id,x_km,theta_rad,v_pu,s_pu,w_pu_per_km\n";
    for (std::size_t e = 0; e < net.segments.size(); ++e)
        for (Eigen::Index k = 0; k < grid.segments[e].x.size(); ++k)
            out << net.segments[e].id << ',' << fmt(grid.segments[e].x(k)) << ','
                << fmt(p.theta[e](k)) << ',' << fmt(p.v[e](k)) << ',' << fmt(p.s[e](k)) << ','
                << fmt(p.w[e](k)) << '\n';
    return out.str();
}

json residuals_json(const ff::Residuals& r) {
    return json{{"odes", r.odes},
                {"boundary", r.boundary},
                {"junction", r.junction},
                {"svr", r.svr},
                {"max", r.max()}};
}

json metadata_json() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
    return json{{"generated_at", buf}};
}

int run_validate(const CommonArgs& args) {
    const ff::NetworkBundle bundle = ff::load_network_file(args.network_path);
    const auto violations = ff::validate(bundle.network);
    json out;
    out["network"] = args.network_path;
    out["valid"] = violations.empty();
    out["violations"] = json::array();
    for (const auto& v : violations)
        out["violations"].push_back(
            {{"code", ff::to_string(v.code)}, {"entity", v.entity}, {"message", v.message}});
    std::cout << out.dump(2) << "\n";
    return violations.empty() ? 0 : 1;
}

int run_solve(const CommonArgs& args) {
    const Scenario sc = prepare(args);
    log_debug("solving nonlinear TPBV problem");
    ff::SolveStats stats;
    const ff::Profile p = ff::solve_tpbv(sc.bundle.network, sc.density, sc.grid, {}, &stats);
    const ff::Residuals res = ff::residual(sc.bundle.network, sc.density, sc.grid, p);

    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    write_atomic(dir / "profile.csv", profile_csv(sc.bundle.network, sc.grid, p));
    json report{{"command", "solve"},
                {"network", args.network_path},
                {"parameters",
                 {{"grid_h_km", args.grid_h_km}, {"sigma_km", args.sigma_km}, {"epsilon", args.epsilon}}},
                {"iterations", stats.iterations},
                {"residuals", residuals_json(res)},
                {"metadata", metadata_json()}};
    write_atomic(dir / "solve_report.json", report.dump(2) + "\n");
    std::cout << "wrote " << (dir / "profile.csv").string() << " and solve_report.json\n";
    return 0;
}

int run_expand(const CommonArgs& args) {
    const Scenario sc = prepare(args);
    const ff::PerturbationSeries series =
        ff::compute_series(sc.bundle.network, sc.density, sc.grid, args.order);

    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    for (int n = 1; n <= series.max_vw_order; ++n) {
        const auto& f = series.order(n);
        std::ostringstream out;
        const bool full = n <= series.max_full_order;
        out << (full ? "segment_id,x_km,theta_n,v_n,s_n,w_n\n" : "segment_id,x_km,v_n,w_n\n");
        for (std::size_t e = 0; e < sc.bundle.network.segments.size(); ++e)
            for (Eigen::Index k = 0; k < sc.grid.segments[e].x.size(); ++k) {
                out << sc.bundle.network.segments[e].id << ',' << fmt(sc.grid.segments[e].x(k));
                if (full) out << ',' << fmt(f.theta[e](k));
                out << ',' << fmt(f.v[e](k));
                if (full) out << ',' << fmt(f.s[e](k));
                out << ',' << fmt(f.w[e](k)) << '\n';
            }
        write_atomic(dir / ("order_" + std::to_string(n) + ".csv"), out.str());
    }
    const ff::Profile assembled = ff::assemble(series, args.epsilon, args.order);
    write_atomic(dir / "assembled.csv", profile_csv(sc.bundle.network, sc.grid, assembled));
    json report{{"command", "expand"},
                {"network", args.network_path},
                {"parameters",
                 {{"order", args.order},
                  {"epsilon", args.epsilon},
                  {"grid_h_km", args.grid_h_km},
                  {"sigma_km", args.sigma_km}}},
                {"metadata", metadata_json()}};
    write_atomic(dir / "expand_report.json", report.dump(2) + "\n");
    std::cout << "wrote per-order CSVs and assembled.csv\n";
    return 0;
}

int run_impact(const CommonArgs& args) {
    const Scenario sc = prepare(args);
    if (args.eps_ev_fraction < 0.0 || args.eps_ev_fraction > 1.0)
        throw std::invalid_argument("--eps-ev-fraction must lie in [0,1]");
    const ff::PerturbationSeries series =
        ff::compute_series(sc.bundle.network, sc.density, sc.grid, args.order);
    ff::ImpactSpec spec;
    spec.eps_ev = args.eps_ev_fraction * sc.density.epsilon;
    spec.eps_load = sc.density.epsilon - spec.eps_ev;
    spec.order = args.order;
    const ff::ImpactResult r = ff::ev_impact(sc.bundle.network, series, spec);

    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    std::ostringstream out;
    out << "segment_id,x_km,delta_v_pu\n";
    for (std::size_t e = 0; e < sc.bundle.network.segments.size(); ++e)
        for (Eigen::Index k = 0; k < sc.grid.segments[e].x.size(); ++k)
            out << sc.bundle.network.segments[e].id << ',' << fmt(sc.grid.segments[e].x(k)) << ','
                << fmt(r.delta_v[e](k)) << '\n';
    write_atomic(dir / "impact.csv", out.str());
    json summary{{"command", "impact"},
                 {"network", args.network_path},
                 {"parameters",
                  {{"order", args.order},
                   {"eps_ev", spec.eps_ev},
                   {"eps_load", spec.eps_load},
                   {"eps_ev_fraction", args.eps_ev_fraction}}},
                 {"max_abs", r.max_abs},
                 {"location", {{"segment", r.segment}, {"x_km", r.x_km}}},
                 {"metadata", metadata_json()}};
    write_atomic(dir / "impact_summary.json", summary.dump(2) + "\n");
    std::cout << "wrote impact.csv and impact_summary.json\n";
    return 0;
}

std::vector<double> parse_numbers(const std::string& csv, const char* what) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw std::invalid_argument(std::string(what) + " parsed to an empty list");
    return out;
}

/// Far-leaf sample of solved/assembled fields (leaf at maximal arclength).
std::pair<std::size_t, Eigen::Index> far_leaf_sample(const ff::FeederNetwork& net,
                                                     const ff::Grid& grid) {
    const ff::Topology topo = ff::build_topology(net);
    std::size_t seg = 0;
    Eigen::Index k = 0;
    double best = -1.0;
    for (std::size_t e = 0; e < net.segments.size(); ++e) {
        if (net.nodes[topo.down_node_of_segment[e]].kind != ff::NodeKind::Leaf) continue;
        const double len = topo.upstream_arclength[e] + net.segments[e].length_km;
        if (len > best) {
            best = len;
            seg = e;
            k = grid.segments[e].x.size() - 1;
        }
    }
    return {seg, k};
}

// The EV-penetration sweep holds the baseline-load magnitude fixed at
// (1 - ref_fraction) * epsilon and grows the total with the EV share:
// eps_total(f) = eps_load / (1 - f). Each row compares the series impact
// against the difference of two nonlinear solves.
int run_sweep(const CommonArgs& args, const std::string& fractions_csv, double ref_fraction) {
    const Scenario sc = prepare(args);
    const std::vector<double> fractions = parse_numbers(fractions_csv, "--fractions");
    for (double f : fractions)
        if (f < 0.0 || f >= 1.0)
            throw std::invalid_argument("sweep fractions must lie in [0,1)");
    if (ref_fraction < 0.0 || ref_fraction >= 1.0)
        throw std::invalid_argument("--ref-fraction must lie in [0,1)");
    const double eps_load_fixed = (1.0 - ref_fraction) * sc.density.epsilon;
    const auto [leaf_seg, leaf_k] = far_leaf_sample(sc.bundle.network, sc.grid);

    std::ostringstream out;
    out << "fraction,eps_ev,eps_load,eps_total,delta_v_series,delta_v_nonlinear,abs_error\n";
    for (double f : fractions) {
        // the shape functions are shared across rows; only the magnitude grows
        ff::DensityProfile density_f = sc.density;
        density_f.epsilon = eps_load_fixed / (1.0 - f);

        const auto [ev_share, load_share] =
            ff::split(density_f, f * density_f.epsilon, (1.0 - f) * density_f.epsilon);

        const ff::PerturbationSeries series =
            ff::compute_series(sc.bundle.network, density_f, sc.grid, args.order);
        const ff::ImpactResult impact = ff::ev_impact(
            sc.bundle.network, series, {ev_share.epsilon, load_share.epsilon, args.order});

        const ff::Profile full = ff::solve_tpbv(sc.bundle.network, density_f, sc.grid);
        const ff::Profile base = load_share.epsilon > 0.0
                                     ? ff::solve_tpbv(sc.bundle.network, load_share, sc.grid)
                                     : ff::flat_profile(sc.grid);
        const double dv_series = impact.delta_v[leaf_seg](leaf_k);
        const double dv_nl = full.v[leaf_seg](leaf_k) - base.v[leaf_seg](leaf_k);
        out << fmt(f) << ',' << fmt(ev_share.epsilon) << ',' << fmt(load_share.epsilon) << ','
            << fmt(density_f.epsilon) << ',' << fmt(dv_series) << ',' << fmt(dv_nl) << ','
            << fmt(std::abs(dv_series - dv_nl)) << '\n';
        log_debug("sweep fraction " + fmt(f) + " done");
    }
    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    write_atomic(dir / "sweep.csv", out.str());
    std::cout << "wrote sweep.csv\n";
    return 0;
}

int run_compare(const CommonArgs& args, const std::string& orders_csv) {
    const Scenario sc = prepare(args);
    std::vector<int> orders;
    for (double f : parse_numbers(orders_csv, "--orders")) orders.push_back(static_cast<int>(f));
    const auto rows = ff::convergence_report(sc.bundle.network, sc.density, sc.grid, orders);

    std::ostringstream csv;
    csv << "order,dw_root,dv_far_leaf,dtheta_far_leaf,l2_v,linf_v\n";
    for (const auto& r : rows)
        csv << r.order << ',' << fmt(r.dw_root) << ',' << fmt(r.dv_far_leaf) << ','
            << fmt(r.dtheta_far_leaf) << ',' << fmt(r.l2_v) << ',' << fmt(r.linf_v) << '\n';

    std::ostringstream txt;
    txt << "order   dw(root)      dv(far leaf)  dtheta(far leaf)  |e_v|2        |e_v|inf\n";
    for (const auto& r : rows) {
        char line[160];
        std::snprintf(line, sizeof line, "%-7d %-13.6g %-13.6g %-17.6g %-13.6g %-13.6g\n", r.order,
                      r.dw_root, r.dv_far_leaf, r.dtheta_far_leaf, r.l2_v, r.linf_v);
        txt << line;
    }
    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);
    write_atomic(dir / "compare.csv", csv.str());
    write_atomic(dir / "compare.txt", txt.str());
    std::cout << txt.str();
    return 0;
}

int fail_with(const std::string& code, const std::string& message) {
    json out{{"error", {{"code", code}, {"message", message}}}};
    std::cout << out.dump(2) << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"voltage profiles and EV-charging impact on radial distribution feeders"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string fractions = "0.3,0.4,0.5,0.6";
    std::string orders = "1,2,3,4";
    double ref_fraction = 0.4;

    auto add_common = [&](CLI::App* cmd, bool with_numerics) {
        cmd->add_option("network", args.network_path, "network description JSON")->required();
        if (with_numerics) {
            cmd->add_option("--grid-h-km", args.grid_h_km, "target grid spacing [km]");
            cmd->add_option("--sigma-km", args.sigma_km, "coarse-graining width [km]");
            cmd->add_option("--epsilon", args.epsilon, "loading magnitude parameter");
            cmd->add_option("--out", args.out_dir, "output directory");
        }
    };

    CLI::App* validate = app.add_subcommand("validate", "check a network description");
    add_common(validate, false);
    CLI::App* solve = app.add_subcommand("solve", "solve the nonlinear voltage profile");
    add_common(solve, true);
    CLI::App* expand = app.add_subcommand("expand", "compute the perturbation series");
    add_common(expand, true);
    expand->add_option("--order", args.order, "truncation order");
    CLI::App* impact = app.add_subcommand("impact", "EV impact conditioned on baseline loads");
    add_common(impact, true);
    impact->add_option("--order", args.order, "truncation order");
    impact->add_option("--eps-ev-fraction", args.eps_ev_fraction, "EV share of epsilon");
    CLI::App* sweep = app.add_subcommand("sweep", "accuracy sweep over EV penetration");
    add_common(sweep, true);
    sweep->add_option("--order", args.order, "truncation order");
    sweep->add_option("--fractions", fractions, "comma-separated EV fractions");
    sweep->add_option("--ref-fraction", ref_fraction,
                      "fraction whose scenario equals the configured loading");
    CLI::App* compare = app.add_subcommand("compare", "per-order accuracy table");
    add_common(compare, true);
    compare->add_option("--orders", orders, "comma-separated truncation orders");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        return fail_with("usage", e.what());
    }

    try {
        if (app.got_subcommand(validate)) return run_validate(args);
        if (app.got_subcommand(solve)) return run_solve(args);
        if (app.got_subcommand(expand)) return run_expand(args);
        if (app.got_subcommand(impact)) return run_impact(args);
        if (app.got_subcommand(sweep)) return run_sweep(args, fractions, ref_fraction);
        if (app.got_subcommand(compare)) return run_compare(args, orders);
        return fail_with("usage", "no subcommand selected");
    } catch (const nlohmann::json::exception& e) {
        return fail_with("config_parse", e.what());
    } catch (const ff::NonConvergence& e) {
        return fail_with("non_convergence", e.what());
    } catch (const ff::VoltageCollapse& e) {
        return fail_with("voltage_collapse", e.what());
    } catch (const ff::BracketFailure& e) {
        return fail_with("bracket_failure", e.what());
    } catch (const std::invalid_argument& e) {
        return fail_with("validation", e.what());
    } catch (const std::runtime_error& e) {
        return fail_with("io_error", e.what());
    } catch (const std::exception& e) {
        return fail_with("internal", e.what());
    }
}
