#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenesim/config.hpp"
#include "scenesim/demand.hpp"
#include "scenesim/engine.hpp"
#include "scenesim/metrics.hpp"
#include "scenesim/net_builder.hpp"
#include "scenesim/overrides.hpp"
#include "scenesim/rollout_io.hpp"
#include "scenesim/scenario.hpp"
#include "scenesim/signal_estimator.hpp"
#include "scenesim/sumo_export.hpp"

namespace scenesim {

struct RunOptions {
    uint64_t seed = 1;
    int horizon = 0;    // 0: use config default
    int rollouts = 0;   // 0: use config default
    std::string out_dir = "out";
    std::string rollout_format = "csv";  // or "bin"
    bool export_sumo_files = true;
};

// network + signal programs for one scenario at a given horizon
inline Network build_full_network(const Scenario& sc, int horizon, const Config& config) {
    Network net = build_network(sc, config);
    build_signal_programs(net, sc, horizon, config.signal);
    return net;
}

inline Demand build_classified_demand(const Scenario& sc, const Network& net, uint64_t demand_seed,
                                      const Config& config) {
    Demand demand = build_demand(sc, net, demand_seed, config);
    classify_all(demand, net, sc, config);
    return demand;
}

namespace pipeline_detail {

inline std::filesystem::path scenario_dir(const RunOptions& opt, const Id& scenario_id) {
    return std::filesystem::path(opt.out_dir) / scenario_id;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ExportError("cannot open for writing: " + path.string());
    os << content;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

}  // namespace pipeline_detail

inline nlohmann::ordered_json conversion_report_json(const Scenario& sc, const Network& net) {
    nlohmann::ordered_json j;
    j["scenario_id"] = sc.id;
    int n_lanes = 0;
    for (const auto& e : net.edges) n_lanes += static_cast<int>(e.lanes.size());
    int signalized = 0;
    for (const auto& n : net.nodes)
        if (n.signalized) ++signalized;
    j["counts"] = {{"edges", net.edges.size()},
                   {"lanes", n_lanes},
                   {"nodes", net.nodes.size()},
                   {"connections", net.connections.size()},
                   {"signalized_nodes", signalized},
                   {"signal_programs", net.signal_programs.size()}};
    j["coverage_ratio"] = net.coverage_ratio;
    nlohmann::ordered_json warnings = nlohmann::ordered_json::array();
    for (const auto& w : net.warnings) warnings.push_back(w.stage + ": " + w.message);
    j["warnings"] = warnings;
    return j;
}

// convert one scenario file: network, signals, SUMO files, report
inline nlohmann::ordered_json run_convert(const std::string& scenario_path, const RunOptions& opt,
                                          const Config& config) {
    using namespace pipeline_detail;
    const Scenario sc = load_scenario(scenario_path);
    const int horizon = opt.horizon > 0 ? opt.horizon : config.default_horizon;
    const Network net = build_full_network(sc, horizon, config);
    const auto dir = scenario_dir(opt, sc.id);
    std::filesystem::create_directories(dir);
    if (opt.export_sumo_files) {
        const uint64_t demand_seed = derive_seed(opt.seed, "demand");
        const Demand demand = build_classified_demand(sc, net, demand_seed, config);
        export_sumo(net, demand, dir.string(), "net", config.engine.dt);
    }
    const auto report = conversion_report_json(sc, net);
    write_json(dir / "conversion_report.json", report);
    return report;
}

// simulate: demand once, n stochastic rollouts, one file per rollout
inline std::vector<std::string> run_simulate(const std::string& scenario_path,
                                             const RunOptions& opt, const Config& config) {
    using namespace pipeline_detail;
    const Scenario sc = load_scenario(scenario_path);
    const int horizon = opt.horizon > 0 ? opt.horizon : config.default_horizon;
    const int n = opt.rollouts > 0 ? opt.rollouts : config.default_rollouts;
    const Network net = build_full_network(sc, horizon, config);
    const uint64_t demand_seed = derive_seed(opt.seed, "demand");
    const uint64_t engine_base = derive_seed(opt.seed, "engine");
    const Demand demand = build_classified_demand(sc, net, demand_seed, config);
    const auto dir = scenario_dir(opt, sc.id);
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    for (int k = 0; k < n; ++k) {
        const Rollout r = run_single_rollout(sc, net, demand, engine_base + static_cast<uint64_t>(k),
                                             demand_seed, horizon, config);
        char name[64];
        std::snprintf(name, sizeof(name), "rollout_%03d.%s", k,
                      opt.rollout_format == "bin" ? "bin" : "csv");
        const auto path = dir / name;
        if (opt.rollout_format == "bin")
            write_rollout_binary(r, path.string());
        else
            write_rollout_csv(r, path.string());
        files.push_back(path.string());
    }
    return files;
}

inline Rollout load_rollout_file(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".bin")
        return read_rollout_binary_file(path);
    return read_rollout_csv_file(path);
}

// evaluate recorded rollouts against the scenario's ground truth
inline MetricsReport run_evaluate(const std::string& scenario_path,
                                  const std::vector<std::string>& rollout_paths,
                                  const RunOptions& opt, const Config& config) {
    using namespace pipeline_detail;
    const Scenario sc = load_scenario(scenario_path);
    std::vector<Rollout> rollouts;
    for (const auto& p : rollout_paths) rollouts.push_back(load_rollout_file(p));
    MetricsReport rep;
    if (rollouts.empty()) {
        rep.scenario_id = sc.id;
        warn(rep.warnings, "evaluate", "no rollout files given");
    } else {
        const int horizon = rollouts.front().horizon;
        const Network net = build_full_network(sc, horizon, config);
        const Demand demand = build_classified_demand(sc, net, rollouts.front().demand_seed, config);
        rep = compute_metrics(sc, rollouts, config, &demand);
    }
    const auto dir = scenario_dir(opt, sc.id);
    write_json(dir / "metrics.json", metrics_report_to_json(rep));
    return rep;
}

inline std::vector<std::string> find_rollout_files(const RunOptions& opt, const Id& scenario_id) {
    namespace fs = std::filesystem;
    std::vector<std::string> out;
    const auto dir = pipeline_detail::scenario_dir(opt, scenario_id);
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("rollout_", 0) == 0 &&
            (name.size() > 4 && (name.substr(name.size() - 4) == ".csv" ||
                                 name.substr(name.size() - 4) == ".bin")))
            out.push_back(e.path().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// simple SVG bar chart; one bar per labeled value in [0, 1]
inline std::string svg_bar_chart(const std::vector<std::pair<std::string, double>>& values,
                                 const std::string& title) {
    const int bar_w = 28, gap = 10, chart_h = 160, left = 40, bottom = 70;
    const int width = left + static_cast<int>(values.size()) * (bar_w + gap) + 20;
    const int height = chart_h + bottom + 30;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n";
    os << "<text x=\"10\" y=\"16\" font-size=\"13\" font-family=\"sans-serif\">"
       << sumo_detail::xml_escape(title) << "</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << 25 + chart_h << "\" x2=\"" << width - 10
       << "\" y2=\"" << 25 + chart_h << "\" stroke=\"#444\"/>\n";
    for (size_t i = 0; i < values.size(); ++i) {
        const double v = std::clamp(values[i].second, 0.0, 1.0);
        const int h = static_cast<int>(v * chart_h);
        const int x = left + static_cast<int>(i) * (bar_w + gap);
        const int y = 25 + chart_h - h;
        os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w << "\" height=\"" << h
           << "\" fill=\"#4a90d9\"/>\n";
        os << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << y - 4
           << "\" font-size=\"9\" text-anchor=\"middle\" font-family=\"sans-serif\">"
           << sumo_detail::fmt2(values[i].second) << "</text>\n";
        os << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << 25 + chart_h + 10
           << "\" font-size=\"9\" font-family=\"sans-serif\" text-anchor=\"end\" transform=\"rotate(-55 "
           << x + bar_w / 2 << " " << 25 + chart_h + 10 << ")\">"
           << sumo_detail::xml_escape(values[i].first) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// report: aggregate per-scenario metrics.json files into CSV + SVG
inline std::string run_report(const std::vector<std::string>& metrics_paths,
                              const RunOptions& opt) {
    using namespace pipeline_detail;
    namespace fs = std::filesystem;
    std::ostringstream csv;
    csv << "scenario_id,realism_meta,kinematic,interactive,map,linear_speed,linear_accel,"
           "angular_speed,angular_accel,collision_indication,distance_to_nearest,ttc,"
           "offroad_indication,distance_to_road_edge,min_ade,collision_rate,offroad_rate\n";
    std::vector<std::pair<std::string, double>> metas;
    for (const auto& p : metrics_paths) {
        std::ifstream is(p);
        if (!is) throw SchemaError("cannot open metrics file: " + p, "report");
        nlohmann::json j = nlohmann::json::parse(is);
        csv << j.value("scenario_id", std::string("?"));
        csv << ',' << j.value("realism_meta", 0.0);
        const auto groups = j.value("group_scores", nlohmann::json::object());
        csv << ',' << groups.value("kinematic", 0.0) << ',' << groups.value("interactive", 0.0)
            << ',' << groups.value("map", 0.0);
        std::map<std::string, double> comp;
        if (j.contains("components"))
            for (const auto& c : j["components"])
                comp[c.value("name", std::string())] = c.value("score", 0.0);
        for (const char* name :
             {"linear_speed", "linear_accel", "angular_speed", "angular_accel",
              "collision_indication", "distance_to_nearest", "ttc", "offroad_indication",
              "distance_to_road_edge"})
            csv << ',' << (comp.count(name) ? comp[name] : 0.0);
        csv << ',' << j.value("min_ade", 0.0) << ',' << j.value("collision_rate", 0.0) << ','
            << j.value("offroad_rate", 0.0) << "\n";
        metas.emplace_back(j.value("scenario_id", std::string("?")), j.value("realism_meta", 0.0));
    }
    fs::create_directories(opt.out_dir);
    const fs::path csv_path = fs::path(opt.out_dir) / "report.csv";
    write_text(csv_path, csv.str());
    write_text(fs::path(opt.out_dir) / "report.svg",
               svg_bar_chart(metas, "realism meta score by scenario"));
    return csv_path.string();
}

}  // namespace scenesim
