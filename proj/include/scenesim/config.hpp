#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "scenesim/common.hpp"

namespace scenesim {

// Network conversion tolerances (meters unless noted).
struct NetConfig {
    double split_epsilon = 0.5;        // min fragment length kept when truncating
    double node_merge_dist = 1.0;      // endpoint coincidence radius for node grouping
    double lateral_coverage_tol = 2.0; // max gap when stitching lanes into one edge
    double split_snap_dist = 0.1;      // snap split points to existing vertices
    double default_lane_width = 3.5;
    double placement_tol = 5.0;        // stop point to lane end association radius
    // movement classification boundaries (degrees)
    double straight_max_deg = 25.0;
    double uturn_min_deg = 150.0;
    double ambiguous_low_deg = 135.0;
};

// Traffic signal estimation.
struct SignalConfig {
    double v_go = 3.0;          // m/s, min speed treated as clearly moving
    double d_stopline = 3.0;    // m, proximity band around a stop point
    double v_stop = 0.3;        // m/s, below this a queued vehicle counts as stopped
};

// Demand construction and behavior parameter sampling.
struct DemandConfig {
    double d_intersection = 5.0;   // m, stop line proximity for red-signal holds
    double d_roadedge = 1.0;       // m, curb proximity for parked classification
    double d_lanecenter_near = 2.0;  // m, on-lane when closer than this
    double d_lanecenter_far = 5.0;   // m, beyond this an off-network agent is held
    double w_main = 9.0;           // route continuation weight, same edge direction
    double w_side = 1.0;           // route continuation weight, turning
    double lane_change_headroom = 25.0;  // m of remaining edge per needed lane change
};

// Rollout engine.
struct EngineConfig {
    double dt = 0.1;                  // s
    double stop_speed = 0.1;          // m/s, "standing" threshold
    double minor_time_gap = 4.0;      // s, accepted gap when yielding
    double lateral_speed = 1.75;      // m/s cap during lane changes
    double stopline_margin = 0.5;     // m kept before stop lines when braking
    double overlap_margin = 0.1;      // m hard floor between bumper pairs
};

// Metric histograms and thresholds.
struct MetricsConfig {
    double ttc_max = 10.0;        // s, TTC values clipped here
    double offroad_margin = 0.0;  // m, signed distance > margin counts off-road
    double bin_floor = 1e-6;      // probability floor for empty bins
};

struct Config {
    NetConfig net;
    SignalConfig signal;
    DemandConfig demand;
    EngineConfig engine;
    MetricsConfig metrics;
    int default_horizon = 80;   // steps simulated past history
    int default_rollouts = 32;
};

namespace detail {

inline void read_if(const nlohmann::json& j, const char* key, double& out) {
    if (j.contains(key)) {
        if (!j.at(key).is_number())
            throw SchemaError(std::string("config.") + key, "expected a number");
        out = j.at(key).get<double>();
    }
}

inline void read_if(const nlohmann::json& j, const char* key, int& out) {
    if (j.contains(key)) {
        if (!j.at(key).is_number_integer())
            throw SchemaError(std::string("config.") + key, "expected an integer");
        out = j.at(key).get<int>();
    }
}

}  // namespace detail

inline Config parse_config_json(const nlohmann::json& j) {
    using detail::read_if;
    Config c;
    if (j.contains("net")) {
        const auto& n = j.at("net");
        read_if(n, "split_epsilon", c.net.split_epsilon);
        read_if(n, "node_merge_dist", c.net.node_merge_dist);
        read_if(n, "lateral_coverage_tol", c.net.lateral_coverage_tol);
        read_if(n, "split_snap_dist", c.net.split_snap_dist);
        read_if(n, "default_lane_width", c.net.default_lane_width);
        read_if(n, "placement_tol", c.net.placement_tol);
        read_if(n, "straight_max_deg", c.net.straight_max_deg);
        read_if(n, "uturn_min_deg", c.net.uturn_min_deg);
        read_if(n, "ambiguous_low_deg", c.net.ambiguous_low_deg);
    }
    if (j.contains("signal")) {
        const auto& s = j.at("signal");
        read_if(s, "v_go", c.signal.v_go);
        read_if(s, "d_stopline", c.signal.d_stopline);
        read_if(s, "v_stop", c.signal.v_stop);
    }
    if (j.contains("demand")) {
        const auto& d = j.at("demand");
        read_if(d, "d_intersection", c.demand.d_intersection);
        read_if(d, "d_roadedge", c.demand.d_roadedge);
        read_if(d, "d_lanecenter_near", c.demand.d_lanecenter_near);
        read_if(d, "d_lanecenter_far", c.demand.d_lanecenter_far);
        read_if(d, "w_main", c.demand.w_main);
        read_if(d, "w_side", c.demand.w_side);
        read_if(d, "lane_change_headroom", c.demand.lane_change_headroom);
    }
    if (j.contains("engine")) {
        const auto& e = j.at("engine");
        read_if(e, "dt", c.engine.dt);
        read_if(e, "stop_speed", c.engine.stop_speed);
        read_if(e, "minor_time_gap", c.engine.minor_time_gap);
        read_if(e, "lateral_speed", c.engine.lateral_speed);
        read_if(e, "stopline_margin", c.engine.stopline_margin);
        read_if(e, "overlap_margin", c.engine.overlap_margin);
    }
    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        read_if(m, "ttc_max", c.metrics.ttc_max);
        read_if(m, "offroad_margin", c.metrics.offroad_margin);
        read_if(m, "bin_floor", c.metrics.bin_floor);
    }
    read_if(j, "default_horizon", c.default_horizon);
    read_if(j, "default_rollouts", c.default_rollouts);
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path, "cannot open config file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path, std::string("JSON parse failure: ") + e.what());
    }
    return parse_config_json(j);
}

}  // namespace scenesim
