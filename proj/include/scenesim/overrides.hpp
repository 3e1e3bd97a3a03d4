#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "scenesim/config.hpp"
#include "scenesim/demand.hpp"
#include "scenesim/net_builder.hpp"
#include "scenesim/scenario.hpp"

namespace scenesim {

namespace override_detail {

inline double nearest_lane_center_distance(const Point2& p, const Scenario& sc) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : sc.lane_centers)
        best = std::min(best, distance_to_polyline(l.polyline, p));
    return best;
}

inline double nearest_road_edge_distance(const Point2& p, const Scenario& sc) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : sc.road_edges)
        best = std::min(best, distance_to_polyline(r.polyline, p));
    return best;
}

inline bool history_speed_zero(const AgentTrack& t, int last_step, double stop_speed) {
    bool any = false;
    for (const auto& s : t.states) {
        if (!s.valid || s.time_index > last_step) continue;
        any = true;
        if (s.speed() >= stop_speed) return false;
    }
    return any;
}

// Signalized movements leaving the agent's current lane, with their stop
// points. The rightmost lane is exempt later.
struct FacingSignal {
    const Connection* conn = nullptr;
};

inline std::vector<FacingSignal> facing_signals(const AgentSpec& spec, const Network& net) {
    std::vector<FacingSignal> out;
    if (!spec.placement.on_network) return out;
    const Id& edge_id = spec.placement.edge_id;
    for (const auto& c : net.connections) {
        if (!c.has_signal) continue;
        if (c.from_edge != edge_id || c.from_lane_index != spec.placement.lane_index) continue;
        out.push_back({&c});
    }
    return out;
}

}  // namespace override_detail

// Applies the override cascade to one agent at the simulation start.
// `signal_step` is the step whose signal states gate the red-hold rule,
// normally the last history step.
inline OverrideClass classify_agent(const AgentSpec& spec, const Network& net, const Scenario& sc,
                                    int signal_step, const Config& config = {}) {
    using namespace override_detail;
    if (spec.replay) return OverrideClass::normal;
    const DemandConfig& cfg = config.demand;
    const AgentTrack* track = sc.track(spec.track_id);
    const int last_step = sc.history_length - 1;
    const bool standing =
        track && history_speed_zero(*track, last_step, config.engine.stop_speed);
    const Point2& pos = spec.placement.position;

    if (spec.placement.on_network) {
        if (standing && spec.placement.lane_index != 0) {
            for (const auto& fs : facing_signals(spec, net)) {
                if (distance(pos, fs.conn->stop_point) > cfg.d_intersection) continue;
                const SignalProgram* prog = net.program_for(fs.conn->via_node);
                if (!prog) continue;
                if (prog->state_at(signal_step, fs.conn->id) == SignalState::red)
                    return OverrideClass::red_signal_hold;
            }
        }
        if (standing) {
            const double d_edge = nearest_road_edge_distance(pos, sc);
            const double d_center = nearest_lane_center_distance(pos, sc);
            if (d_edge < cfg.d_roadedge || d_center > cfg.d_lanecenter_near)
                return OverrideClass::parked_hold;
        }
        return OverrideClass::normal;
    }
    const double d_center = nearest_lane_center_distance(pos, sc);
    return d_center > cfg.d_lanecenter_far ? OverrideClass::offnet_hold
                                           : OverrideClass::offnet_ballistic;
}

inline void classify_all(Demand& demand, const Network& net, const Scenario& sc,
                         const Config& config = {}) {
    for (auto& a : demand.agents)
        a.override_class = classify_agent(a, net, sc, sc.history_length - 1, config);
}

// Constant-velocity, constant-yaw-rate motion inputs for off-network agents.
struct BallisticState {
    double speed = 0.0;
    double yaw_rate = 0.0;
};

inline BallisticState ballistic_from_history(const AgentTrack& t, int last_step, double dt) {
    BallisticState b;
    const TrackState* last = nullptr;
    const TrackState* prev = nullptr;
    for (const auto& s : t.states) {
        if (!s.valid || s.time_index > last_step) continue;
        prev = last;
        last = &s;
    }
    if (!last) return b;
    b.speed = last->speed();
    if (prev && last->time_index > prev->time_index)
        b.yaw_rate = wrap_angle(last->heading - prev->heading) /
                     (dt * (last->time_index - prev->time_index));
    return b;
}

struct ScenarioBounds {
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    bool contains(const Point2& p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
};

inline ScenarioBounds scenario_bounds(const Scenario& sc, double pad = 10.0) {
    ScenarioBounds b;
    b.min_x = b.min_y = std::numeric_limits<double>::infinity();
    b.max_x = b.max_y = -std::numeric_limits<double>::infinity();
    const auto take = [&](const Point2& p) {
        b.min_x = std::min(b.min_x, p.x);
        b.min_y = std::min(b.min_y, p.y);
        b.max_x = std::max(b.max_x, p.x);
        b.max_y = std::max(b.max_y, p.y);
    };
    for (const auto& l : sc.lane_centers)
        for (const auto& p : l.polyline) take(p);
    for (const auto& r : sc.road_edges)
        for (const auto& p : r.polyline) take(p);
    for (const auto& t : sc.tracks)
        for (const auto& s : t.states)
            if (s.valid) take(s.position);
    if (!std::isfinite(b.min_x)) return {-pad, -pad, pad, pad};
    b.min_x -= pad;
    b.min_y -= pad;
    b.max_x += pad;
    b.max_y += pad;
    return b;
}

}  // namespace scenesim
