#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "scenesim/config.hpp"
#include "scenesim/net_builder.hpp"
#include "scenesim/scenario.hpp"

namespace scenesim {

inline std::set<Id> identify_signalized_nodes(const Network& net) {
    std::set<Id> out;
    for (const auto& c : net.connections)
        if (c.has_signal) out.insert(c.via_node);
    return out;
}

namespace signal_detail {

enum class Source { observed, inferred, carried };

struct ConnInfo {
    const Connection* conn = nullptr;
    Point2 stop_point;
    double entry_heading = 0.0;
};

inline double track_speed_at(const AgentTrack& t, int step) {
    const TrackState* s = t.state_at(step);
    return s && s->valid ? s->speed() : -1.0;
}

// True when some vehicle passes the stop point at speed without braking,
// roughly aligned with the movement's approach direction.
inline bool vehicle_crossing(const Scenario& sc, const ConnInfo& ci, int step,
                             const SignalConfig& cfg) {
    for (const auto& t : sc.tracks) {
        if (t.object_type != ObjectType::vehicle) continue;
        const TrackState* s = t.state_at(step);
        if (!s || !s->valid) continue;
        if (distance(s->position, ci.stop_point) > cfg.d_stopline) continue;
        const double v = s->speed();
        if (v < cfg.v_go) continue;
        if (std::abs(wrap_angle(s->heading - ci.entry_heading)) > 3.14159265358979323846 / 3.0)
            continue;
        // decelerating vehicles (braking for the light) do not count
        double v_next = track_speed_at(t, step + 1);
        if (v_next < 0.0) v_next = v;
        double v_prev = track_speed_at(t, step - 1);
        if (v_prev < 0.0) v_prev = v;
        const double accel = (v_next - v_prev) / 2.0 / 0.1;
        if (accel < -0.5) continue;
        return true;
    }
    return false;
}

inline bool vehicle_stopped_at(const Scenario& sc, const ConnInfo& ci, int step,
                               const SignalConfig& cfg) {
    for (const auto& t : sc.tracks) {
        if (t.object_type != ObjectType::vehicle) continue;
        const TrackState* s = t.state_at(step);
        if (!s || !s->valid) continue;
        if (distance(s->position, ci.stop_point) > cfg.d_stopline) continue;
        if (std::abs(wrap_angle(s->heading - ci.entry_heading)) > 3.14159265358979323846 / 3.0)
            continue;
        if (s->speed() < cfg.v_stop) return true;
    }
    return false;
}

}  // namespace signal_detail

// Builds the history-window program for one signalized node. Rules, in order:
// an observation wins (an observed red is flipped to green when a vehicle
// demonstrably drives through); a moving crossing vehicle implies green; a
// stopped queue head implies red; otherwise the previous state carries over,
// starting from red.
inline SignalProgram infer_states(const Network& net, const Id& node_id, const Scenario& sc,
                                  const SignalConfig& cfg = {}) {
    using namespace signal_detail;
    SignalProgram prog;
    prog.node_id = node_id;
    prog.history_length = sc.history_length;
    prog.extended_to = sc.history_length;

    std::vector<ConnInfo> infos;
    for (const auto& c : net.connections) {
        if (c.via_node != node_id) continue;
        ConnInfo ci;
        ci.conn = &c;
        ci.stop_point = c.has_signal ? c.stop_point : c.shape.front();
        const int fe = net.edge_index(c.from_edge);
        if (fe >= 0 && c.from_lane_index >= 0 &&
            c.from_lane_index < static_cast<int>(net.edges[fe].lanes.size())) {
            const Polyline& s = net.edges[fe].lanes[c.from_lane_index].shape;
            ci.entry_heading = heading_of(s[s.size() - 2], s.back());
        } else {
            ci.entry_heading = heading_of(c.shape[0], c.shape[1]);
        }
        infos.push_back(ci);
    }

    // conflict table: crossing shapes from different approaches
    std::vector<std::pair<size_t, size_t>> conflicts;
    for (size_t i = 0; i < infos.size(); ++i)
        for (size_t j = i + 1; j < infos.size(); ++j) {
            if (infos[i].conn->from_edge == infos[j].conn->from_edge) continue;
            if (polylines_cross(infos[i].conn->shape, infos[j].conn->shape))
                conflicts.emplace_back(i, j);
        }

    std::map<Id, std::vector<const SignalObservation*>> obs_by_conn;
    for (const auto& o : sc.signal_observations)
        for (const auto& ci : infos)
            for (const auto& lid : ci.conn->signal_lane_ids)
                if (lid == o.lane_id) obs_by_conn[ci.conn->id].push_back(&o);

    prog.steps.resize(static_cast<size_t>(sc.history_length));
    std::vector<SignalState> prev(infos.size(), SignalState::red);
    for (int t = 0; t < sc.history_length; ++t) {
        std::vector<SignalState> cur(infos.size());
        std::vector<Source> src(infos.size());
        for (size_t i = 0; i < infos.size(); ++i) {
            const auto& ci = infos[i];
            const SignalObservation* obs = nullptr;
            if (auto it = obs_by_conn.find(ci.conn->id); it != obs_by_conn.end())
                for (const auto* o : it->second)
                    if (o->time_index == t && o->state != SignalState::unknown) obs = o;
            if (obs) {
                cur[i] = obs->state;
                src[i] = Source::observed;
                if (obs->state == SignalState::red && vehicle_crossing(sc, ci, t, cfg))
                    cur[i] = SignalState::green;  // contradicted by behavior
            } else if (vehicle_crossing(sc, ci, t, cfg)) {
                cur[i] = SignalState::green;
                src[i] = Source::inferred;
            } else if (vehicle_stopped_at(sc, ci, t, cfg)) {
                cur[i] = SignalState::red;
                src[i] = Source::inferred;
            } else {
                cur[i] = prev[i];
                src[i] = Source::carried;
            }
        }
        // observed green outranks an inferred/carried green on a crossing movement
        for (const auto& [i, j] : conflicts) {
            if (cur[i] != SignalState::green || cur[j] != SignalState::green) continue;
            const bool i_obs = src[i] == Source::observed;
            const bool j_obs = src[j] == Source::observed;
            if (i_obs && !j_obs)
                cur[j] = SignalState::red;
            else if (j_obs && !i_obs)
                cur[i] = SignalState::red;
        }
        for (size_t i = 0; i < infos.size(); ++i) prog.steps[t][infos[i].conn->id] = cur[i];
        prev = cur;
    }
    return prog;
}

// Extends a history-window program to `horizon` steps by holding each
// movement's final state.
inline SignalProgram extend_states(const SignalProgram& prog, int horizon) {
    SignalProgram out = prog;
    out.extended_to = std::max(horizon, prog.history_length);
    if (out.steps.empty()) return out;
    // copy: push_back would invalidate a reference into the growing vector
    const std::map<Id, SignalState> last = out.steps.back();
    while (static_cast<int>(out.steps.size()) < out.extended_to) out.steps.push_back(last);
    return out;
}

inline void build_signal_programs(Network& net, const Scenario& sc, int horizon,
                                  const SignalConfig& cfg = {}) {
    net.signal_programs.clear();
    for (const auto& node_id : identify_signalized_nodes(net))
        net.signal_programs.push_back(extend_states(infer_states(net, node_id, sc, cfg), horizon));
}

}  // namespace scenesim
