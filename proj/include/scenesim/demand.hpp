#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scenesim/config.hpp"
#include "scenesim/net_builder.hpp"
#include "scenesim/random.hpp"
#include "scenesim/scenario.hpp"

namespace scenesim {

enum class OverrideClass { normal, red_signal_hold, parked_hold, offnet_hold, offnet_ballistic };

inline std::string to_string(OverrideClass c) {
    switch (c) {
        case OverrideClass::normal: return "normal";
        case OverrideClass::red_signal_hold: return "red_signal_hold";
        case OverrideClass::parked_hold: return "parked_hold";
        case OverrideClass::offnet_hold: return "offnet_hold";
        case OverrideClass::offnet_ballistic: return "offnet_ballistic";
    }
    return "normal";
}

struct BehaviorParams {
    double speed_factor = 1.0;
    double min_gap = 2.5;
    double accel = 2.0;
    double decel = 2.5;
    double sigma = 0.5;
    double tau = 1.0;
    double startup_delay = 0.0;
    double min_gap_lat = 0.6;
    double lc_keep_right = 1.0;
    double lc_sublane = 0.4;
    double jm_stop_line_gap = 1.0;
    double jm_sigma_minor = 0.5;
    double jm_ignore_keep_clear_time = -1.0;  // disabled
};

struct Route {
    std::vector<Id> edge_sequence;
    std::vector<Id> connection_sequence;  // joins consecutive edges
};

struct Placement {
    bool on_network = false;
    Id edge_id;
    int edge_index = -1;
    int lane_index = -1;
    double offset = 0.0;     // arclength along the lane shape
    double lateral = 0.0;    // signed offset from the lane centerline (left positive)
    Point2 position;         // raw pose, kept for off-network agents
    double heading = 0.0;
};

struct AgentSpec {
    Id track_id;
    ObjectType object_type = ObjectType::vehicle;
    bool replay = false;  // pedestrians/cyclists: positions come from the track
    BehaviorParams params;
    std::optional<Route> route;
    Placement placement;
    OverrideClass override_class = OverrideClass::normal;
    double initial_speed = 0.0;
    double length = 4.5;
    double width = 2.0;
};

struct Demand {
    std::vector<AgentSpec> agents;
    WarningList warnings;

    const AgentSpec* find(const Id& track_id) const {
        for (const auto& a : agents)
            if (a.track_id == track_id) return &a;
        return nullptr;
    }
};

// --------------------------------------------------------------------------
// Parameter sampling
// --------------------------------------------------------------------------

// Draws one agent's behavior parameter set. The draw order is fixed so a seed
// always reproduces the same values.
inline BehaviorParams sample_params(Rng& rng, double v_history, double v_limit,
                                    WarningList* warnings = nullptr) {
    BehaviorParams p;
    double mean_factor;
    if (v_limit <= 0.0) {
        mean_factor = 1.0;
        if (warnings) warn(*warnings, "demand", "speed limit is zero; speed factor mean set to 1");
    } else {
        mean_factor = std::max(0.75, v_history / v_limit);
    }
    p.speed_factor = rng.normal(mean_factor, 0.1);
    p.min_gap = rng.trunc_normal(2.5, 0.5, 0.0, 5.0);
    p.accel = rng.trunc_normal(2.0, 0.2, 1.0, 4.5);
    p.decel = rng.trunc_normal(2.5, 0.2, 1.0, 4.5);
    p.sigma = rng.trunc_normal(0.5, 0.2, 0.0, 1.0);
    p.tau = rng.trunc_lognormal(0.0, 0.1, 0.0, 5.0);
    p.startup_delay = rng.exponential(3.0);
    p.min_gap_lat = rng.trunc_normal(0.6, 0.08, 0.4, 0.8);
    p.lc_keep_right = rng.trunc_lognormal(100.0, 0.1, 0.0, 1.5);
    p.lc_sublane = rng.trunc_normal(0.4, 0.3, 0.0, 10.0);
    p.jm_stop_line_gap = rng.lognormal(0.4, 0.5) + 1.0;
    p.jm_sigma_minor = rng.trunc_normal(0.5, 0.2, 0.0, 1.0);
    p.jm_ignore_keep_clear_time = -1.0;
    return p;
}

// --------------------------------------------------------------------------
// Placement
// --------------------------------------------------------------------------

inline Placement place_agent(const TrackState& state, const Network& net,
                             const DemandConfig& cfg = {}) {
    Placement pl;
    pl.position = state.position;
    pl.heading = state.heading;

    double best_lat = std::numeric_limits<double>::infinity();
    for (size_t ei = 0; ei < net.edges.size(); ++ei) {
        const Edge& e = net.edges[ei];
        for (size_t li = 0; li < e.lanes.size(); ++li) {
            const Projection proj = project_to_polyline(e.lanes[li].shape, state.position);
            if (proj.lateral >= best_lat) continue;
            const PoseOnLine pose = point_at_arclength(e.lanes[li].shape, proj.s);
            if (std::abs(wrap_angle(state.heading - pose.heading)) >=
                60.0 * 3.14159265358979323846 / 180.0)
                continue;
            best_lat = proj.lateral;
            pl.edge_index = static_cast<int>(ei);
            pl.edge_id = e.id;
            pl.lane_index = static_cast<int>(li);
            pl.offset = proj.s;
            pl.lateral = proj.signed_lateral;
        }
    }
    pl.on_network = best_lat <= cfg.d_lanecenter_far;
    if (!pl.on_network) {
        pl.edge_index = -1;
        pl.edge_id.clear();
        pl.lane_index = -1;
        pl.offset = 0.0;
        pl.lateral = 0.0;
    }
    return pl;
}

// --------------------------------------------------------------------------
// Route inference
// --------------------------------------------------------------------------

namespace demand_detail {

inline bool lane_usable(const NetLane& l) { return l.lane_type != LaneType::bike_lane; }

struct SuccessorOption {
    const Connection* conn = nullptr;
    int edge_index = -1;
    int lane_changes = 0;  // from the current lane to the connection's from-lane
};

// Successor movements from `edge`, keeping for each target edge the connection
// reachable with the fewest lane changes from `lane_index`.
inline std::vector<SuccessorOption> successor_options(const Network& net, int edge_index,
                                                      int lane_index) {
    std::map<int, SuccessorOption> best_by_edge;
    const Edge& e = net.edges[edge_index];
    for (const auto& c : net.connections) {
        if (c.from_edge != e.id) continue;
        const int te = net.edge_index(c.to_edge);
        if (te < 0) continue;
        if (c.to_lane_index < 0 || c.to_lane_index >= static_cast<int>(net.edges[te].lanes.size()))
            continue;
        if (!lane_usable(net.edges[te].lanes[c.to_lane_index])) continue;
        SuccessorOption opt;
        opt.conn = &c;
        opt.edge_index = te;
        opt.lane_changes = std::abs(c.from_lane_index - lane_index);
        auto it = best_by_edge.find(te);
        if (it == best_by_edge.end() || opt.lane_changes < it->second.lane_changes ||
            (opt.lane_changes == it->second.lane_changes && opt.conn->id < it->second.conn->id))
            best_by_edge[te] = opt;
    }
    std::vector<SuccessorOption> out;
    for (const auto& [te, opt] : best_by_edge) out.push_back(opt);
    return out;
}

}  // namespace demand_detail

// Depth-first forward traversal from the placement edge. At each junction the
// successor edge is drawn with weight w_main for the highest-priority choice
// and w_side otherwise; successors that would demand more lane changes than
// the available edge length allows get weight zero.
inline Route infer_route(const Placement& pl, const Network& net, Rng& rng,
                         const DemandConfig& cfg = {}) {
    Route route;
    if (!pl.on_network) return route;
    int edge_index = pl.edge_index;
    int lane_index = pl.lane_index;
    double entry_offset = pl.offset;
    route.edge_sequence.push_back(net.edges[edge_index].id);

    constexpr int kMaxEdges = 64;
    std::map<int, int> visits;
    while (static_cast<int>(route.edge_sequence.size()) < kMaxEdges) {
        if (++visits[edge_index] > 2) break;
        const double remaining = net.edges[edge_index].length() - entry_offset;
        auto options = demand_detail::successor_options(net, edge_index, lane_index);
        if (options.empty()) break;

        int max_priority = 0;
        for (const auto& o : options)
            max_priority = std::max(max_priority, net.edges[o.edge_index].priority);
        std::vector<double> weights;
        double total = 0.0;
        for (const auto& o : options) {
            double w = net.edges[o.edge_index].priority == max_priority ? cfg.w_main : cfg.w_side;
            if (o.lane_changes * cfg.lane_change_headroom > remaining) w = 0.0;
            weights.push_back(w);
            total += w;
        }
        if (total <= 0.0) break;
        double pick = rng.uniform() * total;
        size_t chosen = 0;
        for (size_t i = 0; i < options.size(); ++i) {
            pick -= weights[i];
            if (pick <= 0.0 && weights[i] > 0.0) {
                chosen = i;
                break;
            }
            if (i + 1 == options.size())
                for (size_t j = 0; j < options.size(); ++j)
                    if (weights[j] > 0.0) chosen = j;
        }
        const auto& opt = options[chosen];
        route.connection_sequence.push_back(opt.conn->id);
        route.edge_sequence.push_back(net.edges[opt.edge_index].id);
        edge_index = opt.edge_index;
        lane_index = opt.conn->to_lane_index;
        entry_offset = 0.0;
    }
    return route;
}

// --------------------------------------------------------------------------
// Demand assembly
// --------------------------------------------------------------------------

inline Demand build_demand(const Scenario& sc, const Network& net, uint64_t seed,
                           const Config& config = {}) {
    Demand demand;
    const int last_step = sc.history_length - 1;
    for (const auto& t : sc.tracks) {
        const TrackState* s = t.state_at(last_step);
        if (!s || !s->valid) continue;

        AgentSpec spec;
        spec.track_id = t.id;
        spec.object_type = t.object_type;
        spec.initial_speed = s->speed();
        spec.length = s->length;
        spec.width = s->width;
        spec.placement.position = s->position;
        spec.placement.heading = s->heading;

        if (t.object_type != ObjectType::vehicle) {
            spec.replay = true;
            demand.agents.push_back(std::move(spec));
            continue;
        }

        Rng rng(derive_seed(seed, "agent:" + t.id));
        spec.placement = place_agent(*s, net, config.demand);

        double v_sum = 0.0;
        int v_count = 0;
        for (const auto& hs : t.states)
            if (hs.valid && hs.time_index <= last_step) {
                v_sum += hs.speed();
                ++v_count;
            }
        const double v_history = v_count > 0 ? v_sum / v_count : 0.0;
        double v_limit = 13.4;
        if (spec.placement.on_network)
            v_limit = net.edges[spec.placement.edge_index]
                          .lanes[spec.placement.lane_index]
                          .speed_limit;
        spec.params = sample_params(rng, v_history, v_limit, &demand.warnings);

        if (spec.placement.on_network)
            spec.route = infer_route(spec.placement, net, rng, config.demand);
        demand.agents.push_back(std::move(spec));
    }
    std::sort(demand.agents.begin(), demand.agents.end(),
              [](const AgentSpec& a, const AgentSpec& b) { return a.track_id < b.track_id; });
    return demand;
}

}  // namespace scenesim
