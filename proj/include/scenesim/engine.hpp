#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scenesim/config.hpp"
#include "scenesim/demand.hpp"
#include "scenesim/net_builder.hpp"
#include "scenesim/overrides.hpp"
#include "scenesim/random.hpp"
#include "scenesim/scenario.hpp"

namespace scenesim {

struct AgentStep {
    double x = 0.0, y = 0.0, heading = 0.0, speed = 0.0;
    bool valid = false;
};

struct Rollout {
    Id scenario_id;
    uint64_t seed = 0;
    uint64_t demand_seed = 0;
    int horizon = 0;
    int history_length = 0;
    std::vector<Id> agent_ids;
    std::vector<std::vector<AgentStep>> steps;  // [agent][step]

    int agent_index(const Id& id) const {
        for (size_t i = 0; i < agent_ids.size(); ++i)
            if (agent_ids[i] == id) return static_cast<int>(i);
        return -1;
    }
};

// Krauss safe-following speed: the speed at which the follower can always
// brake into the gap its leader leaves, assuming the leader brakes with the
// same deceleration after the reaction time tau.
inline double krauss_safe(double v_follower, double v_leader, double gap, double decel,
                          double tau) {
    const double denom = std::max(1e-3, (v_follower + v_leader) / (2.0 * std::max(0.1, decel)) + tau);
    return std::max(0.0, v_leader + (gap - v_leader * tau) / denom);
}

inline double desired_speed(const BehaviorParams& p, double speed_limit) {
    return std::max(0.0, p.speed_factor * speed_limit);
}

namespace engine_detail {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLaneCaptureLateral = 1.9;  // m, obstacle counts as in-lane below this
constexpr int kMovementRankStraight = 0;
constexpr int kMovementRankRight = 1;
constexpr int kMovementRankLeft = 2;
constexpr int kMovementRankUturn = 3;

inline int movement_rank(Movement m) {
    switch (m) {
        case Movement::straight: return kMovementRankStraight;
        case Movement::right: return kMovementRankRight;
        case Movement::left: return kMovementRankLeft;
        case Movement::uturn: return kMovementRankUturn;
    }
    return kMovementRankStraight;
}

struct SimAgent {
    const AgentSpec* spec = nullptr;
    const AgentTrack* track = nullptr;
    bool active = false;  // controlled (engine or override) after history
    bool exited = false;

    Point2 position;
    double heading = 0.0;
    double speed = 0.0;
    bool record_valid = false;

    bool on_network = false;
    bool on_connection = false;
    int edge_idx = -1;
    int lane_idx = -1;
    int conn_idx = -1;
    double offset = 0.0;
    double lat_dev = 0.0;
    int route_pos = 0;
    int next_conn_override = -1;

    int stopped_steps = 0;
    double startup_remaining = -1.0;
    bool stop_satisfied = false;
    int arrival_step = -1;

    OverrideClass cls = OverrideClass::normal;
    BallisticState ballistic;
    bool ballistic_frozen = false;

    // replay bookkeeping
    Point2 replay_vel;
    int last_replay_step = -1;

    Rng rng{0};
};

struct PathElem {
    bool is_conn = false;
    int edge_idx = -1, lane_idx = -1, conn_idx = -1;
    const Polyline* shape = nullptr;
    double len = 0.0;
    double start_s = 0.0;
    double speed_limit = 13.4;
};

struct Proposal {
    Point2 position;
    double heading = 0.0;
    double speed = 0.0;
    bool record_valid = false;
    bool exited = false;
    bool on_connection = false;
    int edge_idx = -1, lane_idx = -1, conn_idx = -1;
    double offset = 0.0;
    double lat_dev = 0.0;
    int route_pos = 0;
    int next_conn_override = -1;
    bool stop_satisfied = false;
    int arrival_step = -1;
    double startup_remaining = -1.0;
    OverrideClass cls = OverrideClass::normal;
    bool ballistic_frozen = false;
    Point2 replay_vel;
    int last_replay_step = -1;
};

}  // namespace engine_detail

class SimWorld {
  public:
    SimWorld(const Scenario& sc, const Network& net, const Demand& demand, const Config& config,
             uint64_t rollout_seed, uint64_t demand_seed)
        : sc_(sc), net_(net), demand_(demand), config_(config), seed_(rollout_seed),
          demand_seed_(demand_seed), bounds_(scenario_bounds(sc)) {
        build_conflict_table();
        init_agents();
    }

    Rollout run(int horizon) {
        Rollout out;
        out.scenario_id = sc_.id;
        out.seed = seed_;
        out.demand_seed = demand_seed_;
        out.horizon = horizon;
        out.history_length = sc_.history_length;
        for (const auto& a : agents_) out.agent_ids.push_back(a.spec ? a.spec->track_id : a.track->id);
        out.steps.assign(agents_.size(), std::vector<AgentStep>(static_cast<size_t>(horizon)));

        for (int step = 0; step < horizon; ++step) {
            if (step < sc_.history_length)
                replay_history_step(step);
            else
                simulate_step(step);
            for (size_t i = 0; i < agents_.size(); ++i) {
                auto& row = out.steps[i][static_cast<size_t>(step)];
                row.x = agents_[i].position.x;
                row.y = agents_[i].position.y;
                row.heading = agents_[i].heading;
                row.speed = agents_[i].speed;
                row.valid = agents_[i].record_valid;
            }
            if (step == sc_.history_length - 1) init_simulation_state();
        }
        return out;
    }

  private:
    using SimAgent = engine_detail::SimAgent;
    using PathElem = engine_detail::PathElem;
    using Proposal = engine_detail::Proposal;

    const Scenario& sc_;
    const Network& net_;
    const Demand& demand_;
    const Config& config_;
    uint64_t seed_;
    uint64_t demand_seed_;
    ScenarioBounds bounds_;
    std::vector<SimAgent> agents_;
    std::vector<std::vector<int>> conflicts_;  // per connection: crossing connections

    void build_conflict_table() {
        const size_t n = net_.connections.size();
        conflicts_.assign(n, {});
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j) {
                const auto& a = net_.connections[i];
                const auto& b = net_.connections[j];
                if (a.from_edge == b.from_edge) continue;
                if (polylines_cross(a.shape, b.shape)) {
                    conflicts_[i].push_back(static_cast<int>(j));
                    conflicts_[j].push_back(static_cast<int>(i));
                }
            }
    }

    void init_agents() {
        // rollout rows cover every track; only demand agents are controlled
        std::vector<const AgentTrack*> tracks;
        for (const auto& t : sc_.tracks) tracks.push_back(&t);
        std::sort(tracks.begin(), tracks.end(),
                  [](const AgentTrack* a, const AgentTrack* b) { return a->id < b->id; });
        for (const AgentTrack* t : tracks) {
            SimAgent a;
            a.track = t;
            a.spec = demand_.find(t->id);
            a.rng = Rng(derive_seed(seed_, "agent:" + t->id));
            agents_.push_back(std::move(a));
        }
    }

    void replay_history_step(int step) {
        for (auto& a : agents_) {
            const TrackState* s = a.track->state_at(step);
            if (s && s->valid) {
                a.position = s->position;
                a.heading = s->heading;
                a.speed = s->speed();
                a.record_valid = true;
            } else {
                a.record_valid = false;
                a.speed = 0.0;
            }
        }
    }

    void init_simulation_state() {
        for (auto& a : agents_) {
            if (!a.spec) continue;  // not controlled past history
            a.active = true;
            a.cls = a.spec->override_class;
            a.position = a.spec->placement.position;
            a.heading = a.spec->placement.heading;
            a.speed = a.spec->initial_speed;
            a.record_valid = true;
            if (a.spec->replay) {
                const TrackState* last = a.track->last_valid_before(1 << 30);
                a.last_replay_step = last ? last->time_index : sc_.history_length - 1;
                a.replay_vel = last ? Point2{last->vx, last->vy} : Point2{0.0, 0.0};
                continue;
            }
            a.on_network = a.spec->placement.on_network && a.cls == OverrideClass::normal;
            if (a.on_network) {
                a.edge_idx = a.spec->placement.edge_index;
                a.lane_idx = a.spec->placement.lane_index;
                a.offset = a.spec->placement.offset;
                a.lat_dev = a.spec->placement.lateral;
            }
            if (a.cls == OverrideClass::red_signal_hold) {
                // stays network-placed so the release can hand over to the engine
                a.on_network = true;
                a.edge_idx = a.spec->placement.edge_index;
                a.lane_idx = a.spec->placement.lane_index;
                a.offset = a.spec->placement.offset;
                a.lat_dev = a.spec->placement.lateral;
            }
            if (a.cls == OverrideClass::offnet_ballistic)
                a.ballistic = ballistic_from_history(*a.track, sc_.history_length - 1,
                                                     config_.engine.dt);
            if (a.speed < config_.engine.stop_speed) a.stopped_steps = 1;
        }
    }

    // ---- helpers over network geometry ----

    const Polyline& lane_shape(int edge, int lane) const {
        return net_.edges[edge].lanes[lane].shape;
    }

    int route_connection_index(const SimAgent& a, int route_pos) const {
        if (!a.spec || !a.spec->route) return -1;
        if (route_pos == a.route_pos && a.next_conn_override >= 0 && !a.on_connection)
            return a.next_conn_override;
        const auto& seq = a.spec->route->connection_sequence;
        if (route_pos < 0 || route_pos >= static_cast<int>(seq.size())) return -1;
        return net_.connection_index(seq[route_pos]);
    }

    int next_connection_of(const SimAgent& a) const {
        if (a.on_connection) return a.conn_idx;
        return route_connection_index(a, a.route_pos);
    }

    std::vector<PathElem> build_path(const SimAgent& a, double lookahead) const {
        std::vector<PathElem> path;
        double s = 0.0;
        int edge = a.edge_idx, lane = a.lane_idx, rp = a.route_pos;
        bool on_conn = a.on_connection;
        int conn = a.conn_idx;
        for (int k = 0; k < 8 && s < a.offset + lookahead; ++k) {
            PathElem e;
            e.start_s = s;
            if (on_conn) {
                const Connection& c = net_.connections[conn];
                e.is_conn = true;
                e.conn_idx = conn;
                e.shape = &c.shape;
                e.speed_limit = c.speed_limit;
                e.len = c.length();
                path.push_back(e);
                s += e.len;
                const int te = net_.edge_index(c.to_edge);
                if (te < 0) break;
                edge = te;
                lane = c.to_lane_index;
                ++rp;
                on_conn = false;
            } else {
                if (edge < 0 || lane < 0) break;
                const NetLane& nl = net_.edges[edge].lanes[lane];
                e.edge_idx = edge;
                e.lane_idx = lane;
                e.shape = &nl.shape;
                e.speed_limit = nl.speed_limit;
                e.len = nl.length();
                path.push_back(e);
                s += e.len;
                const int ci = route_connection_index(a, rp);
                if (ci < 0) break;
                conn = ci;
                on_conn = true;
            }
        }
        return path;
    }

    struct PathHit {
        double s = 0.0;
        double lateral = 0.0;
        double tangent_heading = 0.0;
    };

    std::optional<PathHit> project_on_path(const std::vector<PathElem>& path,
                                           const Point2& p) const {
        std::optional<PathHit> best;
        for (const auto& e : path) {
            if (e.shape->size() < 2) continue;
            const Projection proj = project_to_polyline(*e.shape, p);
            if (!best || proj.lateral < best->lateral) {
                PathHit hit;
                hit.s = e.start_s + proj.s;
                hit.lateral = proj.lateral;
                hit.tangent_heading = point_at_arclength(*e.shape, proj.s).heading;
                best = hit;
            }
        }
        return best;
    }

    // ---- per-step simulation ----

    void simulate_step(int step) {
        std::vector<Proposal> proposals(agents_.size());
        for (size_t i = 0; i < agents_.size(); ++i) proposals[i] = snapshot_proposal(agents_[i]);
        for (size_t i = 0; i < agents_.size(); ++i) {
            SimAgent& a = agents_[i];
            if (!a.active) {
                proposals[i].record_valid = false;
                continue;
            }
            if (a.spec && a.spec->replay) {
                propose_replay(a, step, proposals[i]);
                continue;
            }
            refresh_override(a, step, proposals[i]);
            switch (proposals[i].cls) {
                case OverrideClass::parked_hold:
                case OverrideClass::offnet_hold:
                case OverrideClass::red_signal_hold:
                    proposals[i].speed = 0.0;
                    proposals[i].record_valid = true;
                    break;
                case OverrideClass::offnet_ballistic:
                    propose_ballistic(a, proposals[i]);
                    break;
                case OverrideClass::normal:
                    if (a.exited) {
                        proposals[i].record_valid = false;
                    } else if (a.on_network) {
                        propose_engine(a, static_cast<int>(i), step, proposals[i]);
                    } else {
                        // off-network but classified normal: keep last pose
                        proposals[i].speed = 0.0;
                        proposals[i].record_valid = true;
                    }
                    break;
            }
        }
        for (size_t i = 0; i < agents_.size(); ++i) commit(agents_[i], proposals[i]);
    }

    Proposal snapshot_proposal(const SimAgent& a) const {
        Proposal p;
        p.position = a.position;
        p.heading = a.heading;
        p.speed = a.speed;
        p.record_valid = a.record_valid;
        p.exited = a.exited;
        p.on_connection = a.on_connection;
        p.edge_idx = a.edge_idx;
        p.lane_idx = a.lane_idx;
        p.conn_idx = a.conn_idx;
        p.offset = a.offset;
        p.lat_dev = a.lat_dev;
        p.route_pos = a.route_pos;
        p.next_conn_override = a.next_conn_override;
        p.stop_satisfied = a.stop_satisfied;
        p.arrival_step = a.arrival_step;
        p.startup_remaining = a.startup_remaining;
        p.cls = a.cls;
        p.ballistic_frozen = a.ballistic_frozen;
        p.replay_vel = a.replay_vel;
        p.last_replay_step = a.last_replay_step;
        return p;
    }

    void commit(SimAgent& a, const Proposal& p) {
        a.position = p.position;
        a.heading = p.heading;
        a.speed = p.speed;
        a.record_valid = p.record_valid;
        a.exited = p.exited;
        a.on_connection = p.on_connection;
        a.edge_idx = p.edge_idx;
        a.lane_idx = p.lane_idx;
        a.conn_idx = p.conn_idx;
        a.offset = p.offset;
        a.lat_dev = p.lat_dev;
        a.route_pos = p.route_pos;
        a.next_conn_override = p.next_conn_override;
        a.stop_satisfied = p.stop_satisfied;
        a.arrival_step = p.arrival_step;
        a.startup_remaining = p.startup_remaining;
        a.cls = p.cls;
        a.ballistic_frozen = p.ballistic_frozen;
        a.replay_vel = p.replay_vel;
        a.last_replay_step = p.last_replay_step;
        if (a.speed < config_.engine.stop_speed)
            ++a.stopped_steps;
        else
            a.stopped_steps = 0;
    }

    void propose_replay(const SimAgent& a, int step, Proposal& p) {
        const TrackState* s = a.track->state_at(step);
        if (s && s->valid) {
            p.position = s->position;
            p.heading = s->heading;
            p.speed = s->speed();
            p.record_valid = true;
            p.replay_vel = {s->vx, s->vy};
            p.last_replay_step = step;
            return;
        }
        if (s && !s->valid) {
            p.record_valid = false;
            return;
        }
        // past the recorded data: hold course at the last recorded velocity
        if (p.ballistic_frozen || !bounds_.contains(a.position)) {
            p.ballistic_frozen = true;
            p.speed = 0.0;
            p.record_valid = true;
            return;
        }
        p.position = a.position + p.replay_vel * config_.engine.dt;
        p.speed = std::hypot(p.replay_vel.x, p.replay_vel.y);
        p.record_valid = true;
    }

    void propose_ballistic(const SimAgent& a, Proposal& p) {
        p.record_valid = true;
        if (a.ballistic_frozen) {
            p.speed = 0.0;
            return;
        }
        const double dt = config_.engine.dt;
        p.heading = wrap_angle(a.heading + a.ballistic.yaw_rate * dt);
        p.position = a.position + Point2{std::cos(p.heading), std::sin(p.heading)} *
                                      (a.ballistic.speed * dt);
        p.speed = a.ballistic.speed;
        if (!bounds_.contains(p.position)) p.ballistic_frozen = true;
    }

    // red holds watch the live signal and hand control back on green
    void refresh_override(const SimAgent& a, int step, Proposal& p) {
        if (a.cls != OverrideClass::red_signal_hold) return;
        bool any_red = false;
        for (const auto& c : net_.connections) {
            if (!c.has_signal) continue;
            if (a.spec->placement.edge_id != c.from_edge ||
                a.spec->placement.lane_index != c.from_lane_index)
                continue;
            const SignalProgram* prog = net_.program_for(c.via_node);
            if (prog && prog->state_at(step, c.id) == SignalState::red) any_red = true;
        }
        if (!any_red) p.cls = OverrideClass::normal;
    }

    struct LeaderInfo {
        bool found = false;
        double gap_net = 0.0;  // bumper to bumper
        double speed_along = 0.0;
    };

    LeaderInfo find_leader(const SimAgent& a, int self_idx, const std::vector<PathElem>& path) const {
        LeaderInfo best;
        double best_rel = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < agents_.size(); ++j) {
            if (static_cast<int>(j) == self_idx) continue;
            const SimAgent& b = agents_[j];
            if (!b.active || b.exited || !b.record_valid) continue;
            const auto hit = project_on_path(path, b.position);
            if (!hit || hit->lateral > engine_detail::kLaneCaptureLateral) continue;
            const double rel = hit->s - a.offset;
            if (rel <= 0.01 || rel >= best_rel) continue;
            best_rel = rel;
            best.found = true;
            const double blen = b.spec ? b.spec->length : 4.5;
            best.gap_net = rel - 0.5 * (a.spec->length + blen);
            best.speed_along =
                b.speed * std::max(0.0, std::cos(wrap_angle(b.heading - hit->tangent_heading)));
        }
        return best;
    }

    // yields true when the agent must wait at the stop line of `conn_idx`
    bool must_yield_right_of_way(const SimAgent& a, int self_idx, int conn_idx, int step) const {
        const Connection& mine = net_.connections[conn_idx];
        const int my_priority = [&] {
            const int ei = net_.edge_index(mine.from_edge);
            return ei >= 0 ? net_.edges[ei].priority : 1;
        }();
        const int my_rank = engine_detail::movement_rank(mine.movement);
        const double my_heading = [&] {
            return heading_of(mine.shape[0], mine.shape[1]);
        }();
        const double required_gap =
            config_.engine.minor_time_gap * (0.5 + a.spec->params.jm_sigma_minor);
        (void)step;

        for (size_t j = 0; j < agents_.size(); ++j) {
            if (static_cast<int>(j) == self_idx) continue;
            const SimAgent& b = agents_[j];
            if (!b.active || b.exited || !b.record_valid || !b.spec || b.spec->replay) continue;
            if (b.cls != OverrideClass::normal) continue;
            const int b_conn = next_connection_of(b);
            if (b_conn < 0) continue;
            const bool conflicting =
                std::find(conflicts_[conn_idx].begin(), conflicts_[conn_idx].end(), b_conn) !=
                conflicts_[conn_idx].end();
            if (!conflicting) continue;
            if (b.on_connection) return true;  // committed traffic always has the road

            // approaching rival
            if (b.edge_idx < 0 || b.lane_idx < 0) continue;
            const double b_remaining = net_.edges[b.edge_idx].lanes[b.lane_idx].length() - b.offset;
            if (b_remaining > 30.0) continue;
            const Connection& theirs = net_.connections[b_conn];
            const int their_priority = [&] {
                const int ei = net_.edge_index(theirs.from_edge);
                return ei >= 0 ? net_.edges[ei].priority : 1;
            }();
            const int their_rank = engine_detail::movement_rank(theirs.movement);
            bool i_am_minor;
            if (my_priority != their_priority) {
                i_am_minor = my_priority < their_priority;
            } else if (my_rank != their_rank) {
                i_am_minor = my_rank > their_rank;
            } else {
                const double their_heading = heading_of(theirs.shape[0], theirs.shape[1]);
                const double rel = wrap_angle(their_heading - my_heading);
                if (rel > engine_detail::kPi / 4.0 && rel < 3.0 * engine_detail::kPi / 4.0) {
                    i_am_minor = true;  // rival comes from the right
                } else if (rel < -engine_detail::kPi / 4.0 && rel > -3.0 * engine_detail::kPi / 4.0) {
                    i_am_minor = false;
                } else {
                    i_am_minor = a.spec->track_id > b.spec->track_id;
                }
            }
            if (!i_am_minor) continue;
            const double eta = b_remaining / std::max(b.speed, 0.5);
            if (b.speed >= config_.engine.stop_speed && eta < required_gap) return true;
        }
        return false;
    }

    bool stop_sign_clear(const SimAgent& a, int self_idx, int conn_idx) const {
        for (size_t j = 0; j < agents_.size(); ++j) {
            if (static_cast<int>(j) == self_idx) continue;
            const SimAgent& b = agents_[j];
            if (!b.active || b.exited || !b.record_valid || !b.spec || b.spec->replay) continue;
            if (b.cls != OverrideClass::normal) continue;
            const int b_conn = next_connection_of(b);
            if (b_conn < 0) continue;
            const bool conflicting =
                std::find(conflicts_[conn_idx].begin(), conflicts_[conn_idx].end(), b_conn) !=
                conflicts_[conn_idx].end();
            if (!conflicting) continue;
            if (b.on_connection) return false;
            if (b.edge_idx < 0 || b.lane_idx < 0) continue;
            const double b_remaining = net_.edges[b.edge_idx].lanes[b.lane_idx].length() - b.offset;
            if (b_remaining > config_.demand.d_intersection * 4.0) continue;
            if (b.speed >= config_.engine.stop_speed) return false;  // rolling rival
            // both waiting: earlier arrival goes first
            if (b.stop_satisfied) {
                if (b.arrival_step >= 0 &&
                    (a.arrival_step < 0 || b.arrival_step < a.arrival_step ||
                     (b.arrival_step == a.arrival_step && b.spec->track_id < a.spec->track_id)))
                    return false;
            }
        }
        return true;
    }

    void propose_engine(SimAgent& a, int self_idx, int step, Proposal& p) {
        const EngineConfig& ecfg = config_.engine;
        const double dt = ecfg.dt;
        const BehaviorParams& prm = a.spec->params;

        const double lookahead = std::max(60.0, a.speed * 10.0);
        const auto path = build_path(a, lookahead);
        if (path.empty()) {
            p.exited = true;
            p.record_valid = false;
            return;
        }
        const double limit = path.front().speed_limit;
        const double v_des = desired_speed(prm, limit);
        double v_cand = std::min(a.speed + prm.accel * dt, std::max(v_des, a.speed - prm.decel * dt));

        // car following against the nearest obstacle along the path
        const auto leader = find_leader(a, self_idx, path);
        if (leader.found) {
            const double eff = std::max(0.0, leader.gap_net - prm.min_gap);
            v_cand = std::min(v_cand, krauss_safe(a.speed, leader.speed_along, eff, prm.decel, prm.tau));
            v_cand = std::min(v_cand, std::max(0.0, leader.speed_along +
                                                        (leader.gap_net - ecfg.overlap_margin) / dt));
        }

        // first junction ahead
        if (!a.on_connection) {
            int conn_idx = -1;
            double d_line = 0.0;
            for (const auto& e : path) {
                if (e.is_conn) {
                    conn_idx = e.conn_idx;
                    d_line = e.start_s - a.offset;
                    break;
                }
            }
            if (conn_idx >= 0 && d_line > 0.0) {
                const Connection& c = net_.connections[conn_idx];
                const SignalProgram* prog = net_.program_for(c.via_node);
                bool hold_at_line = false;
                bool signal_hold = false;
                bool stop_protocol = false;

                if (prog) {
                    const SignalState st = prog->state_at(step, c.id);
                    if (st == SignalState::red || st == SignalState::yellow) {
                        const bool right_on_red =
                            st == SignalState::red && c.movement == Movement::right &&
                            c.from_lane_index == 0;
                        if (right_on_red) {
                            stop_protocol = true;
                        } else {
                            hold_at_line = true;
                            signal_hold = true;
                        }
                    }
                }
                if (!hold_at_line && c.stop_controlled) stop_protocol = true;
                if (!hold_at_line && !stop_protocol && !prog) {
                    if (must_yield_right_of_way(a, self_idx, conn_idx, step)) hold_at_line = true;
                }

                if (stop_protocol) {
                    if (!a.stop_satisfied) {
                        hold_at_line = true;
                        if (a.stopped_steps >= 1 &&
                            d_line < prm.jm_stop_line_gap + 2.0) {
                            p.stop_satisfied = true;
                            if (p.arrival_step < 0) p.arrival_step = step;
                            hold_at_line = true;  // proceed from the next step on
                        }
                    } else if (!stop_sign_clear(a, self_idx, conn_idx)) {
                        hold_at_line = true;
                    }
                }
                // long waits on non-signal holds eventually creep through
                if (hold_at_line && !signal_hold && a.stopped_steps > 300 && a.stop_satisfied)
                    hold_at_line = false;
                if (hold_at_line && !signal_hold && !stop_protocol && a.stopped_steps > 300)
                    hold_at_line = false;
                if (hold_at_line) {
                    // full-braking envelope: unlike the following-model bound it
                    // reaches zero in finite time, so the stop is crisp
                    const double stop_gap = std::max(0.0, d_line - prm.jm_stop_line_gap);
                    v_cand = std::min(v_cand, std::sqrt(2.0 * prm.decel * stop_gap));
                    v_cand = std::min(v_cand, std::max(0.0, (d_line - 0.05) / dt));
                }
            }
            maybe_change_lane(a, self_idx, p);
        }

        // startup delay after a full stop; the clock runs while departure is possible
        if (a.speed < ecfg.stop_speed && a.stopped_steps >= 1) {
            if (v_cand >= ecfg.stop_speed) {
                if (a.startup_remaining < 0.0) p.startup_remaining = prm.startup_delay;
                else p.startup_remaining = a.startup_remaining;
                p.startup_remaining -= dt;
                if (p.startup_remaining > 0.0)
                    v_cand = 0.0;
                else
                    p.startup_remaining = -1.0;
            }
        } else {
            p.startup_remaining = -1.0;
        }

        // dawdle
        const double u = a.rng.uniform();
        double v_next = std::max(0.0, v_cand - prm.sigma * prm.accel * dt * u);
        if (leader.found)
            v_next = std::min(v_next, std::max(0.0, leader.speed_along +
                                                        (leader.gap_net - ecfg.overlap_margin) / dt));

        advance_geometry(a, p, v_next);
    }

    // Switches the lane reference when the route needs a different from-lane
    // and the neighboring lane has room. World position is unchanged; the
    // lateral deviation then decays over the following steps.
    void maybe_change_lane(const SimAgent& a, int self_idx, Proposal& p) const {
        if (a.on_connection || std::abs(a.lat_dev) > 0.5) return;
        const int ci = route_connection_index(a, a.route_pos);
        if (ci < 0) return;
        const Connection& c = net_.connections[ci];
        if (c.from_lane_index == a.lane_idx) return;
        const int dir = c.from_lane_index > a.lane_idx ? 1 : -1;
        const int target = a.lane_idx + dir;
        if (target < 0 || target >= static_cast<int>(net_.edges[a.edge_idx].lanes.size())) return;

        const Polyline& tshape = lane_shape(a.edge_idx, target);
        const Projection my_proj = project_to_polyline(tshape, a.position);
        const BehaviorParams& prm = a.spec->params;
        for (size_t j = 0; j < agents_.size(); ++j) {
            if (static_cast<int>(j) == self_idx) continue;
            const SimAgent& b = agents_[j];
            if (!b.active || b.exited || !b.record_valid) continue;
            const Projection bp = project_to_polyline(tshape, b.position);
            if (bp.lateral > engine_detail::kLaneCaptureLateral) continue;
            const double blen = b.spec ? b.spec->length : 4.5;
            const double rel = bp.s - my_proj.s;
            const double net_gap = std::abs(rel) - 0.5 * (a.spec->length + blen);
            if (net_gap < prm.min_gap_lat) return;  // side by side
            if (rel > 0.0 && net_gap < prm.min_gap + a.speed * prm.tau) return;
            if (rel < 0.0 && net_gap < prm.min_gap + b.speed * prm.tau) return;
        }
        p.lane_idx = target;
        p.offset = my_proj.s;
        p.lat_dev = my_proj.signed_lateral;
    }

    void advance_geometry(const SimAgent& a, Proposal& p, double v_next) {
        const EngineConfig& ecfg = config_.engine;
        const double dt = ecfg.dt;
        const double budget = v_next * dt;

        double lat_mag = std::min({std::abs(p.lat_dev), ecfg.lateral_speed * dt, 0.8 * budget});
        double long_budget = std::sqrt(std::max(0.0, budget * budget - lat_mag * lat_mag));

        const Point2 old_pos = a.position;
        for (int iter = 0; iter < 4; ++iter) {
            double offset = p.offset + long_budget;
            bool on_conn = p.on_connection;
            int edge = p.edge_idx, lane = p.lane_idx, conn = p.conn_idx, rp = p.route_pos;
            bool exited = false;
            bool stop_reset = false;
            int conn_override = p.next_conn_override;
            for (int guard = 0; guard < 8; ++guard) {
                const double len = on_conn ? net_.connections[conn].length()
                                           : net_.edges[edge].lanes[lane].length();
                if (offset <= len) break;
                if (on_conn) {
                    const Connection& c = net_.connections[conn];
                    const int te = net_.edge_index(c.to_edge);
                    if (te < 0) {
                        offset = len;
                        exited = true;
                        break;
                    }
                    offset -= len;
                    edge = te;
                    lane = c.to_lane_index;
                    ++rp;
                    on_conn = false;
                } else {
                    int ci = conn_override >= 0 && rp == p.route_pos ? conn_override
                                                                     : route_connection_index(a, rp);
                    if (ci < 0) {
                        offset = len;
                        exited = true;
                        break;
                    }
                    // wrong lane at the junction: take a same-lane movement to the
                    // same target edge if one exists, otherwise cut across
                    const Connection& planned = net_.connections[ci];
                    if (planned.from_lane_index != lane) {
                        int fallback = -1;
                        for (size_t k = 0; k < net_.connections.size(); ++k) {
                            const Connection& alt = net_.connections[k];
                            if (alt.from_edge == planned.from_edge &&
                                alt.from_lane_index == lane && alt.to_edge == planned.to_edge) {
                                fallback = static_cast<int>(k);
                                break;
                            }
                        }
                        if (fallback >= 0) ci = fallback;
                    }
                    offset -= len;
                    conn = ci;
                    on_conn = true;
                    stop_reset = true;
                    conn_override = -1;
                }
            }
            const Polyline& shape = on_conn ? net_.connections[conn].shape
                                            : net_.edges[edge].lanes[lane].shape;
            const double len = on_conn ? net_.connections[conn].length()
                                       : net_.edges[edge].lanes[lane].length();
            const PoseOnLine pose = point_at_arclength(shape, std::clamp(offset, 0.0, len));
            const double new_lat = p.lat_dev - lat_mag * (p.lat_dev > 0 ? 1.0 : -1.0);
            const Point2 world =
                pose.point +
                left_normal({std::cos(pose.heading), std::sin(pose.heading)}) * new_lat;
            const double disp = distance(world, old_pos);
            if (disp <= budget + 1e-9 || disp < 1e-12 || iter == 3) {
                p.position = world;
                p.offset = std::clamp(offset, 0.0, len);
                p.on_connection = on_conn;
                p.edge_idx = on_conn ? -1 : edge;
                p.lane_idx = on_conn ? -1 : lane;
                p.conn_idx = on_conn ? conn : -1;
                p.route_pos = rp;
                p.lat_dev = new_lat;
                p.exited = exited;
                p.next_conn_override = conn_override;
                if (stop_reset) {
                    p.stop_satisfied = false;
                    p.arrival_step = -1;
                }
                if (disp > 1e-6)
                    p.heading = heading_of(old_pos, world);
                p.speed = v_next;
                p.record_valid = true;
                if (exited) {
                    // route exhausted: the vehicle arrives and leaves the scene
                    p.speed = 0.0;
                    p.record_valid = false;
                }
                return;
            }
            const double scale = budget / disp;
            long_budget *= scale;
            lat_mag *= scale;
        }
    }
};

// Runs n_rollouts independent stochastic rollouts; rollout k uses seed
// base_seed + k.
inline std::vector<Rollout> run_rollouts(const Scenario& sc, const Network& net,
                                         const Demand& demand, uint64_t base_seed,
                                         uint64_t demand_seed, int horizon, int n_rollouts,
                                         const Config& config = {}) {
    std::vector<Rollout> out;
    out.reserve(static_cast<size_t>(n_rollouts));
    for (int k = 0; k < n_rollouts; ++k) {
        SimWorld world(sc, net, demand, config, base_seed + static_cast<uint64_t>(k), demand_seed);
        out.push_back(world.run(horizon));
    }
    return out;
}

inline Rollout run_single_rollout(const Scenario& sc, const Network& net, const Demand& demand,
                                  uint64_t seed, uint64_t demand_seed, int horizon,
                                  const Config& config = {}) {
    SimWorld world(sc, net, demand, config, seed, demand_seed);
    return world.run(horizon);
}

}  // namespace scenesim
