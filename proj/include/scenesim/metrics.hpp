#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenesim/config.hpp"
#include "scenesim/demand.hpp"
#include "scenesim/engine.hpp"
#include "scenesim/geometry.hpp"
#include "scenesim/scenario.hpp"

namespace scenesim {

struct HistogramSpec {
    double lo = 0.0, hi = 1.0;
    int bins = 10;
};

// clamps the sample into range and returns its bin
inline int histogram_bin(double x, const HistogramSpec& spec) {
    const double w = (spec.hi - spec.lo) / spec.bins;
    const int b = static_cast<int>(std::floor((x - spec.lo) / w));
    return std::clamp(b, 0, spec.bins - 1);
}

inline std::vector<double> histogram_probs(const std::vector<double>& samples,
                                           const HistogramSpec& spec, double floor_prob) {
    std::vector<double> p(static_cast<size_t>(spec.bins), 0.0);
    if (samples.empty()) return p;
    for (double x : samples) p[static_cast<size_t>(histogram_bin(x, spec))] += 1.0;
    double total = 0.0;
    for (double& v : p) {
        v = std::max(v / static_cast<double>(samples.size()), floor_prob);
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

// exp(-KL(gt || sim)); 1.0 for identical distributions, decays toward 0
inline double histogram_score(const std::vector<double>& gt_samples,
                              const std::vector<double>& sim_samples, const HistogramSpec& spec,
                              double floor_prob) {
    const auto p = histogram_probs(gt_samples, spec, floor_prob);
    const auto q = histogram_probs(sim_samples, spec, floor_prob);
    double kl = 0.0;
    for (size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
    return std::exp(-std::max(0.0, kl));
}

struct ComponentScore {
    std::string name;
    std::string group;
    double score = 0.0;
    bool present = false;
    size_t gt_samples = 0;
    size_t sim_samples = 0;
};

struct MetricsReport {
    Id scenario_id;
    int n_rollouts = 0;
    int horizon = 0;
    int history_length = 0;
    double meta = 0.0;
    double kinematic = 0.0;
    double interactive = 0.0;
    double map_score = 0.0;
    std::vector<ComponentScore> components;
    double min_ade = std::numeric_limits<double>::quiet_NaN();
    double collision_rate = 0.0;
    double offroad_rate = 0.0;
    int collision_denominator = 0;
    int offroad_denominator = 0;
    WarningList warnings;

    const ComponentScore* component(const std::string& name) const {
        for (const auto& c : components)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace metrics_detail {

struct FrameAgent {
    Point2 pos;
    double heading = 0.0;
    double speed = 0.0;
    bool valid = false;
    double length = 4.5, width = 2.0;
    ObjectType type = ObjectType::vehicle;
};

// [agent][step] over the evaluation window
struct TrajectorySet {
    std::vector<Id> ids;
    std::vector<std::vector<FrameAgent>> agents;
    int t0 = 0;

    size_t n_agents() const { return ids.size(); }
    size_t n_steps() const { return agents.empty() ? 0 : agents[0].size(); }
};

inline void track_dims(const AgentTrack& t, double& len, double& wid) {
    len = 4.5;
    wid = 2.0;
    for (auto it = t.states.rbegin(); it != t.states.rend(); ++it)
        if (it->valid) {
            len = it->length;
            wid = it->width;
            return;
        }
}

inline TrajectorySet from_scenario(const Scenario& sc, int t0, int t1) {
    TrajectorySet out;
    out.t0 = t0;
    std::vector<const AgentTrack*> tracks;
    for (const auto& t : sc.tracks) tracks.push_back(&t);
    std::sort(tracks.begin(), tracks.end(),
              [](const AgentTrack* a, const AgentTrack* b) { return a->id < b->id; });
    for (const AgentTrack* t : tracks) {
        out.ids.push_back(t->id);
        std::vector<FrameAgent> row(static_cast<size_t>(t1 - t0));
        double len, wid;
        track_dims(*t, len, wid);
        for (int step = t0; step < t1; ++step) {
            FrameAgent& f = row[static_cast<size_t>(step - t0)];
            f.type = t->object_type;
            f.length = len;
            f.width = wid;
            const TrackState* s = t->state_at(step);
            if (s && s->valid) {
                f.pos = s->position;
                f.heading = s->heading;
                f.speed = s->speed();
                f.valid = true;
                f.length = s->length;
                f.width = s->width;
            }
        }
        out.agents.push_back(std::move(row));
    }
    return out;
}

inline TrajectorySet from_rollout(const Scenario& sc, const Rollout& r, int t0, int t1) {
    TrajectorySet out;
    out.t0 = t0;
    out.ids = r.agent_ids;
    for (size_t i = 0; i < r.agent_ids.size(); ++i) {
        std::vector<FrameAgent> row(static_cast<size_t>(t1 - t0));
        const AgentTrack* track = sc.track(r.agent_ids[i]);
        double len = 4.5, wid = 2.0;
        ObjectType type = ObjectType::vehicle;
        if (track) {
            track_dims(*track, len, wid);
            type = track->object_type;
        }
        for (int step = t0; step < t1 && step < static_cast<int>(r.steps[i].size()); ++step) {
            const AgentStep& s = r.steps[i][static_cast<size_t>(step)];
            FrameAgent& f = row[static_cast<size_t>(step - t0)];
            f.pos = {s.x, s.y};
            f.heading = s.heading;
            f.speed = s.speed;
            f.valid = s.valid;
            f.length = len;
            f.width = wid;
            f.type = type;
        }
        out.agents.push_back(std::move(row));
    }
    return out;
}

// pedestrians occupy a fixed 1 m square footprint
inline OrientedBox agent_box(const FrameAgent& f) {
    OrientedBox b;
    b.center = f.pos;
    b.heading = f.heading;
    if (f.type == ObjectType::pedestrian) {
        b.length = 1.0;
        b.width = 1.0;
    } else {
        b.length = f.length;
        b.width = f.width;
    }
    return b;
}

struct KinematicSamples {
    std::vector<double> speed, accel, ang_speed, ang_accel;
};

// forward finite differences over maximal runs of >=3 consecutive valid steps
inline void kinematic_features(const std::vector<FrameAgent>& traj, double dt,
                               KinematicSamples& out) {
    const size_t n = traj.size();
    size_t i = 0;
    while (i < n) {
        if (!traj[i].valid) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < n && traj[j].valid) ++j;
        const size_t len = j - i;
        if (len >= 3) {
            std::vector<double> v(len - 1), w(len - 1);
            for (size_t k = i; k + 1 < j; ++k) {
                v[k - i] = distance(traj[k + 1].pos, traj[k].pos) / dt;
                w[k - i] = wrap_angle(traj[k + 1].heading - traj[k].heading) / dt;
            }
            for (double x : v) out.speed.push_back(x);
            for (double x : w) out.ang_speed.push_back(x);
            for (size_t k = 0; k + 1 < v.size(); ++k) {
                out.accel.push_back((v[k + 1] - v[k]) / dt);
                out.ang_accel.push_back((w[k + 1] - w[k]) / dt);
            }
        }
        i = j;
    }
}

struct InteractiveSamples {
    std::vector<double> dist_nearest, ttc;
    std::vector<char> collided;  // per agent, any step
};

inline void interactive_features(const TrajectorySet& ts, double ttc_max,
                                 InteractiveSamples& out) {
    const size_t na = ts.n_agents();
    const size_t nt = ts.n_steps();
    out.collided.assign(na, 0);
    for (size_t t = 0; t < nt; ++t) {
        for (size_t i = 0; i < na; ++i) {
            const FrameAgent& fi = ts.agents[i][t];
            if (!fi.valid) continue;
            const OrientedBox bi = agent_box(fi);
            double nearest = std::numeric_limits<double>::infinity();
            double best_ttc = std::numeric_limits<double>::infinity();
            const Point2 dir{std::cos(fi.heading), std::sin(fi.heading)};
            for (size_t j = 0; j < na; ++j) {
                if (j == i) continue;
                const FrameAgent& fj = ts.agents[j][t];
                if (!fj.valid) continue;
                const OrientedBox bj = agent_box(fj);
                const double d = box_distance(bi, bj);
                nearest = std::min(nearest, d);
                if (d <= 0.0 && boxes_overlap(bi, bj)) out.collided[i] = 1;
                // time to collision against an in-lane leader
                const Point2 rel = fj.pos - fi.pos;
                const double forward = dot(rel, dir);
                const double lateral = std::abs(cross(dir, rel));
                if (forward > 0.0 && lateral < 2.0 &&
                    std::abs(wrap_angle(fj.heading - fi.heading)) < engine_detail::kPi / 4.0) {
                    const double gap = forward - 0.5 * fi.length - 0.5 * fj.length;
                    const double closing = fi.speed - fj.speed * std::cos(wrap_angle(fj.heading - fi.heading));
                    if (closing > 1e-6) {
                        const double ttc = std::max(0.0, gap) / closing;
                        best_ttc = std::min(best_ttc, ttc);
                    }
                }
            }
            if (std::isfinite(nearest)) out.dist_nearest.push_back(std::min(nearest, 50.0));
            out.ttc.push_back(std::min(best_ttc, ttc_max));
        }
    }
}

}  // namespace metrics_detail

// Signed distance from a point to the nearest road boundary: positive on the
// drivable side (the side where the nearest lane center lies), negative beyond
// the boundary.
inline std::optional<double> signed_distance_to_road_edge(const Point2& p, const Scenario& sc) {
    if (sc.road_edges.empty()) return std::nullopt;
    double best = std::numeric_limits<double>::infinity();
    const RoadEdge* best_edge = nullptr;
    Projection best_proj;
    for (const auto& e : sc.road_edges) {
        if (e.polyline.size() < 2) continue;
        const Projection proj = project_to_polyline(e.polyline, p);
        if (proj.lateral < best) {
            best = proj.lateral;
            best_edge = &e;
            best_proj = proj;
        }
    }
    if (!best_edge) return std::nullopt;

    // find the closest lane-center point; it marks the drivable side
    double lane_best = std::numeric_limits<double>::infinity();
    Point2 lane_point;
    for (const auto& lc : sc.lane_centers) {
        if (lc.polyline.size() < 2) continue;
        const Projection proj = project_to_polyline(lc.polyline, p);
        if (proj.lateral < lane_best) {
            lane_best = proj.lateral;
            lane_point = proj.closest;
        }
    }
    if (!std::isfinite(lane_best)) return best;  // no lanes: report unsigned
    const double side_lane = project_to_polyline(best_edge->polyline, lane_point).signed_lateral;
    const double side_p = best_proj.signed_lateral;
    const bool drivable = side_lane == 0.0 || side_p == 0.0 || (side_p > 0) == (side_lane > 0);
    return drivable ? best : -best;
}

// Mean displacement between a rollout and the recorded tracks over the
// post-history window, minimized over rollouts.
inline double min_ade(const Scenario& sc, const std::vector<Rollout>& rollouts) {
    if (rollouts.empty()) return std::numeric_limits<double>::quiet_NaN();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : rollouts) {
        double sum = 0.0;
        size_t count = 0;
        for (size_t i = 0; i < r.agent_ids.size(); ++i) {
            const AgentTrack* t = sc.track(r.agent_ids[i]);
            if (!t) continue;
            for (size_t step = static_cast<size_t>(r.history_length); step < r.steps[i].size();
                 ++step) {
                const TrackState* s = t->state_at(static_cast<int>(step));
                if (!s || !s->valid || !r.steps[i][step].valid) continue;
                sum += distance({r.steps[i][step].x, r.steps[i][step].y}, s->position);
                ++count;
            }
        }
        if (count > 0) best = std::min(best, sum / static_cast<double>(count));
    }
    return std::isfinite(best) ? best : std::numeric_limits<double>::quiet_NaN();
}

struct LongHorizonRates {
    double collision_rate = 0.0;
    double offroad_rate = 0.0;
    int collision_denominator = 0;
    int offroad_denominator = 0;
};

// Per (agent, rollout) incident rates over driven vehicles. Held and replayed
// agents are not charged; ballistic off-network agents leave the road by
// construction and are excluded from the offroad denominator.
inline LongHorizonRates long_horizon_rates(const Scenario& sc, const Demand& demand,
                                           const std::vector<Rollout>& rollouts,
                                           const Config& config = {}) {
    using namespace metrics_detail;
    LongHorizonRates out;
    int collided_pairs = 0, offroad_pairs = 0;
    for (const auto& r : rollouts) {
        const TrajectorySet ts = from_rollout(sc, r, r.history_length, r.horizon);
        InteractiveSamples inter;
        interactive_features(ts, config.metrics.ttc_max, inter);
        for (size_t i = 0; i < ts.n_agents(); ++i) {
            const AgentSpec* spec = demand.find(ts.ids[i]);
            if (!spec || spec->replay) continue;
            const bool driven = spec->override_class == OverrideClass::normal ||
                                spec->override_class == OverrideClass::red_signal_hold;
            if (!driven) continue;
            ++out.collision_denominator;
            if (inter.collided[i]) ++collided_pairs;
            ++out.offroad_denominator;
            bool offroad = false;
            for (size_t t = 0; t < ts.n_steps() && !offroad; ++t) {
                const FrameAgent& f = ts.agents[i][t];
                if (!f.valid) continue;
                const auto sd = signed_distance_to_road_edge(f.pos, sc);
                if (sd && *sd < -config.metrics.offroad_margin) offroad = true;
            }
            if (offroad) ++offroad_pairs;
        }
    }
    if (out.collision_denominator > 0)
        out.collision_rate =
            static_cast<double>(collided_pairs) / static_cast<double>(out.collision_denominator);
    if (out.offroad_denominator > 0)
        out.offroad_rate =
            static_cast<double>(offroad_pairs) / static_cast<double>(out.offroad_denominator);
    return out;
}

inline MetricsReport compute_metrics(const Scenario& sc, const std::vector<Rollout>& rollouts,
                                     const Config& config = {}, const Demand* demand = nullptr) {
    using namespace metrics_detail;
    MetricsReport rep;
    rep.scenario_id = sc.id;
    rep.n_rollouts = static_cast<int>(rollouts.size());
    if (rollouts.empty()) {
        warn(rep.warnings, "metrics", "no rollouts supplied");
        return rep;
    }
    rep.horizon = rollouts.front().horizon;
    rep.history_length = rollouts.front().history_length;
    const int t0 = rep.history_length;
    const int t1 = rep.horizon;
    const double dt = sc.timestep;
    const double floor_prob = config.metrics.bin_floor;

    // ground-truth window
    const TrajectorySet gt = from_scenario(sc, t0, t1);
    KinematicSamples gt_kin;
    for (const auto& traj : gt.agents) kinematic_features(traj, dt, gt_kin);
    InteractiveSamples gt_inter;
    interactive_features(gt, config.metrics.ttc_max, gt_inter);
    std::vector<double> gt_road;
    std::vector<double> gt_collision, gt_offroad;
    const bool have_edges = !sc.road_edges.empty();
    for (size_t i = 0; i < gt.n_agents(); ++i) {
        bool any_off = false, any_valid = false;
        for (size_t t = 0; t < gt.n_steps(); ++t) {
            const FrameAgent& f = gt.agents[i][t];
            if (!f.valid) continue;
            any_valid = true;
            if (have_edges) {
                const auto sd = signed_distance_to_road_edge(f.pos, sc);
                if (sd) {
                    gt_road.push_back(std::clamp(*sd, -10.0, 30.0));
                    if (*sd < -config.metrics.offroad_margin) any_off = true;
                }
            }
        }
        if (any_valid) {
            gt_collision.push_back(gt_inter.collided[i] ? 1.0 : 0.0);
            if (have_edges) gt_offroad.push_back(any_off ? 1.0 : 0.0);
        }
    }

    // simulated window, pooled over rollouts
    KinematicSamples sim_kin;
    std::vector<double> sim_nearest, sim_ttc, sim_road;
    std::vector<double> sim_collision, sim_offroad;
    for (const auto& r : rollouts) {
        const TrajectorySet ts = from_rollout(sc, r, t0, t1);
        for (const auto& traj : ts.agents) kinematic_features(traj, dt, sim_kin);
        InteractiveSamples inter;
        interactive_features(ts, config.metrics.ttc_max, inter);
        sim_nearest.insert(sim_nearest.end(), inter.dist_nearest.begin(), inter.dist_nearest.end());
        sim_ttc.insert(sim_ttc.end(), inter.ttc.begin(), inter.ttc.end());
        for (size_t i = 0; i < ts.n_agents(); ++i) {
            bool any_off = false, any_valid = false;
            for (size_t t = 0; t < ts.n_steps(); ++t) {
                const FrameAgent& f = ts.agents[i][t];
                if (!f.valid) continue;
                any_valid = true;
                if (have_edges) {
                    const auto sd = signed_distance_to_road_edge(f.pos, sc);
                    if (sd) {
                        sim_road.push_back(std::clamp(*sd, -10.0, 30.0));
                        if (*sd < -config.metrics.offroad_margin) any_off = true;
                    }
                }
            }
            if (any_valid) {
                sim_collision.push_back(inter.collided[i] ? 1.0 : 0.0);
                if (have_edges) sim_offroad.push_back(any_off ? 1.0 : 0.0);
            }
        }
    }

    const HistogramSpec spec_speed{0.0, 30.0, 30};
    const HistogramSpec spec_accel{-10.0, 10.0, 40};
    const HistogramSpec spec_ang_speed{-3.0, 3.0, 30};
    const HistogramSpec spec_ang_accel{-10.0, 10.0, 40};
    const HistogramSpec spec_binary{0.0, 1.0, 2};
    const HistogramSpec spec_nearest{0.0, 50.0, 25};
    const HistogramSpec spec_ttc{0.0, config.metrics.ttc_max, 20};
    const HistogramSpec spec_road{-10.0, 30.0, 40};

    auto add = [&](const std::string& name, const std::string& group,
                   const std::vector<double>& gt_samples, const std::vector<double>& sim_samples,
                   const HistogramSpec& hspec) {
        ComponentScore c;
        c.name = name;
        c.group = group;
        c.gt_samples = gt_samples.size();
        c.sim_samples = sim_samples.size();
        c.present = !gt_samples.empty() && !sim_samples.empty();
        if (c.present) c.score = histogram_score(gt_samples, sim_samples, hspec, floor_prob);
        rep.components.push_back(c);
        if (!c.present)
            warn(rep.warnings, "metrics", "component skipped (no samples): " + name);
    };

    add("linear_speed", "kinematic", gt_kin.speed, sim_kin.speed, spec_speed);
    add("linear_accel", "kinematic", gt_kin.accel, sim_kin.accel, spec_accel);
    add("angular_speed", "kinematic", gt_kin.ang_speed, sim_kin.ang_speed, spec_ang_speed);
    add("angular_accel", "kinematic", gt_kin.ang_accel, sim_kin.ang_accel, spec_ang_accel);
    add("collision_indication", "interactive", gt_collision, sim_collision, spec_binary);
    add("distance_to_nearest", "interactive", gt_inter.dist_nearest, sim_nearest, spec_nearest);
    add("ttc", "interactive", gt_inter.ttc, sim_ttc, spec_ttc);
    add("offroad_indication", "map", gt_offroad, sim_offroad, spec_binary);
    add("distance_to_road_edge", "map", gt_road, sim_road, spec_road);

    auto group_mean = [&](const std::string& group, double& out_score) -> bool {
        double sum = 0.0;
        int n = 0;
        for (const auto& c : rep.components)
            if (c.group == group && c.present) {
                sum += c.score;
                ++n;
            }
        if (n == 0) return false;
        out_score = sum / n;
        return true;
    };
    double meta_sum = 0.0;
    int meta_n = 0;
    if (group_mean("kinematic", rep.kinematic)) {
        meta_sum += rep.kinematic;
        ++meta_n;
    }
    if (group_mean("interactive", rep.interactive)) {
        meta_sum += rep.interactive;
        ++meta_n;
    }
    if (group_mean("map", rep.map_score)) {
        meta_sum += rep.map_score;
        ++meta_n;
    }
    rep.meta = meta_n > 0 ? meta_sum / meta_n : 0.0;

    rep.min_ade = min_ade(sc, rollouts);
    if (demand) {
        const LongHorizonRates rates = long_horizon_rates(sc, *demand, rollouts, config);
        rep.collision_rate = rates.collision_rate;
        rep.offroad_rate = rates.offroad_rate;
        rep.collision_denominator = rates.collision_denominator;
        rep.offroad_denominator = rates.offroad_denominator;
    }
    return rep;
}

inline nlohmann::ordered_json metrics_report_to_json(const MetricsReport& rep) {
    nlohmann::ordered_json j;
    j["scenario_id"] = rep.scenario_id;
    j["n_rollouts"] = rep.n_rollouts;
    j["horizon"] = rep.horizon;
    j["history_length"] = rep.history_length;
    j["realism_meta"] = rep.meta;
    j["group_scores"] = {{"kinematic", rep.kinematic},
                         {"interactive", rep.interactive},
                         {"map", rep.map_score}};
    nlohmann::ordered_json comps = nlohmann::ordered_json::array();
    for (const auto& c : rep.components) {
        nlohmann::ordered_json cj;
        cj["name"] = c.name;
        cj["group"] = c.group;
        cj["present"] = c.present;
        cj["score"] = c.score;
        cj["gt_samples"] = c.gt_samples;
        cj["sim_samples"] = c.sim_samples;
        comps.push_back(cj);
    }
    j["components"] = comps;
    if (std::isfinite(rep.min_ade)) j["min_ade"] = rep.min_ade;
    j["collision_rate"] = rep.collision_rate;
    j["offroad_rate"] = rep.offroad_rate;
    j["collision_denominator"] = rep.collision_denominator;
    j["offroad_denominator"] = rep.offroad_denominator;
    nlohmann::ordered_json warnings = nlohmann::ordered_json::array();
    for (const auto& w : rep.warnings) warnings.push_back(w.stage + ": " + w.message);
    j["warnings"] = warnings;
    return j;
}

}  // namespace scenesim
