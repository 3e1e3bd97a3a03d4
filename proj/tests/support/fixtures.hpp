#pragma once

// Synthetic scenario builders shared by the test suites. Geometry is laid out
// on integer-friendly coordinates so expected fragment/edge/connection counts
// can be derived by hand.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "scenesim/engine.hpp"
#include "scenesim/scenario.hpp"

namespace fixtures {

using namespace scenesim;

constexpr double kPi = 3.14159265358979323846;

inline Polyline straight(Point2 a, Point2 b, double step = 1.0) {
    Polyline out;
    const double len = distance(a, b);
    const int n = std::max(1, static_cast<int>(std::round(len / step)));
    for (int i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        out.push_back({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t});
    }
    return out;
}

inline Polyline arc(Point2 center, double radius, double a0_deg, double a1_deg, int n = 16) {
    Polyline out;
    for (int i = 0; i <= n; ++i) {
        const double a = (a0_deg + (a1_deg - a0_deg) * i / n) * kPi / 180.0;
        out.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return out;
}

inline Point2 rot90(Point2 p, int quarter_turns) {
    Point2 q = p;
    for (int i = 0; i < ((quarter_turns % 4) + 4) % 4; ++i) q = {-q.y, q.x};
    return q;
}

inline Polyline rot90(const Polyline& poly, int quarter_turns) {
    Polyline out;
    for (const auto& p : poly) out.push_back(rot90(p, quarter_turns));
    return out;
}

inline LaneCenter lane(const Id& id, Polyline poly, double speed = 13.4,
                       LaneType type = LaneType::surface_street) {
    LaneCenter l;
    l.id = id;
    l.polyline = std::move(poly);
    l.speed_limit = speed;
    l.lane_type = type;
    return l;
}

// mirrored adjacency: `left_id` runs to the left of `right_id`
inline void neighbors(Scenario& sc, const Id& right_id, const Id& left_id, int r_lo, int r_hi,
                      int l_lo, int l_hi) {
    for (auto& l : sc.lane_centers) {
        if (l.id == right_id) {
            Adjacency a;
            a.neighbor_id = left_id;
            a.self_start_index = r_lo;
            a.self_end_index = r_hi;
            a.neighbor_start_index = l_lo;
            a.neighbor_end_index = l_hi;
            l.left_neighbors.push_back(a);
        }
        if (l.id == left_id) {
            Adjacency a;
            a.neighbor_id = right_id;
            a.self_start_index = l_lo;
            a.self_end_index = l_hi;
            a.neighbor_start_index = r_lo;
            a.neighbor_end_index = r_hi;
            l.right_neighbors.push_back(a);
        }
    }
}

// constant-velocity track, valid for steps [0, n_steps)
inline AgentTrack vehicle_track(const Id& id, Point2 start, double heading, double speed,
                                int n_steps, double dt = 0.1, double length = 4.5,
                                double width = 2.0,
                                ObjectType type = ObjectType::vehicle) {
    AgentTrack t;
    t.id = id;
    t.object_type = type;
    const Point2 dir{std::cos(heading), std::sin(heading)};
    for (int i = 0; i < n_steps; ++i) {
        TrackState s;
        s.time_index = i;
        s.position = start + dir * (speed * dt * i);
        s.heading = heading;
        s.vx = speed * dir.x;
        s.vy = speed * dir.y;
        s.length = length;
        s.width = width;
        s.valid = true;
        t.states.push_back(s);
    }
    return t;
}

inline Scenario base_scenario(const Id& id, int history = 10) {
    Scenario sc;
    sc.id = id;
    sc.timestep = 0.1;
    sc.history_length = history;
    return sc;
}

// --------------------------------------------------------------------------
// corridor with staggered lane extents; by hand: 18 fragments, 4 edges,
// middle lane l1 split into 4 pieces
// --------------------------------------------------------------------------
inline Scenario staggered_corridor() {
    Scenario sc = base_scenario("staggered_corridor");
    sc.lane_centers.push_back(lane("A1", straight({0, 7}, {50, 7})));
    sc.lane_centers.push_back(lane("A2", straight({50, 7}, {100, 7})));
    sc.lane_centers.push_back(lane("B1", straight({0, 3.5}, {25, 3.5})));
    sc.lane_centers.push_back(lane("B2", straight({25, 3.5}, {50, 3.5})));
    sc.lane_centers.push_back(lane("B3", straight({50, 3.5}, {75, 3.5})));
    sc.lane_centers.push_back(lane("B4", straight({75, 3.5}, {100, 3.5})));
    sc.lane_centers.push_back(lane("l1", straight({0, 0}, {100, 0})));
    sc.lane_centers.push_back(lane("D1", straight({0, -3.5}, {100, -3.5})));
    sc.lane_centers.push_back(lane("E1", straight({25, -7}, {75, -7})));

    neighbors(sc, "B1", "A1", 0, 25, 0, 25);
    neighbors(sc, "B2", "A1", 0, 25, 25, 50);
    neighbors(sc, "B3", "A2", 0, 25, 0, 25);
    neighbors(sc, "B4", "A2", 0, 25, 25, 50);
    neighbors(sc, "l1", "B1", 0, 25, 0, 25);
    neighbors(sc, "l1", "B2", 25, 50, 0, 25);
    neighbors(sc, "l1", "B3", 50, 75, 0, 25);
    neighbors(sc, "l1", "B4", 75, 100, 0, 25);
    neighbors(sc, "D1", "l1", 0, 100, 0, 100);
    neighbors(sc, "E1", "D1", 0, 50, 25, 75);
    return sc;
}

// --------------------------------------------------------------------------
// junction whose interior is covered by six short lanes; all six are consumed
// into connections of a single node
// --------------------------------------------------------------------------
inline Scenario interior_junction() {
    Scenario sc = base_scenario("interior_junction");
    // real edges
    sc.lane_centers.push_back(lane("W0", straight({-40, 0}, {0, 0})));
    sc.lane_centers.push_back(lane("W1", straight({-40, 3.5}, {0, 3.5})));
    sc.lane_centers.push_back(lane("E0", straight({12, 0}, {52, 0})));
    sc.lane_centers.push_back(lane("E1", straight({12, 3.5}, {52, 3.5})));
    sc.lane_centers.push_back(lane("Nout0", straight({5.5, 9}, {5.5, 49})));
    sc.lane_centers.push_back(lane("Sin0", straight({6, -46}, {6, -6})));
    sc.lane_centers.push_back(lane("Sout0", straight({2, -6}, {2, -46})));
    neighbors(sc, "W0", "W1", 0, 40, 0, 40);
    neighbors(sc, "E0", "E1", 0, 40, 0, 40);

    // junction interior
    sc.lane_centers.push_back(lane("iWE0", straight({0, 0}, {12, 0})));
    sc.lane_centers.push_back(lane("iWE1", straight({0, 3.5}, {12, 3.5})));
    {
        // left turn: west lane 1 into the north exit
        Polyline p = arc({0, 9}, 5.5, -90, 0, 12);
        sc.lane_centers.push_back(lane("iWN", std::move(p)));
    }
    sc.lane_centers.push_back(lane("iSN", {{6, -6}, {6, 2}, {5.7, 6}, {5.5, 9}}));
    {
        // right turn: south approach into the east exit
        Polyline p = arc({12, -6}, 6, 180, 90, 12);
        sc.lane_centers.push_back(lane("iSE", std::move(p)));
    }
    {
        // right turn: west lane 0 into the south exit
        Polyline p = arc({0, -2}, 2, 90, 0, 8);
        p.push_back({2, -4});
        p.push_back({2, -6});
        sc.lane_centers.push_back(lane("iWS", std::move(p)));
    }
    return sc;
}

inline Scenario n_lane_straight(int n_lanes, double length = 80.0, double speed = 13.4) {
    Scenario sc = base_scenario("straight_" + std::to_string(n_lanes));
    const int hi = static_cast<int>(length);
    for (int i = 0; i < n_lanes; ++i)
        sc.lane_centers.push_back(
            lane("L" + std::to_string(i), straight({0, 3.5 * i}, {length, 3.5 * i}), speed));
    for (int i = 0; i + 1 < n_lanes; ++i)
        neighbors(sc, "L" + std::to_string(i), "L" + std::to_string(i + 1), 0, hi, 0, hi);
    return sc;
}

// one lane fanning out into two continuations through short interior stubs
inline Scenario lane_split() {
    Scenario sc = base_scenario("lane_split");
    sc.lane_centers.push_back(lane("in", straight({0, 0}, {50, 0})));
    sc.lane_centers.push_back(lane("s_straight", straight({50, 0}, {60, 0})));
    sc.lane_centers.push_back(lane("s_ramp", {{50, 0}, {54, 0.6}, {58, 2.2}, {60, 3.5}}));
    sc.lane_centers.push_back(lane("out_main", straight({60, 0}, {110, 0})));
    sc.lane_centers.push_back(lane("out_ramp", straight({60, 3.5}, {110, 10})));
    return sc;
}

inline Scenario lane_merge() {
    Scenario sc = base_scenario("lane_merge");
    sc.lane_centers.push_back(lane("in_main", straight({0, 0}, {50, 0})));
    sc.lane_centers.push_back(lane("in_ramp", straight({0, 10}, {50, 3.5})));
    sc.lane_centers.push_back(lane("s_main", straight({50, 0}, {60, 0})));
    sc.lane_centers.push_back(lane("s_ramp", {{50, 3.5}, {54, 2.2}, {58, 0.6}, {60, 0}}));
    sc.lane_centers.push_back(lane("out", straight({60, 0}, {110, 0})));
    return sc;
}

struct FourWayOptions {
    bool signalized = false;          // EW green, NS red during history
    bool stop_minor = false;          // stop signs on the NS approaches
    bool with_traffic = false;
};

// two-way single-lane roads crossing; each approach has straight/left/right
// interior stubs: 8 real edges, 1 junction, 12 connections
inline Scenario four_way(const FourWayOptions& opt = {}) {
    Scenario sc = base_scenario(opt.signalized ? "four_way_signalized"
                                               : (opt.stop_minor ? "four_way_stop" : "four_way"));
    const char* names[4] = {"W", "S", "E", "N"};  // rotation order: +90 deg each
    for (int k = 0; k < 4; ++k) {
        const std::string n = names[k];
        sc.lane_centers.push_back(
            lane(n + "_in", rot90(straight({-48, -1.75}, {-8, -1.75}), k)));
        sc.lane_centers.push_back(
            lane(n + "_out", rot90(straight({-8, 1.75}, {-48, 1.75}), k)));
        sc.lane_centers.push_back(
            lane(n + "_i_straight", rot90(straight({-8, -1.75}, {8, -1.75}), k)));
        sc.lane_centers.push_back(
            lane(n + "_i_right", rot90(arc({-8, -8}, 6.25, 90, 0, 10), k)));
        sc.lane_centers.push_back(lane(n + "_i_left", rot90(arc({-8, 8}, 9.75, -90, 0, 14), k)));
    }
    // boundaries of both roads
    sc.road_edges.push_back({"re0", straight({-70, -5}, {70, -5})});
    sc.road_edges.push_back({"re1", straight({-70, 5}, {70, 5})});
    sc.road_edges.push_back({"re2", straight({-5, -70}, {-5, 70})});
    sc.road_edges.push_back({"re3", straight({5, -70}, {5, 70})});

    if (opt.signalized) {
        for (int t = 0; t < sc.history_length; ++t) {
            sc.signal_observations.push_back({t, "W_in", SignalState::green, {-8, -1.75}});
            sc.signal_observations.push_back({t, "E_in", SignalState::green, {8, 1.75}});
            sc.signal_observations.push_back({t, "S_in", SignalState::red, {1.75, -8}});
            sc.signal_observations.push_back({t, "N_in", SignalState::red, {-1.75, 8}});
        }
    }
    if (opt.stop_minor) {
        sc.stop_sign_lane_ids.push_back("S_in");
        sc.stop_sign_lane_ids.push_back("N_in");
    }
    if (opt.with_traffic) {
        const int n = sc.history_length;
        sc.tracks.push_back(vehicle_track("v0", {-40, -1.75}, 0.0, 8.0, n));
        sc.tracks.push_back(vehicle_track("v1", {-25, -1.75}, 0.0, 8.0, n));
        sc.tracks.push_back(vehicle_track("v2", {40, 1.75}, kPi, 8.0, n));
        sc.tracks.push_back(vehicle_track("v3", {1.75, -30}, kPi / 2, 6.0, n));
    }
    return sc;
}

// two junction clusters around a ring: entries merge in, exits diverge out,
// two ring edges survive
inline Scenario roundabout() {
    Scenario sc = base_scenario("roundabout");
    sc.lane_centers.push_back(lane("q1", arc({0, 0}, 10, 0, 90, 12)));
    sc.lane_centers.push_back(lane("q2", arc({0, 0}, 10, 90, 180, 12)));
    sc.lane_centers.push_back(lane("q3", arc({0, 0}, 10, 180, 270, 12)));
    sc.lane_centers.push_back(lane("q4", arc({0, 0}, 10, 270, 360, 12)));
    sc.lane_centers.push_back(lane("appE", straight({44, -13}, {14, -3.5})));
    sc.lane_centers.push_back(lane("sE", {{14, -3.5}, {12, -2}, {10.5, -1}, {10, 0}}));
    sc.lane_centers.push_back(lane("appW", straight({-44, 13}, {-14, 3.5})));
    sc.lane_centers.push_back(lane("sW", {{-14, 3.5}, {-12, 2}, {-10.5, 1}, {-10, 0}}));
    sc.lane_centers.push_back(lane("xN", {{0, 10}, {1, 10.5}, {2, 12}, {3.5, 14}}));
    sc.lane_centers.push_back(lane("exitN", straight({3.5, 14}, {13, 44})));
    sc.lane_centers.push_back(lane("xS", {{0, -10}, {-1, -10.5}, {-2, -12}, {-3.5, -14}}));
    sc.lane_centers.push_back(lane("exitS", straight({-3.5, -14}, {-13, -44})));
    return sc;
}

// u-turn plus straight continuation from one approach
inline Scenario uturn_scenario() {
    Scenario sc = base_scenario("uturn");
    sc.lane_centers.push_back(lane("in", straight({-40, 0}, {0, 0})));
    sc.lane_centers.push_back(lane("i_straight", straight({0, 0}, {12, 0})));
    sc.lane_centers.push_back(lane("i_uturn", arc({0, 3.5}, 3.5, -90, 90, 14)));
    sc.lane_centers.push_back(lane("out_straight", straight({12, 0}, {52, 0})));
    sc.lane_centers.push_back(lane("out_back", straight({0, 7}, {-40, 7})));
    return sc;
}

// staggered neighbors forcing a split cascade: fragments 4+2+1
inline Scenario cascade_split() {
    Scenario sc = base_scenario("cascade_split");
    sc.lane_centers.push_back(lane("X", straight({0, 0}, {100, 0})));
    sc.lane_centers.push_back(lane("Y", straight({30, 3.5}, {70, 3.5})));
    sc.lane_centers.push_back(lane("Z", straight({30, 7}, {50, 7})));
    neighbors(sc, "X", "Y", 30, 70, 0, 40);
    neighbors(sc, "Y", "Z", 0, 20, 0, 20);
    return sc;
}

// adjacency over the first 30 m only; truncation isolates that section and it
// groups, the rest stays as two separate single-lane edges
inline Scenario partial_overlap() {
    Scenario sc = base_scenario("partial_overlap");
    sc.lane_centers.push_back(lane("P", straight({0, 0}, {100, 0})));
    sc.lane_centers.push_back(lane("Q", straight({0, 3.5}, {100, 3.5})));
    neighbors(sc, "P", "Q", 0, 30, 0, 30);
    return sc;
}

// corner-touch record too short to cut or to group: lanes stay independent
inline Scenario sliver_overlap() {
    Scenario sc = base_scenario("sliver_overlap");
    sc.lane_centers.push_back(lane("P", {{0, 0}, {0.4, 0}, {50, 0}, {100, 0}}));
    sc.lane_centers.push_back(lane("Q", {{0, 3.5}, {0.4, 3.5}, {50, 3.5}, {100, 3.5}}));
    neighbors(sc, "P", "Q", 0, 1, 0, 1);
    return sc;
}

// contradictory side declarations; grouping must refuse
inline Scenario cyclic_adjacency() {
    Scenario sc = base_scenario("cyclic_adjacency");
    sc.lane_centers.push_back(lane("c0", straight({0, 0}, {60, 0})));
    sc.lane_centers.push_back(lane("c1", straight({0, 3.5}, {60, 3.5})));
    sc.lane_centers.push_back(lane("c2", straight({0, 7}, {60, 7})));
    neighbors(sc, "c0", "c1", 0, 60, 0, 60);
    neighbors(sc, "c1", "c2", 0, 60, 0, 60);
    neighbors(sc, "c2", "c0", 0, 60, 0, 60);
    return sc;
}

inline Scenario curved_road(int n_lanes = 2) {
    Scenario sc = base_scenario("curved_road");
    for (int i = 0; i < n_lanes; ++i)
        sc.lane_centers.push_back(
            lane("arc" + std::to_string(i), arc({0, 0}, 50.0 - 3.5 * i, 0, 90, 60)));
    for (int i = 0; i + 1 < n_lanes; ++i)
        neighbors(sc, "arc" + std::to_string(i), "arc" + std::to_string(i + 1), 0, 60, 0, 60);
    return sc;
}

inline Scenario freeway_scenario() {
    Scenario sc = base_scenario("freeway");
    sc.lane_centers.push_back(
        lane("f0", straight({0, 0}, {200, 0}), 29.1, LaneType::freeway));
    sc.lane_centers.push_back(
        lane("f1", straight({0, 3.5}, {200, 3.5}), 29.1, LaneType::freeway));
    neighbors(sc, "f0", "f1", 0, 200, 0, 200);
    return sc;
}

inline Scenario mixed_speed_road() {
    Scenario sc = base_scenario("mixed_speed");
    sc.lane_centers.push_back(lane("m0", straight({0, 0}, {90, 0}), 11.2));
    sc.lane_centers.push_back(lane("m1", straight({0, 3.5}, {90, 3.5}), 15.6));
    neighbors(sc, "m0", "m1", 0, 90, 0, 90);
    return sc;
}

inline Scenario bike_lane_road() {
    Scenario sc = base_scenario("bike_road");
    sc.lane_centers.push_back(lane("bike", straight({0, -3.5}, {80, -3.5}), 5.0,
                                   LaneType::bike_lane));
    sc.lane_centers.push_back(lane("car", straight({0, 0}, {80, 0})));
    neighbors(sc, "bike", "car", 0, 80, 0, 80);
    return sc;
}

// single long lane carrying a queue of vehicles; used for safety sweeps
inline Scenario safety_corridor(int n_vehicles = 6) {
    Scenario sc = base_scenario("safety_corridor");
    sc.lane_centers.push_back(lane("road", straight({0, 0}, {400, 0})));
    sc.road_edges.push_back({"re0", straight({-10, -5}, {410, -5})});
    sc.road_edges.push_back({"re1", straight({-10, 5}, {410, 5})});
    const double speeds[] = {12.0, 9.0, 11.0, 6.0, 13.0, 8.0, 10.0, 7.0};
    for (int i = 0; i < n_vehicles; ++i)
        sc.tracks.push_back(vehicle_track("v" + std::to_string(i),
                                          {10.0 + 22.0 * i, 0.0}, 0.0, speeds[i % 8],
                                          sc.history_length));
    return sc;
}

// 2x2 one-way grid, EW held green and NS red; straight movements only
inline Scenario signal_grid() {
    Scenario sc = base_scenario("signal_grid");
    const double xs[2] = {0.0, 120.0};
    auto add_row = [&](const std::string& prefix, double y) {
        sc.lane_centers.push_back(lane(prefix + "_a", straight({-60, y}, {-8, y})));
        sc.lane_centers.push_back(lane(prefix + "_s1", straight({-8, y}, {8, y})));
        sc.lane_centers.push_back(lane(prefix + "_m", straight({8, y}, {112, y})));
        sc.lane_centers.push_back(lane(prefix + "_s2", straight({112, y}, {128, y})));
        sc.lane_centers.push_back(lane(prefix + "_x", straight({128, y}, {200, y})));
    };
    auto add_col = [&](const std::string& prefix, double x) {
        sc.lane_centers.push_back(lane(prefix + "_a", straight({x, -60}, {x, -8})));
        sc.lane_centers.push_back(lane(prefix + "_s1", straight({x, -8}, {x, 8})));
        sc.lane_centers.push_back(lane(prefix + "_m", straight({x, 8}, {x, 112})));
        sc.lane_centers.push_back(lane(prefix + "_s2", straight({x, 112}, {x, 128})));
        sc.lane_centers.push_back(lane(prefix + "_x", straight({x, 128}, {x, 200})));
    };
    add_row("h0", 0.0);
    add_row("h1", 120.0);
    add_col("c0", xs[0]);
    add_col("c1", xs[1]);

    for (double y : {0.0, 120.0}) {
        sc.road_edges.push_back({"reh" + std::to_string(static_cast<int>(y)) + "a",
                                 straight({-70, y - 4}, {210, y - 4})});
        sc.road_edges.push_back({"reh" + std::to_string(static_cast<int>(y)) + "b",
                                 straight({-70, y + 4}, {210, y + 4})});
    }
    for (double x : {0.0, 120.0}) {
        sc.road_edges.push_back({"rev" + std::to_string(static_cast<int>(x)) + "a",
                                 straight({x - 4, -70}, {x - 4, 210})});
        sc.road_edges.push_back({"rev" + std::to_string(static_cast<int>(x)) + "b",
                                 straight({x + 4, -70}, {x + 4, 210})});
    }

    for (int t = 0; t < sc.history_length; ++t) {
        sc.signal_observations.push_back({t, "h0_a", SignalState::green, {-8, 0}});
        sc.signal_observations.push_back({t, "h0_m", SignalState::green, {112, 0}});
        sc.signal_observations.push_back({t, "h1_a", SignalState::green, {-8, 120}});
        sc.signal_observations.push_back({t, "h1_m", SignalState::green, {112, 120}});
        sc.signal_observations.push_back({t, "c0_a", SignalState::red, {0, -8}});
        sc.signal_observations.push_back({t, "c0_m", SignalState::red, {0, 112}});
        sc.signal_observations.push_back({t, "c1_a", SignalState::red, {120, -8}});
        sc.signal_observations.push_back({t, "c1_m", SignalState::red, {120, 112}});
    }

    const int n = sc.history_length;
    sc.tracks.push_back(vehicle_track("gv0", {-55, 0}, 0.0, 9.0, n));
    sc.tracks.push_back(vehicle_track("gv1", {-35, 0}, 0.0, 9.0, n));
    sc.tracks.push_back(vehicle_track("gv2", {20, 0}, 0.0, 9.0, n));
    sc.tracks.push_back(vehicle_track("gv3", {-55, 120}, 0.0, 9.0, n));
    sc.tracks.push_back(vehicle_track("gv4", {-30, 120}, 0.0, 9.0, n));
    sc.tracks.push_back(vehicle_track("gv5", {0, -20}, kPi / 2, 4.0, n));
    sc.tracks.push_back(vehicle_track("gv6", {120, -25}, kPi / 2, 4.0, n));
    return sc;
}

// --------------------------------------------------------------------------
// replay-quality scenarios: full-length recorded tracks over a mapped road
// --------------------------------------------------------------------------
inline Scenario replay_rich(int variant, int total_steps = 60) {
    Scenario sc = base_scenario("replay_" + std::to_string(variant));
    sc.lane_centers.push_back(lane("r0", straight({0, 0}, {200, 0})));
    sc.lane_centers.push_back(lane("r1", straight({0, 3.5}, {200, 3.5})));
    neighbors(sc, "r0", "r1", 0, 200, 0, 200);
    sc.road_edges.push_back({"re0", straight({-10, -5}, {210, -5})});
    sc.road_edges.push_back({"re1", straight({-10, 8.5}, {210, 8.5})});

    const double dt = sc.timestep;
    auto braking_track = [&](const Id& id, Point2 start, double v0, double brake_at,
                             double decel) {
        AgentTrack t;
        t.id = id;
        double v = v0;
        Point2 p = start;
        for (int i = 0; i < total_steps; ++i) {
            TrackState s;
            s.time_index = i;
            s.position = p;
            s.heading = 0.0;
            s.vx = v;
            s.vy = 0.0;
            s.valid = true;
            t.states.push_back(s);
            if (i * dt >= brake_at) v = std::max(0.0, v - decel * dt);
            p.x += v * dt;
        }
        return t;
    };

    switch (variant % 5) {
        case 0:
            sc.tracks.push_back(vehicle_track("a0", {10, 0}, 0.0, 10.0, total_steps));
            sc.tracks.push_back(vehicle_track("a1", {35, 0}, 0.0, 10.5, total_steps));
            sc.tracks.push_back(vehicle_track("a2", {20, 3.5}, 0.0, 12.0, total_steps));
            break;
        case 1:
            sc.tracks.push_back(braking_track("b0", {30, 0}, 12.0, 2.0, 3.0));
            sc.tracks.push_back(braking_track("b1", {10, 0}, 12.0, 2.5, 3.0));
            sc.tracks.push_back(vehicle_track("b2", {5, 3.5}, 0.0, 9.0, total_steps));
            break;
        case 2: {
            sc.tracks.push_back(vehicle_track("c0", {15, 0}, 0.0, 8.0, total_steps));
            sc.tracks.push_back(vehicle_track("c1", {50, 3.5}, 0.0, 11.0, total_steps));
            AgentTrack ped = vehicle_track("c2", {100, -4}, kPi / 2, 1.3, total_steps, dt,
                                           0.8, 0.8, ObjectType::pedestrian);
            sc.tracks.push_back(ped);
            break;
        }
        case 3: {
            // stationary then accelerating
            AgentTrack t;
            t.id = "d0";
            double v = 0.0;
            Point2 p{40, 0};
            for (int i = 0; i < total_steps; ++i) {
                TrackState s;
                s.time_index = i;
                s.position = p;
                s.heading = 0.0;
                s.vx = v;
                s.valid = true;
                t.states.push_back(s);
                if (i > 20) v = std::min(12.0, v + 0.2);
                p.x += v * dt;
            }
            sc.tracks.push_back(t);
            sc.tracks.push_back(vehicle_track("d1", {70, 3.5}, 0.0, 10.0, total_steps));
            break;
        }
        default: {
            // gentle weaving inside the lane
            AgentTrack t;
            t.id = "e0";
            for (int i = 0; i < total_steps; ++i) {
                TrackState s;
                s.time_index = i;
                s.position = {10.0 + 9.0 * dt * i, 0.4 * std::sin(0.08 * i)};
                s.vx = 9.0;
                s.vy = 0.4 * 0.08 * std::cos(0.08 * i) / dt;
                s.heading = std::atan2(s.vy, s.vx);
                s.valid = true;
                t.states.push_back(s);
            }
            sc.tracks.push_back(t);
            sc.tracks.push_back(vehicle_track("e1", {60, 3.5}, 0.0, 10.0, total_steps));
            break;
        }
    }
    return sc;
}

// rollout that repeats the recorded tracks verbatim
inline Rollout rollout_from_tracks(const Scenario& sc, int horizon) {
    Rollout r;
    r.scenario_id = sc.id;
    r.horizon = horizon;
    r.history_length = sc.history_length;
    std::vector<const AgentTrack*> tracks;
    for (const auto& t : sc.tracks) tracks.push_back(&t);
    std::sort(tracks.begin(), tracks.end(),
              [](const AgentTrack* a, const AgentTrack* b) { return a->id < b->id; });
    for (const AgentTrack* t : tracks) {
        r.agent_ids.push_back(t->id);
        std::vector<AgentStep> row(static_cast<size_t>(horizon));
        for (int step = 0; step < horizon; ++step) {
            const TrackState* s = t->state_at(step);
            if (s && s->valid) {
                row[static_cast<size_t>(step)] = {s->position.x, s->position.y, s->heading,
                                                  s->speed(), true};
            }
        }
        r.steps.push_back(std::move(row));
    }
    return r;
}

// deterministic position jitter on the post-history window
inline Rollout perturb_rollout(const Rollout& src, double amplitude) {
    Rollout r = src;
    for (size_t i = 0; i < r.steps.size(); ++i)
        for (size_t t = static_cast<size_t>(r.history_length); t < r.steps[i].size(); ++t) {
            if (!r.steps[i][t].valid) continue;
            r.steps[i][t].x += amplitude * std::sin(0.9 * static_cast<double>(t) + i);
            r.steps[i][t].y += amplitude * std::cos(1.3 * static_cast<double>(t) + 2.0 * i);
            r.steps[i][t].speed =
                std::max(0.0, r.steps[i][t].speed +
                                  amplitude * 2.0 * std::sin(0.7 * static_cast<double>(t) + i));
        }
    return r;
}

// named fixture list used by conversion sweeps
inline std::vector<std::pair<std::string, Scenario>> conversion_fixtures() {
    std::vector<std::pair<std::string, Scenario>> out;
    out.emplace_back("staggered_corridor", staggered_corridor());
    out.emplace_back("interior_junction", interior_junction());
    out.emplace_back("straight_1", n_lane_straight(1));
    out.emplace_back("straight_2", n_lane_straight(2));
    out.emplace_back("straight_3", n_lane_straight(3));
    out.emplace_back("straight_4", n_lane_straight(4));
    out.emplace_back("straight_short", n_lane_straight(2, 30.0));
    out.emplace_back("straight_slow", n_lane_straight(2, 80.0, 8.9));
    out.emplace_back("lane_split", lane_split());
    out.emplace_back("lane_merge", lane_merge());
    out.emplace_back("four_way", four_way());
    out.emplace_back("four_way_signalized", four_way({.signalized = true}));
    out.emplace_back("four_way_stop", four_way({.stop_minor = true}));
    out.emplace_back("roundabout", roundabout());
    out.emplace_back("uturn", uturn_scenario());
    out.emplace_back("cascade_split", cascade_split());
    out.emplace_back("partial_overlap", partial_overlap());
    out.emplace_back("sliver_overlap", sliver_overlap());
    out.emplace_back("curved_road", curved_road());
    out.emplace_back("curved_road_3", curved_road(3));
    out.emplace_back("freeway", freeway_scenario());
    out.emplace_back("mixed_speed", mixed_speed_road());
    out.emplace_back("bike_road", bike_lane_road());
    out.emplace_back("signal_grid", signal_grid());
    out.emplace_back("safety_corridor", safety_corridor());
    return out;
}

}  // namespace fixtures
