#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenesim/common.hpp"
#include "scenesim/geometry.hpp"

namespace scenesim {

enum class LaneType { surface_street, freeway, bike_lane };
enum class SignalState { red, yellow, green, unknown };
enum class ObjectType { vehicle, pedestrian, cyclist };

// Lateral neighborhood between two lane centers, expressed as index ranges on
// both polylines.
struct Adjacency {
    Id neighbor_id;
    int self_start_index = 0;
    int self_end_index = 0;
    int neighbor_start_index = 0;
    int neighbor_end_index = 0;
};

struct LaneCenter {
    Id id;
    Polyline polyline;
    LaneType lane_type = LaneType::surface_street;
    double speed_limit = 13.4;  // m/s
    std::vector<Id> entry_ids;
    std::vector<Id> exit_ids;
    std::vector<Adjacency> left_neighbors;
    std::vector<Adjacency> right_neighbors;
};

struct RoadEdge {
    Id id;
    Polyline polyline;
};

struct SignalObservation {
    int time_index = 0;
    Id lane_id;
    SignalState state = SignalState::unknown;
    Point2 stop_point;
};

struct TrackState {
    int time_index = 0;
    Point2 position;
    double heading = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double length = 4.5;
    double width = 2.0;
    bool valid = false;

    double speed() const { return std::hypot(vx, vy); }
};

struct AgentTrack {
    Id id;
    ObjectType object_type = ObjectType::vehicle;
    std::vector<TrackState> states;  // sorted by time_index, unique

    const TrackState* state_at(int time_index) const {
        for (const auto& s : states)
            if (s.time_index == time_index) return &s;
        return nullptr;
    }
    const TrackState* last_valid_before(int time_index) const {
        const TrackState* found = nullptr;
        for (const auto& s : states)
            if (s.valid && s.time_index <= time_index) found = &s;
        return found;
    }
};

struct Scenario {
    Id id;
    double timestep = 0.1;  // seconds
    int history_length = 10;
    std::vector<LaneCenter> lane_centers;
    std::vector<RoadEdge> road_edges;
    std::vector<Id> stop_sign_lane_ids;
    std::vector<SignalObservation> signal_observations;
    std::vector<AgentTrack> tracks;

    const LaneCenter* lane(const Id& lane_id) const {
        for (const auto& l : lane_centers)
            if (l.id == lane_id) return &l;
        return nullptr;
    }
    const AgentTrack* track(const Id& track_id) const {
        for (const auto& t : tracks)
            if (t.id == track_id) return &t;
        return nullptr;
    }
    bool lane_has_stop_sign(const Id& lane_id) const {
        return std::find(stop_sign_lane_ids.begin(), stop_sign_lane_ids.end(), lane_id) !=
               stop_sign_lane_ids.end();
    }
};

// --------------------------------------------------------------------------
// Enum <-> string
// --------------------------------------------------------------------------

inline std::string to_string(LaneType t) {
    switch (t) {
        case LaneType::surface_street: return "surface_street";
        case LaneType::freeway: return "freeway";
        case LaneType::bike_lane: return "bike_lane";
    }
    return "surface_street";
}

inline std::string to_string(SignalState s) {
    switch (s) {
        case SignalState::red: return "red";
        case SignalState::yellow: return "yellow";
        case SignalState::green: return "green";
        case SignalState::unknown: return "unknown";
    }
    return "unknown";
}

inline std::string to_string(ObjectType t) {
    switch (t) {
        case ObjectType::vehicle: return "vehicle";
        case ObjectType::pedestrian: return "pedestrian";
        case ObjectType::cyclist: return "cyclist";
    }
    return "vehicle";
}

inline LaneType lane_type_from_string(const std::string& s, const std::string& path) {
    if (s == "surface_street") return LaneType::surface_street;
    if (s == "freeway") return LaneType::freeway;
    if (s == "bike_lane") return LaneType::bike_lane;
    throw SchemaError(path, "unknown lane_type '" + s + "'");
}

inline SignalState signal_state_from_string(const std::string& s, const std::string& path) {
    if (s == "red") return SignalState::red;
    if (s == "yellow") return SignalState::yellow;
    if (s == "green") return SignalState::green;
    if (s == "unknown") return SignalState::unknown;
    throw SchemaError(path, "unknown signal state '" + s + "'");
}

inline ObjectType object_type_from_string(const std::string& s, const std::string& path) {
    if (s == "vehicle") return ObjectType::vehicle;
    if (s == "pedestrian") return ObjectType::pedestrian;
    if (s == "cyclist") return ObjectType::cyclist;
    throw SchemaError(path, "unknown object_type '" + s + "'");
}

// --------------------------------------------------------------------------
// JSON parsing
// --------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline double finite_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "NaN/Inf not permitted");
    return v;
}

inline int integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
    return j.get<int>();
}

inline std::string str(const json& j, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path, "expected a string");
    return j.get<std::string>();
}

inline const json& field(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key))
        throw SchemaError(path + "." + key, "missing field");
    return j.at(key);
}

inline Polyline parse_polyline(const json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array of [x, y] pairs");
    Polyline pl;
    for (size_t i = 0; i < j.size(); ++i) {
        const auto& p = j[i];
        const std::string pp = path + "[" + std::to_string(i) + "]";
        if (!p.is_array() || p.size() != 2) throw SchemaError(pp, "expected [x, y]");
        pl.push_back({finite_number(p[0], pp + "[0]"), finite_number(p[1], pp + "[1]")});
    }
    return pl;
}

inline Adjacency parse_adjacency(const json& j, const std::string& path) {
    Adjacency a;
    a.neighbor_id = str(field(j, "neighbor_id", path), path + ".neighbor_id");
    a.self_start_index = integer(field(j, "self_start_index", path), path + ".self_start_index");
    a.self_end_index = integer(field(j, "self_end_index", path), path + ".self_end_index");
    a.neighbor_start_index =
        integer(field(j, "neighbor_start_index", path), path + ".neighbor_start_index");
    a.neighbor_end_index =
        integer(field(j, "neighbor_end_index", path), path + ".neighbor_end_index");
    return a;
}

inline std::vector<Id> parse_id_list(const json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array of ids");
    std::vector<Id> ids;
    for (size_t i = 0; i < j.size(); ++i)
        ids.push_back(str(j[i], path + "[" + std::to_string(i) + "]"));
    return ids;
}

}  // namespace detail

inline Scenario parse_scenario_json(const nlohmann::json& j) {
    using namespace detail;
    Scenario sc;
    sc.id = str(field(j, "id", ""), "id");
    sc.timestep = finite_number(field(j, "timestep_s", ""), "timestep_s");
    sc.history_length = integer(field(j, "history_length", ""), "history_length");

    const auto& lanes = field(j, "lane_centers", "");
    if (!lanes.is_array()) throw SchemaError("lane_centers", "expected an array");
    for (size_t i = 0; i < lanes.size(); ++i) {
        const std::string p = "lane_centers[" + std::to_string(i) + "]";
        const auto& lj = lanes[i];
        LaneCenter l;
        l.id = str(field(lj, "id", p), p + ".id");
        l.polyline = parse_polyline(field(lj, "polyline", p), p + ".polyline");
        l.lane_type = lane_type_from_string(str(field(lj, "lane_type", p), p + ".lane_type"),
                                            p + ".lane_type");
        l.speed_limit = finite_number(field(lj, "speed_limit_mps", p), p + ".speed_limit_mps");
        if (lj.contains("entry_ids")) l.entry_ids = parse_id_list(lj["entry_ids"], p + ".entry_ids");
        if (lj.contains("exit_ids")) l.exit_ids = parse_id_list(lj["exit_ids"], p + ".exit_ids");
        if (lj.contains("left_neighbors"))
            for (size_t k = 0; k < lj["left_neighbors"].size(); ++k)
                l.left_neighbors.push_back(parse_adjacency(
                    lj["left_neighbors"][k], p + ".left_neighbors[" + std::to_string(k) + "]"));
        if (lj.contains("right_neighbors"))
            for (size_t k = 0; k < lj["right_neighbors"].size(); ++k)
                l.right_neighbors.push_back(parse_adjacency(
                    lj["right_neighbors"][k], p + ".right_neighbors[" + std::to_string(k) + "]"));
        sc.lane_centers.push_back(std::move(l));
    }

    if (j.contains("road_edges"))
        for (size_t i = 0; i < j["road_edges"].size(); ++i) {
            const std::string p = "road_edges[" + std::to_string(i) + "]";
            const auto& rj = j["road_edges"][i];
            RoadEdge r;
            r.id = str(field(rj, "id", p), p + ".id");
            r.polyline = parse_polyline(field(rj, "polyline", p), p + ".polyline");
            sc.road_edges.push_back(std::move(r));
        }

    if (j.contains("stop_sign_lane_ids"))
        sc.stop_sign_lane_ids = parse_id_list(j["stop_sign_lane_ids"], "stop_sign_lane_ids");

    if (j.contains("signal_observations"))
        for (size_t i = 0; i < j["signal_observations"].size(); ++i) {
            const std::string p = "signal_observations[" + std::to_string(i) + "]";
            const auto& oj = j["signal_observations"][i];
            SignalObservation o;
            o.time_index = integer(field(oj, "time_index", p), p + ".time_index");
            o.lane_id = str(field(oj, "lane_id", p), p + ".lane_id");
            o.state = signal_state_from_string(str(field(oj, "state", p), p + ".state"), p + ".state");
            const auto& sp = field(oj, "stop_point", p);
            if (!sp.is_array() || sp.size() != 2) throw SchemaError(p + ".stop_point", "expected [x, y]");
            o.stop_point = {detail::finite_number(sp[0], p + ".stop_point[0]"),
                            detail::finite_number(sp[1], p + ".stop_point[1]")};
            sc.signal_observations.push_back(o);
        }

    if (j.contains("tracks"))
        for (size_t i = 0; i < j["tracks"].size(); ++i) {
            const std::string p = "tracks[" + std::to_string(i) + "]";
            const auto& tj = j["tracks"][i];
            AgentTrack t;
            t.id = str(field(tj, "id", p), p + ".id");
            t.object_type =
                object_type_from_string(str(field(tj, "object_type", p), p + ".object_type"),
                                        p + ".object_type");
            const auto& states = field(tj, "states", p);
            if (!states.is_array()) throw SchemaError(p + ".states", "expected an array");
            for (size_t k = 0; k < states.size(); ++k) {
                const std::string sp = p + ".states[" + std::to_string(k) + "]";
                const auto& sj = states[k];
                TrackState s;
                s.time_index = integer(field(sj, "time_index", sp), sp + ".time_index");
                s.position = {finite_number(field(sj, "x", sp), sp + ".x"),
                              finite_number(field(sj, "y", sp), sp + ".y")};
                s.heading = finite_number(field(sj, "heading", sp), sp + ".heading");
                s.vx = finite_number(field(sj, "vx", sp), sp + ".vx");
                s.vy = finite_number(field(sj, "vy", sp), sp + ".vy");
                s.length = finite_number(field(sj, "length", sp), sp + ".length");
                s.width = finite_number(field(sj, "width", sp), sp + ".width");
                const auto& vj = field(sj, "valid", sp);
                if (!vj.is_boolean()) throw SchemaError(sp + ".valid", "expected a boolean");
                s.valid = vj.get<bool>();
                t.states.push_back(s);
            }
            sc.tracks.push_back(std::move(t));
        }

    return sc;
}

// --------------------------------------------------------------------------
// Validation
// --------------------------------------------------------------------------

inline void validate_scenario(const Scenario& sc) {
    if (std::abs(sc.timestep - 0.1) > 1e-9)
        throw ValidationError("timestep_s must be 0.1");
    if (sc.history_length < 1) throw ValidationError("history_length must be >= 1");

    std::set<Id> lane_ids;
    for (const auto& l : sc.lane_centers) {
        if (!lane_ids.insert(l.id).second)
            throw ValidationError("duplicate lane id", {l.id});
        if (l.polyline.size() < 2)
            throw ValidationError("lane polyline needs >=2 points", {l.id});
        for (size_t i = 1; i < l.polyline.size(); ++i)
            if (distance(l.polyline[i - 1], l.polyline[i]) < 1e-9)
                throw ValidationError("lane polyline has repeated consecutive points", {l.id});
    }

    std::vector<Id> dangling;
    const auto check_lane_ref = [&](const Id& ref) {
        if (!lane_ids.count(ref)) dangling.push_back(ref);
    };
    for (const auto& l : sc.lane_centers) {
        for (const auto& ref : l.entry_ids) check_lane_ref(ref);
        for (const auto& ref : l.exit_ids) check_lane_ref(ref);
        const auto check_adj = [&](const Adjacency& a) {
            check_lane_ref(a.neighbor_id);
            if (a.self_start_index > a.self_end_index ||
                a.neighbor_start_index > a.neighbor_end_index)
                throw ValidationError("adjacency start index exceeds end index", {l.id, a.neighbor_id});
            if (a.self_start_index < 0 || a.self_end_index >= static_cast<int>(l.polyline.size()))
                throw ValidationError("adjacency self index range outside polyline", {l.id, a.neighbor_id});
            const LaneCenter* nbr = sc.lane(a.neighbor_id);
            if (nbr && (a.neighbor_start_index < 0 ||
                        a.neighbor_end_index >= static_cast<int>(nbr->polyline.size())))
                throw ValidationError("adjacency neighbor index range outside polyline",
                                      {l.id, a.neighbor_id});
        };
        for (const auto& a : l.left_neighbors) check_adj(a);
        for (const auto& a : l.right_neighbors) check_adj(a);
    }
    for (const auto& id : sc.stop_sign_lane_ids) check_lane_ref(id);
    for (const auto& o : sc.signal_observations) {
        check_lane_ref(o.lane_id);
        if (o.time_index < 0 || o.time_index >= sc.history_length)
            throw ValidationError("signal observation time_index outside history window",
                                  {o.lane_id});
    }
    if (!dangling.empty()) throw ValidationError("dangling lane reference(s)", dangling);

    std::set<Id> road_edge_ids;
    for (const auto& r : sc.road_edges) {
        if (!road_edge_ids.insert(r.id).second)
            throw ValidationError("duplicate road edge id", {r.id});
        if (r.polyline.size() < 2)
            throw ValidationError("road edge polyline needs >=2 points", {r.id});
    }

    std::set<Id> track_ids;
    for (const auto& t : sc.tracks) {
        if (!track_ids.insert(t.id).second)
            throw ValidationError("duplicate track id", {t.id});
        std::set<int> seen_steps;
        for (const auto& s : t.states) {
            if (!seen_steps.insert(s.time_index).second)
                throw ValidationError("track has multiple states at one time_index", {t.id});
            if (s.valid && (s.length <= 0.0 || s.width <= 0.0))
                throw ValidationError("valid track state requires positive dimensions", {t.id});
        }
    }
}

// --------------------------------------------------------------------------
// File I/O
// --------------------------------------------------------------------------

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError(path, "cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path, std::string("JSON parse failure: ") + e.what());
    }
    Scenario sc = parse_scenario_json(j);
    validate_scenario(sc);
    return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
    using nlohmann::json;
    json j;
    j["id"] = sc.id;
    j["timestep_s"] = sc.timestep;
    j["history_length"] = sc.history_length;
    const auto poly_json = [](const Polyline& pl) {
        json a = json::array();
        for (const auto& p : pl) a.push_back({p.x, p.y});
        return a;
    };
    const auto adj_json = [](const Adjacency& a) {
        return json{{"neighbor_id", a.neighbor_id},
                    {"self_start_index", a.self_start_index},
                    {"self_end_index", a.self_end_index},
                    {"neighbor_start_index", a.neighbor_start_index},
                    {"neighbor_end_index", a.neighbor_end_index}};
    };
    j["lane_centers"] = json::array();
    for (const auto& l : sc.lane_centers) {
        json lj;
        lj["id"] = l.id;
        lj["polyline"] = poly_json(l.polyline);
        lj["lane_type"] = to_string(l.lane_type);
        lj["speed_limit_mps"] = l.speed_limit;
        lj["entry_ids"] = l.entry_ids;
        lj["exit_ids"] = l.exit_ids;
        lj["left_neighbors"] = json::array();
        for (const auto& a : l.left_neighbors) lj["left_neighbors"].push_back(adj_json(a));
        lj["right_neighbors"] = json::array();
        for (const auto& a : l.right_neighbors) lj["right_neighbors"].push_back(adj_json(a));
        j["lane_centers"].push_back(std::move(lj));
    }
    j["road_edges"] = json::array();
    for (const auto& r : sc.road_edges)
        j["road_edges"].push_back({{"id", r.id}, {"polyline", poly_json(r.polyline)}});
    j["stop_sign_lane_ids"] = sc.stop_sign_lane_ids;
    j["signal_observations"] = json::array();
    for (const auto& o : sc.signal_observations)
        j["signal_observations"].push_back({{"time_index", o.time_index},
                                            {"lane_id", o.lane_id},
                                            {"state", to_string(o.state)},
                                            {"stop_point", {o.stop_point.x, o.stop_point.y}}});
    j["tracks"] = json::array();
    for (const auto& t : sc.tracks) {
        json tj;
        tj["id"] = t.id;
        tj["object_type"] = to_string(t.object_type);
        tj["states"] = json::array();
        for (const auto& s : t.states)
            tj["states"].push_back({{"time_index", s.time_index},
                                    {"x", s.position.x},
                                    {"y", s.position.y},
                                    {"heading", s.heading},
                                    {"vx", s.vx},
                                    {"vy", s.vy},
                                    {"length", s.length},
                                    {"width", s.width},
                                    {"valid", s.valid}});
        j["tracks"].push_back(std::move(tj));
    }
    return j;
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SchemaError(path, "cannot open file for writing");
    out << scenario_to_json(sc).dump(2) << "\n";
}

}  // namespace scenesim
