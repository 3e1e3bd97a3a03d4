#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scenesim/common.hpp"
#include "scenesim/config.hpp"
#include "scenesim/geometry.hpp"
#include "scenesim/scenario.hpp"

namespace scenesim {

enum class NodeKind { junction, lane_count_change, merge_split, endpoint };
enum class Movement { straight, left, right, uturn };

inline std::string to_string(NodeKind k) {
    switch (k) {
        case NodeKind::junction: return "junction";
        case NodeKind::lane_count_change: return "lane_count_change";
        case NodeKind::merge_split: return "merge_split";
        case NodeKind::endpoint: return "endpoint";
    }
    return "junction";
}

inline std::string to_string(Movement m) {
    switch (m) {
        case Movement::straight: return "straight";
        case Movement::left: return "left";
        case Movement::right: return "right";
        case Movement::uturn: return "uturn";
    }
    return "straight";
}

struct NetLane {
    Id id;
    std::vector<Id> source_lane_ids;
    Polyline shape;
    double width = 3.5;
    double speed_limit = 13.4;
    LaneType lane_type = LaneType::surface_street;

    double length() const { return arc_length(shape); }
};

struct Edge {
    Id id;
    std::vector<NetLane> lanes;  // index 0 = rightmost
    Id from_node;
    Id to_node;
    int priority = 1;
    double speed_limit = 13.4;

    double length() const { return lanes.empty() ? 0.0 : arc_length(lanes.front().shape); }
};

struct Node {
    Id id;
    Polyline shape;
    NodeKind kind = NodeKind::junction;
    bool signalized = false;
    std::vector<Id> stop_controlled_connection_ids;
};

struct Connection {
    Id id;
    Id from_edge;
    int from_lane_index = -1;
    Id to_edge;
    int to_lane_index = -1;
    Id via_node;
    Polyline shape;
    Movement movement = Movement::straight;
    std::vector<Id> source_lane_ids;
    double speed_limit = 13.4;
    bool stop_controlled = false;
    bool has_signal = false;
    Point2 stop_point;
    std::vector<Id> signal_lane_ids;

    double length() const { return shape.size() < 2 ? 0.0 : arc_length(shape); }
};

// Per-node signal timetable. Filled by the signal estimator; steps beyond the
// stored range hold the final state.
struct SignalProgram {
    Id node_id;
    int history_length = 0;
    int extended_to = 0;
    std::vector<std::map<Id, SignalState>> steps;

    SignalState state_at(int step, const Id& connection_id) const {
        if (steps.empty()) return SignalState::red;
        const size_t idx =
            static_cast<size_t>(std::clamp(step, 0, static_cast<int>(steps.size()) - 1));
        const auto it = steps[idx].find(connection_id);
        return it == steps[idx].end() ? SignalState::red : it->second;
    }
};

struct Network {
    std::vector<Edge> edges;
    std::vector<Node> nodes;
    std::vector<Connection> connections;
    std::vector<SignalProgram> signal_programs;
    double coverage_ratio = 1.0;
    WarningList warnings;

    int edge_index(const Id& id) const {
        for (size_t i = 0; i < edges.size(); ++i)
            if (edges[i].id == id) return static_cast<int>(i);
        return -1;
    }
    int node_index(const Id& id) const {
        for (size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].id == id) return static_cast<int>(i);
        return -1;
    }
    int connection_index(const Id& id) const {
        for (size_t i = 0; i < connections.size(); ++i)
            if (connections[i].id == id) return static_cast<int>(i);
        return -1;
    }
    std::vector<const Connection*> connections_from(const Id& edge_id) const {
        std::vector<const Connection*> out;
        for (const auto& c : connections)
            if (c.from_edge == edge_id) out.push_back(&c);
        return out;
    }
    const SignalProgram* program_for(const Id& node_id) const {
        for (const auto& p : signal_programs)
            if (p.node_id == node_id) return &p;
        return nullptr;
    }
};

// --------------------------------------------------------------------------
// Internals
// --------------------------------------------------------------------------

namespace net_detail {

struct Dsu {
    std::vector<int> parent;
    explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

struct Frag {
    Id source_id;
    Polyline poly;
    LaneType type = LaneType::surface_street;
    double speed_limit = 13.4;
    bool alive = true;
    Id final_id;
};

// One lateral-neighborhood record between two fragments, mirrored once.
// side = +1 means lane b runs to the left of lane a.
struct AdjRec {
    int a = -1, b = -1;
    int alo = 0, ahi = 0;
    int blo = 0, bhi = 0;
    int side = +1;
    bool alive = true;
};

struct TruncState {
    std::vector<Frag> frags;
    std::vector<AdjRec> recs;
    std::map<Id, Polyline> originals;
    std::map<Id, int> handle_of_source;
    WarningList* warnings = nullptr;
};

inline double arc_at(const Polyline& poly, int vertex) {
    double s = 0.0;
    for (int i = 1; i <= vertex && i < static_cast<int>(poly.size()); ++i)
        s += distance(poly[i - 1], poly[i]);
    return s;
}

inline void shift_indices_after_insert(TruncState& st, int lane, int inserted_at) {
    for (auto& r : st.recs) {
        if (!r.alive) continue;
        if (r.a == lane) {
            if (r.alo >= inserted_at) ++r.alo;
            if (r.ahi >= inserted_at) ++r.ahi;
        }
        if (r.b == lane) {
            if (r.blo >= inserted_at) ++r.blo;
            if (r.bhi >= inserted_at) ++r.bhi;
        }
    }
}

// Locates (or creates) the vertex on `lane` corresponding to a cut point on its
// neighbor, restricted to the vertex window [lo, hi].
inline int map_cut_to_lane(TruncState& st, int lane, int lo, int hi, const Point2& cut,
                           double snap) {
    Polyline& poly = st.frags[lane].poly;
    lo = std::clamp(lo, 0, static_cast<int>(poly.size()) - 1);
    hi = std::clamp(hi, 0, static_cast<int>(poly.size()) - 1);
    if (lo >= hi) return lo;

    double best_d = std::numeric_limits<double>::infinity();
    int best_seg = lo;
    Point2 best_q = poly[lo];
    for (int seg = lo; seg < hi; ++seg) {
        const Point2 a = poly[seg];
        const Point2 b = poly[seg + 1];
        const Point2 ab = b - a;
        const double len2 = dot(ab, ab);
        double t = len2 > 0.0 ? std::clamp(dot(cut - a, ab) / len2, 0.0, 1.0) : 0.0;
        const Point2 q = a + ab * t;
        const double d = distance(cut, q);
        if (d < best_d) {
            best_d = d;
            best_seg = seg;
            best_q = q;
        }
    }
    int best_vertex = lo;
    double best_vertex_d = std::numeric_limits<double>::infinity();
    for (int v = lo; v <= hi; ++v) {
        const double d = distance(best_q, poly[v]);
        if (d < best_vertex_d) {
            best_vertex_d = d;
            best_vertex = v;
        }
    }
    if (best_vertex_d <= snap) return best_vertex;
    poly.insert(poly.begin() + best_seg + 1, best_q);
    shift_indices_after_insert(st, lane, best_seg + 1);
    return best_seg + 1;
}

inline void split_frag(TruncState& st, int h, int k, double snap) {
    Frag& f = st.frags[h];
    const Point2 cut_point = f.poly[static_cast<size_t>(k)];
    Frag tail;
    tail.source_id = f.source_id;
    tail.type = f.type;
    tail.speed_limit = f.speed_limit;
    tail.poly.assign(f.poly.begin() + k, f.poly.end());
    f.poly.resize(static_cast<size_t>(k) + 1);
    st.frags.push_back(std::move(tail));
    const int h2 = static_cast<int>(st.frags.size()) - 1;

    const size_t n_recs = st.recs.size();
    for (size_t i = 0; i < n_recs; ++i) {
        AdjRec& r = st.recs[i];
        if (!r.alive) continue;
        if (r.a == h) {
            if (r.ahi <= k) {
                // stays on the head
            } else if (r.alo >= k) {
                r.a = h2;
                r.alo -= k;
                r.ahi -= k;
            } else {
                const int m = map_cut_to_lane(st, r.b, r.blo, r.bhi, cut_point, snap);
                AdjRec tail_rec = r;
                tail_rec.a = h2;
                tail_rec.alo = 0;
                tail_rec.ahi = r.ahi - k;
                tail_rec.blo = m;
                st.recs[i].ahi = k;
                st.recs[i].bhi = m;
                st.recs.push_back(tail_rec);
                continue;
            }
        }
        if (r.b == h) {
            if (r.bhi <= k) {
                // stays on the head
            } else if (r.blo >= k) {
                r.b = h2;
                r.blo -= k;
                r.bhi -= k;
            } else {
                const int m = map_cut_to_lane(st, r.a, r.alo, r.ahi, cut_point, snap);
                AdjRec tail_rec = r;
                tail_rec.b = h2;
                tail_rec.blo = 0;
                tail_rec.bhi = r.bhi - k;
                tail_rec.alo = m;
                st.recs[i].bhi = k;
                st.recs[i].ahi = m;
                st.recs.push_back(tail_rec);
            }
        }
    }
}

inline TruncState init_trunc_state(const Scenario& sc, WarningList& warnings) {
    TruncState st;
    st.warnings = &warnings;
    for (const auto& l : sc.lane_centers) {
        Frag f;
        f.source_id = l.id;
        f.poly = l.polyline;
        f.type = l.lane_type;
        f.speed_limit = l.speed_limit;
        st.handle_of_source[l.id] = static_cast<int>(st.frags.size());
        st.originals[l.id] = l.polyline;
        st.frags.push_back(std::move(f));
    }
    // Records are mirrored in the input (left on one lane, right on the other);
    // keep each unordered pair once.
    std::set<std::tuple<int, int, int, int, int, int>> seen;
    const auto add = [&](const Id& self, const Adjacency& adj, int side) {
        const auto it = st.handle_of_source.find(adj.neighbor_id);
        if (it == st.handle_of_source.end()) return;
        const int a = st.handle_of_source[self];
        const int b = it->second;
        if (a == b) {
            warn(warnings, "convert", "lane " + self + " declares itself as neighbor; ignored");
            return;
        }
        AdjRec r;
        r.a = a;
        r.b = b;
        r.alo = adj.self_start_index;
        r.ahi = adj.self_end_index;
        r.blo = adj.neighbor_start_index;
        r.bhi = adj.neighbor_end_index;
        r.side = side;
        auto key = (a < b) ? std::make_tuple(a, b, r.alo, r.ahi, r.blo, r.bhi)
                           : std::make_tuple(b, a, r.blo, r.bhi, r.alo, r.ahi);
        if (seen.insert(key).second) st.recs.push_back(r);
    };
    for (const auto& l : sc.lane_centers) {
        for (const auto& adj : l.left_neighbors) add(l.id, adj, +1);
        for (const auto& adj : l.right_neighbors) add(l.id, adj, -1);
    }
    return st;
}

// A record boundary interior to its lane (farther than eps from both lane ends)
// forces a split there.
inline int find_cut_vertex(const TruncState& st, int h, double eps) {
    const Polyline& poly = st.frags[h].poly;
    const double total = arc_length(poly);
    int best = -1;
    const auto consider = [&](int k) {
        if (k <= 0 || k >= static_cast<int>(poly.size()) - 1) return;
        const double s = arc_at(poly, k);
        if (s > eps && total - s > eps && (best < 0 || k < best)) best = k;
    };
    for (const auto& r : st.recs) {
        if (!r.alive) continue;
        if (r.a == h) {
            consider(r.alo);
            consider(r.ahi);
        }
        if (r.b == h) {
            consider(r.blo);
            consider(r.bhi);
        }
    }
    return best;
}

inline void run_truncation(TruncState& st, const NetConfig& cfg) {
    const int cap = 50 * static_cast<int>(st.frags.size()) + 1000;
    int splits = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        const size_t count = st.frags.size();
        for (size_t h = 0; h < count; ++h) {
            if (!st.frags[h].alive) continue;
            const int cut = find_cut_vertex(st, static_cast<int>(h), cfg.split_epsilon);
            if (cut < 0) continue;
            if (++splits > cap) {
                std::vector<Id> ids;
                ids.push_back(st.frags[h].source_id);
                throw ConversionError("truncate", "split iteration cap exceeded", ids);
            }
            split_frag(st, static_cast<int>(h), cut, cfg.split_snap_dist);
            changed = true;
        }
    }
}

inline void assign_fragment_ids(TruncState& st) {
    std::map<Id, std::vector<int>> by_source;
    for (size_t h = 0; h < st.frags.size(); ++h)
        if (st.frags[h].alive) by_source[st.frags[h].source_id].push_back(static_cast<int>(h));
    for (auto& [src, handles] : by_source) {
        if (handles.size() == 1) {
            st.frags[handles[0]].final_id = src;
            continue;
        }
        const Polyline& orig = st.originals[src];
        std::vector<std::pair<double, int>> keyed;
        for (int h : handles) {
            const auto proj = project_to_polyline(orig, st.frags[h].poly.front());
            keyed.emplace_back(proj.s, h);
        }
        std::sort(keyed.begin(), keyed.end());
        for (size_t i = 0; i < keyed.size(); ++i)
            st.frags[keyed[i].second].final_id = src + "." + std::to_string(i);
    }
}

// A record only ties two fragments into one edge when it spans the better part
// of both; corner-touch slivers left behind by splitting do not count.
inline bool counts_for_grouping(const TruncState& st, const AdjRec& r) {
    const auto span = [&](const Polyline& poly, int lo, int hi) {
        return arc_at(poly, hi) - arc_at(poly, lo);
    };
    const double la = arc_length(st.frags[r.a].poly);
    const double lb = arc_length(st.frags[r.b].poly);
    if (la <= 0.0 || lb <= 0.0) return false;
    return span(st.frags[r.a].poly, r.alo, r.ahi) >= 0.5 * la &&
           span(st.frags[r.b].poly, r.blo, r.bhi) >= 0.5 * lb;
}

struct EdgeCand {
    std::vector<int> frag_handles;  // right -> left
    Id key;
};

inline double mid_offset(const Frag& ref, const Frag& other) {
    const double mid_s = arc_length(ref.poly) * 0.5;
    const PoseOnLine pose = point_at_arclength(ref.poly, mid_s);
    const Point2 n = left_normal({std::cos(pose.heading), std::sin(pose.heading)});
    const double other_mid = arc_length(other.poly) * 0.5;
    const Point2 p = point_at_arclength(other.poly, other_mid).point;
    return dot(p - pose.point, n);
}

inline std::vector<EdgeCand> run_grouping(const TruncState& st) {
    std::vector<int> alive;
    std::map<int, int> compact;
    for (size_t h = 0; h < st.frags.size(); ++h)
        if (st.frags[h].alive) {
            compact[static_cast<int>(h)] = static_cast<int>(alive.size());
            alive.push_back(static_cast<int>(h));
        }

    Dsu dsu(static_cast<int>(alive.size()));
    std::map<int, std::set<int>> lefts, rights;
    for (const auto& r : st.recs) {
        if (!r.alive || !counts_for_grouping(st, r)) continue;
        dsu.unite(compact[r.a], compact[r.b]);
        if (r.side > 0) {
            lefts[r.a].insert(r.b);
            rights[r.b].insert(r.a);
        } else {
            rights[r.a].insert(r.b);
            lefts[r.b].insert(r.a);
        }
    }

    std::map<int, std::vector<int>> components;
    for (size_t i = 0; i < alive.size(); ++i) components[dsu.find(static_cast<int>(i))].push_back(alive[i]);

    std::vector<EdgeCand> cands;
    for (auto& [root, members] : components) {
        std::sort(members.begin(), members.end(), [&](int a, int b) {
            return st.frags[a].final_id < st.frags[b].final_id;
        });
        std::vector<int> ordered;
        // Walk the side-neighbor chain from the rightmost member.
        const std::set<int> member_set(members.begin(), members.end());
        std::vector<int> rightmost;
        for (int h : members) {
            bool has_right = false;
            if (auto it = rights.find(h); it != rights.end())
                for (int r : it->second)
                    if (member_set.count(r)) has_right = true;
            if (!has_right) rightmost.push_back(h);
        }
        if (rightmost.empty())
            throw ConversionError("group", "cyclic lateral adjacency",
                                  {st.frags[members.front()].source_id});
        bool chain_ok = rightmost.size() == 1;
        if (chain_ok) {
            std::set<int> visited;
            int cur = rightmost.front();
            while (true) {
                ordered.push_back(cur);
                visited.insert(cur);
                std::vector<int> nexts;
                if (auto it = lefts.find(cur); it != lefts.end())
                    for (int l : it->second)
                        if (member_set.count(l) && !visited.count(l)) nexts.push_back(l);
                if (nexts.empty()) break;
                if (nexts.size() > 1) {
                    chain_ok = false;
                    break;
                }
                cur = nexts.front();
            }
            if (ordered.size() != members.size()) chain_ok = false;
        }
        if (!chain_ok) {
            // Side links are ambiguous; fall back to sorting by lateral offset
            // against the lexicographically first member.
            const Frag& ref = st.frags[members.front()];
            std::vector<std::pair<double, int>> keyed;
            for (int h : members)
                keyed.emplace_back(h == members.front() ? 0.0 : mid_offset(ref, st.frags[h]), h);
            std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first < b.first;
                return st.frags[a.second].final_id < st.frags[b.second].final_id;
            });
            ordered.clear();
            // keyed is ordered rightmost (most negative offset) first
            std::vector<std::pair<double, int>> neg;
            for (const auto& kv : keyed) neg.push_back(kv);
            for (const auto& kv : neg) ordered.push_back(kv.second);
        }
        EdgeCand c;
        c.frag_handles = ordered;
        c.key = st.frags[members.front()].final_id;
        cands.push_back(std::move(c));
    }
    std::sort(cands.begin(), cands.end(),
              [](const EdgeCand& a, const EdgeCand& b) { return a.key < b.key; });
    return cands;
}

struct LaneRef {
    int cand = -1;
    int frag = -1;
    Point2 start, end;
};

}  // namespace net_detail

// --------------------------------------------------------------------------
// Public operations
// --------------------------------------------------------------------------

// Splits lane centers until every adjacency record begins and ends at (or
// within split_epsilon of) the endpoints of the fragment carrying it.
inline std::vector<LaneCenter> truncate_lane_centers(const Scenario& sc,
                                                     const NetConfig& cfg = {}) {
    WarningList warnings;
    auto st = net_detail::init_trunc_state(sc, warnings);
    net_detail::run_truncation(st, cfg);
    net_detail::assign_fragment_ids(st);

    std::vector<LaneCenter> out;
    for (const auto& f : st.frags) {
        if (!f.alive) continue;
        LaneCenter l;
        l.id = f.final_id;
        l.polyline = f.poly;
        l.lane_type = f.type;
        l.speed_limit = f.speed_limit;
        out.push_back(std::move(l));
    }
    std::sort(out.begin(), out.end(),
              [](const LaneCenter& a, const LaneCenter& b) { return a.id < b.id; });
    return out;
}

// Groups truncated fragments into parallel-lane bundles. Exposed mainly for
// testing; build_network drives the same internals.
inline std::vector<std::vector<Id>> group_into_edges(const Scenario& sc,
                                                     const NetConfig& cfg = {}) {
    WarningList warnings;
    auto st = net_detail::init_trunc_state(sc, warnings);
    net_detail::run_truncation(st, cfg);
    net_detail::assign_fragment_ids(st);
    const auto cands = net_detail::run_grouping(st);
    std::vector<std::vector<Id>> out;
    for (const auto& c : cands) {
        std::vector<Id> ids;
        for (int h : c.frag_handles) ids.push_back(st.frags[h].final_id);
        out.push_back(std::move(ids));
    }
    return out;
}

namespace net_detail {

inline bool diverge_pattern(const LaneRef& a, const LaneRef& b, double tol) {
    return distance(a.start, b.start) <= tol && distance(a.end, b.end) > tol;
}

inline bool merge_pattern(const LaneRef& a, const LaneRef& b, double tol) {
    return distance(a.end, b.end) <= tol && distance(a.start, b.start) > tol;
}

inline Movement classify_movement(double entry_heading, double exit_heading,
                                  const NetConfig& cfg) {
    const double delta = wrap_angle(exit_heading - entry_heading);
    const double deg = std::abs(delta) * 180.0 / 3.14159265358979323846;
    if (deg < cfg.straight_max_deg) return Movement::straight;
    const double turn_uturn_boundary = 0.5 * (cfg.ambiguous_low_deg + cfg.uturn_min_deg);
    if (deg >= turn_uturn_boundary) return Movement::uturn;
    return delta > 0 ? Movement::left : Movement::right;
}

inline Polyline concat_shapes(const std::vector<const Polyline*>& parts) {
    Polyline out;
    for (const Polyline* p : parts)
        for (const auto& pt : *p) {
            if (!out.empty() && distance(out.back(), pt) < 1e-9) continue;
            out.push_back(pt);
        }
    return out;
}

}  // namespace net_detail

void embed_semantics(Network& net, const Scenario& sc, const Config& config);

inline Network build_network(const Scenario& sc, const Config& config = {}) {
    using namespace net_detail;
    const NetConfig& cfg = config.net;
    Network net;

    auto st = init_trunc_state(sc, net.warnings);
    run_truncation(st, cfg);
    assign_fragment_ids(st);
    const auto cands = run_grouping(st);

    // ---- node identification over edge candidates ----
    std::vector<LaneRef> lane_refs;
    for (size_t ci = 0; ci < cands.size(); ++ci)
        for (int h : cands[ci].frag_handles) {
            LaneRef lr;
            lr.cand = static_cast<int>(ci);
            lr.frag = h;
            lr.start = st.frags[h].poly.front();
            lr.end = st.frags[h].poly.back();
            lane_refs.push_back(lr);
        }

    Dsu cand_dsu(static_cast<int>(cands.size()));
    std::vector<bool> consumed(cands.size(), false);
    for (size_t i = 0; i < lane_refs.size(); ++i)
        for (size_t j = i + 1; j < lane_refs.size(); ++j) {
            const auto& a = lane_refs[i];
            const auto& b = lane_refs[j];
            if (diverge_pattern(a, b, cfg.node_merge_dist) ||
                merge_pattern(a, b, cfg.node_merge_dist)) {
                cand_dsu.unite(a.cand, b.cand);
                consumed[a.cand] = true;
                consumed[b.cand] = true;
            }
        }

    std::map<int, std::vector<int>> groups;  // dsu root -> consumed cand indices
    for (size_t ci = 0; ci < cands.size(); ++ci)
        if (consumed[ci]) groups[cand_dsu.find(static_cast<int>(ci))].push_back(static_cast<int>(ci));

    // ---- remaining candidates become edges ----
    std::map<int, int> edge_of_cand;
    for (size_t ci = 0; ci < cands.size(); ++ci) {
        if (consumed[ci]) continue;
        Edge e;
        e.id = "e" + std::to_string(net.edges.size());
        for (size_t li = 0; li < cands[ci].frag_handles.size(); ++li) {
            const Frag& f = st.frags[cands[ci].frag_handles[li]];
            NetLane nl;
            nl.id = e.id + "_" + std::to_string(li);
            nl.source_lane_ids = {f.source_id};
            nl.shape = f.poly;
            nl.width = cfg.default_lane_width;
            nl.speed_limit = f.speed_limit;
            nl.lane_type = f.type;
            e.lanes.push_back(std::move(nl));
        }
        edge_of_cand[static_cast<int>(ci)] = static_cast<int>(net.edges.size());
        net.edges.push_back(std::move(e));
    }

    struct RealLane {
        int edge = -1;
        int lane = -1;
        Point2 start, end;
    };
    std::vector<RealLane> real_lanes;
    for (size_t ei = 0; ei < net.edges.size(); ++ei)
        for (size_t li = 0; li < net.edges[ei].lanes.size(); ++li)
            real_lanes.push_back({static_cast<int>(ei), static_cast<int>(li),
                                  net.edges[ei].lanes[li].shape.front(),
                                  net.edges[ei].lanes[li].shape.back()});

    const auto nearest_real_end = [&](const Point2& p) -> const RealLane* {
        const RealLane* best = nullptr;
        double best_d = cfg.node_merge_dist;
        for (const auto& rl : real_lanes) {
            const double d = distance(rl.end, p);
            if (d <= best_d) {
                best_d = d;
                best = &rl;
            }
        }
        return best;
    };
    const auto nearest_real_start = [&](const Point2& p) -> const RealLane* {
        const RealLane* best = nullptr;
        double best_d = cfg.node_merge_dist;
        for (const auto& rl : real_lanes) {
            const double d = distance(rl.start, p);
            if (d <= best_d) {
                best_d = d;
                best = &rl;
            }
        }
        return best;
    };

    // ---- heuristic nodes and their connections ----
    std::vector<std::pair<int, std::vector<int>>> ordered_groups(groups.begin(), groups.end());
    std::sort(ordered_groups.begin(), ordered_groups.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    for (auto& [root, member_cands] : ordered_groups) {
        std::sort(member_cands.begin(), member_cands.end());
        Node node;
        node.id = "n" + std::to_string(net.nodes.size());
        node.kind = NodeKind::junction;

        std::vector<int> member_frags;
        for (int ci : member_cands)
            for (int h : cands[ci].frag_handles) member_frags.push_back(h);
        std::sort(member_frags.begin(), member_frags.end(), [&](int a, int b) {
            return st.frags[a].final_id < st.frags[b].final_id;
        });

        Polyline cloud;
        for (int h : member_frags)
            for (const auto& p : st.frags[h].poly) cloud.push_back(p);
        node.shape = convex_hull(cloud);

        struct MemberIO {
            const RealLane* from = nullptr;
            const RealLane* to = nullptr;
        };
        std::map<int, MemberIO> io;
        for (int h : member_frags) {
            io[h].from = nearest_real_end(st.frags[h].poly.front());
            io[h].to = nearest_real_start(st.frags[h].poly.back());
        }
        // chain graph: member lane end feeding another member lane start
        std::map<int, std::vector<int>> chain_next;
        for (int ha : member_frags)
            for (int hb : member_frags) {
                if (ha == hb) continue;
                if (distance(st.frags[ha].poly.back(), st.frags[hb].poly.front()) <=
                    cfg.node_merge_dist)
                    chain_next[ha].push_back(hb);
            }

        std::set<int> covered;
        struct PendingConn {
            const RealLane* from;
            const RealLane* to;
            Polyline shape;
            std::vector<Id> sources;
            double speed = 0.0;
            std::vector<int> frags;
        };
        std::vector<PendingConn> pending;

        for (int h : member_frags) {
            if (io[h].from && io[h].to) {
                PendingConn pc;
                pc.from = io[h].from;
                pc.to = io[h].to;
                pc.shape = st.frags[h].poly;
                pc.sources = {st.frags[h].source_id};
                pc.speed = st.frags[h].speed_limit;
                pc.frags = {h};
                pending.push_back(std::move(pc));
                covered.insert(h);
            }
        }
        // Composite paths through chained member lanes (e.g., roundabout
        // segments): entry lanes breadth-first search to each reachable exit.
        int composites = 0;
        for (int h : member_frags) {
            if (!io[h].from || io[h].to) continue;
            std::map<int, int> parent;
            parent[h] = h;
            std::vector<int> frontier{h};
            std::vector<int> order;
            while (!frontier.empty()) {
                std::vector<int> next;
                for (int cur : frontier) {
                    auto it = chain_next.find(cur);
                    if (it == chain_next.end()) continue;
                    for (int nb : it->second)
                        if (!parent.count(nb)) {
                            parent[nb] = cur;
                            next.push_back(nb);
                            order.push_back(nb);
                        }
                }
                frontier = std::move(next);
            }
            for (int sink : order) {
                if (!io[sink].to) continue;
                if (composites >= 64) {
                    warn(net.warnings, "convert",
                         "node " + node.id + ": composite connection cap reached");
                    break;
                }
                std::vector<int> path;
                for (int cur = sink; cur != h; cur = parent[cur]) path.push_back(cur);
                path.push_back(h);
                std::reverse(path.begin(), path.end());
                PendingConn pc;
                pc.from = io[h].from;
                pc.to = io[sink].to;
                std::vector<const Polyline*> parts;
                double speed = 0.0;
                for (int ph : path) {
                    parts.push_back(&st.frags[ph].poly);
                    pc.sources.push_back(st.frags[ph].source_id);
                    speed = std::max(speed, st.frags[ph].speed_limit);
                    covered.insert(ph);
                }
                pc.shape = concat_shapes(parts);
                pc.speed = speed;
                pc.frags = path;
                pending.push_back(std::move(pc));
                ++composites;
            }
        }
        for (int h : member_frags)
            if (!covered.count(h))
                warn(net.warnings, "convert",
                     "node " + node.id + ": junction-internal lane " + st.frags[h].final_id +
                         " is not part of any connection");

        for (auto& pc : pending) {
            Connection c;
            c.id = "c" + std::to_string(net.connections.size());
            c.from_edge = net.edges[pc.from->edge].id;
            c.from_lane_index = pc.from->lane;
            c.to_edge = net.edges[pc.to->edge].id;
            c.to_lane_index = pc.to->lane;
            c.via_node = node.id;
            c.shape = std::move(pc.shape);
            c.source_lane_ids = std::move(pc.sources);
            c.speed_limit = pc.speed;
            net.connections.push_back(std::move(c));
        }
        net.nodes.push_back(std::move(node));
    }

    // ---- edge endpoints: attach via connections, then close with endpoint nodes ----
    for (const auto& c : net.connections) {
        const int fe = net.edge_index(c.from_edge);
        const int te = net.edge_index(c.to_edge);
        if (fe >= 0) {
            if (net.edges[fe].to_node.empty())
                net.edges[fe].to_node = c.via_node;
            else if (net.edges[fe].to_node != c.via_node)
                warn(net.warnings, "convert",
                     "edge " + c.from_edge + " feeds multiple nodes; keeping " +
                         net.edges[fe].to_node);
        }
        if (te >= 0) {
            if (net.edges[te].from_node.empty())
                net.edges[te].from_node = c.via_node;
            else if (net.edges[te].from_node != c.via_node)
                warn(net.warnings, "convert",
                     "edge " + c.to_edge + " is fed by multiple nodes; keeping " +
                         net.edges[te].from_node);
        }
    }

    struct OpenEnd {
        int edge = -1;
        bool is_end = false;  // true: edge terminus; false: edge origin
    };
    std::vector<OpenEnd> open_ends;
    for (size_t ei = 0; ei < net.edges.size(); ++ei) {
        if (net.edges[ei].from_node.empty()) open_ends.push_back({static_cast<int>(ei), false});
        if (net.edges[ei].to_node.empty()) open_ends.push_back({static_cast<int>(ei), true});
    }
    Dsu end_dsu(static_cast<int>(open_ends.size()));
    const auto lane_points = [&](const OpenEnd& oe) {
        Polyline pts;
        for (const auto& l : net.edges[oe.edge].lanes)
            pts.push_back(oe.is_end ? l.shape.back() : l.shape.front());
        return pts;
    };
    for (size_t i = 0; i < open_ends.size(); ++i)
        for (size_t j = 0; j < open_ends.size(); ++j) {
            if (i == j) continue;
            if (!open_ends[i].is_end || open_ends[j].is_end) continue;
            const Polyline ends = lane_points(open_ends[i]);
            const Polyline starts = lane_points(open_ends[j]);
            bool linked = false;
            for (const auto& a : ends)
                for (const auto& b : starts)
                    if (distance(a, b) <= cfg.node_merge_dist) linked = true;
            if (linked) end_dsu.unite(static_cast<int>(i), static_cast<int>(j));
        }
    std::map<int, std::vector<int>> end_clusters;
    for (size_t i = 0; i < open_ends.size(); ++i)
        end_clusters[end_dsu.find(static_cast<int>(i))].push_back(static_cast<int>(i));

    for (auto& [root, members] : end_clusters) {
        Node node;
        node.id = "n" + std::to_string(net.nodes.size());
        node.kind = NodeKind::endpoint;
        for (int m : members) {
            const Polyline pts = lane_points(open_ends[m]);
            for (const auto& p : pts) node.shape.push_back(p);
            if (open_ends[m].is_end)
                net.edges[open_ends[m].edge].to_node = node.id;
            else
                net.edges[open_ends[m].edge].from_node = node.id;
        }
        // pass-through connections so routes can continue across the seam
        for (int mi : members) {
            if (!open_ends[mi].is_end) continue;
            const Edge& in_edge = net.edges[open_ends[mi].edge];
            for (int mj : members) {
                if (open_ends[mj].is_end) continue;
                const Edge& out_edge = net.edges[open_ends[mj].edge];
                for (size_t li = 0; li < in_edge.lanes.size(); ++li) {
                    const Point2 end_pt = in_edge.lanes[li].shape.back();
                    int best = -1;
                    double best_d = cfg.node_merge_dist;
                    for (size_t lj = 0; lj < out_edge.lanes.size(); ++lj) {
                        const double d = distance(end_pt, out_edge.lanes[lj].shape.front());
                        if (d <= best_d) {
                            best_d = d;
                            best = static_cast<int>(lj);
                        }
                    }
                    if (best < 0) continue;
                    Connection c;
                    c.id = "c" + std::to_string(net.connections.size());
                    c.from_edge = in_edge.id;
                    c.from_lane_index = static_cast<int>(li);
                    c.to_edge = out_edge.id;
                    c.to_lane_index = best;
                    c.via_node = node.id;
                    const Point2 start_pt = out_edge.lanes[best].shape.front();
                    c.shape = {end_pt, start_pt};
                    if (distance(end_pt, start_pt) < 1e-9) {
                        const Polyline& os = out_edge.lanes[best].shape;
                        const Point2 dir = normalized(os[1] - os[0]);
                        c.shape[1] = start_pt + dir * 1e-3;
                    }
                    c.source_lane_ids = in_edge.lanes[li].source_lane_ids;
                    c.speed_limit = in_edge.lanes[li].speed_limit;
                    net.connections.push_back(std::move(c));
                }
            }
        }
        net.nodes.push_back(std::move(node));
    }

    embed_semantics(net, sc, config);

    // declared exits that did not materialize as geometric continuity
    for (const auto& l : sc.lane_centers)
        for (const auto& exit_id : l.exit_ids) {
            const Polyline& self = st.originals[l.id];
            const Polyline& next = st.originals[exit_id];
            if (distance(self.back(), next.front()) > cfg.node_merge_dist)
                warn(net.warnings, "convert",
                     "declared exit " + l.id + " -> " + exit_id +
                         " has no geometric continuation; geometry kept");
        }

    return net;
}

// Fills semantic attributes on a topology-complete network: speeds, priorities,
// stop-sign control, signal heads, movement classes, coverage ratio.
inline void embed_semantics(Network& net, const Scenario& sc, const Config& config) {
    const NetConfig& cfg = config.net;

    for (auto& e : net.edges) {
        double speed = 0.0;
        bool freeway = false;
        for (const auto& l : e.lanes) {
            speed = std::max(speed, l.speed_limit);
            freeway = freeway || l.lane_type == LaneType::freeway;
        }
        e.speed_limit = speed;
        const size_t n = e.lanes.size();
        e.priority = 1;
        if (n >= 2) e.priority = 2;
        if (n >= 3 || freeway) e.priority = 3;
    }

    const auto lane_sources = [&](const Id& edge_id, int lane_idx) -> const std::vector<Id>* {
        const int ei = net.edge_index(edge_id);
        if (ei < 0 || lane_idx < 0 || lane_idx >= static_cast<int>(net.edges[ei].lanes.size()))
            return nullptr;
        return &net.edges[ei].lanes[lane_idx].source_lane_ids;
    };

    for (auto& c : net.connections) {
        // movement from approach and departure headings
        double entry_heading, exit_heading;
        const int fe = net.edge_index(c.from_edge);
        const int te = net.edge_index(c.to_edge);
        if (fe >= 0 && c.from_lane_index >= 0) {
            const Polyline& s = net.edges[fe].lanes[c.from_lane_index].shape;
            entry_heading = heading_of(s[s.size() - 2], s.back());
        } else {
            entry_heading = heading_of(c.shape[0], c.shape[1]);
        }
        if (te >= 0 && c.to_lane_index >= 0) {
            const Polyline& s = net.edges[te].lanes[c.to_lane_index].shape;
            exit_heading = heading_of(s[0], s[1]);
        } else {
            exit_heading = heading_of(c.shape[c.shape.size() - 2], c.shape.back());
        }
        c.movement = net_detail::classify_movement(entry_heading, exit_heading, cfg);

        // stop-sign control: regulation on the movement's own lanes or its approach lane
        bool stop = false;
        for (const auto& sid : c.source_lane_ids)
            if (sc.lane_has_stop_sign(sid)) stop = true;
        if (const auto* srcs = lane_sources(c.from_edge, c.from_lane_index))
            for (const auto& sid : *srcs)
                if (sc.lane_has_stop_sign(sid)) stop = true;
        c.stop_controlled = stop;
        if (stop) {
            const int ni = net.node_index(c.via_node);
            if (ni >= 0) net.nodes[ni].stop_controlled_connection_ids.push_back(c.id);
        }
    }

    int dropped_heads = 0;
    for (const auto& obs : sc.signal_observations) {
        bool attached = false;
        for (auto& c : net.connections) {
            bool lane_match = false;
            for (const auto& sid : c.source_lane_ids)
                if (sid == obs.lane_id) lane_match = true;
            if (!lane_match)
                if (const auto* srcs = lane_sources(c.from_edge, c.from_lane_index))
                    for (const auto& sid : *srcs)
                        if (sid == obs.lane_id) lane_match = true;
            if (!lane_match) continue;
            if (distance(obs.stop_point, c.shape.front()) > cfg.placement_tol) continue;
            if (!c.has_signal) {
                c.has_signal = true;
                c.stop_point = obs.stop_point;
            }
            if (std::find(c.signal_lane_ids.begin(), c.signal_lane_ids.end(), obs.lane_id) ==
                c.signal_lane_ids.end())
                c.signal_lane_ids.push_back(obs.lane_id);
            const int ni = net.node_index(c.via_node);
            if (ni >= 0) net.nodes[ni].signalized = true;
            attached = true;
        }
        if (!attached) ++dropped_heads;
    }
    if (dropped_heads > 0)
        warn(net.warnings, "convert",
             std::to_string(dropped_heads) +
                 " signal observation(s) reference lanes absent from all connections; dropped");

    // classify heuristic nodes now that connections are known
    for (auto& n : net.nodes) {
        if (n.kind == NodeKind::endpoint) continue;
        std::set<Id> in_edges, out_edges;
        std::set<std::pair<Id, int>> in_lanes, out_lanes;
        for (const auto& c : net.connections) {
            if (c.via_node != n.id) continue;
            in_edges.insert(c.from_edge);
            out_edges.insert(c.to_edge);
            in_lanes.insert({c.from_edge, c.from_lane_index});
            out_lanes.insert({c.to_edge, c.to_lane_index});
        }
        std::set<Id> attached = in_edges;
        attached.insert(out_edges.begin(), out_edges.end());
        if (attached.size() >= 3)
            n.kind = NodeKind::junction;
        else if (in_lanes.size() != out_lanes.size())
            n.kind = NodeKind::lane_count_change;
        else
            n.kind = NodeKind::merge_split;
    }

    // coverage of the original lane-center points by the produced geometry
    size_t total = 0, covered = 0;
    std::map<Id, std::vector<const Polyline*>> shapes_by_source;
    std::vector<const Polyline*> all_shapes;
    for (const auto& e : net.edges)
        for (const auto& l : e.lanes) {
            all_shapes.push_back(&l.shape);
            for (const auto& sid : l.source_lane_ids) shapes_by_source[sid].push_back(&l.shape);
        }
    for (const auto& c : net.connections) {
        all_shapes.push_back(&c.shape);
        for (const auto& sid : c.source_lane_ids) shapes_by_source[sid].push_back(&c.shape);
    }
    for (const auto& l : sc.lane_centers) {
        const auto own = shapes_by_source.find(l.id);
        for (const auto& p : l.polyline) {
            ++total;
            bool hit = false;
            if (own != shapes_by_source.end())
                for (const Polyline* s : own->second)
                    if (distance_to_polyline(*s, p) <= cfg.lateral_coverage_tol) {
                        hit = true;
                        break;
                    }
            if (!hit)
                for (const Polyline* s : all_shapes) {
                    if (distance_to_polyline(*s, p) <= cfg.lateral_coverage_tol) {
                        hit = true;
                        break;
                    }
                }
            if (hit) ++covered;
        }
    }
    net.coverage_ratio = total == 0 ? 1.0 : static_cast<double>(covered) / static_cast<double>(total);
}

}  // namespace scenesim
