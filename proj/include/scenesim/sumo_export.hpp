#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenesim/common.hpp"
#include "scenesim/demand.hpp"
#include "scenesim/net_builder.hpp"
#include "scenesim/random.hpp"

namespace scenesim {

namespace sumo_detail {

constexpr int kFormatVersion = 1;

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline std::string shape_attr(const Polyline& poly) {
    std::string out;
    for (size_t i = 0; i < poly.size(); ++i) {
        if (i) out += ' ';
        out += fmt2(poly[i].x) + "," + fmt2(poly[i].y);
    }
    return out;
}

inline Point2 node_position(const Node& n) {
    if (n.shape.empty()) return {0.0, 0.0};
    Point2 c{0.0, 0.0};
    for (const auto& p : n.shape) c = c + p;
    return c * (1.0 / static_cast<double>(n.shape.size()));
}

inline char state_char(SignalState s) {
    switch (s) {
        case SignalState::red: return 'r';
        case SignalState::yellow: return 'y';
        case SignalState::green: return 'G';
        case SignalState::unknown: return 'o';
    }
    return 'o';
}

// all attribute values of `attr` on elements named `tag`, in document order
inline std::vector<std::string> scan_attrs(const std::string& doc, const std::string& tag,
                                           const std::string& attr) {
    std::vector<std::string> out;
    const std::string open = "<" + tag;
    const std::string key = attr + "=\"";
    size_t pos = 0;
    while ((pos = doc.find(open, pos)) != std::string::npos) {
        const char after = pos + open.size() < doc.size() ? doc[pos + open.size()] : '\0';
        if (after != ' ' && after != '\t' && after != '\n' && after != '>' && after != '/') {
            pos += open.size();
            continue;
        }
        const size_t close = doc.find('>', pos);
        if (close == std::string::npos) break;
        const std::string elem = doc.substr(pos, close - pos);
        const size_t k = elem.find(key);
        if (k != std::string::npos) {
            const size_t start = k + key.size();
            const size_t end = elem.find('"', start);
            if (end != std::string::npos) out.push_back(elem.substr(start, end - start));
        } else {
            out.emplace_back();
        }
        pos = close + 1;
    }
    return out;
}

}  // namespace sumo_detail

inline std::string sumo_nodes_xml(const Network& net) {
    using namespace sumo_detail;
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<nodes>\n";
    for (const auto& n : net.nodes) {
        const Point2 p = node_position(n);
        std::string type = "priority";
        if (n.signalized) {
            type = "traffic_light";
        } else if (!n.stop_controlled_connection_ids.empty()) {
            size_t via = 0;
            for (const auto& c : net.connections)
                if (c.via_node == n.id) ++via;
            type = n.stop_controlled_connection_ids.size() == via && via > 0 ? "allway_stop"
                                                                            : "priority";
        }
        os << "  <node id=\"" << xml_escape(n.id) << "\" x=\"" << fmt2(p.x) << "\" y=\""
           << fmt2(p.y) << "\" type=\"" << type << "\"/>\n";
    }
    os << "</nodes>\n";
    return os.str();
}

inline std::string sumo_edges_xml(const Network& net) {
    using namespace sumo_detail;
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<edges>\n";
    for (const auto& e : net.edges) {
        os << "  <edge id=\"" << xml_escape(e.id) << "\"";
        if (!e.from_node.empty()) os << " from=\"" << xml_escape(e.from_node) << "\"";
        if (!e.to_node.empty()) os << " to=\"" << xml_escape(e.to_node) << "\"";
        os << " priority=\"" << e.priority << "\" numLanes=\"" << e.lanes.size() << "\" speed=\""
           << fmt2(e.speed_limit) << "\">\n";
        for (size_t i = 0; i < e.lanes.size(); ++i) {
            const NetLane& l = e.lanes[i];
            os << "    <lane index=\"" << i << "\" speed=\"" << fmt2(l.speed_limit)
               << "\" width=\"" << fmt2(l.width) << "\" shape=\"" << shape_attr(l.shape)
               << "\"/>\n";
        }
        os << "  </edge>\n";
    }
    os << "</edges>\n";
    return os.str();
}

inline std::string sumo_connections_xml(const Network& net) {
    using namespace sumo_detail;
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<connections>\n";
    for (const auto& c : net.connections) {
        os << "  <connection from=\"" << xml_escape(c.from_edge) << "\" to=\""
           << xml_escape(c.to_edge) << "\" fromLane=\"" << c.from_lane_index << "\" toLane=\""
           << c.to_lane_index << "\"";
        if (c.stop_controlled) os << " pass=\"false\"";
        os << "/>\n";
    }
    os << "</connections>\n";
    return os.str();
}

// Static signal plans: consecutive identical per-connection state maps are
// merged into phases; the state string is ordered by connection id.
inline std::string sumo_tll_xml(const Network& net, double dt = 0.1) {
    using namespace sumo_detail;
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<tlLogics>\n";
    for (const auto& prog : net.signal_programs) {
        std::vector<const Connection*> conns;
        for (const auto& c : net.connections)
            if (c.via_node == prog.node_id) conns.push_back(&c);
        std::sort(conns.begin(), conns.end(),
                  [](const Connection* a, const Connection* b) { return a->id < b->id; });
        if (conns.empty() || prog.steps.empty()) continue;
        os << "  <tlLogic id=\"" << xml_escape(prog.node_id)
           << "\" type=\"static\" programID=\"estimated\" offset=\"0\">\n";
        std::string prev_state;
        int run = 0;
        auto flush = [&]() {
            if (run > 0)
                os << "    <phase duration=\"" << fmt2(run * dt) << "\" state=\"" << prev_state
                   << "\"/>\n";
        };
        for (size_t step = 0; step < prog.steps.size(); ++step) {
            std::string state;
            for (const Connection* c : conns)
                state += state_char(prog.state_at(static_cast<int>(step), c->id));
            if (state == prev_state) {
                ++run;
            } else {
                flush();
                prev_state = state;
                run = 1;
            }
        }
        flush();
        os << "  </tlLogic>\n";
    }
    os << "</tlLogics>\n";
    return os.str();
}

inline std::string sumo_routes_xml(const Network& net, const Demand& demand) {
    using namespace sumo_detail;
    (void)net;
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<routes>\n";
    for (const auto& a : demand.agents) {
        if (a.replay) {
            os << "  <!-- replay agent " << xml_escape(a.track_id) << " ("
               << to_string(a.object_type) << ") -->\n";
            continue;
        }
        if (!a.placement.on_network || !a.route) {
            os << "  <!-- off-network agent " << xml_escape(a.track_id) << " class "
               << to_string(a.override_class) << " -->\n";
            continue;
        }
        const BehaviorParams& p = a.params;
        os << "  <vType id=\"vt_" << xml_escape(a.track_id)
           << "\" carFollowModel=\"Krauss\" length=\"" << fmt2(a.length) << "\" width=\""
           << fmt2(a.width) << "\" speedFactor=\"" << fmt4(p.speed_factor) << "\" minGap=\""
           << fmt4(p.min_gap) << "\" accel=\"" << fmt4(p.accel) << "\" decel=\"" << fmt4(p.decel)
           << "\" sigma=\"" << fmt4(p.sigma) << "\" tau=\"" << fmt4(p.tau)
           << "\" startupDelay=\"" << fmt4(p.startup_delay) << "\" minGapLat=\""
           << fmt4(p.min_gap_lat) << "\" lcKeepRight=\"" << fmt4(p.lc_keep_right)
           << "\" lcSublane=\"" << fmt4(p.lc_sublane) << "\" jmStopLineGap=\""
           << fmt4(p.jm_stop_line_gap) << "\" jmSigmaMinor=\"" << fmt4(p.jm_sigma_minor)
           << "\" jmIgnoreKeepClearTime=\"" << fmt4(p.jm_ignore_keep_clear_time) << "\"/>\n";
        os << "  <vehicle id=\"" << xml_escape(a.track_id) << "\" type=\"vt_"
           << xml_escape(a.track_id) << "\" depart=\"0.00\" departLane=\""
           << a.placement.lane_index << "\" departPos=\"" << fmt2(a.placement.offset)
           << "\" departSpeed=\"" << fmt2(a.initial_speed) << "\">\n    <route edges=\"";
        for (size_t i = 0; i < a.route->edge_sequence.size(); ++i) {
            if (i) os << ' ';
            os << xml_escape(a.route->edge_sequence[i]);
        }
        os << "\"/>\n  </vehicle>\n";
    }
    os << "</routes>\n";
    return os.str();
}

struct ExportResult {
    std::vector<std::string> files;
    std::string manifest_path;
    WarningList warnings;
};

inline ExportResult export_sumo(const Network& net, const Demand& demand,
                                const std::string& out_dir, const std::string& prefix = "net",
                                double dt = 0.1) {
    namespace fs = std::filesystem;
    using namespace sumo_detail;
    fs::create_directories(out_dir);
    ExportResult res;
    const std::vector<std::pair<std::string, std::string>> docs = {
        {prefix + ".nod.xml", sumo_nodes_xml(net)},
        {prefix + ".edg.xml", sumo_edges_xml(net)},
        {prefix + ".con.xml", sumo_connections_xml(net)},
        {prefix + ".tll.xml", sumo_tll_xml(net, dt)},
        {prefix + ".rou.xml", sumo_routes_xml(net, demand)},
    };
    nlohmann::ordered_json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["prefix"] = prefix;
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& [name, content] : docs) {
        const fs::path path = fs::path(out_dir) / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw ExportError("cannot open for writing: " + path.string());
        os << content;
        os.close();
        nlohmann::ordered_json fj;
        fj["name"] = name;
        fj["bytes"] = content.size();
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(content)));
        fj["fnv1a64"] = hex;
        files.push_back(fj);
        res.files.push_back(path.string());
    }
    manifest["files"] = files;
    const fs::path mpath = fs::path(out_dir) / (prefix + ".manifest.json");
    std::ofstream ms(mpath, std::ios::binary);
    if (!ms) throw ExportError("cannot open for writing: " + mpath.string());
    ms << manifest.dump(2) << "\n";
    res.manifest_path = mpath.string();
    return res;
}

// Minimal reader for round-trip checks: element counts and ids, not a full
// SUMO parser.
struct SumoSummary {
    std::vector<Id> node_ids;
    std::map<Id, std::string> node_types;
    std::vector<Id> edge_ids;
    std::map<Id, int> edge_lane_counts;
    std::map<Id, std::pair<Id, Id>> edge_endpoints;
    int n_connections = 0;
    std::vector<std::tuple<Id, Id, int, int>> connections;
    std::vector<Id> tls_ids;
    int n_phases = 0;
    std::vector<Id> vehicle_ids;
    std::vector<Id> vtype_ids;
};

inline SumoSummary parse_sumo_summary(const std::string& out_dir, const std::string& prefix) {
    namespace fs = std::filesystem;
    using namespace sumo_detail;
    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        if (!is) throw SchemaError("cannot open: " + p.string(), "sumo");
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    SumoSummary s;
    const std::string nod = slurp(fs::path(out_dir) / (prefix + ".nod.xml"));
    s.node_ids = scan_attrs(nod, "node", "id");
    {
        const auto types = scan_attrs(nod, "node", "type");
        for (size_t i = 0; i < s.node_ids.size() && i < types.size(); ++i)
            s.node_types[s.node_ids[i]] = types[i];
    }
    const std::string edg = slurp(fs::path(out_dir) / (prefix + ".edg.xml"));
    s.edge_ids = scan_attrs(edg, "edge", "id");
    {
        const auto nums = scan_attrs(edg, "edge", "numLanes");
        const auto froms = scan_attrs(edg, "edge", "from");
        const auto tos = scan_attrs(edg, "edge", "to");
        for (size_t i = 0; i < s.edge_ids.size(); ++i) {
            if (i < nums.size() && !nums[i].empty())
                s.edge_lane_counts[s.edge_ids[i]] = std::stoi(nums[i]);
            if (i < froms.size() && i < tos.size())
                s.edge_endpoints[s.edge_ids[i]] = {froms[i], tos[i]};
        }
    }
    const std::string con = slurp(fs::path(out_dir) / (prefix + ".con.xml"));
    {
        const auto froms = scan_attrs(con, "connection", "from");
        const auto tos = scan_attrs(con, "connection", "to");
        const auto fls = scan_attrs(con, "connection", "fromLane");
        const auto tls = scan_attrs(con, "connection", "toLane");
        s.n_connections = static_cast<int>(froms.size());
        for (size_t i = 0; i < froms.size(); ++i)
            s.connections.emplace_back(froms[i], i < tos.size() ? tos[i] : "",
                                       i < fls.size() ? std::stoi(fls[i]) : -1,
                                       i < tls.size() ? std::stoi(tls[i]) : -1);
    }
    const std::string tll = slurp(fs::path(out_dir) / (prefix + ".tll.xml"));
    s.tls_ids = scan_attrs(tll, "tlLogic", "id");
    s.n_phases = static_cast<int>(scan_attrs(tll, "phase", "state").size());
    const std::string rou = slurp(fs::path(out_dir) / (prefix + ".rou.xml"));
    s.vehicle_ids = scan_attrs(rou, "vehicle", "id");
    s.vtype_ids = scan_attrs(rou, "vType", "id");
    return s;
}

}  // namespace scenesim
