#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scenesim/common.hpp"
#include "scenesim/engine.hpp"

namespace scenesim {

namespace rollout_io_detail {

constexpr char kMagic[4] = {'S', 'S', 'R', 'L'};
constexpr uint16_t kBinaryVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw SchemaError("unexpected end of rollout file", "binary");
    return v;
}

inline void put_string(std::ostream& os, const std::string& s) {
    put<uint32_t>(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is) {
    const uint32_t n = get<uint32_t>(is);
    if (n > (1u << 20)) throw SchemaError("string length out of range", "binary");
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw SchemaError("unexpected end of rollout file", "binary");
    return s;
}

inline std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace rollout_io_detail

inline void write_rollout_csv(const Rollout& r, std::ostream& os) {
    using rollout_io_detail::fmt4;
    os << "# scenesim rollout v1\n";
    os << "# scenario: " << r.scenario_id << "\n";
    os << "# seed: " << r.seed << "\n";
    os << "# demand_seed: " << r.demand_seed << "\n";
    os << "# horizon: " << r.horizon << "\n";
    os << "# history_length: " << r.history_length << "\n";
    os << "agent_id,step,x,y,heading,speed,valid\n";
    for (size_t i = 0; i < r.agent_ids.size(); ++i)
        for (size_t t = 0; t < r.steps[i].size(); ++t) {
            const AgentStep& s = r.steps[i][t];
            os << r.agent_ids[i] << ',' << t << ',' << fmt4(s.x) << ',' << fmt4(s.y) << ','
               << fmt4(s.heading) << ',' << fmt4(s.speed) << ',' << (s.valid ? 1 : 0) << "\n";
        }
}

inline void write_rollout_csv(const Rollout& r, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ExportError("cannot open for writing: " + path);
    write_rollout_csv(r, os);
}

inline Rollout read_rollout_csv(std::istream& is) {
    Rollout r;
    std::string line;
    std::vector<Id> order;
    std::vector<std::vector<AgentStep>> rows;
    auto agent_slot = [&](const Id& id) -> std::vector<AgentStep>& {
        for (size_t i = 0; i < order.size(); ++i)
            if (order[i] == id) return rows[i];
        order.push_back(id);
        rows.emplace_back();
        return rows.back();
    };
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            std::string key = line.substr(1, colon - 1);
            std::string val = line.substr(colon + 1);
            const auto strip = [](std::string& s) {
                while (!s.empty() && (s.front() == ' ')) s.erase(s.begin());
                while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
            };
            strip(key);
            strip(val);
            if (key == "scenario") r.scenario_id = val;
            else if (key == "seed") r.seed = std::stoull(val);
            else if (key == "demand_seed") r.demand_seed = std::stoull(val);
            else if (key == "horizon") r.horizon = std::stoi(val);
            else if (key == "history_length") r.history_length = std::stoi(val);
            continue;
        }
        if (line.rfind("agent_id,", 0) == 0) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7)
            throw SchemaError("expected 7 fields", "csv line " + std::to_string(lineno));
        auto& slot = agent_slot(fields[0]);
        const size_t t = static_cast<size_t>(std::stoul(fields[1]));
        if (slot.size() <= t) slot.resize(t + 1);
        slot[t].x = std::stod(fields[2]);
        slot[t].y = std::stod(fields[3]);
        slot[t].heading = std::stod(fields[4]);
        slot[t].speed = std::stod(fields[5]);
        slot[t].valid = fields[6] == "1" || fields[6] == "true";
    }
    r.agent_ids = std::move(order);
    r.steps = std::move(rows);
    if (r.horizon == 0 && !r.steps.empty()) r.horizon = static_cast<int>(r.steps[0].size());
    return r;
}

inline Rollout read_rollout_csv_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SchemaError("cannot open rollout file: " + path, "csv");
    return read_rollout_csv(is);
}

inline void write_rollout_binary(const Rollout& r, std::ostream& os) {
    using namespace rollout_io_detail;
    os.write(kMagic, 4);
    put<uint16_t>(os, kBinaryVersion);
    put<uint16_t>(os, 0);
    put<uint32_t>(os, static_cast<uint32_t>(r.agent_ids.size()));
    put<uint32_t>(os, static_cast<uint32_t>(r.horizon));
    put<uint64_t>(os, r.seed);
    put<uint64_t>(os, r.demand_seed);
    put<uint32_t>(os, static_cast<uint32_t>(r.history_length));
    put_string(os, r.scenario_id);
    for (const auto& id : r.agent_ids) put_string(os, id);
    for (size_t i = 0; i < r.agent_ids.size(); ++i)
        for (const AgentStep& s : r.steps[i]) {
            put<double>(os, s.x);
            put<double>(os, s.y);
            put<double>(os, s.heading);
            put<double>(os, s.speed);
            put<uint8_t>(os, s.valid ? 1 : 0);
        }
}

inline void write_rollout_binary(const Rollout& r, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ExportError("cannot open for writing: " + path);
    write_rollout_binary(r, os);
}

inline Rollout read_rollout_binary(std::istream& is) {
    using namespace rollout_io_detail;
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw SchemaError("bad magic", "binary rollout header");
    const uint16_t version = get<uint16_t>(is);
    if (version != kBinaryVersion)
        throw SchemaError("unsupported version " + std::to_string(version), "binary rollout header");
    get<uint16_t>(is);  // reserved
    const uint32_t n_agents = get<uint32_t>(is);
    const uint32_t n_steps = get<uint32_t>(is);
    Rollout r;
    r.horizon = static_cast<int>(n_steps);
    r.seed = get<uint64_t>(is);
    r.demand_seed = get<uint64_t>(is);
    r.history_length = static_cast<int>(get<uint32_t>(is));
    r.scenario_id = get_string(is);
    for (uint32_t i = 0; i < n_agents; ++i) r.agent_ids.push_back(get_string(is));
    r.steps.assign(n_agents, std::vector<AgentStep>(n_steps));
    for (uint32_t i = 0; i < n_agents; ++i)
        for (uint32_t t = 0; t < n_steps; ++t) {
            AgentStep& s = r.steps[i][t];
            s.x = get<double>(is);
            s.y = get<double>(is);
            s.heading = get<double>(is);
            s.speed = get<double>(is);
            s.valid = get<uint8_t>(is) != 0;
        }
    return r;
}

inline Rollout read_rollout_binary_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SchemaError("cannot open rollout file: " + path, "binary");
    return read_rollout_binary(is);
}

}  // namespace scenesim
