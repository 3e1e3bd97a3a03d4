#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace scenesim {

using Id = std::string;

// Scenario file did not match the expected schema. `field_path` points at the
// offending key, e.g. "lane_centers[3].polyline".
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string field_path, const std::string& what)
        : std::runtime_error("schema error at '" + field_path + "': " + what),
          field_path_(std::move(field_path)) {}
    const std::string& field_path() const { return field_path_; }

private:
    std::string field_path_;
};

// Structurally valid file with broken cross-references or invariants.
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& what, std::vector<Id> ids = {})
        : std::runtime_error(make_what(what, ids)), ids_(std::move(ids)) {}
    const std::vector<Id>& ids() const { return ids_; }

private:
    static std::string make_what(const std::string& what, const std::vector<Id>& ids) {
        if (ids.empty()) return what;
        std::string s = what + " [ids:";
        for (const auto& id : ids) s += " " + id;
        return s + "]";
    }
    std::vector<Id> ids_;
};

// Network conversion failure, tagged with the pipeline stage that raised it.
class ConversionError : public std::runtime_error {
public:
    ConversionError(std::string stage, const std::string& what, std::vector<Id> ids = {})
        : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)), ids_(std::move(ids)) {}
    const std::string& stage() const { return stage_; }
    const std::vector<Id>& ids() const { return ids_; }

private:
    std::string stage_;
    std::vector<Id> ids_;
};

class ExportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-fatal diagnostics accumulated by the conversion stages.
struct Warning {
    std::string stage;
    std::string message;
};

using WarningList = std::vector<Warning>;

inline void warn(WarningList& sink, std::string stage, std::string message) {
    sink.push_back(Warning{std::move(stage), std::move(message)});
}

}  // namespace scenesim
