#pragma once

// JSON world and perspective-schedule files.
//
//   { "schema_version": 1, "dimension": d,
//     "groups":  [{"theta": [...]}, ...],
//     "cameras": [{"group": i}, ...],
//     "models":  [{"features": [...], "tier": "edge"|"cloud",
//                  "bandwidth_cost": b, "latency_cost": l}, ...],
//     "gamma": g, "payoff_mode": "bernoulli"|"thresholded-gaussian",
//     "threshold": a, "sigma": s, "link": "sigmoid" }
//
// Doubles are written in shortest round-trip form, so a saved world reloads
// bit-identically.

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "axiomvision/environment.hpp"

namespace axv {

inline constexpr int world_schema_version = 1;

class FileFormatError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

namespace detail {

using nlohmann::json;

inline std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

/// Parses JSON text, turning syntax errors into FileFormatError with a line number.
inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FileFormatError(origin + ": " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileFormatError(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline const json& field(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object()) throw FileFormatError(where + ": expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw FileFormatError(where + "." + key + ": missing");
    return *it;
}

inline double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw FileFormatError(where + ": expected a number");
    return v.get<double>();
}

inline Vector vector_of(const json& v, const std::string& where) {
    if (!v.is_array()) throw FileFormatError(where + ": expected an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = number(v[i], where + "[" + std::to_string(i) + "]");
    return out;
}

inline json array_of(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end())
            throw FileFormatError(where + "." + key + ": unknown field");
    }
}

}  // namespace detail

inline nlohmann::json world_to_json(const World& w) {
    using detail::json;
    json j;
    j["schema_version"] = world_schema_version;
    j["dimension"] = w.dimension;
    j["groups"] = json::array();
    for (const auto& th : w.group_thetas) j["groups"].push_back({{"theta", detail::array_of(th)}});
    j["cameras"] = json::array();
    for (GroupId g : w.camera_group) j["cameras"].push_back({{"group", g}});
    j["models"] = json::array();
    for (const auto& m : w.catalog) {
        j["models"].push_back({{"features", detail::array_of(m.features)},
                               {"tier", std::string(to_string(m.tier))},
                               {"bandwidth_cost", m.bandwidth_cost},
                               {"latency_cost", m.latency_cost}});
    }
    j["gamma"] = w.gamma;
    j["payoff_mode"] = std::string(to_string(w.payoff_mode));
    j["threshold"] = w.accuracy_threshold;
    j["sigma"] = w.noise_sigma;
    j["link"] = std::string(to_string(w.link.kind));
    j["link_domain_bound"] = w.link.domain_bound;
    return j;
}

/// Builds and validates a World; errors name the offending JSON path.
inline World world_from_json(const nlohmann::json& j, const std::string& origin = "world") {
    using namespace detail;
    if (!j.is_object()) throw FileFormatError(origin + ": expected an object");
    reject_unknown(j,
                   {"schema_version", "dimension", "groups", "cameras", "models", "gamma", "payoff_mode", "threshold",
                    "sigma", "link", "link_domain_bound"},
                   origin);
    if (j.contains("schema_version") && j["schema_version"] != world_schema_version)
        throw FileFormatError(origin + ".schema_version: unsupported version");
    World w;
    const json& dim = field(j, "dimension", origin);
    if (!dim.is_number_integer() || dim.get<long long>() < 1) throw FileFormatError(origin + ".dimension: expected a positive integer");
    w.dimension = dim.get<int>();

    const json& groups = field(j, "groups", origin);
    if (!groups.is_array()) throw FileFormatError(origin + ".groups: expected an array");
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::string where = origin + ".groups[" + std::to_string(g) + "]";
        reject_unknown(groups[g], {"theta"}, where);
        w.group_thetas.push_back(vector_of(field(groups[g], "theta", where), where + ".theta"));
    }
    const json& cams = field(j, "cameras", origin);
    if (!cams.is_array()) throw FileFormatError(origin + ".cameras: expected an array");
    for (std::size_t c = 0; c < cams.size(); ++c) {
        const std::string where = origin + ".cameras[" + std::to_string(c) + "]";
        reject_unknown(cams[c], {"group"}, where);
        const json& g = field(cams[c], "group", where);
        if (!g.is_number_unsigned()) throw FileFormatError(where + ".group: expected a nonnegative integer");
        w.camera_group.push_back(g.get<GroupId>());
    }
    const json& models = field(j, "models", origin);
    if (!models.is_array()) throw FileFormatError(origin + ".models: expected an array");
    for (std::size_t m = 0; m < models.size(); ++m) {
        const std::string where = origin + ".models[" + std::to_string(m) + "]";
        const json& mj = models[m];
        reject_unknown(mj, {"features", "tier", "bandwidth_cost", "latency_cost"}, where);
        const json& tier = field(mj, "tier", where);
        if (tier != "edge" && tier != "cloud") throw FileFormatError(where + ".tier: expected \"edge\" or \"cloud\"");
        w.catalog.emplace_back(m, vector_of(field(mj, "features", where), where + ".features"),
                               tier == "edge" ? Tier::edge : Tier::cloud,
                               number(field(mj, "bandwidth_cost", where), where + ".bandwidth_cost"),
                               number(field(mj, "latency_cost", where), where + ".latency_cost"));
    }
    w.gamma = number(field(j, "gamma", origin), origin + ".gamma");
    const json& mode = field(j, "payoff_mode", origin);
    if (mode == "bernoulli") {
        w.payoff_mode = PayoffMode::bernoulli;
    } else if (mode == "thresholded-gaussian") {
        w.payoff_mode = PayoffMode::thresholded_gaussian;
    } else {
        throw FileFormatError(origin + ".payoff_mode: expected \"bernoulli\" or \"thresholded-gaussian\"");
    }
    w.accuracy_threshold = number(field(j, "threshold", origin), origin + ".threshold");
    w.noise_sigma = number(field(j, "sigma", origin), origin + ".sigma");
    if (j.contains("link")) {
        if (!j["link"].is_string()) throw FileFormatError(origin + ".link: expected a string");
        try {
            w.link.kind = parse_link_kind(j["link"].get<std::string>());
        } catch (const ConfigError& e) {
            throw FileFormatError(origin + ".link: " + e.what());
        }
    }
    if (j.contains("link_domain_bound")) w.link.domain_bound = number(j["link_domain_bound"], origin + ".link_domain_bound");
    try {
        validate_world(w);
    } catch (const ConfigError& e) {
        throw FileFormatError(origin + "." + e.what());
    }
    return w;
}

inline std::string world_to_string(const World& w) { return world_to_json(w).dump(2) + "\n"; }

inline World load_world(const std::string& path) {
    const std::string text = detail::read_file(path);
    return world_from_json(detail::parse_json_text(text, path), path);
}

inline void save_world(const World& w, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot write");
    out << world_to_string(w);
}

/// [{"round": t, "camera": c, "group": g}, ...]
inline PerspectiveSchedule schedule_from_json(const nlohmann::json& j, const World& world,
                                              const std::string& origin = "schedule") {
    using namespace detail;
    if (!j.is_array()) throw FileFormatError(origin + ": expected an array of events");
    std::vector<PerspectiveEvent> events;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string where = origin + "[" + std::to_string(i) + "]";
        reject_unknown(j[i], {"round", "camera", "group"}, where);
        PerspectiveEvent e;
        for (const char* key : {"round", "camera", "group"}) {
            const json& v = field(j[i], key, where);
            if (!v.is_number_unsigned()) throw FileFormatError(where + "." + key + ": expected a nonnegative integer");
        }
        e.round = j[i]["round"].get<std::uint64_t>();
        e.camera = j[i]["camera"].get<CameraId>();
        e.new_group = j[i]["group"].get<GroupId>();
        events.push_back(e);
    }
    try {
        return make_schedule(std::move(events), world);
    } catch (const ScheduleError& e) {
        throw FileFormatError(origin + ": " + e.what());
    }
}

}  // namespace axv
