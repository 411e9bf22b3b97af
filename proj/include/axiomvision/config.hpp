#pragma once

// Experiment configuration files. A config is a JSON object with "world",
// "agent" and "experiment" sections; every recognised key has a default
// listed in default_config_json(). Unknown keys are rejected with their
// dotted path, and `key=value` overrides use the same paths.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "axiomvision/harness.hpp"
#include "axiomvision/world_io.hpp"

namespace axv {

using nlohmann::json;

inline json default_agent_json() {
    return {
        {"alpha", 0.25},
        {"beta", 0.1},
        {"zeta", 1.0},
        {"p0", nullptr},
        {"k_max", 3},
        {"link", "sigmoid"},
        {"link_domain_bound", 2.0},
        {"deletion", "f1"},
        {"reconnect", "whole-graph-reset"},
        {"cascade_order", "ucb-desc"},
        {"grouping", "graph"},
        {"oracle", "top-k"},
        {"no_grouping", false},
        {"no_perspective", false},
        {"no_combining", false},
        {"oracle_estimates", false},
        {"newton_tol", 1e-8},
        {"newton_max_iter", 100},
    };
}

inline json default_config_json() {
    return {
        {"world",
         {
             {"file", nullptr},
             {"seed", nullptr},
             {"groups", 2},
             {"cameras", 8},
             {"dimension", 5},
             {"models", 20},
             {"gamma", 0.5},
             {"group_sizes", json::array()},
             {"min_feature_norm", 0.5},
             {"max_feature_norm", 1.0},
             {"edge_fraction", 0.5},
             {"payoff_mode", "bernoulli"},
             {"threshold", 0.5},
             {"sigma", 0.0},
             {"link", "sigmoid"},
             {"link_domain_bound", 2.0},
             {"max_rejections", 10000},
             {"schedule", json::array()},
         }},
        {"agent", default_agent_json()},
        {"experiment",
         {
             {"horizon", 10000},
             {"seeds", json::array({0})},
             {"window", 200},
             {"target", 0.8},
             {"eta", 0.5},
             {"checkpoints", json::array()},
             {"variants", json::array()},
             {"track_grouping", true},
             {"threads", 0},
         }},
    };
}

namespace detail {

inline const char* json_kind(const json& v) {
    if (v.is_null()) return "null";
    if (v.is_boolean()) return "boolean";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    return "object";
}

/// Type compatibility between a schema default and a supplied value. Nullable
/// defaults accept anything; the typed parse validates it afterwards.
inline bool compatible(const json& schema, const json& value) {
    if (schema.is_null() || value.is_null()) return true;
    if (schema.is_number()) return value.is_number();
    if (schema.is_string() && schema.get<std::string>().empty()) return true;
    return std::string_view(json_kind(schema)) == json_kind(value);
}

/// Copies `user` over `base`, requiring every key to exist in `schema`.
inline void merge_strict(json& base, const json& user, const json& schema, const std::string& path) {
    if (!user.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, value] : user.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!schema.contains(key)) throw ConfigError(where + ": unknown key");
        const json& s = schema.at(key);
        if (s.is_object()) {
            merge_strict(base[key], value, s, where);
            continue;
        }
        const bool seed_range = where == "experiment.seeds" && value.is_string();
        if (!seed_range && !compatible(s, value))
            throw ConfigError(where + ": expected " + json_kind(s) + ", got " + json_kind(value));
        base[key] = value;
    }
}

inline json parse_override_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

inline std::uint64_t as_u64(const json& v, const std::string& where) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
        throw ConfigError(where + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

inline double as_double(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

inline std::string as_string(const json& v, const std::string& where) {
    if (!v.is_string()) throw ConfigError(where + ": expected a string");
    return v.get<std::string>();
}

inline bool as_bool(const json& v, const std::string& where) {
    if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
    return v.get<bool>();
}

template <typename Fn>
auto with_path(const std::string& where, Fn&& fn) {
    try {
        return fn();
    } catch (const FileFormatError&) {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace detail

/// "a..b" (inclusive), "a,b,c" or a single integer.
inline std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    std::vector<std::uint64_t> out;
    auto to_u64 = [&](std::string_view s) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string_view::npos)
            throw ConfigError("seeds: '" + std::string(text) + "' is not a seed list");
        return std::stoull(std::string(s));
    };
    if (const auto dots = text.find(".."); dots != std::string_view::npos) {
        const auto lo = to_u64(text.substr(0, dots));
        const auto hi = to_u64(text.substr(dots + 2));
        if (hi < lo) throw ConfigError("seeds: empty range '" + std::string(text) + "'");
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
        return out;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        out.push_back(to_u64(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

/// Applies one `dotted.path=value` override to a merged config.
inline void apply_override(json& config, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ConfigError("override '" + std::string(assignment) + "': expected key=value");
    const std::string key(assignment.substr(0, eq));
    const json value = detail::parse_override_value(std::string(assignment.substr(eq + 1)));
    const json schema = default_config_json();

    const json* s = &schema;
    json* node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!s->is_object() || !s->contains(part)) throw ConfigError(key + ": unknown key");
        s = &s->at(part);
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (s->is_object()) throw ConfigError(key + ": cannot override a whole section");
    if (key == "experiment.seeds" && value.is_string()) {
        *node = parse_seed_list(value.get<std::string>());
        return;
    }
    if (!detail::compatible(*s, value))
        throw ConfigError(key + ": expected " + detail::json_kind(*s) + ", got " + detail::json_kind(value));
    *node = value;
}

/// Defaults, then file contents, then overrides.
inline json merged_config_json(const json& file_contents, const std::vector<std::string>& overrides) {
    const json schema = default_config_json();
    json merged = schema;
    detail::merge_strict(merged, file_contents, schema, "");
    for (const auto& o : overrides) apply_override(merged, o);
    return merged;
}

inline AgentConfig agent_from_json(const json& a, const std::string& path) {
    using namespace detail;
    AgentConfig c;
    c.alpha = as_double(a.at("alpha"), path + ".alpha");
    c.beta = as_double(a.at("beta"), path + ".beta");
    c.zeta = as_double(a.at("zeta"), path + ".zeta");
    if (!a.at("p0").is_null()) c.p0 = as_double(a.at("p0"), path + ".p0");
    c.k_max = as_u64(a.at("k_max"), path + ".k_max");
    c.link.kind = with_path(path + ".link", [&] { return parse_link_kind(as_string(a.at("link"), path + ".link")); });
    c.link.domain_bound = as_double(a.at("link_domain_bound"), path + ".link_domain_bound");
    c.deletion = with_path(path + ".deletion", [&] { return parse_deletion_function(as_string(a.at("deletion"), path + ".deletion")); });

    const std::string rc = as_string(a.at("reconnect"), path + ".reconnect");
    if (rc == "whole-graph-reset") c.reconnect = ReconnectMode::whole_graph_reset;
    else if (rc == "per-edge") c.reconnect = ReconnectMode::per_edge;
    else throw ConfigError(path + ".reconnect: expected \"whole-graph-reset\" or \"per-edge\"");

    const std::string co = as_string(a.at("cascade_order"), path + ".cascade_order");
    if (co == "ucb-desc") c.cascade_order = CascadeOrder::ucb_desc;
    else if (co == "tier-then-ucb") c.cascade_order = CascadeOrder::tier_then_ucb;
    else throw ConfigError(path + ".cascade_order: expected \"ucb-desc\" or \"tier-then-ucb\"");

    const std::string gm = as_string(a.at("grouping"), path + ".grouping");
    if (gm == "graph") c.grouping = GroupingMode::graph;
    else if (gm == "set-based") c.grouping = GroupingMode::set_based;
    else throw ConfigError(path + ".grouping: expected \"graph\" or \"set-based\"");

    const std::string oc = as_string(a.at("oracle"), path + ".oracle");
    if (oc == "top-k") c.oracle = OracleKind::top_k;
    else if (oc == "top-1") c.oracle = OracleKind::top_1;
    else throw ConfigError(path + ".oracle: expected \"top-k\" or \"top-1\"");

    c.ablations.no_grouping = as_bool(a.at("no_grouping"), path + ".no_grouping");
    c.ablations.no_perspective = as_bool(a.at("no_perspective"), path + ".no_perspective");
    c.ablations.no_combining = as_bool(a.at("no_combining"), path + ".no_combining");
    c.oracle_estimates = as_bool(a.at("oracle_estimates"), path + ".oracle_estimates");
    c.newton.tol = as_double(a.at("newton_tol"), path + ".newton_tol");
    c.newton.max_iter = static_cast<int>(as_u64(a.at("newton_max_iter"), path + ".newton_max_iter"));
    with_path(path, [&] {
        validate_agent_config(c);
        return 0;
    });
    return c;
}

/// Typed configuration from a merged JSON document. Relative world paths
/// resolve against `base_dir`.
inline ExperimentConfig experiment_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
    using namespace detail;
    ExperimentConfig cfg;
    const json& w = j.at("world");
    EnvConfig& env = cfg.env;
    env.groups = static_cast<int>(as_u64(w.at("groups"), "world.groups"));
    env.cameras = static_cast<int>(as_u64(w.at("cameras"), "world.cameras"));
    env.dimension = static_cast<int>(as_u64(w.at("dimension"), "world.dimension"));
    env.models = static_cast<int>(as_u64(w.at("models"), "world.models"));
    env.gamma = as_double(w.at("gamma"), "world.gamma");
    for (std::size_t i = 0; i < w.at("group_sizes").size(); ++i)
        env.group_sizes.push_back(static_cast<int>(as_u64(w.at("group_sizes")[i], "world.group_sizes[" + std::to_string(i) + "]")));
    env.min_feature_norm = as_double(w.at("min_feature_norm"), "world.min_feature_norm");
    env.max_feature_norm = as_double(w.at("max_feature_norm"), "world.max_feature_norm");
    env.edge_fraction = as_double(w.at("edge_fraction"), "world.edge_fraction");
    const std::string mode = as_string(w.at("payoff_mode"), "world.payoff_mode");
    if (mode == "bernoulli") env.payoff_mode = PayoffMode::bernoulli;
    else if (mode == "thresholded-gaussian") env.payoff_mode = PayoffMode::thresholded_gaussian;
    else throw ConfigError("world.payoff_mode: expected \"bernoulli\" or \"thresholded-gaussian\"");
    env.accuracy_threshold = as_double(w.at("threshold"), "world.threshold");
    env.noise_sigma = as_double(w.at("sigma"), "world.sigma");
    env.link.kind = with_path("world.link", [&] { return parse_link_kind(as_string(w.at("link"), "world.link")); });
    env.link.domain_bound = as_double(w.at("link_domain_bound"), "world.link_domain_bound");
    env.max_rejections = static_cast<int>(as_u64(w.at("max_rejections"), "world.max_rejections"));
    if (!w.at("seed").is_null()) cfg.world_seed = as_u64(w.at("seed"), "world.seed");
    if (!w.at("file").is_null()) {
        std::filesystem::path p = as_string(w.at("file"), "world.file");
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        cfg.world = load_world(p.string());
    }
    const json& sched = w.at("schedule");
    for (std::size_t i = 0; i < sched.size(); ++i) {
        const std::string where = "world.schedule[" + std::to_string(i) + "]";
        const json& e = sched[i];
        if (!e.is_object()) throw ConfigError(where + ": expected an object");
        for (const auto& [key, _] : e.items())
            if (key != "round" && key != "camera" && key != "group") throw ConfigError(where + "." + key + ": unknown key");
        PerspectiveEvent ev;
        ev.round = as_u64(field(e, "round", where), where + ".round");
        ev.camera = as_u64(field(e, "camera", where), where + ".camera");
        ev.new_group = as_u64(field(e, "group", where), where + ".group");
        cfg.schedule.push_back(ev);
    }

    const json& x = j.at("experiment");
    cfg.horizon = as_u64(x.at("horizon"), "experiment.horizon");
    cfg.seeds.clear();
    const json& seeds = x.at("seeds");
    if (seeds.is_string()) {
        cfg.seeds = with_path("experiment.seeds", [&] { return parse_seed_list(seeds.get<std::string>()); });
    } else {
        for (std::size_t i = 0; i < seeds.size(); ++i) cfg.seeds.push_back(as_u64(seeds[i], "experiment.seeds[" + std::to_string(i) + "]"));
    }
    cfg.window = as_u64(x.at("window"), "experiment.window");
    cfg.target = as_double(x.at("target"), "experiment.target");
    cfg.eta = as_double(x.at("eta"), "experiment.eta");
    for (std::size_t i = 0; i < x.at("checkpoints").size(); ++i)
        cfg.checkpoints.push_back(as_u64(x.at("checkpoints")[i], "experiment.checkpoints[" + std::to_string(i) + "]"));
    cfg.track_grouping = as_bool(x.at("track_grouping"), "experiment.track_grouping");
    cfg.threads = static_cast<unsigned>(as_u64(x.at("threads"), "experiment.threads"));

    const AgentConfig base = agent_from_json(j.at("agent"), "agent");
    cfg.variants.clear();
    const json& variants = x.at("variants");
    if (variants.empty()) {
        cfg.variants.push_back(VariantSpec{"axiomvision", VariantKind::agent, base, 500});
    }
    for (std::size_t i = 0; i < variants.size(); ++i) {
        const std::string where = "experiment.variants[" + std::to_string(i) + "]";
        const json& v = variants[i];
        if (!v.is_object()) throw ConfigError(where + ": expected an object");
        VariantSpec spec;
        json agent = j.at("agent");
        for (const auto& [key, value] : v.items()) {
            if (key == "name") spec.name = as_string(value, where + ".name");
            else if (key == "kind") {
                const std::string k = as_string(value, where + ".kind");
                if (k == "agent") spec.kind = VariantKind::agent;
                else if (k == "greedy") spec.kind = VariantKind::greedy;
                else throw ConfigError(where + ".kind: expected \"agent\" or \"greedy\"");
            } else if (key == "profile_rounds") spec.profile_rounds = as_u64(value, where + ".profile_rounds");
            else if (key == "agent") merge_strict(agent, value, default_agent_json(), where + ".agent");
            else throw ConfigError(where + "." + key + ": unknown key");
        }
        spec.agent = agent_from_json(agent, where + ".agent");
        cfg.variants.push_back(std::move(spec));
    }
    validate_experiment(cfg);
    return cfg;
}

/// Reads a config file (or starts from defaults when `path` is empty),
/// applies overrides, validates.
inline ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    json file = json::object();
    std::filesystem::path base_dir;
    if (!path.empty()) {
        file = detail::parse_json_text(detail::read_file(path), path);
        base_dir = std::filesystem::path(path).parent_path();
    }
    return experiment_from_json(merged_config_json(file, overrides), base_dir);
}

}  // namespace axv
