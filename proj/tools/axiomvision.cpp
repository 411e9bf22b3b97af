// axiomvision: command-line driver for the simulation harness.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "axiomvision/config.hpp"
#include "axiomvision/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Logger {
    bool quiet = false;
    bool json_lines = false;

    void emit(const char* level, const std::string& msg) const {
        if (json_lines) {
            std::cerr << json{{"level", level}, {"msg", msg}}.dump() << '\n';
        } else {
            std::cerr << "[" << level << "] " << msg << '\n';
        }
    }
    void info(const std::string& msg) const {
        if (!quiet) emit("info", msg);
    }
    void error(const std::string& msg) const { emit("error", msg); }
};

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
    std::string seeds;
    bool quiet = false;
    bool json_logs = false;
};

struct GenWorldArgs {
    std::optional<int> groups, cameras, dim, models;
    std::optional<double> gamma;
    std::optional<std::uint64_t> seed;
    std::string out;
};

axv::ExperimentConfig load(const Common& c) {
    std::vector<std::string> overrides = c.overrides;
    if (!c.seeds.empty()) overrides.push_back("experiment.seeds=\"" + c.seeds + "\"");
    return axv::load_config(c.config_path, overrides);
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

/// Runs `cfg` under {output_dir}/{name}, writes traces and summary.json.
/// Returns the summary and whether every pair completed.
std::pair<axv::Summary, bool> run_family(axv::ExperimentConfig cfg, const fs::path& dir, const Logger& log,
                                         const std::string& name, json& summary_json) {
    fs::create_directories(dir);
    cfg.trace_dir = dir;
    log.info(name + ": " + std::to_string(cfg.variants.size()) + " variant(s) x " + std::to_string(cfg.seeds.size()) +
             " seed(s), T=" + std::to_string(cfg.horizon));
    axv::Summary s = axv::run_experiment(cfg);
    bool ok = true;
    for (const auto& v : s.variants)
        for (const auto& e : v.errors) {
            log.error(v.name + ": " + e);
            ok = false;
        }
    summary_json = axv::summary_to_json(s, cfg);
    return {std::move(s), ok};
}

int dispatch(const std::string& sub, const Common& common, const GenWorldArgs& gw, const Logger& log) {
    const fs::path out_root = common.output_dir.empty() ? fs::path("out") : fs::path(common.output_dir);
    axv::ExperimentConfig cfg = load(common);
    const fs::path dir = out_root / sub;
    const axv::AgentConfig base = cfg.variants.front().agent;

    if (sub == "gen-world") {
        axv::EnvConfig env = cfg.env;
        if (gw.groups) env.groups = *gw.groups;
        if (gw.cameras) env.cameras = *gw.cameras;
        if (gw.dim) env.dimension = *gw.dim;
        if (gw.models) env.models = *gw.models;
        if (gw.gamma) env.gamma = *gw.gamma;
        const std::uint64_t seed = gw.seed ? *gw.seed : cfg.world_seed.value_or(cfg.seeds.front());
        const axv::World w = axv::generate_world(env, seed);
        const fs::path path = gw.out.empty() ? dir / "world.json" : fs::path(gw.out);
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        axv::save_world(w, path.string());
        log.info("wrote " + path.string());
        std::cout << path.string() << '\n';
        return 0;
    }

    if (sub == "theory") {
        const axv::World w = axv::world_for_seed(cfg, cfg.seeds.front());
        const json report = axv::theory_report(w, base, static_cast<double>(cfg.horizon));
        fs::create_directories(dir);
        write_json(dir / "theory.json", report);
        std::cout << report.dump(2) << '\n';
        return 0;
    }

    if (sub == "ablate-deletion") {
        cfg.variants = axv::deletion_variants(base);
        cfg.checkpoints.assign(std::begin(axv::deletion_checkpoints), std::end(axv::deletion_checkpoints));
        if (cfg.horizon < cfg.checkpoints.back()) cfg.horizon = cfg.checkpoints.back();
    } else if (sub == "ablate-grouping") {
        cfg.variants = axv::grouping_variants(base);
    } else if (sub == "ablate-combining") {
        cfg.variants = axv::combining_variants(base);
    } else if (sub == "ablate-perspective") {
        cfg.variants = axv::perspective_variants(base);
    } else if (sub == "compare-greedy") {
        cfg.variants = axv::greedy_comparison_variants(base);
    }

    json summary;
    auto [s, ok] = run_family(cfg, dir, log, sub, summary);
    if (sub == "ablate-deletion") {
        std::ofstream table(dir / "regret_table.csv");
        if (!table) throw std::runtime_error("cannot write " + (dir / "regret_table.csv").string());
        axv::write_checkpoint_table(table, s);
        if (!common.quiet) axv::write_checkpoint_table(std::cout, s);
    } else if (sub == "ablate-grouping") {
        summary["acceleration"] = axv::acceleration_report(s.variant("without-grouping"), s.variant("with-grouping"));
        summary["grouping_seconds"] = {{"graph", s.variant("with-grouping").mean_timings.grouping},
                                       {"set_based", s.variant("set-based").mean_timings.grouping}};
    }
    write_json(dir / "summary.json", summary);
    if (!common.quiet) {
        for (const auto& v : s.variants) {
            std::cout << v.name << ": final_payoff=" << v.final_mean_payoff;
            if (!v.cumulative_regret.empty()) std::cout << " regret=" << v.cumulative_regret.back().mean;
            std::cout << '\n';
        }
    }
    log.info("wrote " + (dir / "summary.json").string());
    return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AxiomVision online model-selection simulator"};
    app.require_subcommand(1);

    Common common;
    if (const char* env = std::getenv("AXV_OUTPUT_DIR")) common.output_dir = env;
    GenWorldArgs gw;

    const std::vector<std::pair<std::string, std::string>> subs = {
        {"run", "Run the configured experiment"},
        {"ablate-deletion", "Compare deletion functions f1..f6"},
        {"ablate-grouping", "With vs without grouping, graph vs set-based timing"},
        {"ablate-combining", "With vs without cascade combining"},
        {"ablate-perspective", "With vs without perspective, plus greedy"},
        {"compare-greedy", "Default agent vs greedy baseline"},
        {"theory", "Print theoretical constants as JSON"},
        {"gen-world", "Write a synthetic world file"},
    };
    for (const auto& [name, help] : subs) {
        CLI::App* s = app.add_subcommand(name, help);
        s->add_option("-c,--config", common.config_path, "Config file (JSON)")->check(CLI::ExistingFile);
        s->add_option("--set", common.overrides, "Override, e.g. agent.alpha=0.5")->take_all();
        s->add_option("-o,--output-dir", common.output_dir, "Output directory (default $AXV_OUTPUT_DIR or ./out)");
        s->add_option("--seeds", common.seeds, "Seed list: 0..9 or 1,2,3");
        s->add_flag("-q,--quiet", common.quiet, "Only errors on stderr");
        s->add_flag("--json-logs", common.json_logs, "Log as JSON lines");
        if (name == "gen-world") {
            s->add_option("--groups", gw.groups);
            s->add_option("--cameras", gw.cameras);
            s->add_option("--dim", gw.dim);
            s->add_option("--gamma", gw.gamma);
            s->add_option("--models", gw.models);
            s->add_option("--seed", gw.seed);
            s->add_option("--out", gw.out, "World file path");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const Logger log{common.quiet, common.json_logs};
    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        return dispatch(sub, common, gw, log);
    } catch (const axv::ConfigError& e) {
        log.error(e.what());
        return 1;
    } catch (const std::exception& e) {
        log.error(e.what());
        return 2;
    }
}
