#pragma once

// Experiment orchestration: (variant, seed) pairs on common random numbers,
// cumulative-regret curves at geometric checkpoints, rounds-to-threshold,
// grouping correctness, trade-off scores, trace and summary files.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "axiomvision/environment.hpp"
#include "axiomvision/policy.hpp"
#include "axiomvision/theory.hpp"
#include "axiomvision/world_io.hpp"

namespace axv {

inline constexpr int trace_schema_version = 1;
inline constexpr int summary_schema_version = 1;

enum class VariantKind { agent, greedy };

struct VariantSpec {
    std::string name = "axiomvision";
    VariantKind kind = VariantKind::agent;
    AgentConfig agent{};
    std::uint64_t profile_rounds = 500;
};

struct ExperimentConfig {
    EnvConfig env{};
    /// Fixed world seed; when unset each run seed generates its own world.
    std::optional<std::uint64_t> world_seed;
    /// Loaded world file; overrides `env` entirely.
    std::optional<World> world;
    std::vector<PerspectiveEvent> schedule;
    std::vector<VariantSpec> variants{VariantSpec{}};
    std::uint64_t horizon = 10'000;
    std::vector<std::uint64_t> seeds{0};
    std::size_t window = 200;
    double target = 0.8;
    double eta = 0.5;
    /// Empty selects the default geometric checkpoints.
    std::vector<std::uint64_t> checkpoints;
    bool track_grouping = true;
    std::optional<std::filesystem::path> trace_dir;
    unsigned threads = 0;
};

inline void validate_experiment(const ExperimentConfig& cfg) {
    if (cfg.seeds.empty()) throw ConfigError("experiment.seeds: at least one seed required");
    if (cfg.variants.empty()) throw ConfigError("experiment.variants: at least one variant required");
    if (cfg.window < 1) throw ConfigError("experiment.window: must be >= 1");
    for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
        const auto& v = cfg.variants[i];
        const std::string where = "experiment.variants[" + std::to_string(i) + "]";
        if (v.name.empty()) throw ConfigError(where + ".name: must be non-empty");
        for (std::size_t j = 0; j < i; ++j)
            if (cfg.variants[j].name == v.name) throw ConfigError(where + ".name: duplicate variant '" + v.name + "'");
        if (v.kind == VariantKind::greedy && v.profile_rounds < 1)
            throw ConfigError(where + ".profile_rounds: must be >= 1");
        try {
            validate_agent_config(v.agent);
        } catch (const ConfigError& e) {
            throw ConfigError(where + "." + e.what());
        }
    }
    for (std::size_t i = 1; i < cfg.checkpoints.size(); ++i)
        if (cfg.checkpoints[i] <= cfg.checkpoints[i - 1]) throw ConfigError("experiment.checkpoints: must be strictly increasing");
}

/// 100, 200, 500, 1k, 2k, 5k, ... up to T, with T appended when it is not
/// already a checkpoint.
inline std::vector<std::uint64_t> default_checkpoints(std::uint64_t horizon) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t decade = 100;; decade *= 10) {
        bool done = false;
        for (std::uint64_t m : {1, 2, 5}) {
            const std::uint64_t c = decade * m;
            if (c > horizon) {
                done = true;
                break;
            }
            out.push_back(c);
        }
        if (done) break;
    }
    if (horizon > 0 && (out.empty() || out.back() != horizon)) out.push_back(horizon);
    return out;
}

/// Smallest t whose trailing window (t-window+1 .. t) of expected payoffs has
/// mean >= target.
inline std::optional<std::uint64_t> rounds_to_threshold(std::span<const RoundRecord> trace, double target,
                                                        std::size_t window) {
    if (window < 1) throw std::invalid_argument("rounds_to_threshold: window must be >= 1");
    // Each window is summed afresh; a running sum drifts at the boundary.
    for (std::size_t end = window; end <= trace.size(); ++end) {
        double sum = 0.0;
        for (std::size_t j = end - window; j < end; ++j) sum += trace[j].expected_payoff;
        if (sum >= target * static_cast<double>(window)) return trace[end - 1].t;
    }
    return std::nullopt;
}

/// without / with; nullopt when either side never reached the target.
inline std::optional<double> acceleration_ratio(std::optional<std::uint64_t> rounds_without,
                                                std::optional<std::uint64_t> rounds_with) {
    if (!rounds_without || !rounds_with || *rounds_with == 0) return std::nullopt;
    return static_cast<double>(*rounds_without) / static_cast<double>(*rounds_with);
}

/// a - η·b for normalized accuracy a and bandwidth b.
inline double tradeoff_score(double mean_accuracy, double mean_bandwidth, double eta) {
    return mean_accuracy - eta * mean_bandwidth;
}

/// Mean expected payoff over the last `window` rounds (or the whole trace if shorter).
inline double trailing_mean_payoff(std::span<const RoundRecord> trace, std::size_t window) {
    if (trace.empty()) return 0.0;
    const std::size_t n = std::min(window, trace.size());
    double s = 0.0;
    for (std::size_t i = trace.size() - n; i < trace.size(); ++i) s += trace[i].expected_payoff;
    return s / static_cast<double>(n);
}

inline std::vector<double> cumulative_regret(std::span<const RoundRecord> trace) {
    std::vector<double> out;
    out.reserve(trace.size());
    double s = 0.0;
    for (const auto& r : trace) out.push_back(s += r.instantaneous_regret);
    return out;
}

inline std::string join_list(const auto& items) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) s += ';';
        s += std::to_string(items[i]);
    }
    return s;
}

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

inline constexpr const char* trace_header =
    "t,camera,inferred_group,true_group,tried_models,payoffs,aggregate,expected,oracle_expected,inst_regret,cum_regret,"
    "components,bandwidth,edges_deleted,reset";

/// CSV trace: a `# schema_version=N` comment line, the column header, then one row per round.
inline void write_trace_csv(std::ostream& out, std::span<const RoundRecord> trace) {
    out << "# schema_version=" << trace_schema_version << '\n' << trace_header << '\n';
    double cum = 0.0;
    for (const auto& r : trace) {
        cum += r.instantaneous_regret;
        out << r.t << ',' << r.camera << ',' << r.inferred_group << ',' << r.true_group << ','
            << join_list(r.tried_models) << ',' << join_list(r.payoffs) << ',' << r.aggregate_payoff << ','
            << format_double(r.expected_payoff) << ',' << format_double(r.oracle_expected_payoff) << ','
            << format_double(r.instantaneous_regret) << ',' << format_double(cum) << ',' << r.component_count << ','
            << format_double(r.bandwidth_spent) << ',' << r.edges_deleted << ',' << (r.graph_reset ? 1 : 0) << '\n';
    }
}

struct PairResult {
    std::size_t variant = 0;
    std::uint64_t seed = 0;
    std::vector<RoundRecord> trace;
    ComponentTimings timings;
    std::optional<std::uint64_t> grouping_correct_round;
    bool correct_at_end = false;
    double p0 = 0.0;
    std::size_t large_estimate_warnings = 0;
    double wall_seconds = 0.0;
    std::string error;
};

struct CurvePoint {
    std::uint64_t t = 0;
    double mean = 0.0;
    double se = 0.0;
};

struct VariantSummary {
    std::string name;
    std::vector<CurvePoint> cumulative_regret;
    double final_mean_payoff = 0.0;
    std::vector<double> final_payoff_by_seed;
    std::vector<std::optional<std::uint64_t>> rounds_to_threshold;
    std::vector<std::optional<std::uint64_t>> grouping_correct_round;
    std::size_t correct_at_end = 0;
    double mean_bandwidth_total = 0.0;
    double mean_tradeoff = 0.0;
    ComponentTimings mean_timings;
    double mean_wall_seconds = 0.0;
    std::vector<std::string> errors;
};

struct Summary {
    std::vector<std::uint64_t> checkpoints;
    std::vector<std::uint64_t> seeds;
    std::vector<VariantSummary> variants;
    std::vector<PairResult> pairs;

    const VariantSummary& variant(const std::string& name) const {
        for (const auto& v : variants)
            if (v.name == name) return v;
        throw std::out_of_range("no variant named " + name);
    }

    const PairResult& pair(const std::string& name, std::uint64_t seed) const {
        for (const auto& p : pairs)
            if (variants[p.variant].name == name && p.seed == seed) return p;
        throw std::out_of_range("no run for " + name);
    }
};

inline World world_for_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.world) return *cfg.world;
    return generate_world(cfg.env, cfg.world_seed.value_or(seed));
}

namespace detail {

inline Partition truth_partition(const World& w) {
    Partition parts(w.num_groups());
    for (CameraId c = 0; c < w.num_cameras(); ++c) parts[w.camera_group[c]].push_back(c);
    return canonical(std::move(parts));
}

inline PairResult run_pair(const ExperimentConfig& cfg, std::size_t variant_index, std::uint64_t seed) {
    PairResult out;
    out.variant = variant_index;
    out.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    try {
        const VariantSpec& v = cfg.variants[variant_index];
        const World world = world_for_seed(cfg, seed);
        const PerspectiveSchedule schedule = make_schedule(cfg.schedule, world);
        const PerspectiveSchedule* sched = schedule.empty() ? nullptr : &schedule;
        if (v.kind == VariantKind::greedy) {
            out.trace = baseline_greedy(world, v.profile_rounds, cfg.horizon, seed, v.agent.k_max, sched);
        } else {
            Agent agent(v.agent, world, seed, sched);
            out.p0 = agent.p0();
            out.trace.reserve(cfg.horizon);
            // Per-round partition checks are cheap only for the graph mode.
            const bool per_round = cfg.track_grouping && v.agent.grouping == GroupingMode::graph;
            const World* truth_world = &world;
            ShiftingWorld truth_env(world, sched);
            Partition truth = truth_partition(world);
            for (std::uint64_t t = 1; t <= cfg.horizon; ++t) {
                out.trace.push_back(agent.step(t));
                if (per_round) {
                    if (sched) {
                        truth_world = &truth_env.at(t);
                        truth = truth_partition(*truth_world);
                    }
                    const bool ok = canonical(agent.partition()) == truth;
                    if (!ok) {
                        out.grouping_correct_round.reset();
                    } else if (!out.grouping_correct_round) {
                        out.grouping_correct_round = t;
                    }
                }
            }
            if (sched) truth = truth_partition(truth_env.at(cfg.horizon));
            out.correct_at_end = canonical(agent.partition()) == truth;
            if (!per_round && out.correct_at_end) out.grouping_correct_round = cfg.horizon;
            out.timings = agent.timings();
            out.large_estimate_warnings = agent.large_estimate_warnings();
        }
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

inline double max_bandwidth(const ExperimentConfig& cfg, std::uint64_t seed) {
    const World w = world_for_seed(cfg, seed);
    double best = 0.0;
    for (const auto& m : w.catalog) best = std::max(best, m.bandwidth_cost);
    return best;
}

}  // namespace detail

/// Aggregates raw pair results into per-variant summaries.
inline Summary summarize(const ExperimentConfig& cfg, std::vector<PairResult> pairs) {
    Summary s;
    s.seeds = cfg.seeds;
    s.checkpoints = cfg.checkpoints.empty() ? default_checkpoints(cfg.horizon) : cfg.checkpoints;
    std::erase_if(s.checkpoints, [&](std::uint64_t c) { return c == 0 || c > cfg.horizon; });

    for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
        VariantSummary vs;
        vs.name = cfg.variants[vi].name;
        std::vector<std::vector<double>> at_checkpoint(s.checkpoints.size());
        std::size_t ok_runs = 0;
        for (const auto& p : pairs) {
            if (p.variant != vi) continue;
            if (!p.error.empty()) {
                vs.errors.push_back("seed " + std::to_string(p.seed) + ": " + p.error);
                continue;
            }
            ++ok_runs;
            const auto cum = cumulative_regret(p.trace);
            for (std::size_t k = 0; k < s.checkpoints.size(); ++k) at_checkpoint[k].push_back(cum[s.checkpoints[k] - 1]);
            const double fp = trailing_mean_payoff(p.trace, cfg.window);
            vs.final_payoff_by_seed.push_back(fp);
            vs.rounds_to_threshold.push_back(rounds_to_threshold(p.trace, cfg.target, cfg.window));
            vs.grouping_correct_round.push_back(p.grouping_correct_round);
            vs.correct_at_end += p.correct_at_end ? 1 : 0;
            double bw = 0.0;
            for (const auto& r : p.trace) bw += r.bandwidth_spent;
            vs.mean_bandwidth_total += bw;
            const double bmax = detail::max_bandwidth(cfg, p.seed);
            const double per_round_bw = p.trace.empty() || bmax == 0.0
                                            ? 0.0
                                            : bw / (static_cast<double>(p.trace.size()) * bmax * cfg.variants[vi].agent.k_max);
            double mean_agg = 0.0;
            for (const auto& r : p.trace) mean_agg += r.expected_payoff;
            mean_agg = p.trace.empty() ? 0.0 : mean_agg / static_cast<double>(p.trace.size());
            vs.mean_tradeoff += tradeoff_score(mean_agg, std::min(1.0, per_round_bw), cfg.eta);
            vs.mean_timings.selection += p.timings.selection;
            vs.mean_timings.estimation += p.timings.estimation;
            vs.mean_timings.grouping += p.timings.grouping;
            vs.mean_wall_seconds += p.wall_seconds;
        }
        if (ok_runs > 0) {
            const double n = static_cast<double>(ok_runs);
            for (double fp : vs.final_payoff_by_seed) vs.final_mean_payoff += fp / n;
            vs.mean_bandwidth_total /= n;
            vs.mean_tradeoff /= n;
            vs.mean_timings.selection /= n;
            vs.mean_timings.estimation /= n;
            vs.mean_timings.grouping /= n;
            vs.mean_wall_seconds /= n;
        }
        for (std::size_t k = 0; k < s.checkpoints.size(); ++k) {
            const auto& xs = at_checkpoint[k];
            CurvePoint cp;
            cp.t = s.checkpoints[k];
            if (!xs.empty()) {
                double sum = 0.0;
                for (double x : xs) sum += x;
                cp.mean = sum / static_cast<double>(xs.size());
                if (xs.size() > 1) {
                    double ss = 0.0;
                    for (double x : xs) ss += (x - cp.mean) * (x - cp.mean);
                    cp.se = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
                }
            }
            vs.cumulative_regret.push_back(cp);
        }
        s.variants.push_back(std::move(vs));
    }
    s.pairs = std::move(pairs);
    return s;
}

/// Runs every (variant, seed) pair. Variants sharing a seed share the world,
/// camera arrivals and (t, model)-keyed payoffs. A failing pair is recorded in
/// the summary and does not stop the others.
inline Summary run_experiment(const ExperimentConfig& cfg) {
    validate_experiment(cfg);
    std::vector<std::pair<std::size_t, std::uint64_t>> jobs;
    for (std::size_t v = 0; v < cfg.variants.size(); ++v)
        for (std::uint64_t seed : cfg.seeds) jobs.emplace_back(v, seed);

    std::vector<PairResult> results(jobs.size());
    unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();)
            results[i] = detail::run_pair(cfg, jobs[i].first, jobs[i].second);
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }

    if (cfg.trace_dir) {
        for (const auto& p : results) {
            if (!p.error.empty()) continue;
            const auto dir = *cfg.trace_dir / cfg.variants[p.variant].name;
            std::filesystem::create_directories(dir);
            std::ofstream out(dir / (std::to_string(p.seed) + ".csv"));
            if (!out) throw std::runtime_error("cannot write trace under " + dir.string());
            write_trace_csv(out, p.trace);
        }
    }
    return summarize(cfg, std::move(results));
}

inline nlohmann::json summary_to_json(const Summary& s, const ExperimentConfig& cfg) {
    using nlohmann::json;
    auto opt = [](const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); };
    json j;
    j["schema_version"] = summary_schema_version;
    j["horizon"] = cfg.horizon;
    j["seeds"] = s.seeds;
    j["checkpoints"] = s.checkpoints;
    j["window"] = cfg.window;
    j["target"] = cfg.target;
    j["eta"] = cfg.eta;
    j["variants"] = json::array();
    for (const auto& v : s.variants) {
        json vj;
        vj["name"] = v.name;
        vj["cumulative_regret"] = json::array();
        for (const auto& cp : v.cumulative_regret) vj["cumulative_regret"].push_back({{"t", cp.t}, {"mean", cp.mean}, {"se", cp.se}});
        vj["final_mean_payoff"] = v.final_mean_payoff;
        vj["final_payoff_by_seed"] = v.final_payoff_by_seed;
        vj["rounds_to_threshold"] = json::array();
        for (const auto& r : v.rounds_to_threshold) vj["rounds_to_threshold"].push_back(opt(r));
        vj["grouping_correct_round"] = json::array();
        for (const auto& r : v.grouping_correct_round) vj["grouping_correct_round"].push_back(opt(r));
        vj["grouping_correct_at_end"] = v.correct_at_end;
        vj["mean_bandwidth_total"] = v.mean_bandwidth_total;
        vj["mean_tradeoff"] = v.mean_tradeoff;
        vj["timing_seconds"] = {{"selection", v.mean_timings.selection},
                                {"estimation", v.mean_timings.estimation},
                                {"grouping", v.mean_timings.grouping},
                                {"wall", v.mean_wall_seconds}};
        vj["errors"] = v.errors;
        j["variants"].push_back(std::move(vj));
    }
    return j;
}

}  // namespace axv
