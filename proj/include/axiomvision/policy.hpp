#pragma once

// The online selection agent: group lookup on the camera graph, group-level
// penalized MLE, UCB-ranked cascade with first-success stopping, per-camera
// refresh, edge deletion and probabilistic reconnection. Ablation variants
// and the profiling Greedy baseline share the same round record.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "axiomvision/core.hpp"
#include "axiomvision/environment.hpp"
#include "axiomvision/estimator.hpp"
#include "axiomvision/grouping.hpp"
#include "axiomvision/random.hpp"

namespace axv {

enum class CascadeOrder { ucb_desc, tier_then_ucb };
enum class GroupingMode { graph, set_based };
enum class OracleKind { top_k, top_1 };

struct Ablations {
    bool no_grouping = false;
    bool no_perspective = false;
    bool no_combining = false;
};

struct AgentConfig {
    double alpha = 0.25;
    double beta = 0.1;
    double zeta = 1.0;
    /// Reconnection base probability; drawn from the run seed when unset.
    std::optional<double> p0;
    std::size_t k_max = 3;
    LinkFunctionSpec link{};
    DeletionFunction deletion = DeletionFunction::f1;
    ReconnectMode reconnect = ReconnectMode::whole_graph_reset;
    CascadeOrder cascade_order = CascadeOrder::ucb_desc;
    GroupingMode grouping = GroupingMode::graph;
    OracleKind oracle = OracleKind::top_k;
    Ablations ablations{};
    /// Diagnostic: rank models with the true group weights instead of estimates.
    bool oracle_estimates = false;
    NewtonOptions newton{};

    DeletionRule deletion_rule() const { return {beta, deletion}; }
};

inline void validate_agent_config(const AgentConfig& c) {
    if (!(c.alpha >= 0.0)) throw ConfigError("agent.alpha: must be >= 0");
    if (!(c.beta > 0.0)) throw ConfigError("agent.beta: must be > 0");
    if (!(c.zeta > 0.0)) throw ConfigError("agent.zeta: must be > 0");
    if (c.p0 && !(*c.p0 > 0.0 && *c.p0 < 1.0)) throw ConfigError("agent.p0: must lie in (0,1)");
    if (c.k_max < 1) throw ConfigError("agent.k_max: must be >= 1");
    if (!(c.link.domain_bound >= 0.0)) throw ConfigError("agent.link.domain_bound: must be >= 0");
}

/// One row of the experiment trace.
struct RoundRecord {
    std::uint64_t t = 0;
    CameraId camera = 0;
    GroupId inferred_group = 0;
    GroupId true_group = 0;
    std::vector<ModelId> tried_models;
    std::vector<int> payoffs;
    int aggregate_payoff = 0;
    /// Expected cascade payoff of the full planned list (length k_max).
    double expected_payoff = 0.0;
    double oracle_expected_payoff = 0.0;
    double instantaneous_regret = 0.0;
    std::size_t component_count = 0;
    double bandwidth_spent = 0.0;
    std::size_t edges_deleted = 0;
    bool graph_reset = false;
};

/// Wall-clock spent per component, in seconds.
struct ComponentTimings {
    double selection = 0.0;
    double estimation = 0.0;
    double grouping = 0.0;
};

class RunError : public std::runtime_error {
public:
    RunError(std::uint64_t round, const std::string& what)
        : std::runtime_error("round " + std::to_string(round) + ": " + what), round_(round) {}
    std::uint64_t round() const { return round_; }

private:
    std::uint64_t round_;
};

/// Source of binary payoffs for the cascade loop.
struct PayoffSource {
    const World* world;
    CameraId camera;
    const KeyedStream* stream;
    std::uint64_t t;

    int operator()(ModelId m) const { return sample_payoff(*world, camera, m, *stream, t); }
};

struct CascadeResult {
    std::vector<ModelId> planned;
    std::vector<ModelId> tried;
    std::vector<int> payoffs;
};

/// Ranks models by score, descending. Ties go to edge-tier models, then to
/// the lower id. `tier_then_ucb` puts every edge model ahead of every cloud model.
inline std::vector<ModelId> rank_models(std::span<const double> scores, const std::vector<VisualModel>& catalog,
                                        CascadeOrder order) {
    std::vector<ModelId> ids(catalog.size());
    std::iota(ids.begin(), ids.end(), ModelId{0});
    std::sort(ids.begin(), ids.end(), [&](ModelId a, ModelId b) {
        const bool ea = catalog[a].tier == Tier::edge;
        const bool eb = catalog[b].tier == Tier::edge;
        if (order == CascadeOrder::tier_then_ucb && ea != eb) return ea;
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (ea != eb) return ea;
        return a < b;
    });
    return ids;
}

/// Plans up to k_max models from the ranking and queries them in order,
/// stopping at the first payoff of 1. With `random_tail` set, positions after
/// the first are drawn uniformly without replacement from the rest of the
/// catalog.
template <typename Source>
CascadeResult run_cascade(const std::vector<ModelId>& ranking, std::size_t k_max, Source&& payoff_source,
                          const KeyedStream* random_tail = nullptr, std::uint64_t t = 0) {
    CascadeResult out;
    const std::size_t k = std::min(k_max, ranking.size());
    if (k == 0) return out;
    if (random_tail == nullptr) {
        out.planned.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
        out.planned.push_back(ranking.front());
        std::vector<ModelId> rest(ranking.begin() + 1, ranking.end());
        std::sort(rest.begin(), rest.end());
        for (std::size_t i = 1; i < k; ++i) {
            const auto j = random_tail->below(rest.size(), StreamDomain::shuffle, t, i);
            out.planned.push_back(rest[j]);
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(j));
        }
    }
    for (ModelId m : out.planned) {
        const int r = payoff_source(m);
        out.tried.push_back(m);
        out.payoffs.push_back(r);
        if (r == 1) break;
    }
    return out;
}

/// UCB ranking from a group estimate, then the cascade.
template <typename Source>
CascadeResult select_cascade(const Estimate& estimate, const GroupStats& group_stats,
                             const std::vector<VisualModel>& catalog, std::size_t k_max, double alpha,
                             CascadeOrder order, Source&& payoff_source, const LinkFunctionSpec& link,
                             const KeyedStream* random_tail = nullptr, std::uint64_t t = 0) {
    if (catalog.empty()) throw std::invalid_argument("select_cascade: empty catalog");
    std::vector<double> scores(catalog.size());
    for (ModelId m = 0; m < catalog.size(); ++m)
        scores[m] = ucb_score(catalog[m].features, estimate, group_stats, alpha, link);
    return run_cascade(rank_models(scores, catalog, order), k_max, std::forward<Source>(payoff_source), random_tail, t);
}

/// Expected cascade payoff of `planned` for a camera.
inline double planned_expected_payoff(const World& world, CameraId camera, std::span<const ModelId> planned) {
    std::vector<double> p;
    p.reserve(planned.size());
    for (ModelId m : planned) p.push_back(world.success_probability(camera, m));
    return expected_cascade_payoff(p);
}

namespace detail {

inline void score_round(RoundRecord& rec, const World& world, const CascadeResult& cascade, OracleKind oracle,
                        std::size_t k_max) {
    rec.tried_models = cascade.tried;
    rec.payoffs = cascade.payoffs;
    rec.aggregate_payoff = cascade_payoff(cascade.payoffs);
    if (oracle == OracleKind::top_1) {
        rec.expected_payoff = world.success_probability(rec.camera, cascade.planned.front());
        rec.oracle_expected_payoff = oracle_expected_payoff(world, rec.camera, 1);
    } else {
        rec.expected_payoff = planned_expected_payoff(world, rec.camera, cascade.planned);
        rec.oracle_expected_payoff = oracle_expected_payoff(world, rec.camera, std::min(k_max, world.num_models()));
    }
    rec.instantaneous_regret = rec.oracle_expected_payoff - rec.expected_payoff;
    for (ModelId m : cascade.tried) rec.bandwidth_spent += world.catalog[m].bandwidth_cost;
}

/// Applies schedule events as rounds advance, matching apply_perspective_shift.
class ShiftingWorld {
public:
    ShiftingWorld(const World& base, const PerspectiveSchedule* schedule) : current_(base), schedule_(schedule) {}

    const World& at(std::uint64_t t) {
        if (schedule_) {
            while (next_ < schedule_->events.size() && schedule_->events[next_].round <= t) {
                const auto& e = schedule_->events[next_++];
                current_.camera_group.at(e.camera) = e.new_group;
            }
        }
        return current_;
    }

private:
    World current_;
    const PerspectiveSchedule* schedule_;
    std::size_t next_ = 0;
};

class Stopwatch {
public:
    explicit Stopwatch(double& sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
    ~Stopwatch() { sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }
    Stopwatch(const Stopwatch&) = delete;
    Stopwatch& operator=(const Stopwatch&) = delete;

private:
    double& sink_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// State of one AxiomVision run bound to a world.
class Agent {
public:
    Agent(AgentConfig config, const World& world, std::uint64_t seed, const PerspectiveSchedule* schedule = nullptr)
        : config_(std::move(config)), stream_(seed), env_(world, schedule), n_(world.num_cameras()),
          d_(world.dimension) {
        validate_agent_config(config_);
        if (config_.k_max > world.num_models()) throw ConfigError("agent.k_max: exceeds catalog size");
        p0_ = config_.p0 ? *config_.p0 : resolve_p0(seed);
        if (config_.ablations.no_grouping) {
            graph_ = CameraGraph::edgeless(n_);
        } else {
            graph_ = init_graph(n_);
        }
        stats_.assign(n_, SufficientStats(d_));
        logs_.resize(n_);
        camera_estimates_.assign(n_, Vector::Zero(d_));
        group_warm_.assign(n_, Vector::Zero(d_));
        counts_.assign(n_, 0);
    }

    /// p0 derived from the seed, kept away from the interval ends.
    static double resolve_p0(std::uint64_t seed) {
        return 0.01 + 0.98 * KeyedStream(seed).uniform(StreamDomain::p0);
    }

    RoundRecord step(std::uint64_t t) {
        if (t < 1) throw std::invalid_argument("step: rounds start at 1");
        try {
            return step_impl(t);
        } catch (const RunError&) {
            throw;
        } catch (const std::exception& e) {
            throw RunError(t, e.what());
        }
    }

    const AgentConfig& config() const { return config_; }
    double p0() const { return p0_; }
    const CameraGraph& graph() const { return graph_; }
    std::span<const std::size_t> counts() const { return counts_; }
    std::span<const Vector> camera_estimates() const { return camera_estimates_; }
    const ComponentTimings& timings() const { return timings_; }
    std::size_t large_estimate_warnings() const { return large_estimates_; }

    /// Inferred partition under the active grouping mode.
    Partition partition() const {
        if (config_.ablations.no_perspective) {
            Partition all(1);
            for (CameraId c = 0; c < n_; ++c) all[0].push_back(c);
            return all;
        }
        if (config_.grouping == GroupingMode::set_based && !config_.ablations.no_grouping)
            return set_based_groups(camera_estimates_, counts_, config_.deletion_rule());
        return graph_.partition();
    }

private:
    RoundRecord step_impl(std::uint64_t t) {
        const World& world = env_.at(t);
        RoundRecord rec;
        rec.t = t;
        rec.camera = sample_camera(world, stream_, t);
        rec.true_group = world.camera_group[rec.camera];

        std::vector<CameraId> members;
        {
            detail::Stopwatch sw(timings_.grouping);
            members = group_members(rec.camera, rec.inferred_group, rec.component_count);
        }

        CascadeResult cascade;
        {
            Estimate est;
            std::optional<GroupStats> gs;
            {
                detail::Stopwatch sw(timings_.estimation);
                std::vector<const SufficientStats*> member_stats;
                member_stats.reserve(members.size());
                group_log_.clear();
                for (CameraId c : members) {
                    member_stats.push_back(&stats_[c]);
                    group_log_.merge(logs_[c]);
                }
                gs.emplace(aggregate_group(member_stats, d_, config_.zeta));
                if (config_.oracle_estimates) {
                    est.theta_hat = world.theta_of(rec.camera);
                    est.converged = true;
                } else {
                    est = solve_mle(*gs, config_.link, group_log_, config_.newton, &group_warm_[rec.camera]);
                    note_estimate(est.theta_hat);
                    for (CameraId c : members) group_warm_[c] = est.theta_hat;
                }
            }
            detail::Stopwatch sw(timings_.selection);
            const PayoffSource source{&world, rec.camera, &stream_, t};
            cascade = select_cascade(est, *gs, world.catalog, config_.k_max, config_.alpha, config_.cascade_order,
                                     source, config_.link, config_.ablations.no_combining ? &stream_ : nullptr, t);
        }

        {
            detail::Stopwatch sw(timings_.estimation);
            for (std::size_t i = 0; i < cascade.tried.size(); ++i) {
                const ModelId m = cascade.tried[i];
                const Vector& x = world.catalog[m].features;
                stats_[rec.camera].absorb(x, cascade.payoffs[i]);
                logs_[rec.camera].add(m, x, cascade.payoffs[i]);
            }
            counts_[rec.camera] += cascade.tried.size();
            const SufficientStats* own[] = {&stats_[rec.camera]};
            const GroupStats own_gs = aggregate_group(own, d_, config_.zeta);
            Estimate own_est =
                solve_mle(own_gs, config_.link, logs_[rec.camera], config_.newton, &camera_estimates_[rec.camera]);
            note_estimate(own_est.theta_hat);
            camera_estimates_[rec.camera] = std::move(own_est.theta_hat);
        }

        if (graph_active()) {
            detail::Stopwatch sw(timings_.grouping);
            rec.edges_deleted = delete_edges(graph_, rec.camera, camera_estimates_, counts_, config_.deletion_rule());
            const ReconnectPolicy policy{p0_, config_.reconnect};
            rec.graph_reset = reconnect(graph_, policy, t, stream_);
        }

        detail::score_round(rec, world, cascade, config_.oracle, config_.k_max);
        return rec;
    }

    bool graph_active() const {
        return !config_.ablations.no_grouping && !config_.ablations.no_perspective &&
               config_.grouping == GroupingMode::graph;
    }

    std::vector<CameraId> group_members(CameraId camera, GroupId& label, std::size_t& components) {
        if (config_.ablations.no_perspective) {
            std::vector<CameraId> all(n_);
            std::iota(all.begin(), all.end(), CameraId{0});
            label = 0;
            components = 1;
            return all;
        }
        if (config_.ablations.no_grouping) {
            label = camera;
            components = n_;
            return {camera};
        }
        if (config_.grouping == GroupingMode::set_based) {
            const Partition parts = set_based_groups(camera_estimates_, counts_, config_.deletion_rule());
            components = parts.size();
            for (const auto& block : parts) {
                if (std::find(block.begin(), block.end(), camera) != block.end()) {
                    label = block.front();
                    return block;
                }
            }
            throw std::logic_error("set_based_groups lost a camera");
        }
        const GroupLookup g = find_group(graph_, camera);
        label = g.label;
        components = graph_.component_count();
        return g.members;
    }

    void note_estimate(const Vector& theta) {
        if (theta.norm() > 2.0) ++large_estimates_;
    }

    AgentConfig config_;
    KeyedStream stream_;
    detail::ShiftingWorld env_;
    std::size_t n_;
    int d_;
    double p0_ = 0.5;
    CameraGraph graph_;
    std::vector<SufficientStats> stats_;
    std::vector<ObservationLog> logs_;
    ObservationLog group_log_;
    std::vector<Vector> camera_estimates_;
    std::vector<Vector> group_warm_;
    std::vector<std::size_t> counts_;
    ComponentTimings timings_;
    std::size_t large_estimates_ = 0;
};

struct RunResult {
    std::vector<RoundRecord> trace;
    ComponentTimings timings;
    Partition final_partition;
    double p0 = 0.0;
    std::size_t large_estimate_warnings = 0;
};

/// T sequential rounds of the configured agent.
inline RunResult run_agent_full(const AgentConfig& config, const World& world, std::uint64_t horizon,
                                std::uint64_t seed, const PerspectiveSchedule* schedule = nullptr) {
    Agent agent(config, world, seed, schedule);
    RunResult out;
    out.trace.reserve(horizon);
    for (std::uint64_t t = 1; t <= horizon; ++t) out.trace.push_back(agent.step(t));
    out.timings = agent.timings();
    out.final_partition = agent.partition();
    out.p0 = agent.p0();
    out.large_estimate_warnings = agent.large_estimate_warnings();
    return out;
}

inline std::vector<RoundRecord> run_agent(const AgentConfig& config, const World& world, std::uint64_t horizon,
                                          std::uint64_t seed, const PerspectiveSchedule* schedule = nullptr) {
    return run_agent_full(config, world, horizon, seed, schedule).trace;
}

/// Profiling baseline: for `profile_rounds` rounds it plays models in turn
/// (model (t-1) mod |M|) and tallies pooled empirical means; afterwards it
/// plays the single model with the best mean for every camera.
inline std::vector<RoundRecord> baseline_greedy(const World& world, std::uint64_t profile_rounds, std::uint64_t horizon,
                                                std::uint64_t seed, std::size_t oracle_k = 3,
                                                const PerspectiveSchedule* schedule = nullptr) {
    if (profile_rounds < 1) throw ConfigError("greedy.profile_rounds: must be >= 1");
    const KeyedStream stream(seed);
    detail::ShiftingWorld env(world, schedule);
    const std::size_t M = world.num_models();
    std::vector<double> trials(M, 0.0), wins(M, 0.0);
    std::optional<ModelId> chosen;
    std::vector<RoundRecord> trace;
    trace.reserve(horizon);
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        const World& w = env.at(t);
        RoundRecord rec;
        rec.t = t;
        rec.camera = sample_camera(w, stream, t);
        rec.true_group = w.camera_group[rec.camera];
        rec.inferred_group = 0;
        rec.component_count = 1;
        ModelId m = 0;
        if (t <= profile_rounds) {
            m = static_cast<ModelId>((t - 1) % M);
        } else {
            if (!chosen) {
                ModelId best = 0;
                for (ModelId i = 1; i < M; ++i) {
                    const double mi = trials[i] > 0 ? wins[i] / trials[i] : 0.0;
                    const double mb = trials[best] > 0 ? wins[best] / trials[best] : 0.0;
                    if (mi > mb) best = i;
                }
                chosen = best;
            }
            m = *chosen;
        }
        CascadeResult c;
        c.planned = {m};
        const int r = sample_payoff(w, rec.camera, m, stream, t);
        c.tried = {m};
        c.payoffs = {r};
        if (t <= profile_rounds) {
            trials[m] += 1.0;
            wins[m] += r;
        }
        detail::score_round(rec, w, c, OracleKind::top_k, std::min(oracle_k, M));
        trace.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace axv
