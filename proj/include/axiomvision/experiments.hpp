#pragma once

// Variant sets for the ablation families, the theory-constant report and the
// checkpoint regret table.

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "axiomvision/harness.hpp"
#include "axiomvision/theory.hpp"

namespace axv {

inline constexpr std::uint64_t deletion_checkpoints[] = {15, 50, 200, 850};

inline VariantSpec agent_variant(std::string name, AgentConfig agent) {
    return VariantSpec{std::move(name), VariantKind::agent, std::move(agent), 500};
}

inline std::vector<VariantSpec> deletion_variants(const AgentConfig& base) {
    std::vector<VariantSpec> out;
    for (DeletionFunction f : {DeletionFunction::f1, DeletionFunction::f2, DeletionFunction::f3, DeletionFunction::f4,
                               DeletionFunction::f5, DeletionFunction::f6}) {
        AgentConfig a = base;
        a.deletion = f;
        out.push_back(agent_variant(std::string(to_string(f)), a));
    }
    return out;
}

inline std::vector<VariantSpec> grouping_variants(const AgentConfig& base) {
    AgentConfig with = base, without = base, set_based = base;
    with.ablations.no_grouping = false;
    with.grouping = GroupingMode::graph;
    without.ablations.no_grouping = true;
    set_based.ablations.no_grouping = false;
    set_based.grouping = GroupingMode::set_based;
    return {agent_variant("with-grouping", with), agent_variant("without-grouping", without),
            agent_variant("set-based", set_based)};
}

inline std::vector<VariantSpec> combining_variants(const AgentConfig& base) {
    AgentConfig with = base, without = base;
    with.ablations.no_combining = false;
    without.ablations.no_combining = true;
    return {agent_variant("with-combining", with), agent_variant("without-combining", without)};
}

inline std::vector<VariantSpec> perspective_variants(const AgentConfig& base, std::uint64_t profile_rounds = 500) {
    AgentConfig with = base, without = base;
    with.ablations.no_perspective = false;
    without.ablations.no_perspective = true;
    return {agent_variant("with-perspective", with), agent_variant("without-perspective", without),
            VariantSpec{"greedy", VariantKind::greedy, base, profile_rounds}};
}

inline std::vector<VariantSpec> greedy_comparison_variants(const AgentConfig& base, std::uint64_t profile_rounds = 500) {
    return {agent_variant("axiomvision", base), VariantSpec{"greedy", VariantKind::greedy, base, profile_rounds}};
}

/// Mean cumulative regret per variant at each checkpoint, one CSV row per variant.
inline void write_checkpoint_table(std::ostream& out, const Summary& s) {
    out << "variant";
    for (auto t : s.checkpoints) out << ',' << t;
    out << '\n';
    for (const auto& v : s.variants) {
        out << v.name;
        for (const auto& cp : v.cumulative_regret) out << ',' << format_double(cp.mean);
        out << '\n';
    }
}

/// Paired-seed rounds-to-threshold ratios `without / with`; unreached pairs are null.
inline nlohmann::json acceleration_report(const VariantSummary& without, const VariantSummary& with) {
    using nlohmann::json;
    json ratios = json::array();
    std::vector<double> reached;
    for (std::size_t i = 0; i < with.rounds_to_threshold.size() && i < without.rounds_to_threshold.size(); ++i) {
        const auto r = acceleration_ratio(without.rounds_to_threshold[i], with.rounds_to_threshold[i]);
        ratios.push_back(r ? json(*r) : json(nullptr));
        if (r) reached.push_back(*r);
    }
    json j{{"ratios", ratios}};
    if (reached.empty()) {
        j["median_ratio"] = nullptr;
    } else {
        std::sort(reached.begin(), reached.end());
        const std::size_t n = reached.size();
        j["median_ratio"] = n % 2 ? reached[n / 2] : 0.5 * (reached[n / 2 - 1] + reached[n / 2]);
    }
    return j;
}

inline nlohmann::json theory_report(const World& world, const AgentConfig& agent, double horizon, double delta = 0.1) {
    const TheoryParams p = theory_params_for(world, agent.link, static_cast<int>(agent.k_max), horizon, delta);
    const double lt = lambda_tilde(p);
    return {
        {"schema_version", 1},
        {"d", p.d},
        {"g", p.g},
        {"K", p.K},
        {"T", p.T},
        {"n_cameras", p.n_cameras},
        {"gamma", p.gamma},
        {"delta", p.delta},
        {"lambda_min", p.lambda_min},
        {"sigma", p.sigma},
        {"L", p.L},
        {"m_mu", p.m_mu},
        {"lambda_tilde", lt},
        {"alpha", theoretical_alpha(p)},
        {"beta", theoretical_beta(p)},
        {"regret_bound", regret_bound(p)},
        {"warmup_rounds", warmup_bound(p)},
        {"configured_alpha", agent.alpha},
        {"configured_beta", agent.beta},
    };
}

}  // namespace axv
