#pragma once

// Synthetic camera/model world: ground-truth groups with separated
// perspective weights, a model catalog, payoff sampling and the oracle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "axiomvision/core.hpp"
#include "axiomvision/random.hpp"

namespace axv {

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ScheduleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Tier { edge, cloud };
enum class PayoffMode { bernoulli, thresholded_gaussian };

inline std::string_view to_string(Tier t) { return t == Tier::edge ? "edge" : "cloud"; }
inline std::string_view to_string(PayoffMode m) {
    return m == PayoffMode::bernoulli ? "bernoulli" : "thresholded-gaussian";
}

struct VisualModel {
    ModelId id = 0;
    Vector features;
    Tier tier = Tier::edge;
    double bandwidth_cost = 0.0;
    double latency_cost = 0.0;

    VisualModel() = default;
    /// Features with norm above one are scaled back onto the unit sphere.
    VisualModel(ModelId id_, Vector x, Tier tier_, double bandwidth, double latency)
        : id(id_), features(std::move(x)), tier(tier_), bandwidth_cost(bandwidth), latency_cost(latency) {
        const double n = features.norm();
        if (n > 1.0) features /= n;
    }
};

struct World {
    int dimension = 0;
    std::vector<GroupId> camera_group;
    std::vector<Vector> group_thetas;
    std::vector<VisualModel> catalog;
    double gamma = 0.0;
    PayoffMode payoff_mode = PayoffMode::bernoulli;
    double accuracy_threshold = 0.5;
    double noise_sigma = 0.0;
    LinkFunctionSpec link{};

    std::size_t num_cameras() const { return camera_group.size(); }
    std::size_t num_groups() const { return group_thetas.size(); }
    std::size_t num_models() const { return catalog.size(); }

    const Vector& theta_of(CameraId camera) const { return group_thetas.at(camera_group.at(camera)); }

    /// μ(x_m · θ_group(camera)).
    double mean_payoff(CameraId camera, ModelId model) const {
        return link_eval(link, catalog.at(model).features.dot(theta_of(camera)));
    }

    /// P(r = 1). In thresholded-gaussian mode this is Φ((μ - threshold)/σ),
    /// which orders models identically to μ.
    double success_probability(CameraId camera, ModelId model) const {
        const double mu = mean_payoff(camera, model);
        if (payoff_mode == PayoffMode::bernoulli) return std::clamp(mu, 0.0, 1.0);
        if (noise_sigma == 0.0) return mu >= accuracy_threshold ? 1.0 : 0.0;
        return 0.5 * std::erfc(-(mu - accuracy_threshold) / (noise_sigma * std::numbers::sqrt2));
    }

    /// Smallest pairwise distance between distinct group weights (infinity for g = 1).
    double min_group_distance() const {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < group_thetas.size(); ++a)
            for (std::size_t b = a + 1; b < group_thetas.size(); ++b)
                best = std::min(best, (group_thetas[a] - group_thetas[b]).norm());
        return best;
    }
};

/// Checks every World invariant; throws ConfigError naming the first violation.
inline void validate_world(const World& w) {
    constexpr double norm_slack = 1e-12;
    if (w.dimension < 1) throw ConfigError("dimension: must be >= 1");
    if (w.group_thetas.empty()) throw ConfigError("groups: at least one group required");
    if (w.camera_group.empty()) throw ConfigError("cameras: at least one camera required");
    if (w.catalog.empty()) throw ConfigError("models: at least one model required");
    for (std::size_t g = 0; g < w.group_thetas.size(); ++g) {
        const auto& th = w.group_thetas[g];
        const std::string where = "groups[" + std::to_string(g) + "].theta";
        if (th.size() != w.dimension) throw ConfigError(where + ": dimension mismatch");
        if (!th.allFinite()) throw ConfigError(where + ": non-finite entry");
        if (th.norm() > 1.0 + norm_slack) throw ConfigError(where + ": norm exceeds 1");
    }
    for (std::size_t c = 0; c < w.camera_group.size(); ++c) {
        if (w.camera_group[c] >= w.group_thetas.size())
            throw ConfigError("cameras[" + std::to_string(c) + "].group: unknown group");
    }
    for (std::size_t m = 0; m < w.catalog.size(); ++m) {
        const auto& vm = w.catalog[m];
        const std::string where = "models[" + std::to_string(m) + "]";
        if (vm.id != m) throw ConfigError(where + ".id: ids must be dense and zero-based");
        if (vm.features.size() != w.dimension) throw ConfigError(where + ".features: dimension mismatch");
        if (!vm.features.allFinite()) throw ConfigError(where + ".features: non-finite entry");
        if (vm.features.norm() > 1.0 + norm_slack) throw ConfigError(where + ".features: norm exceeds 1");
        if (!(vm.bandwidth_cost >= 0.0)) throw ConfigError(where + ".bandwidth_cost: must be >= 0");
        if (!(vm.latency_cost >= 0.0)) throw ConfigError(where + ".latency_cost: must be >= 0");
    }
    if (!(w.gamma > 0.0)) throw ConfigError("gamma: must be > 0");
    if (w.min_group_distance() < w.gamma)
        throw ConfigError("gamma: group weights violate the dispersion constraint");
    if (!(w.accuracy_threshold > 0.0 && w.accuracy_threshold < 1.0))
        throw ConfigError("threshold: must lie in (0,1)");
    if (!(w.noise_sigma >= 0.0)) throw ConfigError("sigma: must be >= 0");
}

struct EnvConfig {
    int groups = 2;
    int cameras = 8;
    int dimension = 5;
    int models = 20;
    double gamma = 0.5;
    /// Explicit group sizes; empty means balanced contiguous blocks.
    std::vector<int> group_sizes;
    double min_feature_norm = 0.5;
    double max_feature_norm = 1.0;
    double edge_fraction = 0.5;
    PayoffMode payoff_mode = PayoffMode::bernoulli;
    double accuracy_threshold = 0.5;
    double noise_sigma = 0.0;
    LinkFunctionSpec link{};
    int max_rejections = 10'000;
};

namespace detail {

inline Vector random_unit(std::mt19937_64& gen, int d) {
    std::normal_distribution<double> normal;
    Vector v(d);
    do {
        for (int i = 0; i < d; ++i) v[i] = normal(gen);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

inline Vector random_in_ball(std::mt19937_64& gen, int d) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double radius = std::pow(unif(gen), 1.0 / d);
    return random_unit(gen, d) * radius;
}

inline std::size_t count_close_pairs(const std::vector<Vector>& thetas, double gamma) {
    std::size_t close = 0;
    for (std::size_t a = 0; a < thetas.size(); ++a)
        for (std::size_t b = a + 1; b < thetas.size(); ++b)
            if ((thetas[a] - thetas[b]).norm() < gamma) ++close;
    return close;
}

}  // namespace detail

/// Deterministic in (cfg, seed).
inline World generate_world(const EnvConfig& cfg, std::uint64_t seed) {
    if (cfg.groups < 1) throw GenerationError("groups must be >= 1");
    if (cfg.dimension < 2) throw GenerationError("dimension must be >= 2");
    if (cfg.cameras < 1) throw GenerationError("cameras must be >= 1");
    if (cfg.models < 1) throw GenerationError("models must be >= 1");
    if (!(cfg.gamma > 0.0)) throw GenerationError("gamma must be > 0");
    if (!(cfg.min_feature_norm > 0.0 && cfg.min_feature_norm <= cfg.max_feature_norm && cfg.max_feature_norm <= 1.0))
        throw GenerationError("feature norm range must satisfy 0 < min <= max <= 1");

    std::mt19937_64 gen(hash_key({seed, static_cast<std::uint64_t>(StreamDomain::world)}));
    World w;
    w.dimension = cfg.dimension;
    w.gamma = cfg.gamma;
    w.payoff_mode = cfg.payoff_mode;
    w.accuracy_threshold = cfg.accuracy_threshold;
    w.noise_sigma = cfg.noise_sigma;
    w.link = cfg.link;

    // Resample the later member of any pair closer than gamma until the
    // dispersion constraint holds or the rejection budget runs out.
    w.group_thetas.reserve(cfg.groups);
    for (int g = 0; g < cfg.groups; ++g) w.group_thetas.push_back(detail::random_in_ball(gen, cfg.dimension));
    int rejections = 0;
    for (bool clean = false; !clean;) {
        clean = true;
        for (std::size_t b = 1; b < w.group_thetas.size(); ++b) {
            for (std::size_t a = 0; a < b; ++a) {
                if ((w.group_thetas[a] - w.group_thetas[b]).norm() >= cfg.gamma) continue;
                if (++rejections > cfg.max_rejections) {
                    throw GenerationError("dispersion gamma=" + std::to_string(cfg.gamma) + " infeasible after " +
                                          std::to_string(cfg.max_rejections) + " rejections; " +
                                          std::to_string(detail::count_close_pairs(w.group_thetas, cfg.gamma)) +
                                          " group pair(s) closer than gamma");
                }
                w.group_thetas[b] = detail::random_in_ball(gen, cfg.dimension);
                clean = false;
                break;
            }
        }
    }

    std::vector<int> sizes = cfg.group_sizes;
    if (sizes.empty()) {
        sizes.assign(cfg.groups, cfg.cameras / cfg.groups);
        for (int g = 0; g < cfg.cameras % cfg.groups; ++g) ++sizes[g];
    }
    if (static_cast<int>(sizes.size()) != cfg.groups)
        throw GenerationError("group_sizes must list one size per group");
    if (std::accumulate(sizes.begin(), sizes.end(), 0) != cfg.cameras || std::any_of(sizes.begin(), sizes.end(), [](int s) { return s < 0; }))
        throw GenerationError("group_sizes must be nonnegative and sum to the camera count");
    for (int g = 0; g < cfg.groups; ++g) w.camera_group.insert(w.camera_group.end(), sizes[g], static_cast<GroupId>(g));

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int m = 0; m < cfg.models; ++m) {
        const double magnitude = cfg.min_feature_norm + (cfg.max_feature_norm - cfg.min_feature_norm) * unif(gen);
        Vector x = detail::random_unit(gen, cfg.dimension) * magnitude;
        const Tier tier = unif(gen) < cfg.edge_fraction ? Tier::edge : Tier::cloud;
        // Cloud models cost more bandwidth and less latency per inference.
        const double bandwidth = tier == Tier::edge ? 0.05 + 0.25 * unif(gen) : 0.5 + 0.5 * unif(gen);
        const double latency = tier == Tier::edge ? 0.4 + 0.4 * unif(gen) : 0.1 + 0.3 * unif(gen);
        w.catalog.emplace_back(static_cast<ModelId>(m), std::move(x), tier, bandwidth, latency);
    }
    validate_world(w);
    return w;
}

/// Uniform arrival, keyed by round so paired variants see the same cameras.
inline CameraId sample_camera(const World& world, const KeyedStream& stream, std::uint64_t t) {
    return static_cast<CameraId>(stream.below(world.num_cameras(), StreamDomain::camera_arrival, t));
}

/// Binary payoff for (camera, model) at round t. The draw is keyed by
/// (t, model) so the same model queried in the same round agrees across variants.
inline int sample_payoff(const World& world, CameraId camera, ModelId model, const KeyedStream& stream,
                         std::uint64_t t) {
    const double mu = world.mean_payoff(camera, model);
    if (world.payoff_mode == PayoffMode::bernoulli)
        return stream.uniform(StreamDomain::payoff, t, model) < mu ? 1 : 0;
    const double accuracy = mu + world.noise_sigma * stream.normal(StreamDomain::payoff_noise, t, model);
    return accuracy >= world.accuracy_threshold ? 1 : 0;
}

struct PerspectiveEvent {
    std::uint64_t round = 0;
    CameraId camera = 0;
    GroupId new_group = 0;
};

struct PerspectiveSchedule {
    std::vector<PerspectiveEvent> events;

    bool empty() const { return events.empty(); }
};

/// Sorts events by round (stable, so same-round events keep file order) and
/// rejects references to cameras or groups the world lacks.
inline PerspectiveSchedule make_schedule(std::vector<PerspectiveEvent> events, const World& world) {
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (e.camera >= world.num_cameras())
            throw ScheduleError("events[" + std::to_string(i) + "].camera: unknown camera " + std::to_string(e.camera));
        if (e.new_group >= world.num_groups())
            throw ScheduleError("events[" + std::to_string(i) + "].group: unknown group " + std::to_string(e.new_group));
    }
    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.round < b.round; });
    return PerspectiveSchedule{std::move(events)};
}

/// The base world with every event of round <= t applied, later events winning.
inline World apply_perspective_shift(const World& base, const PerspectiveSchedule& schedule, std::uint64_t t) {
    World w = base;
    for (const auto& e : schedule.events) {
        if (e.round > t) break;
        w.camera_group.at(e.camera) = e.new_group;
    }
    return w;
}

/// The k models with the highest success probability for this camera,
/// descending, ties to the lower id.
inline std::vector<ModelId> oracle_best_set(const World& world, CameraId camera, std::size_t k) {
    if (k > world.num_models()) throw DomainError("oracle_best_set: k exceeds catalog size");
    std::vector<double> p(world.num_models());
    for (ModelId m = 0; m < p.size(); ++m) p[m] = world.success_probability(camera, m);
    std::vector<ModelId> order(p.size());
    std::iota(order.begin(), order.end(), ModelId{0});
    std::stable_sort(order.begin(), order.end(), [&](ModelId a, ModelId b) { return p[a] > p[b]; });
    order.resize(k);
    return order;
}

/// Expected cascade payoff of the oracle's top-k set for this camera.
inline double oracle_expected_payoff(const World& world, CameraId camera, std::size_t k) {
    std::vector<double> p;
    for (ModelId m : oracle_best_set(world, camera, k)) p.push_back(world.success_probability(camera, m));
    return expected_cascade_payoff(p);
}

}  // namespace axv
