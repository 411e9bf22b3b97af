#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "axiomvision/environment.hpp"
#include "axiomvision/policy.hpp"

namespace axv::testing {

/// Small hand-built world. Each camera list entry is that camera's group.
inline World make_world(std::vector<Vector> thetas, std::vector<GroupId> cameras, std::vector<Vector> features,
                        LinkKind link = LinkKind::sigmoid, std::vector<Tier> tiers = {}) {
    World w;
    w.dimension = static_cast<int>(thetas.front().size());
    w.group_thetas = std::move(thetas);
    w.camera_group = std::move(cameras);
    for (ModelId m = 0; m < features.size(); ++m) {
        const Tier tier = m < tiers.size() ? tiers[m] : Tier::edge;
        w.catalog.emplace_back(m, features[m], tier, tier == Tier::edge ? 1.0 : 4.0, 1.0);
    }
    w.gamma = w.group_thetas.size() > 1 ? w.min_group_distance() : 0.5;
    w.link.kind = link;
    validate_world(w);
    return w;
}

inline Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

inline Vector unit(int d, int i) {
    Vector v = Vector::Zero(d);
    v[i] = 1.0;
    return v;
}

inline Vector random_gaussian(std::mt19937_64& gen, int d) {
    std::normal_distribution<double> n;
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = n(gen);
    return v;
}

/// The canonical desk-scale world: g=2, N=8, d=5, 20 models, γ=0.5.
inline EnvConfig canonical_env() { return EnvConfig{}; }

/// Every ordered selection of k distinct items from n, visited by callback.
template <typename Fn>
void for_each_arrangement(std::size_t n, std::size_t k, Fn&& fn) {
    std::vector<std::size_t> pick;
    std::vector<bool> used(n, false);
    auto rec = [&](auto&& self) -> void {
        if (pick.size() == k) {
            fn(pick);
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            used[i] = true;
            pick.push_back(i);
            self(self);
            pick.pop_back();
            used[i] = false;
        }
    };
    rec(rec);
}

}  // namespace axv::testing
