#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <set>

#include "axiomvision/grouping.hpp"
#include "support.hpp"

using namespace axv;
using axv::testing::random_gaussian;
using axv::testing::unit;
using axv::testing::vec;

namespace {

// Reachability by breadth-first search over the adjacency predicate.
std::set<CameraId> bfs(const CameraGraph& g, CameraId start) {
    std::set<CameraId> seen{start};
    std::queue<CameraId> q;
    q.push(start);
    while (!q.empty()) {
        const CameraId a = q.front();
        q.pop();
        for (CameraId b = 0; b < g.size(); ++b)
            if (b != a && g.has_edge(a, b) && seen.insert(b).second) q.push(b);
    }
    return seen;
}

double wcss(const std::vector<Vector>& pts, const std::vector<int>& label) {
    double total = 0.0;
    for (int c = 0; c < 2; ++c) {
        Vector mean = Vector::Zero(pts.front().size());
        int n = 0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (label[i] == c) {
                mean += pts[i];
                ++n;
            }
        if (n == 0) continue;
        mean /= n;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (label[i] == c) total += (pts[i] - mean).squaredNorm();
    }
    return total;
}

}  // namespace

TEST(InitGraph, Examples) {
    const CameraGraph one = init_graph(1);
    EXPECT_EQ(one.edge_count(), 0u);
    EXPECT_EQ(one.component_count(), 1u);
    const CameraGraph four = init_graph(4);
    EXPECT_EQ(four.edge_count(), 6u);
    EXPECT_EQ(four.component_count(), 1u);
    EXPECT_EQ(init_graph(308).edge_count(), 308u * 307u / 2u);
    EXPECT_EQ(init_graph(308).edge_count(), 47'278u);
    EXPECT_THROW(init_graph(0), std::invalid_argument);
}

TEST(FindGroup, Examples) {
    const CameraGraph full = init_graph(5);
    EXPECT_EQ(find_group(full, 3).members, (std::vector<CameraId>{0, 1, 2, 3, 4}));
    const CameraGraph none = CameraGraph::edgeless(5);
    EXPECT_EQ(find_group(none, 3).members, (std::vector<CameraId>{3}));

    CameraGraph path = CameraGraph::edgeless(4);
    path.add_edge(0, 1);
    path.add_edge(1, 2);
    const auto g = find_group(path, 2);
    const auto oracle = bfs(path, 2);
    EXPECT_EQ(std::set<CameraId>(g.members.begin(), g.members.end()), oracle);
    EXPECT_EQ(oracle, (std::set<CameraId>{0, 1, 2}));
    EXPECT_EQ(g.label, 0u);
    EXPECT_EQ(find_group(path, 3).members, (std::vector<CameraId>{3}));
}

TEST(CameraGraph, ComponentsMatchBfsOnRandomGraphs) {
    std::mt19937_64 gen(10);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rep % 40;
        const double density = u(gen) * 0.15;
        CameraGraph g = CameraGraph::edgeless(n);
        for (CameraId a = 0; a < n; ++a)
            for (CameraId b = a + 1; b < n; ++b)
                if (u(gen) < density) g.add_edge(a, b);
        std::set<std::set<CameraId>> comps;
        for (CameraId c = 0; c < n; ++c) {
            const auto members = g.members_of(c);
            const std::set<CameraId> got(members.begin(), members.end());
            ASSERT_EQ(got, bfs(g, c));
            ASSERT_EQ(g.label_of(c), *got.begin());
            comps.insert(got);
        }
        ASSERT_EQ(g.component_count(), comps.size());
        ASSERT_EQ(g.partition().size(), comps.size());
    }
}

TEST(CameraGraph, LazyRefreshAfterMutation) {
    CameraGraph g = init_graph(4);
    EXPECT_EQ(g.component_count(), 1u);
    g.remove_edge(0, 3);
    g.remove_edge(1, 3);
    g.remove_edge(2, 3);
    EXPECT_EQ(g.component_count(), 2u);
    EXPECT_EQ(g.label_of(3), 3u);
    g.add_edge(3, 1);
    EXPECT_EQ(g.component_count(), 1u);
    EXPECT_EQ(g.label_of(3), 0u);
}

TEST(DeletionThreshold, Examples) {
    EXPECT_DOUBLE_EQ(deletion_threshold({0.1, DeletionFunction::f1}, 0, 0), 0.2);
    EXPECT_NEAR(deletion_threshold({1.0, DeletionFunction::f3}, 3, 8), 0.5 + 1.0 / 3.0, 1e-15);
    // Counts are integers; f1 at x = e - 1 evaluated directly.
    const double x = std::numbers::e - 1.0;
    EXPECT_NEAR(2.0 * deletion_function(DeletionFunction::f1, x), 2.0 * std::sqrt(2.0 / std::numbers::e), 1e-14);
    EXPECT_NEAR(2.0 * std::sqrt(2.0 / std::numbers::e), 1.7155, 1e-4);
}

TEST(DeletionFunction, Shapes) {
    for (auto f : {DeletionFunction::f1, DeletionFunction::f2, DeletionFunction::f3, DeletionFunction::f4}) {
        for (double x = 0.0; x < 5000.0; x = x * 1.7 + 1.0)
            EXPECT_GT(deletion_function(f, x), deletion_function(f, x * 1.7 + 1.0)) << to_string(f) << " at " << x;
    }
    for (auto f : {DeletionFunction::f5, DeletionFunction::f6}) {
        for (double x = 0.0; x < 5000.0; x = x * 1.7 + 1.0)
            EXPECT_LT(deletion_function(f, x), deletion_function(f, x * 1.7 + 1.0)) << to_string(f) << " at " << x;
    }
    for (int i = 0; i < 6; ++i) {
        const auto f = static_cast<DeletionFunction>(i);
        EXPECT_EQ(parse_deletion_function(to_string(f)), f);
    }
    EXPECT_THROW(parse_deletion_function("f7"), ConfigError);
}

TEST(DeleteEdges, Examples) {
    CameraGraph g = init_graph(3);
    const std::vector<Vector> same(3, vec({0.2, 0.1}));
    const std::vector<std::size_t> counts{5, 5, 5};
    EXPECT_EQ(delete_edges(g, 0, same, counts, {}), 0u);
    EXPECT_EQ(g.edge_count(), 3u);

    CameraGraph two = init_graph(2);
    const std::vector<Vector> apart{unit(2, 0), -unit(2, 0)};
    const std::vector<std::size_t> hundred{100, 100};
    const double thr = deletion_threshold({0.1, DeletionFunction::f1}, 100, 100);
    EXPECT_NEAR(thr, 0.1 * 2.0 * std::sqrt((1.0 + std::log(101.0)) / 101.0), 1e-15);
    EXPECT_EQ(delete_edges(two, 0, apart, hundred, {0.1, DeletionFunction::f1}), 1u);
    EXPECT_FALSE(two.has_edge(0, 1));

    CameraGraph cold = init_graph(2);
    const std::vector<Vector> near{vec({0.0, 0.0}), vec({0.15, 0.0})};
    EXPECT_EQ(delete_edges(cold, 1, near, std::vector<std::size_t>{0, 0}, {0.1, DeletionFunction::f1}), 0u);
    EXPECT_TRUE(cold.has_edge(0, 1));

    std::vector<Vector> missing{vec({0.0, 0.0}), Vector()};
    EXPECT_THROW(delete_edges(cold, 0, missing, std::vector<std::size_t>{0, 0}, {}), std::invalid_argument);
}

TEST(Reconnect, Examples) {
    EXPECT_DOUBLE_EQ(reconnect_probability(0.5, 1000), 5e-7);
    int resets = 0;
    for (std::uint64_t seed = 0; seed < 10'000; ++seed) {
        CameraGraph g = CameraGraph::edgeless(3);
        resets += reconnect(g, {0.5, ReconnectMode::whole_graph_reset}, 1000, KeyedStream(seed)) ? 1 : 0;
    }
    EXPECT_LE(resets, 1);

    CameraGraph g = CameraGraph::edgeless(6);
    g.add_edge(1, 2);
    EXPECT_TRUE(reconnect(g, {1.0, ReconnectMode::whole_graph_reset}, 1, KeyedStream(0)));
    EXPECT_EQ(g, init_graph(6));

    CameraGraph e = CameraGraph::edgeless(6);
    EXPECT_TRUE(reconnect(e, {1.0, ReconnectMode::per_edge}, 1, KeyedStream(0)));
    EXPECT_EQ(e, init_graph(6));
}

TEST(GraphDynamics, DeletionAndReconnectMonotone) {
    std::mt19937_64 gen(3);
    std::uniform_int_distribution<std::size_t> cnt(0, 300);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 8;
        std::vector<Vector> est;
        std::vector<std::size_t> counts;
        for (std::size_t i = 0; i < n; ++i) {
            est.push_back(random_gaussian(gen, 3) * 0.3);
            counts.push_back(cnt(gen));
        }
        CameraGraph g = init_graph(n);
        for (CameraId c = 0; c < n; ++c) {
            const CameraGraph before = g;
            delete_edges(g, c, est, counts, {0.1, DeletionFunction::f1});
            for (CameraId a = 0; a < n; ++a)
                for (CameraId b = a + 1; b < n; ++b)
                    if (g.has_edge(a, b)) ASSERT_TRUE(before.has_edge(a, b));
            ASSERT_GE(g.component_count(), before.component_count());
        }
        // Every camera processed once with frozen estimates: graph refines set-based.
        const Partition sets = set_based_groups(est, counts, {0.1, DeletionFunction::f1});
        for (const auto& block : g.partition()) {
            const auto it = std::find_if(sets.begin(), sets.end(), [&](const auto& s) {
                return std::find(s.begin(), s.end(), block.front()) != s.end();
            });
            ASSERT_NE(it, sets.end());
            for (CameraId c : block) ASSERT_NE(std::find(it->begin(), it->end(), c), it->end());
        }
        const CameraGraph before = g;
        reconnect(g, {0.9, ReconnectMode::per_edge}, 1, KeyedStream(static_cast<std::uint64_t>(rep)));
        for (CameraId a = 0; a < n; ++a)
            for (CameraId b = a + 1; b < n; ++b)
                if (before.has_edge(a, b)) ASSERT_TRUE(g.has_edge(a, b));
        ASSERT_LE(g.component_count(), before.component_count());
    }
}

TEST(SetBasedGroups, Examples) {
    const std::vector<std::size_t> counts(4, 10);
    EXPECT_EQ(set_based_groups(std::vector<Vector>(4, vec({0.1, 0.2})), counts, {}).size(), 1u);

    std::vector<Vector> est{vec({1.0, 0.0}), vec({-1.0, 0.0}), vec({1.0, 0.01}), vec({-1.0, 0.01})};
    const DeletionRule rule{0.1, DeletionFunction::f1};
    ASSERT_LT(deletion_threshold(rule, 10, 10), 0.5);
    const Partition got = canonical(set_based_groups(est, counts, rule));
    Partition oracle;
    {
        std::vector<bool> placed(4, false);
        for (CameraId a = 0; a < 4; ++a) {
            if (placed[a]) continue;
            std::vector<CameraId> block{a};
            placed[a] = true;
            for (CameraId b = a + 1; b < 4; ++b)
                if ((est[a] - est[b]).norm() <= deletion_threshold(rule, 10, 10)) {
                    block.push_back(b);
                    placed[b] = true;
                }
            oracle.push_back(block);
        }
    }
    EXPECT_EQ(got, canonical(oracle));
    EXPECT_EQ(got, (Partition{{0, 2}, {1, 3}}));

    EXPECT_EQ(set_based_groups(std::vector<Vector>{vec({0.3})}, std::vector<std::size_t>{0}, {}).size(), 1u);
}

// Estimates inside γ/4 balls around γ-separated truths are recovered exactly
// by a γ/2 threshold.
TEST(SetBasedGroups, SoundnessFromConstructedEstimates) {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 300; ++rep) {
        const double gamma = 0.2 + 0.8 * u(gen);
        const int d = 2 + rep % 4;
        const int g = 2 + rep % 3;
        std::vector<Vector> truth;
        while (static_cast<int>(truth.size()) < g) {
            Vector v = random_gaussian(gen, d) * 2.0;
            bool ok = true;
            for (const auto& t : truth) ok = ok && (t - v).norm() >= gamma;
            if (ok) truth.push_back(v);
        }
        const std::size_t n = 12;
        std::vector<Vector> est;
        std::vector<GroupId> label;
        for (std::size_t c = 0; c < n; ++c) {
            const GroupId k = c % g;
            Vector noise = random_gaussian(gen, d).normalized() * (gamma / 4.0) * u(gen) * 0.999;
            est.push_back(truth[k] + noise);
            label.push_back(k);
        }
        // f3 with β = γ/4 at zero counts is γ/4 + γ/4 = γ/2 for every pair.
        const DeletionRule rule{gamma / 4.0, DeletionFunction::f3};
        const Partition got = canonical(set_based_groups(est, std::vector<std::size_t>(n, 0), rule));
        Partition expected(g);
        for (CameraId c = 0; c < n; ++c) expected[label[c]].push_back(c);
        ASSERT_EQ(got, canonical(expected));
    }
}

TEST(KmeansWarmStart, Examples) {
    std::mt19937_64 gen(5);
    std::vector<Vector> pts;
    for (int i = 0; i < 6; ++i) pts.push_back(random_gaussian(gen, 3));
    EXPECT_EQ(kmeans_warm_start(pts, 1, 0), init_graph(6));
    EXPECT_EQ(kmeans_warm_start(pts, 6, 0), CameraGraph::edgeless(6));
    EXPECT_THROW(kmeans_warm_start(pts, 7, 0), std::invalid_argument);
}

TEST(KmeansWarmStart, TwoCloudsMatchExhaustivePartition) {
    std::mt19937_64 gen(8);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 4 + rep % 5;
        std::vector<Vector> pts;
        for (std::size_t i = 0; i < n; ++i) {
            const Vector centre = (i % 2 == 0) ? vec({3.0, 0.0}) : vec({-3.0, 0.0});
            pts.push_back(centre + random_gaussian(gen, 2) * 0.2);
        }
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> best_label;
        for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
            std::vector<int> label(n);
            for (std::size_t i = 0; i < n; ++i) label[i] = (mask >> i) & 1;
            const double w = wcss(pts, label);
            if (w < best) {
                best = w;
                best_label = label;
            }
        }
        Partition expected(2);
        for (std::size_t i = 0; i < n; ++i) expected[best_label[i]].push_back(i);
        const CameraGraph g = kmeans_warm_start(pts, 2, static_cast<std::uint64_t>(rep));
        ASSERT_EQ(canonical(g.partition()), canonical(expected));
        ASSERT_EQ(g.component_count(), 2u);
    }
}

TEST(Partition, DumpIsSortedAndStable) {
    const Partition p{{5, 4}, {2, 0}, {3}};
    EXPECT_EQ(dump_partition(p), dump_partition(Partition{{0, 2}, {3}, {4, 5}}));
    EXPECT_EQ(canonical(p), (Partition{{0, 2}, {3}, {4, 5}}));
    Partition with_singleton = p;
    with_singleton.push_back({1});
    EXPECT_EQ(graph_from_partition(6, p).partition(), canonical(with_singleton));
}
