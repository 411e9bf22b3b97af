#pragma once

// Dynamic camera graph. Connected components are the inferred groups; edges
// are deleted when two cameras' estimates separate, and the whole graph is
// reinstated with a probability that decays as p0/t².

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "axiomvision/core.hpp"
#include "axiomvision/random.hpp"

namespace axv {

using Partition = std::vector<std::vector<CameraId>>;

/// Undirected simple graph on cameras, stored as adjacency bit rows.
/// Component labels (smallest member id) are recomputed lazily after edits.
class CameraGraph {
public:
    CameraGraph() = default;

    static CameraGraph complete(std::size_t n) {
        CameraGraph g(n);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                if (a != b) g.set_bit(a, b);
        g.edges_ = n * (n - 1) / 2;
        g.dirty_ = true;
        return g;
    }

    static CameraGraph edgeless(std::size_t n) { return CameraGraph(n); }

    std::size_t size() const { return n_; }
    std::size_t edge_count() const { return edges_; }

    bool has_edge(CameraId a, CameraId b) const {
        return a != b && (rows_[a * words_ + b / 64] >> (b % 64) & 1ULL) != 0;
    }

    void add_edge(CameraId a, CameraId b) {
        check(a);
        check(b);
        if (a == b || has_edge(a, b)) return;
        set_bit(a, b);
        set_bit(b, a);
        ++edges_;
        dirty_ = true;
    }

    bool remove_edge(CameraId a, CameraId b) {
        check(a);
        check(b);
        if (!has_edge(a, b)) return false;
        clear_bit(a, b);
        clear_bit(b, a);
        --edges_;
        dirty_ = true;
        return true;
    }

    template <typename Fn>
    void for_each_neighbor(CameraId a, Fn&& fn) const {
        const std::uint64_t* row = &rows_[a * words_];
        for (std::size_t w = 0; w < words_; ++w) {
            for (std::uint64_t bits = row[w]; bits != 0; bits &= bits - 1)
                fn(static_cast<CameraId>(w * 64 + std::countr_zero(bits)));
        }
    }

    std::vector<CameraId> neighbors(CameraId a) const {
        std::vector<CameraId> out;
        for_each_neighbor(a, [&](CameraId b) { out.push_back(b); });
        return out;
    }

    GroupId label_of(CameraId camera) const {
        check(camera);
        refresh();
        return labels_[camera];
    }

    std::size_t component_count() const {
        refresh();
        return components_;
    }

    std::vector<CameraId> members_of(CameraId camera) const {
        const GroupId label = label_of(camera);
        std::vector<CameraId> out;
        for (CameraId c = 0; c < n_; ++c)
            if (labels_[c] == label) out.push_back(c);
        return out;
    }

    Partition partition() const {
        refresh();
        Partition parts;
        std::vector<std::size_t> slot(n_, std::numeric_limits<std::size_t>::max());
        for (CameraId c = 0; c < n_; ++c) {
            const GroupId l = labels_[c];
            if (slot[l] == std::numeric_limits<std::size_t>::max()) {
                slot[l] = parts.size();
                parts.emplace_back();
            }
            parts[slot[l]].push_back(c);
        }
        return parts;
    }

    friend bool operator==(const CameraGraph& a, const CameraGraph& b) {
        return a.n_ == b.n_ && a.rows_ == b.rows_;
    }

private:
    explicit CameraGraph(std::size_t n)
        : n_(n), words_((n + 63) / 64), rows_(n * words_, 0), labels_(n, 0), dirty_(true) {}

    void check(CameraId c) const {
        if (c >= n_) throw std::out_of_range("CameraGraph: camera id out of range");
    }
    void set_bit(std::size_t a, std::size_t b) { rows_[a * words_ + b / 64] |= 1ULL << (b % 64); }
    void clear_bit(std::size_t a, std::size_t b) { rows_[a * words_ + b / 64] &= ~(1ULL << (b % 64)); }

    void refresh() const {
        if (!dirty_) return;
        constexpr GroupId unset = std::numeric_limits<GroupId>::max();
        std::fill(labels_.begin(), labels_.end(), unset);
        components_ = 0;
        std::vector<CameraId> stack;
        for (CameraId root = 0; root < n_; ++root) {
            if (labels_[root] != unset) continue;
            ++components_;
            labels_[root] = root;
            stack.assign(1, root);
            while (!stack.empty()) {
                const CameraId v = stack.back();
                stack.pop_back();
                for_each_neighbor(v, [&](CameraId u) {
                    if (labels_[u] == unset) {
                        labels_[u] = root;
                        stack.push_back(u);
                    }
                });
            }
        }
        dirty_ = false;
    }

    std::size_t n_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> rows_;
    std::size_t edges_ = 0;
    mutable std::vector<GroupId> labels_;
    mutable std::size_t components_ = 0;
    mutable bool dirty_ = true;
};

inline CameraGraph init_graph(std::size_t n) {
    if (n == 0) throw std::invalid_argument("init_graph: need at least one camera");
    return CameraGraph::complete(n);
}

struct GroupLookup {
    GroupId label = 0;
    std::vector<CameraId> members;
};

inline GroupLookup find_group(const CameraGraph& graph, CameraId camera) {
    return {graph.label_of(camera), graph.members_of(camera)};
}

enum class DeletionFunction { f1, f2, f3, f4, f5, f6 };

inline std::string_view to_string(DeletionFunction f) {
    static constexpr std::string_view names[] = {"f1", "f2", "f3", "f4", "f5", "f6"};
    return names[static_cast<int>(f)];
}

inline DeletionFunction parse_deletion_function(std::string_view name) {
    for (int i = 0; i < 6; ++i) {
        const auto f = static_cast<DeletionFunction>(i);
        if (to_string(f) == name) return f;
    }
    throw ConfigError("unknown deletion function '" + std::string(name) + "'");
}

/// The candidate threshold shapes in x = number of effective feedbacks.
/// f1..f4 decrease in x; f5 and f6 increase.
inline double deletion_function(DeletionFunction f, double x) {
    const double lx = std::log1p(x);
    switch (f) {
        case DeletionFunction::f1: return std::sqrt((1.0 + lx) / (1.0 + x));
        case DeletionFunction::f2: return 1.0 / ((1.0 + x) * (1.0 + x));
        case DeletionFunction::f3: return 1.0 / std::sqrt(1.0 + x);
        case DeletionFunction::f4: return std::pow(1.0 + x, -0.25);
        case DeletionFunction::f5: return 1.0 + lx;
        case DeletionFunction::f6: return std::sqrt(1.0 + lx);
    }
    return 0.0;
}

struct DeletionRule {
    double beta = 0.1;
    DeletionFunction f_id = DeletionFunction::f1;
};

inline double deletion_threshold(const DeletionRule& rule, std::size_t count_a, std::size_t count_b) {
    return rule.beta * (deletion_function(rule.f_id, static_cast<double>(count_a)) +
                        deletion_function(rule.f_id, static_cast<double>(count_b)));
}

/// Removes each edge (camera, ℓ) whose estimate distance exceeds the rule's
/// threshold. Only edges incident to `camera` are examined. Returns the
/// number of deleted edges.
inline std::size_t delete_edges(CameraGraph& graph, CameraId camera, std::span<const Vector> estimates,
                                std::span<const std::size_t> counts, const DeletionRule& rule) {
    if (estimates.size() < graph.size() || counts.size() < graph.size())
        throw std::invalid_argument("delete_edges: missing estimate or count");
    std::vector<CameraId> doomed;
    const Vector& mine = estimates[camera];
    graph.for_each_neighbor(camera, [&](CameraId other) {
        if (estimates[other].size() != mine.size()) throw std::invalid_argument("delete_edges: missing estimate");
        if ((mine - estimates[other]).norm() > deletion_threshold(rule, counts[camera], counts[other]))
            doomed.push_back(other);
    });
    for (CameraId other : doomed) graph.remove_edge(camera, other);
    return doomed.size();
}

enum class ReconnectMode { whole_graph_reset, per_edge };

struct ReconnectPolicy {
    double p0 = 0.5;
    ReconnectMode mode = ReconnectMode::whole_graph_reset;
};

/// min(1, p0 / t²).
inline double reconnect_probability(double p0, std::uint64_t t) {
    const double tt = static_cast<double>(t);
    return std::clamp(p0 / (tt * tt), 0.0, 1.0);
}

/// Returns true when the graph changed. Draws are keyed by round.
inline bool reconnect(CameraGraph& graph, const ReconnectPolicy& policy, std::uint64_t t, const KeyedStream& stream) {
    if (t < 1) throw std::invalid_argument("reconnect: rounds start at 1");
    const double p = reconnect_probability(policy.p0, t);
    const std::size_t n = graph.size();
    if (policy.mode == ReconnectMode::whole_graph_reset) {
        if (!(stream.uniform(StreamDomain::reconnect, t) < p)) return false;
        if (graph.edge_count() == n * (n - 1) / 2) return false;
        graph = CameraGraph::complete(n);
        return true;
    }
    bool changed = false;
    for (CameraId a = 0; a < n; ++a) {
        for (CameraId b = a + 1; b < n; ++b) {
            if (graph.has_edge(a, b)) continue;
            if (stream.uniform(StreamDomain::reconnect, t, a, b) < p) {
                graph.add_edge(a, b);
                changed = true;
            }
        }
    }
    return changed;
}

/// Components of the graph that links every pair within its deletion
/// threshold, rebuilt from scratch with all N² pairwise checks.
inline Partition set_based_groups(std::span<const Vector> estimates, std::span<const std::size_t> counts,
                                  const DeletionRule& rule) {
    const std::size_t n = estimates.size();
    if (counts.size() != n) throw std::invalid_argument("set_based_groups: counts and estimates differ in length");
    CameraGraph g = CameraGraph::edgeless(n);
    for (CameraId a = 0; a < n; ++a)
        for (CameraId b = a + 1; b < n; ++b)
            if ((estimates[a] - estimates[b]).norm() <= deletion_threshold(rule, counts[a], counts[b]))
                g.add_edge(a, b);
    return g.partition();
}

/// Disjoint union of complete graphs, one per block.
inline CameraGraph graph_from_partition(std::size_t n, const Partition& parts) {
    CameraGraph g = CameraGraph::edgeless(n);
    for (const auto& block : parts)
        for (std::size_t i = 0; i < block.size(); ++i)
            for (std::size_t j = i + 1; j < block.size(); ++j) g.add_edge(block[i], block[j]);
    return g;
}

/// Lloyd's k-means with k-means++ seeding (at most 50 iterations); each
/// cluster becomes a complete component.
inline CameraGraph kmeans_warm_start(std::span<const Vector> estimates, std::size_t k, std::uint64_t seed) {
    const std::size_t n = estimates.size();
    if (k < 1) throw std::invalid_argument("kmeans_warm_start: k must be >= 1");
    if (k > n) throw std::invalid_argument("kmeans_warm_start: k exceeds camera count");
    std::mt19937_64 gen(hash_key({seed, static_cast<std::uint64_t>(StreamDomain::kmeans)}));

    std::vector<Vector> centers;
    centers.push_back(estimates[std::uniform_int_distribution<std::size_t>(0, n - 1)(gen)]);
    std::vector<double> d2(n);
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, (estimates[i] - c).squaredNorm());
            d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            pick = std::discrete_distribution<std::size_t>(d2.begin(), d2.end())(gen);
        } else {
            // All points coincide with a center; any unused index will do.
            pick = centers.size();
        }
        centers.push_back(estimates[pick]);
    }

    std::vector<std::size_t> assign(n, k);
    for (int iter = 0; iter < 50; ++iter) {
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double dc = (estimates[i] - centers[c]).squaredNorm();
                if (dc < best_d) {
                    best_d = dc;
                    best = c;
                }
            }
            moved = moved || assign[i] != best;
            assign[i] = best;
        }
        for (std::size_t c = 0; c < k; ++c) {
            Vector sum = Vector::Zero(estimates[0].size());
            std::size_t members = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (assign[i] == c) {
                    sum += estimates[i];
                    ++members;
                }
            if (members > 0) centers[c] = sum / static_cast<double>(members);
        }
        if (!moved) break;
    }

    Partition parts(k);
    for (std::size_t i = 0; i < n; ++i) parts[assign[i]].push_back(i);
    return graph_from_partition(n, parts);
}

/// One line per component, members ascending and space-separated, lines
/// ordered by smallest member.
inline std::string dump_partition(Partition parts) {
    for (auto& block : parts) std::sort(block.begin(), block.end());
    parts.erase(std::remove_if(parts.begin(), parts.end(), [](const auto& b) { return b.empty(); }), parts.end());
    std::sort(parts.begin(), parts.end());
    std::ostringstream out;
    for (const auto& block : parts) {
        for (std::size_t i = 0; i < block.size(); ++i) out << (i ? " " : "") << block[i];
        out << '\n';
    }
    return out.str();
}

/// Canonical form used to compare partitions irrespective of block order.
inline Partition canonical(Partition parts) {
    for (auto& block : parts) std::sort(block.begin(), block.end());
    parts.erase(std::remove_if(parts.begin(), parts.end(), [](const auto& b) { return b.empty(); }), parts.end());
    std::sort(parts.begin(), parts.end());
    return parts;
}

}  // namespace axv
