#pragma once

// Sufficient statistics, penalized GLM maximum likelihood via damped Newton,
// and the optimistic (UCB) score.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "axiomvision/core.hpp"

namespace axv {

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-camera Gramian, response vector and feedback count. No regularizer.
struct SufficientStats {
    Matrix gramian;
    Vector response;
    std::size_t count = 0;

    SufficientStats() = default;
    explicit SufficientStats(int dimension)
        : gramian(Matrix::Zero(dimension, dimension)), response(Vector::Zero(dimension)) {}

    int dimension() const { return static_cast<int>(response.size()); }

    void absorb(const Vector& x, int r) {
        if (x.size() != response.size()) throw std::invalid_argument("SufficientStats: dimension mismatch");
        gramian.selfadjointView<Eigen::Lower>().rankUpdate(x);
        gramian.triangularView<Eigen::StrictlyUpper>() = gramian.transpose();
        if (r != 0) response += static_cast<double>(r) * x;
        ++count;
    }

    SufficientStats& operator+=(const SufficientStats& other) {
        if (other.response.size() != response.size()) throw std::invalid_argument("SufficientStats: dimension mismatch");
        gramian += other.gramian;
        response += other.response;
        count += other.count;
        return *this;
    }
};

inline SufficientStats update_stats(SufficientStats stats, const Vector& x, int r) {
    stats.absorb(x, r);
    return stats;
}

/// The regularized group view ζI + Σ gramian_n, with a cached Cholesky factor.
class GroupStats {
public:
    GroupStats(Matrix gramian_reg, Vector response, std::size_t count, double zeta)
        : gramian_reg_(std::move(gramian_reg)), response_(std::move(response)), count_(count), zeta_(zeta),
          factor_(gramian_reg_) {
        if (factor_.info() != Eigen::Success) throw NumericError("GroupStats: regularized Gramian is not positive definite");
    }

    const Matrix& gramian_reg() const { return gramian_reg_; }
    const Vector& response() const { return response_; }
    std::size_t count() const { return count_; }
    double zeta() const { return zeta_; }
    int dimension() const { return static_cast<int>(response_.size()); }
    const Eigen::LLT<Matrix>& factor() const { return factor_; }

private:
    Matrix gramian_reg_;
    Vector response_;
    std::size_t count_;
    double zeta_;
    Eigen::LLT<Matrix> factor_;
};

inline GroupStats aggregate_group(std::span<const SufficientStats* const> members, int dimension, double zeta) {
    if (!(zeta > 0.0)) throw ConfigError("aggregate_group: zeta must be > 0");
    Matrix m = zeta * Matrix::Identity(dimension, dimension);
    Vector b = Vector::Zero(dimension);
    std::size_t count = 0;
    for (const SufficientStats* s : members) {
        if (s->dimension() != dimension) throw std::invalid_argument("aggregate_group: dimension mismatch");
        m += s->gramian;
        b += s->response;
        count += s->count;
    }
    return GroupStats(std::move(m), std::move(b), count, zeta);
}

inline GroupStats aggregate_group(std::span<const SufficientStats> members, int dimension, double zeta) {
    std::vector<const SufficientStats*> ptrs;
    ptrs.reserve(members.size());
    for (const auto& s : members) ptrs.push_back(&s);
    return aggregate_group(std::span<const SufficientStats* const>(ptrs), dimension, zeta);
}

/// Observation history compressed to distinct feature points with trial and
/// success tallies. Keyed entries (one per catalog model) merge; unkeyed
/// entries are kept one per observation. The GLM score and Hessian are sums
/// over observations, so the tallies reproduce them exactly.
class ObservationLog {
public:
    struct Entry {
        Vector x;
        double trials = 0.0;
        double successes = 0.0;
    };

    void add(const Vector& x, int r) { entries_.push_back({x, 1.0, static_cast<double>(r)}); }

    void add(ModelId key, const Vector& x, int r) {
        Entry& e = slot(key, x);
        e.trials += 1.0;
        e.successes += r;
    }

    void merge(const ObservationLog& other) {
        for (std::size_t i = 0; i < other.entries_.size(); ++i) {
            const Entry& src = other.entries_[i];
            if (i < other.key_of_slot_.size() && other.key_of_slot_[i] != no_key) {
                Entry& e = slot(other.key_of_slot_[i], src.x);
                e.trials += src.trials;
                e.successes += src.successes;
            } else {
                entries_.push_back(src);
            }
        }
    }

    void clear() {
        entries_.clear();
        slot_of_key_.clear();
        key_of_slot_.clear();
    }

    std::span<const Entry> entries() const { return entries_; }

    double total_trials() const {
        double n = 0.0;
        for (const auto& e : entries_) n += e.trials;
        return n;
    }

private:
    static constexpr std::size_t no_key = std::numeric_limits<std::size_t>::max();

    Entry& slot(ModelId key, const Vector& x) {
        if (key >= slot_of_key_.size()) slot_of_key_.resize(key + 1, no_key);
        if (slot_of_key_[key] == no_key) {
            slot_of_key_[key] = entries_.size();
            entries_.push_back({x, 0.0, 0.0});
            key_of_slot_.resize(entries_.size(), no_key);
            key_of_slot_.back() = key;
        }
        return entries_[slot_of_key_[key]];
    }

    std::vector<Entry> entries_;
    std::vector<std::size_t> slot_of_key_;
    std::vector<std::size_t> key_of_slot_;
};

struct Estimate {
    Vector theta_hat;
    bool converged = false;
    int iterations = 0;
    double gradient_norm = 0.0;
};

struct NewtonOptions {
    double tol = 1e-8;
    int max_iter = 100;
    int max_halvings = 30;
};

namespace detail {

/// Σ (s - n μ(xᵀθ)) x - ζθ.
inline Vector penalized_score(const ObservationLog& log, const LinkFunctionSpec& link, double zeta,
                              const Vector& theta) {
    Vector g = -zeta * theta;
    for (const auto& e : log.entries()) {
        const double z = e.x.dot(theta);
        g += (e.successes - e.trials * link_eval(link, z)) * e.x;
    }
    return g;
}

inline Matrix penalized_hessian(const ObservationLog& log, const LinkFunctionSpec& link, double zeta,
                                const Vector& theta) {
    const auto d = theta.size();
    Matrix h = zeta * Matrix::Identity(d, d);
    for (const auto& e : log.entries()) {
        const double w = e.trials * link_derivative(link, e.x.dot(theta));
        if (w != 0.0) h.selfadjointView<Eigen::Lower>().rankUpdate(e.x, w);
    }
    h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
    return h;
}

}  // namespace detail

/// Root of the ζ-penalized GLM score Σ(r - μ(xᵀθ))x - ζθ by damped Newton.
/// The step is halved while the score norm fails to decrease. Returns
/// converged = false after max_iter rather than throwing.
inline Estimate solve_mle(const GroupStats& gs, const LinkFunctionSpec& link, const ObservationLog& history,
                          const NewtonOptions& opt = {}, const Vector* warm_start = nullptr) {
    const int d = gs.dimension();
    if (static_cast<std::size_t>(std::llround(history.total_trials())) != gs.count())
        throw std::invalid_argument("solve_mle: history does not match group statistics");

    Estimate est;
    est.theta_hat = (warm_start && warm_start->size() == d) ? *warm_start : Vector::Zero(d);
    Vector g = detail::penalized_score(history, link, gs.zeta(), est.theta_hat);
    double gnorm = g.norm();

    for (; est.iterations < opt.max_iter; ++est.iterations) {
        if (gnorm <= opt.tol) break;
        const Matrix h = detail::penalized_hessian(history, link, gs.zeta(), est.theta_hat);
        const Eigen::LLT<Matrix> llt(h);
        if (llt.info() != Eigen::Success) throw NumericError("solve_mle: Hessian not positive definite");
        const Vector step = llt.solve(g);

        double scale = 1.0;
        Vector candidate = est.theta_hat + step;
        Vector g_new = detail::penalized_score(history, link, gs.zeta(), candidate);
        for (int h_i = 0; h_i < opt.max_halvings && !(g_new.norm() < gnorm); ++h_i) {
            scale *= 0.5;
            candidate = est.theta_hat + scale * step;
            g_new = detail::penalized_score(history, link, gs.zeta(), candidate);
        }
        if (!candidate.allFinite()) throw NumericError("solve_mle: non-finite iterate");
        est.theta_hat = std::move(candidate);
        g = std::move(g_new);
        gnorm = g.norm();
    }
    est.gradient_norm = gnorm;
    est.converged = gnorm <= opt.tol;
    return est;
}

/// √(xᵀ M⁻¹ x) with M the regularized group Gramian.
inline double confidence_width(const Vector& x, const GroupStats& gs) {
    return gs.factor().matrixL().solve(x).norm();
}

/// μ(xᵀθ̂) + α·‖x‖_{M⁻¹}.
inline double ucb_score(const Vector& x, const Estimate& est, const GroupStats& gs, double alpha,
                        const LinkFunctionSpec& link) {
    return link_eval(link, x.dot(est.theta_hat)) + alpha * confidence_width(x, gs);
}

}  // namespace axv
