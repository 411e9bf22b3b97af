#pragma once

// Computable constants of the regret analysis: the effective eigenvalue
// λ̃, the theoretical exploration/deletion parameters, the regret bound
// shape and the warm-up round count after which grouping is correct w.h.p.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "axiomvision/core.hpp"
#include "axiomvision/environment.hpp"

namespace axv {

struct TheoryParams {
    int d = 5;
    int g = 2;
    int K = 3;
    double T = 20'000;
    double lambda_min = 0.1;
    double sigma = 0.5;
    double L = 0.25;
    double m_mu = 0.1;
    double delta = 0.1;
    double gamma = 0.5;
    int n_cameras = 8;
};

/// ∫₀^λ (1 - exp(-(λ-x)²/(2σ²)))^K dx, absolute error below 1e-8.
inline double lambda_tilde(double lambda_min, double sigma, int K) {
    if (!(lambda_min > 0.0)) throw DomainError("lambda_tilde: lambda must be > 0");
    if (!(sigma >= 0.0)) throw DomainError("lambda_tilde: sigma must be >= 0");
    if (K < 1) throw DomainError("lambda_tilde: K must be >= 1");
    if (sigma == 0.0) return lambda_min;
    const double two_s2 = 2.0 * sigma * sigma;
    auto integrand = [&](double x) {
        const double u = lambda_min - x;
        return std::pow(-std::expm1(-u * u / two_s2), K);
    };
    double err = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, lambda_min, 20,
                                                                                        1e-13, &err);
    if (err > 1e-8) throw std::runtime_error("lambda_tilde: quadrature did not reach 1e-8");
    return value;
}

inline double lambda_tilde(const TheoryParams& p) { return lambda_tilde(p.lambda_min, p.sigma, p.K); }

/// (1/m_mu)·√(8/λ̃ + d·ln(t/d) + 2·ln(1/δ)).
inline double alpha_at(const TheoryParams& p, double t, double delta) {
    if (!(t > p.d)) throw DomainError("alpha_at: t must exceed d");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("alpha_at: delta must lie in (0,1)");
    const double lt = lambda_tilde(p);
    return std::sqrt(8.0 / lt + p.d * std::log(t / p.d) + 2.0 * std::log(1.0 / delta)) / p.m_mu;
}

/// (1/m_mu)·√(8/λ̃ + d·ln(T/d) + 2·ln(4gT)).
inline double theoretical_alpha(const TheoryParams& p) {
    if (!(p.T > p.d)) throw DomainError("theoretical_alpha: T must exceed d");
    const double lt = lambda_tilde(p);
    if (!(lt > 0.0)) throw DomainError("theoretical_alpha: lambda_tilde must be > 0");
    return std::sqrt(8.0 / lt + p.d * std::log(p.T / p.d) + 2.0 * std::log(4.0 * p.g * p.T)) / p.m_mu;
}

/// √(32d / (λ̃·m_mu²)).
inline double theoretical_beta(const TheoryParams& p) {
    const double lt = lambda_tilde(p);
    if (!(lt > 0.0)) throw DomainError("theoretical_beta: lambda_tilde must be > 0");
    return std::sqrt(32.0 * p.d / (lt * p.m_mu * p.m_mu));
}

/// (L·d/m_mu)·√(g·K·T)·ln T. The absolute constant hidden by the O(·) is
/// not included; only shape and dominance are meaningful.
inline double regret_bound(const TheoryParams& p) {
    if (!(p.T >= 2.0)) throw DomainError("regret_bound: T must be >= 2");
    return (p.L * p.d / p.m_mu) * std::sqrt(static_cast<double>(p.g) * p.K * p.T) * std::log(p.T);
}

/// 4N·max{512d/(γ²λ̃)·ln(N/δ), 256/λ̃²·ln(32d/(λ̃²δ))} + 16N·ln(4NT/δ).
inline double warmup_bound(const TheoryParams& p) {
    if (!(p.delta > 0.0 && p.delta < 1.0)) throw DomainError("warmup_bound: delta must lie in (0,1)");
    if (!(p.gamma > 0.0) || p.n_cameras < 1 || !(p.T > 0.0)) throw DomainError("warmup_bound: parameters must be positive");
    const double lt = lambda_tilde(p);
    const double n = p.n_cameras;
    const double separation = 512.0 * p.d / (p.gamma * p.gamma * lt) * std::log(n / p.delta);
    const double conditioning = 256.0 / (lt * lt) * std::log(32.0 * p.d / (lt * lt * p.delta));
    return 4.0 * n * std::max(separation, conditioning) + 16.0 * n * std::log(4.0 * n * p.T / p.delta);
}

/// Smallest eigenvalue of (1/|M|)·Σ x xᵀ over the catalog.
inline double catalog_lambda_min(const World& world) {
    Matrix s = Matrix::Zero(world.dimension, world.dimension);
    for (const auto& m : world.catalog) s.noalias() += m.features * m.features.transpose();
    s /= static_cast<double>(world.num_models());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

/// Largest standard deviation of x·θ across the catalog, taken over groups.
inline double catalog_projection_sigma(const World& world) {
    double worst = 0.0;
    for (const auto& theta : world.group_thetas) {
        double mean = 0.0, sq = 0.0;
        for (const auto& m : world.catalog) {
            const double z = m.features.dot(theta);
            mean += z;
            sq += z * z;
        }
        const double n = static_cast<double>(world.num_models());
        mean /= n;
        worst = std::max(worst, std::sqrt(std::max(0.0, sq / n - mean * mean)));
    }
    return worst;
}

/// Theory parameters derived from a world and the agent's link and cascade length.
inline TheoryParams theory_params_for(const World& world, const LinkFunctionSpec& link, int K, double T,
                                      double delta = 0.1) {
    const LinkConstants lc = link_constants(link);
    TheoryParams p;
    p.d = world.dimension;
    p.g = static_cast<int>(world.num_groups());
    p.K = K;
    p.T = T;
    p.lambda_min = catalog_lambda_min(world);
    p.sigma = catalog_projection_sigma(world);
    p.L = lc.lipschitz_L;
    p.m_mu = lc.m_mu;
    p.delta = delta;
    p.gamma = world.gamma;
    p.n_cameras = static_cast<int>(world.num_cameras());
    return p;
}

}  // namespace axv
