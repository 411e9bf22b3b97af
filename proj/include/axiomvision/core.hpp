#pragma once

// Link functions, cascade payoff algebra and the id types shared by every
// other header in the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace axv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using ModelId = std::size_t;
using CameraId = std::size_t;
using GroupId = std::size_t;

/// Raised for arguments outside an operation's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a configuration violates a modelling assumption.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LinkKind { sigmoid, identity, clipped_linear };

inline std::string_view to_string(LinkKind kind) {
    switch (kind) {
        case LinkKind::sigmoid: return "sigmoid";
        case LinkKind::identity: return "identity";
        case LinkKind::clipped_linear: return "clipped-linear";
    }
    return "unknown";
}

inline LinkKind parse_link_kind(std::string_view name) {
    if (name == "sigmoid") return LinkKind::sigmoid;
    if (name == "identity") return LinkKind::identity;
    if (name == "clipped-linear") return LinkKind::clipped_linear;
    throw ConfigError("unknown link kind '" + std::string(name) + "'");
}

/// Closed-form link μ mapping x·θ to an expected payoff.
/// `domain_bound` is the half-width b of [-b, b] over which the link
/// constants L and m_mu are taken.
struct LinkFunctionSpec {
    LinkKind kind = LinkKind::sigmoid;
    double domain_bound = 2.0;
};

struct LinkConstants {
    double lipschitz_L = 0.0;
    double m_mu = 0.0;
};

namespace detail {

inline void require_finite(double z, const char* what) {
    if (!std::isfinite(z)) throw DomainError(std::string(what) + ": non-finite argument");
}

inline double sigmoid(double z) {
    // Split on sign so exp never overflows.
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace detail

inline double link_eval(const LinkFunctionSpec& spec, double z) {
    detail::require_finite(z, "link_eval");
    switch (spec.kind) {
        case LinkKind::sigmoid: return detail::sigmoid(z);
        case LinkKind::identity: return z;
        case LinkKind::clipped_linear: return std::clamp(z, 0.0, 1.0);
    }
    return z;
}

/// μ'(z). The clipped-linear link has zero slope outside [0, 1].
inline double link_derivative(const LinkFunctionSpec& spec, double z) {
    detail::require_finite(z, "link_derivative");
    switch (spec.kind) {
        case LinkKind::sigmoid: {
            const double s = detail::sigmoid(z);
            return s * (1.0 - s);
        }
        case LinkKind::identity: return 1.0;
        case LinkKind::clipped_linear: return (z >= 0.0 && z <= 1.0) ? 1.0 : 0.0;
    }
    return 1.0;
}

/// Sup and inf of μ' over [-b, b]. The sigmoid slope is even and peaks at 0,
/// so the extremes sit at z = 0 and z = ±b.
inline LinkConstants link_constants(const LinkFunctionSpec& spec) {
    const double b = spec.domain_bound;
    if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("link domain_bound must be finite and >= 0");
    LinkConstants c;
    switch (spec.kind) {
        case LinkKind::sigmoid:
            c.lipschitz_L = 0.25;
            c.m_mu = link_derivative(spec, b);
            break;
        case LinkKind::identity:
            c.lipschitz_L = 1.0;
            c.m_mu = 1.0;
            break;
        case LinkKind::clipped_linear:
            // Zero slope outside the clip interval: never eligible.
            c.lipschitz_L = 1.0;
            c.m_mu = 0.0;
            break;
    }
    if (!(c.m_mu > 0.0))
        throw ConfigError("link '" + std::string(to_string(spec.kind)) +
                          "' has m_mu <= 0 on its domain interval; theory constants undefined");
    return c;
}

/// R = 1 - prod(1 - r_k) over binary payoffs. An empty cascade scores 0.
inline int cascade_payoff(std::span<const int> payoffs) {
    for (int r : payoffs) {
        if (r != 0 && r != 1) throw DomainError("cascade_payoff: payoff must be 0 or 1");
    }
    return std::any_of(payoffs.begin(), payoffs.end(), [](int r) { return r == 1; }) ? 1 : 0;
}

/// Expectation of the cascade payoff under independent Bernoulli(p_k).
inline double expected_cascade_payoff(std::span<const double> success_probs) {
    double fail = 1.0;
    for (double p : success_probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("expected_cascade_payoff: probability outside [0,1]");
        fail *= (1.0 - p);
    }
    return 1.0 - fail;
}

}  // namespace axv
