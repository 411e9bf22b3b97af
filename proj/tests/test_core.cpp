#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "axiomvision/core.hpp"

using namespace axv;

namespace {

const LinkFunctionSpec sig{LinkKind::sigmoid, 2.0};
const LinkFunctionSpec ident{LinkKind::identity, 2.0};
const LinkFunctionSpec clip{LinkKind::clipped_linear, 2.0};

double fd(const LinkFunctionSpec& s, double z, double h = 1e-6) {
    return (link_eval(s, z + h) - link_eval(s, z - h)) / (2 * h);
}

// P(at least one success) by summing over all 2^k outcomes.
double brute_cascade(const std::vector<double>& p) {
    const std::size_t k = p.size();
    double total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
        double prob = 1.0;
        std::vector<int> r(k);
        for (std::size_t i = 0; i < k; ++i) {
            r[i] = (mask >> i) & 1;
            prob *= r[i] ? p[i] : 1.0 - p[i];
        }
        total += prob * cascade_payoff(r);
    }
    return total;
}

}  // namespace

TEST(LinkEval, ReferenceValues) {
    EXPECT_DOUBLE_EQ(link_eval(sig, 0.0), 0.5);
    EXPECT_DOUBLE_EQ(link_eval(ident, 0.37), 0.37);
    const long double oracle = 1.0L / (1.0L + std::exp(-1.0L));
    EXPECT_NEAR(link_eval(sig, 1.0), static_cast<double>(oracle), 1e-15);
}

TEST(LinkEval, ClippedLinearClamps) {
    EXPECT_DOUBLE_EQ(link_eval(clip, -0.3), 0.0);
    EXPECT_DOUBLE_EQ(link_eval(clip, 0.4), 0.4);
    EXPECT_DOUBLE_EQ(link_eval(clip, 1.7), 1.0);
    EXPECT_DOUBLE_EQ(link_derivative(clip, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(link_derivative(clip, 1.5), 0.0);
    EXPECT_DOUBLE_EQ(link_derivative(clip, -0.5), 0.0);
}

TEST(LinkEval, SigmoidStableAtExtremes) {
    EXPECT_DOUBLE_EQ(link_eval(sig, 800.0), 1.0);
    EXPECT_EQ(link_eval(sig, -800.0), 0.0);
    EXPECT_FALSE(std::isnan(link_derivative(sig, -800.0)));
}

TEST(LinkEval, RejectsNonFinite) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    for (const auto& s : {sig, ident, clip}) {
        EXPECT_THROW(link_eval(s, nan), DomainError);
        EXPECT_THROW(link_eval(s, inf), DomainError);
        EXPECT_THROW(link_derivative(s, -inf), DomainError);
        EXPECT_THROW(link_derivative(s, nan), DomainError);
    }
}

TEST(LinkDerivative, ReferenceValues) {
    EXPECT_DOUBLE_EQ(link_derivative(sig, 0.0), 0.25);
    EXPECT_DOUBLE_EQ(link_derivative(ident, -3.0), 1.0);
    EXPECT_NEAR(link_derivative(sig, 2.0), fd(sig, 2.0), 1e-6);
    EXPECT_NEAR(link_derivative(sig, 2.0), 0.104993585403507, 1e-12);
}

TEST(LinkDerivative, MatchesFiniteDifferences) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> z(-2.0, 2.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = z(gen);
        EXPECT_LT(std::abs(link_derivative(sig, x) - fd(sig, x)), 1e-5) << x;
        EXPECT_LT(std::abs(link_derivative(ident, x) - fd(ident, x)), 1e-5) << x;
    }
}

TEST(LinkEval, MonotoneAndLipschitz) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> z(-2.0, 2.0);
    for (const auto& s : {sig, ident}) {
        const double L = link_constants(s).lipschitz_L;
        for (int i = 0; i < 1000; ++i) {
            double a = z(gen), b = z(gen);
            if (a > b) std::swap(a, b);
            if (a == b) continue;
            EXPECT_LT(link_eval(s, a), link_eval(s, b));
            EXPECT_LE(std::abs(link_eval(s, a) - link_eval(s, b)), L * (b - a) + 1e-15);
        }
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        double a = u(gen), b = u(gen);
        if (a > b) std::swap(a, b);
        if (a < b) EXPECT_LT(link_eval(clip, a), link_eval(clip, b));
    }
}

TEST(LinkConstants, SigmoidMatchesGridScan) {
    double lo = 1.0, hi = 0.0;
    for (int i = -20000; i <= 20000; ++i) {
        const double d = link_derivative(sig, i * 1e-4);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    const LinkConstants c = link_constants(sig);
    EXPECT_DOUBLE_EQ(c.lipschitz_L, 0.25);
    EXPECT_NEAR(c.m_mu, lo, 1e-15);
    EXPECT_NEAR(c.lipschitz_L, hi, 1e-15);
}

TEST(LinkConstants, IdentityAndDegenerate) {
    const LinkConstants id = link_constants(ident);
    EXPECT_EQ(id.lipschitz_L, 1.0);
    EXPECT_EQ(id.m_mu, 1.0);
    const LinkConstants z = link_constants(LinkFunctionSpec{LinkKind::sigmoid, 0.0});
    EXPECT_DOUBLE_EQ(z.lipschitz_L, 0.25);
    EXPECT_DOUBLE_EQ(z.m_mu, 0.25);
}

TEST(LinkConstants, ClippedLinearRejected) {
    EXPECT_THROW(link_constants(clip), ConfigError);
    EXPECT_THROW(link_constants(LinkFunctionSpec{LinkKind::sigmoid, -1.0}), ConfigError);
}

TEST(LinkKindNames, RoundTrip) {
    for (auto k : {LinkKind::sigmoid, LinkKind::identity, LinkKind::clipped_linear})
        EXPECT_EQ(parse_link_kind(to_string(k)), k);
    EXPECT_THROW(parse_link_kind("tanh"), ConfigError);
}

TEST(CascadePayoff, ReferenceValues) {
    EXPECT_EQ(cascade_payoff(std::vector<int>{0, 0, 0}), 0);
    EXPECT_EQ(cascade_payoff(std::vector<int>{0, 1}), 1);
    EXPECT_EQ(cascade_payoff(std::vector<int>{1}), 1);
    EXPECT_EQ(cascade_payoff(std::vector<int>{}), 0);
    EXPECT_THROW(cascade_payoff(std::vector<int>{2}), DomainError);
}

TEST(ExpectedCascadePayoff, ReferenceValues) {
    EXPECT_DOUBLE_EQ(expected_cascade_payoff(std::vector<double>{0.5, 0.5}), 0.75);
    EXPECT_DOUBLE_EQ(expected_cascade_payoff(std::vector<double>{1.0, 0.0}), 1.0);
    EXPECT_DOUBLE_EQ(expected_cascade_payoff(std::vector<double>{}), 0.0);
    EXPECT_THROW(expected_cascade_payoff(std::vector<double>{1.2}), DomainError);
    EXPECT_THROW(expected_cascade_payoff(std::vector<double>{-0.1}), DomainError);
}

TEST(ExpectedCascadePayoff, MatchesOutcomeEnumeration) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t k = 0; k <= 8; ++k) {
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> p(k);
            for (auto& x : p) x = u(gen);
            EXPECT_NEAR(expected_cascade_payoff(p), brute_cascade(p), 1e-12);
        }
    }
}

TEST(ExpectedCascadePayoff, BinaryInputsAgreeAndAppendNeverHurts) {
    for (int mask = 0; mask < 16; ++mask) {
        std::vector<int> r;
        std::vector<double> p;
        for (int i = 0; i < 4; ++i) {
            r.push_back((mask >> i) & 1);
            p.push_back(r.back());
        }
        EXPECT_EQ(expected_cascade_payoff(p), static_cast<double>(cascade_payoff(r)));
    }
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p;
    double prev = expected_cascade_payoff(p);
    for (int i = 0; i < 30; ++i) {
        p.push_back(u(gen));
        const double now = expected_cascade_payoff(p);
        EXPECT_GE(now, prev);
        prev = now;
    }
}
