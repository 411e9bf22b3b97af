#pragma once

// Counter-based random streams. Every draw is a pure function of
// (seed, domain, counters), so two agents that try different cascades still
// see the same camera arrivals and the same outcome for (t, model).

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace axv {

enum class StreamDomain : std::uint64_t {
    camera_arrival = 1,
    payoff = 2,
    payoff_noise = 3,
    reconnect = 4,
    shuffle = 5,
    p0 = 6,
    world = 7,
    kmeans = 8,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

/// Uniform on the open interval (0, 1).
inline constexpr double to_unit_open(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

class KeyedStream {
public:
    explicit KeyedStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t bits(StreamDomain domain, std::uint64_t a = 0, std::uint64_t b = 0,
                       std::uint64_t c = 0) const {
        return hash_key({seed_, static_cast<std::uint64_t>(domain), a, b, c});
    }

    double uniform(StreamDomain domain, std::uint64_t a = 0, std::uint64_t b = 0,
                   std::uint64_t c = 0) const {
        return to_unit_open(bits(domain, a, b, c));
    }

    /// Standard normal via Box-Muller on two keyed uniforms.
    double normal(StreamDomain domain, std::uint64_t a = 0, std::uint64_t b = 0) const {
        const double u1 = uniform(domain, a, b, 0);
        const double u2 = uniform(domain, a, b, 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n, StreamDomain domain, std::uint64_t a = 0,
                        std::uint64_t b = 0, std::uint64_t c = 0) const {
        // 128-bit multiply-shift; bias is < n / 2^64.
        const unsigned __int128 wide = static_cast<unsigned __int128>(bits(domain, a, b, c)) * n;
        return static_cast<std::uint64_t>(wide >> 64);
    }

private:
    std::uint64_t seed_;
};

}  // namespace axv
