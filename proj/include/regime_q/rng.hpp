#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace regime_q {

inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t fmix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t hash_combine(std::uint64_t key, std::uint64_t v) {
    return fmix64(key ^ fmix64(v + golden_gamma));
}

// Counter-based stream: output n is a pure function of (key, n), so a path's draws
// never depend on which thread simulates it.
class Stream {
public:
    explicit Stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0, std::uint64_t c = 0)
        : key_(hash_combine(hash_combine(hash_combine(fmix64(seed), a), b), c)) {}

    std::uint64_t next_u64() { return fmix64(key_ + (++counter_) * golden_gamma); }

    // Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Test hook: Brownian increments forced to zero, uniforms pinned at 1/2.
struct ZeroNoise {
    double uniform() { return 0.5; }
    double normal() { return 0.0; }
};

}  // namespace regime_q
