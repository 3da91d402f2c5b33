#pragma once

#include <array>
#include <cstddef>

#include "regime_q/linalg.hpp"

namespace regime_q {

using Vec4 = std::array<double, 4>;

/// Shared learnable vector (rho1, rho2, sigma1, sigma2); regimes are 0-based.
struct LearnParams {
    Vec4 v{};

    double& operator[](std::size_t j) { return v[j]; }
    double operator[](std::size_t j) const { return v[j]; }
    double rho(std::size_t i) const { return v[i]; }
    double sigma(std::size_t i) const { return v[2 + i]; }
    Vec2 rho() const { return {{v[0], v[1]}}; }
    Vec2 sigma() const { return {{v[2], v[3]}}; }
    friend bool operator==(const LearnParams&, const LearnParams&) = default;
};

inline constexpr double sigma_floor = 1e-3;

}  // namespace regime_q
