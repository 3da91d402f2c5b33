#pragma once

#include <cstddef>

#include "regime_q/errors.hpp"

namespace regime_q {

inline constexpr std::size_t default_quadrature_nodes = 4097;

/// Composite Simpson rule on [lo, hi]; `nodes` must be odd and >= 3.
template <class F>
double simpson(F&& f, double lo, double hi, std::size_t nodes = default_quadrature_nodes) {
    if (nodes < 3 || nodes % 2 == 0) throw domain_error("simpson: node count must be odd and >= 3");
    const std::size_t n = nodes - 1;
    const double h = (hi - lo) / static_cast<double>(n);
    double odd = 0.0, even = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double v = f(lo + h * static_cast<double>(k));
        if (k % 2) odd += v;
        else even += v;
    }
    return h / 3.0 * (f(lo) + f(hi) + 4.0 * odd + 2.0 * even);
}

}  // namespace regime_q
