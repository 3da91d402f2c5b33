#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "regime_q/linalg.hpp"

namespace oracle {

// plain composite Simpson, no library code
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int nodes = 4001) {
    const double h = (hi - lo) / (nodes - 1);
    double s = f(lo) + f(hi);
    for (int k = 1; k < nodes - 1; ++k) s += (k % 2 ? 4.0 : 2.0) * f(lo + h * k);
    return s * h / 3.0;
}

// Simpson on each piece between sorted breakpoints, so kinks sit on piece ends
inline double simpson_pieces(const std::function<double(double)>& f, std::vector<double> cuts, double lo, double hi,
                             int nodes = 2001) {
    cuts.push_back(lo);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = std::clamp(cuts[k], lo, hi), b = std::clamp(cuts[k + 1], lo, hi);
        if (b > a) s += simpson(f, a, b, nodes);
    }
    return s;
}

// real roots of k2 a^2 + k1 a + c
inline std::vector<double> quad_roots(double k2, double k1, double c) {
    if (k2 == 0.0) return k1 == 0.0 ? std::vector<double>{} : std::vector<double>{-c / k1};
    const double disc = k1 * k1 - 4.0 * k2 * c;
    if (disc < 0.0) return {};
    const double r = std::sqrt(disc);
    return {(-k1 - r) / (2.0 * k2), (-k1 + r) / (2.0 * k2)};
}

inline regime_q::Mat2 series_exp(const regime_q::Mat2& m, int terms = 30) {
    regime_q::Mat2 sum = regime_q::Mat2::identity(), term = regime_q::Mat2::identity();
    for (int n = 1; n < terms; ++n) {
        term = (1.0 / n) * (term * m);
        sum = sum + term;
    }
    return sum;
}

inline double max_abs_diff(const regime_q::Mat2& a, const regime_q::Mat2& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < 4; ++k) m = std::max(m, std::abs(a.m[k] - b.m[k]));
    return m;
}

// Kolmogorov-Smirnov statistic of sorted samples against a cdf
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double F = cdf(xs[k]);
        d = std::max({d, std::abs(F - k / n), std::abs((k + 1) / n - F)});
    }
    return d;
}

}  // namespace oracle
