#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include "regime_q/errors.hpp"
#include "regime_q/quadrature.hpp"

namespace regime_q {

struct ActionInterval {
    double lo = -5.0;
    double hi = 5.0;

    double width() const { return hi - lo; }
    bool contains(double a) const { return a >= lo && a <= hi; }
    friend bool operator==(const ActionInterval&, const ActionInterval&) = default;
};

inline void validate(const ActionInterval& iv) {
    if (!(iv.lo < iv.hi)) throw domain_error("action interval needs a_min < a_max");
}

namespace detail {

inline double ipow(double x, int n) {
    double r = 1.0;
    for (int k = 0; k < n; ++k) r *= x;
    return r;
}

// \int_u^v a^n da
inline double span_power(double u, double v, int n) {
    return (ipow(v, n + 1) - ipow(u, n + 1)) / (n + 1);
}

}  // namespace detail

/// M_n = \int_A a^n da for n = 0..4.
struct MomentTable {
    std::array<double, 5> m{};
    double operator[](std::size_t n) const { return m[n]; }
};

inline MomentTable moment_table(const ActionInterval& iv) {
    MomentTable t;
    for (int n = 0; n < 5; ++n) t.m[n] = detail::span_power(iv.lo, iv.hi, n);
    return t;
}

/// Tsallis entropy kernel l_p(z); p = 1 is the Shannon case -ln z.
inline double tsallis_entropy(double z, double p) {
    if (!(p >= 1.0)) throw domain_error("tsallis_entropy: order p must be >= 1");
    if (!(z > 0.0)) throw domain_error("tsallis_entropy: argument must be positive");
    if (p == 1.0) return -std::log(z);
    return (1.0 - std::pow(z, p - 1.0)) / (p - 1.0);
}

inline double tsallis_entropy_derivative(double z, double p) {
    if (!(p >= 1.0)) throw domain_error("tsallis_entropy_derivative: order p must be >= 1");
    if (!(z > 0.0)) throw domain_error("tsallis_entropy_derivative: argument must be positive");
    if (p == 1.0) return -1.0 / z;
    return -std::pow(z, p - 2.0);
}

struct GaussianPolicy {
    double mean = 0.0;
    double variance = 1.0;

    double density(double a) const {
        const double d = a - mean;
        return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
    }
    double log_density(double a) const {
        const double d = a - mean;
        return -0.5 * d * d / variance - 0.5 * std::log(2.0 * std::numbers::pi * variance);
    }
    double cdf(double a) const { return 0.5 * std::erfc(-(a - mean) / std::sqrt(2.0 * variance)); }
    double second_moment() const { return mean * mean + variance; }
    // \int -ln(pi) pi da
    double entropy() const { return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance); }
};

/// Gibbs policy of the p = 1 problem: N(-rho (x + w B) / sigma, gamma / (2 sigma^2 A)).
inline GaussianPolicy gaussian_policy(double rho, double sigma, double A, double B, double x, double w,
                                      double gamma) {
    if (!(A > 0.0)) throw ansatz_violation("gaussian_policy: A must be positive");
    if (!(sigma > 0.0)) throw domain_error("gaussian_policy: sigma must be positive");
    if (!(gamma > 0.0)) throw domain_error("gaussian_policy: gamma must be positive");
    return {-rho * (x + w * B) / sigma, gamma / (2.0 * sigma * sigma * A)};
}

inline double quadratic_normalizer(double k1, double k2, double gamma, const ActionInterval& iv) {
    const MomentTable M = moment_table(iv);
    return (2.0 * gamma - k2 * M[2] - k1 * M[1]) / M[0];
}

struct Moments {
    double mean = 0.0;
    double second = 0.0;
};

/// First two moments of (1/2gamma)(k1 a + k2 a^2 + psi) on the interval, valid while the
/// bracket stays non-negative.
inline Moments quadratic_moments_closed_form(double k1, double k2, double gamma, const ActionInterval& iv) {
    const MomentTable M = moment_table(iv);
    const double c = 1.0 / (2.0 * gamma);
    Moments out;
    out.mean = M[1] / M[0] + c * (k1 * (M[2] - M[1] * M[1] / M[0]) + k2 * (M[3] - M[1] * M[2] / M[0]));
    out.second = M[2] / M[0] + c * (k1 * (M[3] - M[1] * M[2] / M[0]) + k2 * (M[4] - M[2] * M[2] / M[0]));
    return out;
}

/// pi(a) = (1/2gamma)(k1 a + k2 a^2 + psi)_+ on the action interval.
///
/// When the bracket goes negative somewhere the density is cut at zero and rescaled to
/// unit mass. Integrals are exact: the positive set is at most two intervals on which
/// the density is a polynomial.
class QuadraticPolicy {
public:
    QuadraticPolicy(double k1, double k2, double gamma, ActionInterval iv) : k1_(k1), k2_(k2), gamma_(gamma), iv_(iv) {
        validate(iv_);
        if (!(gamma > 0.0)) throw domain_error("QuadraticPolicy: gamma must be positive");
        if (!std::isfinite(k1) || !std::isfinite(k2)) throw domain_error("QuadraticPolicy: non-finite coefficients");
        psi_ = quadratic_normalizer(k1_, k2_, gamma_, iv_);
        find_support();
        if (clamped_) {
            double mass = 0.0;
            for (std::size_t p = 0; p < n_pieces_; ++p) mass += piece_integral(pieces_[p][0], pieces_[p][1], 0);
            scale_ = 1.0 / mass;
        } else {
            scale_ = 1.0 / (2.0 * gamma_);
        }
    }

    double k1() const { return k1_; }
    double k2() const { return k2_; }
    double psi() const { return psi_; }
    double gamma() const { return gamma_; }
    const ActionInterval& interval() const { return iv_; }
    bool clamped() const { return clamped_; }

    double bracket(double a) const { return (k2_ * a + k1_) * a + psi_; }

    double density(double a) const {
        if (!iv_.contains(a)) return 0.0;
        return scale_ * std::max(bracket(a), 0.0);
    }

    /// \int a^n pi(a) da, n = 0..4.
    double raw_moment(int n) const {
        double s = 0.0;
        for (std::size_t p = 0; p < n_pieces_; ++p) s += piece_integral(pieces_[p][0], pieces_[p][1], n);
        return scale_ * s;
    }

    /// \int pi(a)^2 da
    double squared_integral() const {
        double s = 0.0;
        for (std::size_t p = 0; p < n_pieces_; ++p) {
            const double u = pieces_[p][0], v = pieces_[p][1];
            using detail::span_power;
            s += k2_ * k2_ * span_power(u, v, 4) + 2.0 * k1_ * k2_ * span_power(u, v, 3) +
                 (k1_ * k1_ + 2.0 * k2_ * psi_) * span_power(u, v, 2) + 2.0 * k1_ * psi_ * span_power(u, v, 1) +
                 psi_ * psi_ * span_power(u, v, 0);
        }
        return scale_ * scale_ * s;
    }

    double cdf(double a) const {
        if (a <= iv_.lo) return 0.0;
        if (a >= iv_.hi) return 1.0;
        double s = 0.0;
        for (std::size_t p = 0; p < n_pieces_; ++p) {
            if (pieces_[p][0] >= a) break;
            s += piece_integral(pieces_[p][0], std::min(pieces_[p][1], a), 0);
        }
        return std::clamp(scale_ * s, 0.0, 1.0);
    }

    /// Inverse CDF by safeguarded Newton iteration.
    double quantile(double u) const {
        double lo = iv_.lo, hi = iv_.hi;
        double a = lo + u * (hi - lo);
        for (int it = 0; it < 100; ++it) {
            const double f = cdf(a) - u;
            if (f > 0.0) hi = a;
            else lo = a;
            if (std::abs(f) < 1e-15 || hi - lo < 1e-14) break;
            const double d = density(a);
            double next = d > 1e-300 ? a - f / d : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            a = next;
        }
        return a;
    }

private:
    double piece_integral(double u, double v, int n) const {
        using detail::span_power;
        return k2_ * span_power(u, v, n + 2) + k1_ * span_power(u, v, n + 1) + psi_ * span_power(u, v, n);
    }

    void add_piece(double u, double v) {
        u = std::max(u, iv_.lo);
        v = std::min(v, iv_.hi);
        if (v > u) pieces_[n_pieces_++] = {u, v};
    }

    void find_support() {
        // positivity probe at the endpoints and the vertex
        double lowest = std::min(bracket(iv_.lo), bracket(iv_.hi));
        if (k2_ != 0.0) {
            const double vertex = -k1_ / (2.0 * k2_);
            if (iv_.contains(vertex)) lowest = std::min(lowest, bracket(vertex));
        }
        clamped_ = lowest < 0.0;
        n_pieces_ = 0;
        if (!clamped_) {
            add_piece(iv_.lo, iv_.hi);
            return;
        }
        if (k2_ == 0.0) {
            const double root = -psi_ / k1_;
            if (k1_ > 0.0) add_piece(root, iv_.hi);
            else add_piece(iv_.lo, root);
            return;
        }
        const double disc = std::max(k1_ * k1_ - 4.0 * k2_ * psi_, 0.0);
        const double qq = -0.5 * (k1_ + std::copysign(std::sqrt(disc), k1_));
        double r1 = qq / k2_;
        double r2 = qq != 0.0 ? psi_ / qq : r1;
        if (r1 > r2) std::swap(r1, r2);
        if (k2_ > 0.0) {
            add_piece(iv_.lo, r1);
            add_piece(r2, iv_.hi);
        } else {
            add_piece(r1, r2);
        }
    }

    double k1_, k2_, gamma_;
    ActionInterval iv_;
    double psi_ = 0.0;
    double scale_ = 1.0;
    bool clamped_ = false;
    std::array<std::array<double, 2>, 2> pieces_{};
    std::size_t n_pieces_ = 0;
};

/// E[a], E[a^2]. Closed form while the density is unclamped, exact piecewise integrals otherwise.
inline Moments quadratic_moments(const QuadraticPolicy& pi) {
    if (!pi.clamped()) return quadratic_moments_closed_form(pi.k1(), pi.k2(), pi.gamma(), pi.interval());
    return {pi.raw_moment(1), pi.raw_moment(2)};
}

/// -gamma (1 - \int pi^2 da).
inline double squared_density_term(const QuadraticPolicy& pi) {
    const double g = pi.gamma();
    if (pi.clamped()) return -g * (1.0 - pi.squared_integral());
    const MomentTable M = moment_table(pi.interval());
    const Moments E = quadratic_moments(pi);
    return -g * (1.0 - 1.0 / M[0]) +
           0.5 * (pi.k2() * (E.second - M[2] / M[0]) + pi.k1() * (E.mean - M[1] / M[0]));
}

using Policy = std::variant<GaussianPolicy, QuadraticPolicy>;

inline double policy_density(const Policy& p, double a) {
    return std::visit([a](const auto& pi) { return pi.density(a); }, p);
}

inline double policy_second_moment(const Policy& p) {
    if (const auto* g = std::get_if<GaussianPolicy>(&p)) return g->variance;
    return quadratic_moments(std::get<QuadraticPolicy>(p)).second;
}

template <class Rng>
double sample_action(const GaussianPolicy& pi, Rng& rng, std::optional<ActionInterval> clamp_to = std::nullopt) {
    const double a = pi.mean + std::sqrt(pi.variance) * rng.normal();
    if (clamp_to) return std::clamp(a, clamp_to->lo, clamp_to->hi);
    return a;
}

template <class Rng>
double sample_action(const QuadraticPolicy& pi, Rng& rng) {
    return pi.quantile(rng.uniform());
}

// Density tabulated on uniform nodes over an interval.
struct GridDensity {
    double lo = 0.0, hi = 1.0;
    std::vector<double> values;

    double node(std::size_t k) const { return lo + (hi - lo) * static_cast<double>(k) / (values.size() - 1); }

    double operator()(double a) const {
        if (a < lo || a > hi) return 0.0;
        const double s = (a - lo) / (hi - lo) * (values.size() - 1);
        const auto k = std::min(static_cast<std::size_t>(s), values.size() - 2);
        const double f = s - k;
        return (1.0 - f) * values[k] + f * values[k + 1];
    }
};

namespace detail {

inline std::vector<double> simpson_weights(std::size_t nodes, double h) {
    std::vector<double> w(nodes, 2.0 * h / 3.0);
    for (std::size_t k = 1; k < nodes; k += 2) w[k] = 4.0 * h / 3.0;
    w.front() = w.back() = h / 3.0;
    return w;
}

// log \int exp(lv) with Simpson weights; -inf entries allowed.
inline double log_integral(const std::vector<double>& lv, const std::vector<double>& w) {
    double top = -INFINITY;
    for (double v : lv) top = std::max(top, v);
    if (!std::isfinite(top)) return top;
    double s = 0.0;
    for (std::size_t k = 0; k < lv.size(); ++k) s += w[k] * std::exp(lv[k] - top);
    return top + std::log(s);
}

}  // namespace detail

/// exp(q/gamma) / \int exp(q/gamma) da on the interval (Simpson).
inline GridDensity gibbs_density(const std::function<double(double)>& q, double gamma, const ActionInterval& iv,
                                 std::size_t nodes = default_quadrature_nodes) {
    validate(iv);
    GridDensity out{iv.lo, iv.hi, std::vector<double>(nodes)};
    std::vector<double> lv(nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
        const double v = q(out.node(k));
        if (!std::isfinite(v)) throw domain_error("gibbs_density: q is not finite on the interval");
        lv[k] = v / gamma;
    }
    const auto w = detail::simpson_weights(nodes, iv.width() / (nodes - 1));
    const double logz = detail::log_integral(lv, w);
    for (std::size_t k = 0; k < nodes; ++k) out.values[k] = std::exp(lv[k] - logz);
    return out;
}

/// Policy-improvement map for order p: ((p-1)/(p gamma) (q + psi))_+^{1/(p-1)}, psi fixed by
/// unit mass. p = 1 falls back to the Gibbs density.
inline GridDensity tsallis_improvement_density(const std::function<double(double)>& q, double p, double gamma,
                                               const ActionInterval& iv,
                                               std::size_t nodes = default_quadrature_nodes) {
    if (!(p >= 1.0)) throw domain_error("tsallis_improvement_density: p must be >= 1");
    if (p == 1.0) return gibbs_density(q, gamma, iv, nodes);
    validate(iv);
    GridDensity out{iv.lo, iv.hi, std::vector<double>(nodes)};
    std::vector<double> qv(nodes);
    double qmax = -INFINITY, qmin = INFINITY;
    for (std::size_t k = 0; k < nodes; ++k) {
        qv[k] = q(out.node(k));
        if (!std::isfinite(qv[k])) throw domain_error("tsallis_improvement_density: q is not finite");
        qmax = std::max(qmax, qv[k]);
        qmin = std::min(qmin, qv[k]);
    }
    const double c = (p - 1.0) / (p * gamma);
    const auto w = detail::simpson_weights(nodes, iv.width() / (nodes - 1));
    std::vector<double> lv(nodes);
    auto log_mass = [&](double psi) {
        for (std::size_t k = 0; k < nodes; ++k) {
            const double u = c * (qv[k] + psi);
            lv[k] = u > 0.0 ? std::log(u) / (p - 1.0) : -INFINITY;
        }
        return detail::log_integral(lv, w);
    };
    double lo = -qmax;
    double hi = -qmin + 1.0;
    while (log_mass(hi) < 0.0) hi = -qmin + 2.0 * (hi + qmin);
    for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (log_mass(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    const double lm = log_mass(hi);
    for (std::size_t k = 0; k < nodes; ++k) out.values[k] = std::exp(lv[k] - lm);
    return out;
}

}  // namespace regime_q
