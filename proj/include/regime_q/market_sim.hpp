#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "regime_q/errors.hpp"
#include "regime_q/linalg.hpp"
#include "regime_q/rng.hpp"
#include "regime_q/tsallis_policy.hpp"

namespace regime_q {

/// True market: per-regime drift, volatility, risk-free rate and the chain generator.
struct MarketParams {
    std::vector<double> mu, sigma, r;
    std::vector<double> generator;  // row-major L x L

    std::size_t regimes() const { return mu.size(); }
    double q(std::size_t i, std::size_t j) const { return generator[i * regimes() + j]; }
    double sharpe(std::size_t i) const { return (mu[i] - r[i]) / sigma[i]; }
    friend bool operator==(const MarketParams&, const MarketParams&) = default;
};

inline void validate(const MarketParams& m) {
    const std::size_t L = m.regimes();
    if (L == 0) throw config_error("market: no regimes");
    if (m.sigma.size() != L || m.r.size() != L || m.generator.size() != L * L)
        throw config_error("market: inconsistent regime dimensions");
    for (std::size_t i = 0; i < L; ++i) {
        if (!(m.sigma[i] > 0.0)) throw config_error("market: volatilities must be positive");
        double row = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
            if (i != j && m.q(i, j) < 0.0) throw config_error("market: negative off-diagonal generator entry");
            row += m.q(i, j);
        }
        if (std::abs(row) > 1e-12) throw config_error("market: generator rows must sum to zero");
    }
}

inline Mat2 generator2(const MarketParams& m) {
    if (m.regimes() != 2) throw config_error("two-regime generator requested for an L != 2 market");
    return Mat2{{m.generator[0], m.generator[1], m.generator[2], m.generator[3]}};
}

/// Rows of exp(Q dt), stored as cumulative sums for inverse-CDF sampling.
class RegimeChain {
public:
    RegimeChain(const MarketParams& m, double dt) : L_(m.regimes()), cum_(L_ * L_) {
        DenseMatrix Q(L_);
        for (std::size_t i = 0; i < L_; ++i)
            for (std::size_t j = 0; j < L_; ++j) Q(i, j) = m.q(i, j) * dt;
        DenseMatrix P(L_);
        if (L_ == 2) {
            const Mat2 E = expm(Mat2{{Q(0, 0), Q(0, 1), Q(1, 0), Q(1, 1)}});
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t j = 0; j < 2; ++j) P(i, j) = E(i, j);
        } else {
            P = expm(Q);
        }
        for (std::size_t i = 0; i < L_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < L_; ++j) {
                s += std::max(P(i, j), 0.0);
                cum_[i * L_ + j] = s;
            }
            if (std::abs(s - 1.0) > 1e-12) throw config_error("regime chain: transition rows do not sum to one");
            cum_[i * L_ + L_ - 1] = 1.0;
        }
    }

    double transition(std::size_t i, std::size_t j) const {
        return cum_[i * L_ + j] - (j == 0 ? 0.0 : cum_[i * L_ + j - 1]);
    }

    template <class Rng>
    int step(int i, Rng& rng) const {
        const double u = rng.uniform();
        for (std::size_t j = 0; j < L_; ++j)
            if (u < cum_[static_cast<std::size_t>(i) * L_ + j]) return static_cast<int>(j);
        return static_cast<int>(L_ - 1);
    }

    std::size_t regimes() const { return L_; }

private:
    std::size_t L_;
    std::vector<double> cum_;
};

template <class Rng>
int regime_step(int i, double dt, const MarketParams& m, Rng& rng) {
    return RegimeChain(m, dt).step(i, rng);
}

enum class EulerForm { as_printed, amount_invested };

inline std::string to_string(EulerForm f) { return f == EulerForm::as_printed ? "as_printed" : "amount_invested"; }

inline EulerForm parse_euler_form(const std::string& s) {
    if (s == "as_printed") return EulerForm::as_printed;
    if (s == "amount_invested") return EulerForm::amount_invested;
    throw config_error("unknown euler_form '" + s + "'");
}

/// One Euler step of wealth given the Brownian increment dW.
///   as_printed:       x + x (r + rho sigma a) dt + x sigma sqrt(a^2 + extra) dW
///   amount_invested:  x + (r x + rho sigma a) dt + sigma a dW
/// `extra` is the policy variance (p = 1) or the policy second moment (p = 2).
inline double euler_wealth(EulerForm form, double x, std::size_t i, double a, double dt, const MarketParams& m,
                           double extra, double dW) {
    const double rho = m.sharpe(i), sig = m.sigma[i], r = m.r[i];
    if (form == EulerForm::as_printed)
        return x + x * (r + rho * sig * a) * dt + x * sig * std::sqrt(a * a + extra) * dW;
    return x + (r * x + rho * sig * a) * dt + sig * a * dW;
}

inline constexpr double blowup_threshold = 1e6;

struct StepResult {
    double x_next = 0.0;
    int regime_next = 0;
    double reward = 0.0;
    bool blew_up = false;
};

/// Environment_dt: wealth step under the true market plus a regime draw from exp(Q dt).
class Environment {
public:
    Environment(MarketParams m, double dt, EulerForm form) : m_(std::move(m)), dt_(dt), form_(form), chain_(m_, dt) {
        validate(m_);
        if (!(dt > 0.0)) throw config_error("environment: dt must be positive");
    }

    template <class Rng>
    StepResult step(double x, int i, double a, double extra, Rng& rng) const {
        const double dW = std::sqrt(dt_) * rng.normal();
        StepResult out;
        out.x_next = euler_wealth(form_, x, static_cast<std::size_t>(i), a, dt_, m_, extra, dW);
        out.regime_next = chain_.step(i, rng);
        out.blew_up = !std::isfinite(out.x_next) || std::abs(out.x_next) > blowup_threshold;
        return out;
    }

    const MarketParams& market() const { return m_; }
    double dt() const { return dt_; }
    EulerForm form() const { return form_; }

private:
    MarketParams m_;
    double dt_;
    EulerForm form_;
    RegimeChain chain_;
};

template <class Rng>
StepResult wealth_step_p1(double x, int i, double a, double dt, const MarketParams& m, double policy_var, Rng& rng,
                          EulerForm form = EulerForm::as_printed) {
    return Environment(m, dt, form).step(x, i, a, policy_var, rng);
}

template <class Rng>
StepResult wealth_step_p2(double x, int i, double a, double dt, const MarketParams& m, double second_moment,
                          Rng& rng, EulerForm form = EulerForm::as_printed) {
    return Environment(m, dt, form).step(x, i, a, second_moment, rng);
}

struct Trajectory {
    std::vector<double> times, wealth, actions, rewards;
    std::vector<int> regimes;
    bool truncated = false;

    std::size_t steps() const { return actions.size(); }
};

/// Roll out one episode of K steps. `policy_at(t, x, i)` returns the learner's policy;
/// Gaussian draws are clamped into `clamp_to` when it is set.
template <class PolicyFn, class Rng>
Trajectory simulate_episode(double x0, std::optional<int> i0, PolicyFn&& policy_at, int K, const Environment& env,
                            Rng& rng, std::optional<ActionInterval> clamp_to = std::nullopt) {
    Trajectory tr;
    const double dt = env.dt();
    int i = i0 ? *i0 : env.market().regimes() > 1 ? static_cast<int>(rng.uniform() * env.market().regimes()) : 0;
    if (i < 0 || static_cast<std::size_t>(i) >= env.market().regimes()) throw domain_error("simulate_episode: bad regime");
    double x = x0;
    tr.times.reserve(K + 1);
    tr.wealth.reserve(K + 1);
    tr.regimes.reserve(K + 1);
    tr.times.push_back(0.0);
    tr.wealth.push_back(x);
    tr.regimes.push_back(i);
    for (int k = 0; k < K; ++k) {
        const double t = dt * k;
        const Policy pi = policy_at(t, x, i);
        double a, extra;
        if (const auto* g = std::get_if<GaussianPolicy>(&pi)) {
            a = sample_action(*g, rng, clamp_to);
            extra = g->variance;
        } else {
            const auto& qp = std::get<QuadraticPolicy>(pi);
            a = sample_action(qp, rng);
            extra = quadratic_moments(qp).second;
        }
        const StepResult s = env.step(x, i, a, extra, rng);
        tr.actions.push_back(a);
        tr.rewards.push_back(s.reward);
        if (s.blew_up) {
            tr.truncated = true;
            break;
        }
        x = s.x_next;
        i = s.regime_next;
        tr.times.push_back(dt * (k + 1));
        tr.wealth.push_back(x);
        tr.regimes.push_back(i);
    }
    return tr;
}

}  // namespace regime_q
