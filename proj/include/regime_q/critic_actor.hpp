#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <variant>

#include "regime_q/coeff_solver.hpp"
#include "regime_q/errors.hpp"
#include "regime_q/market_sim.hpp"
#include "regime_q/params.hpp"
#include "regime_q/tsallis_policy.hpp"

namespace regime_q {

/// Everything the learner knows besides the learnable vector.
struct ModelSettings {
    int order = 1;  // entropy order p, 1 or 2
    double gamma = 0.5;
    double z = 1.4;
    double x0 = 1.0;
    double T = 1.0;
    int K = 25;
    int substeps = 10;
    Vec2 rates{};
    Mat2 generator{};
    ActionInterval interval{};
    std::function<double(double)> x_ref;  // empty: constant x0

    SolveOptions solve_options() const { return {gamma, T, K, substeps}; }
    double reference_state(double t) const { return x_ref ? x_ref(t) : x0; }
};

/// One parameter vector and the multiplier w the critic is evaluated at.
struct EvalContext {
    const ModelSettings* settings = nullptr;
    const CoeffTable* coeffs = nullptr;
    LearnParams params{};
    double w = 0.0;
};

/// Coefficient tables for one parameter vector. Order 1 needs a single table; order 2 solves
/// one table per multiplier component because B depends on w.
class Model {
public:
    Model() = default;

    static Model build(const LearnParams& params, std::shared_ptr<const ModelSettings> s) {
        return build(params, s, multiplier(params, *s));
    }

    static Model build(const LearnParams& params, std::shared_ptr<const ModelSettings> s, Vec2 w) {
        if (!(params.sigma(0) > 0.0) || !(params.sigma(1) > 0.0)) throw domain_error("model: sigma must be positive");
        Model m;
        m.params_ = params;
        m.settings_ = std::move(s);
        m.w_ = w;
        const ModelSettings& st = *m.settings_;
        if (st.order == 1) {
            auto t = std::make_shared<const CoeffTable>(solve_p1(params, st.rates, st.generator, st.solve_options()));
            m.tables_ = {t, t};
        } else {
            auto xr = [&st](double t) { return st.reference_state(t); };
            for (std::size_t i = 0; i < 2; ++i)
                m.tables_[i] = std::make_shared<const CoeffTable>(
                    solve_p2(params, st.rates, st.generator, st.solve_options(), st.interval, w[i], xr));
        }
        return m;
    }

    /// Lagrange multiplier from the t = 0 coefficients. Order 2 reads it off the Shannon
    /// coefficients: the order-2 system has A B^2 + C close to 1 and no usable fixed point.
    static Vec2 multiplier(const LearnParams& params, const ModelSettings& s) {
        const CoeffTable t = solve_p1(params, s.rates, s.generator, s.solve_options());
        return lagrange_w(t, s.x0, s.z);
    }

    EvalContext context(int i0) const {
        const auto i = static_cast<std::size_t>(i0);
        return {settings_.get(), tables_[i].get(), params_, w_[i]};
    }

    const LearnParams& params() const { return params_; }
    Vec2 w() const { return w_; }
    const ModelSettings& settings() const { return *settings_; }
    const CoeffTable& table(int i0) const { return *tables_[static_cast<std::size_t>(i0)]; }
    int clamp_count() const {
        return tables_[0] == tables_[1] ? tables_[0]->clamp_count : tables_[0]->clamp_count + tables_[1]->clamp_count;
    }

private:
    LearnParams params_{};
    std::shared_ptr<const ModelSettings> settings_;
    Vec2 w_{};
    std::array<std::shared_ptr<const CoeffTable>, 2> tables_;
};

/// J = A (x + w B)^2 + w^2 C + D - (w - z)^2
inline double value_J(const EvalContext& c, double t, double x, int i) {
    const std::size_t k = c.coeffs->index_of(t), r = static_cast<std::size_t>(i);
    const double A = c.coeffs->A[k][r], B = c.coeffs->B[k][r], C = c.coeffs->C[k][r], D = c.coeffs->D[k][r];
    const double X = x + c.w * B;
    const double dz = c.w - c.settings->z;
    return A * X * X + c.w * c.w * C + D - dz * dz;
}

inline Policy policy_at(const EvalContext& c, double t, double x, int i) {
    const std::size_t k = c.coeffs->index_of(t), r = static_cast<std::size_t>(i);
    const double A = c.coeffs->A[k][r], B = c.coeffs->B[k][r];
    const ModelSettings& s = *c.settings;
    if (s.order == 1) return gaussian_policy(c.params.rho(r), c.params.sigma(r), A, B, x, c.w, s.gamma);
    return quadratic_policy(c.params.rho(r), c.params.sigma(r), A, B, x, c.w, s.gamma, s.interval);
}

namespace detail {

// sum_j q_ij A_j X_j^2 - (Q A)_i X_i^2 with X_j = x + w B_j
inline double regime_bracket(const Mat2& Q, Vec2 A, Vec2 B, double x, double w, std::size_t i) {
    const Vec2 X{{x + w * B[0], x + w * B[1]}};
    const Vec2 QA = Q * A;
    double s = 0.0;
    for (std::size_t j = 0; j < 2; ++j) s += Q(i, j) * A[j] * X[j] * X[j];
    return s - QA[i] * X[i] * X[i];
}

}  // namespace detail

/// Integrated q-function, i.e. J_t plus the generator of the policy's exploratory dynamics.
///
/// p = 1: A (P + H_A) X^2 + [Q(A X^2) - (QA) X^2] - 2 w A N X - w^2 M - L + gamma/2,
///        H_A = diag(2r - rho^2).
/// p = 2: G - gamma (1 - \int pi^2) plus the shift from the reference state at which B and D
///        were integrated; the shift vanishes at x = x_ref(t).
inline double q_integrated(const EvalContext& c, double t, double x, int i) {
    const ModelSettings& s = *c.settings;
    const CoeffTable& tb = *c.coeffs;
    const std::size_t k = tb.index_of(t), r = static_cast<std::size_t>(i);
    const Vec2 A = tb.A[k], B = tb.B[k];
    const double w = c.w;
    const double X = x + w * B[r];
    const double bracket = detail::regime_bracket(s.generator, A, B, x, w, r);
    const double N = detail::coupling_N(s.generator, A, B)[r];
    const double M = detail::coupling_M(s.generator, A, B)[r];
    const double rho = c.params.rho(r), sig = c.params.sigma(r);

    if (s.order == 1) {
        const double P = 2.0 * (rho * rho - s.rates[r]);
        const double H = 2.0 * s.rates[r] - rho * rho;
        const double L = shannon_source(c.params.sigma(), A, s.gamma)[r];
        return A[r] * (P + H) * X * X + bracket - 2.0 * w * A[r] * N * X - w * w * M - L + 0.5 * s.gamma;
    }

    const QuadraticPolicy pi = quadratic_policy(rho, sig, A[r], B[r], x, w, s.gamma, s.interval);
    const Moments E = quadratic_moments(pi);
    const double sq = pi.squared_integral();
    const double G = bracket - 2.0 * w * A[r] * N * X - w * w * M;
    const double shift = 2.0 * A[r] * rho * sig * X * (E.mean - tb.mean_ref[k][r]) +
                         A[r] * sig * sig * (E.second - tb.second_ref[k][r]) + s.gamma * (tb.sq_ref[k][r] - sq);
    return G - s.gamma * (1.0 - sq) + shift;
}

inline double q_integrated_p1(const EvalContext& c, double t, double x, int i) {
    if (c.settings->order != 1) throw domain_error("q_integrated_p1 called on an order-2 context");
    return q_integrated(c, t, x, i);
}

inline double q_integrated_p2(const EvalContext& c, double t, double x, int i) {
    if (c.settings->order != 2) throw domain_error("q_integrated_p2 called on an order-1 context");
    return q_integrated(c, t, x, i);
}

/// G_k = J(t_{k+1}) - J(t_k) + r_k dt - q(t_{k+1}) dt - beta J(t_{k+1}) dt
inline double td_residual(const EvalContext& theta, const EvalContext& zeta, const Trajectory& tr, std::size_t k,
                          double beta = 0.0) {
    if (k + 1 >= tr.times.size()) throw domain_error("td_residual: step outside trajectory");
    const double dt = tr.times[k + 1] - tr.times[k];
    const double t1 = tr.times[k + 1], x1 = tr.wealth[k + 1];
    const int i1 = tr.regimes[k + 1];
    const double J1 = value_J(theta, t1, x1, i1);
    const double J0 = value_J(theta, tr.times[k], tr.wealth[k], tr.regimes[k]);
    return J1 - J0 + tr.rewards[k] * dt - q_integrated(zeta, t1, x1, i1) * dt - beta * J1 * dt;
}

/// Central-difference step for coordinate j: h max(1, |theta_j|), kept clear of the sigma floor.
inline double fd_step(const LearnParams& p, std::size_t j, double h) {
    double step = h * std::max(1.0, std::abs(p[j]));
    if (j >= 2 && p[j] - step <= sigma_floor) step = std::max(0.5 * (p[j] - sigma_floor), 1e-12);
    return step;
}

/// Central finite-difference gradient of a scalar function of the learnable vector.
inline Vec4 grad_fd(const std::function<double(const LearnParams&)>& f, const LearnParams& p, double h = 1e-5) {
    Vec4 g{};
    for (std::size_t j = 0; j < 4; ++j) {
        const double step = fd_step(p, j, h);
        LearnParams up = p, dn = p;
        up[j] += step;
        dn[j] -= step;
        const double fu = f(up), fd = f(dn);
        if (!std::isfinite(fu) || !std::isfinite(fd)) throw gradient_error("grad_fd: non-finite probe value");
        g[j] = (fu - fd) / (2.0 * step);
    }
    return g;
}

/// Base model plus the eight perturbed models needed for central differences. All share the
/// base multiplier, which is treated as a constant of the iteration.
struct ProbeSet {
    Model base;
    std::array<Model, 4> plus, minus;
    Vec4 step{};

    static ProbeSet build(const LearnParams& p, std::shared_ptr<const ModelSettings> s, double h) {
        ProbeSet ps;
        ps.base = Model::build(p, s);
        const Vec2 w = ps.base.w();
        for (std::size_t j = 0; j < 4; ++j) {
            ps.step[j] = fd_step(p, j, h);
            LearnParams up = p, dn = p;
            up[j] += ps.step[j];
            dn[j] -= ps.step[j];
            ps.plus[j] = Model::build(up, s, w);
            ps.minus[j] = Model::build(dn, s, w);
        }
        return ps;
    }

    /// d f / d theta where f maps an evaluation context to a scalar.
    template <class F>
    Vec4 gradient(int i0, F&& f) const {
        Vec4 g{};
        for (std::size_t j = 0; j < 4; ++j)
            g[j] = (f(plus[j].context(i0)) - f(minus[j].context(i0))) / (2.0 * step[j]);
        return g;
    }
};

/// F = \int (q + gamma l_p(pi'(a))) pi'(a) da with pi' from `inner` and q from `outer`.
inline double F_functional(const EvalContext& inner, const EvalContext& outer, double t, double x, int i) {
    const double q = q_integrated(outer, t, x, i);
    const double g = inner.settings->gamma;
    const Policy pi = policy_at(inner, t, x, i);
    if (const auto* gp = std::get_if<GaussianPolicy>(&pi)) return q + g * gp->entropy();
    const auto& qp = std::get<QuadraticPolicy>(pi);
    const double mass = qp.raw_moment(0);
    return q * mass + g * (mass - qp.squared_integral());
}

inline double policy_mass(const EvalContext& c, double t, double x, int i) {
    const Policy pi = policy_at(c, t, x, i);
    if (std::holds_alternative<GaussianPolicy>(pi)) return 1.0;
    return std::get<QuadraticPolicy>(pi).raw_moment(0);
}

/// Policy-gradient increment of one episode, summed over its steps:
///   (q + gamma l_p(pi(a))) dlog pi + gamma l_p'(pi(a)) dpi
///   - 2 w1 F dF - 2 w2 (\int pi - 1) \int dpi
/// q is the critic's and stays fixed while the policy parameters move.
inline Vec4 actor_gradient_terms(const ProbeSet& ps, const Trajectory& tr, double w1, double w2) {
    Vec4 out{};
    const int i0 = tr.regimes.front();
    const EvalContext base = ps.base.context(i0);
    const double p = base.settings->order;
    const double g = base.settings->gamma;
    const std::size_t steps = std::min(tr.steps(), tr.times.size() - 1);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = tr.times[k], x = tr.wealth[k], a = tr.actions[k];
        const int i = tr.regimes[k];
        const double dens = policy_density(policy_at(base, t, x, i), a);
        if (!(dens > 1e-300)) continue;
        const double q = q_integrated(base, t, x, i);
        const double lp = tsallis_entropy(dens, p), dlp = tsallis_entropy_derivative(dens, p);
        const Vec4 dpi = ps.gradient(i0, [&](const EvalContext& c) { return policy_density(policy_at(c, t, x, i), a); });
        const double F = F_functional(base, base, t, x, i);
        const Vec4 dF = ps.gradient(i0, [&](const EvalContext& c) { return F_functional(c, base, t, x, i); });
        const double mass = policy_mass(base, t, x, i);
        const Vec4 dmass = ps.gradient(i0, [&](const EvalContext& c) { return policy_mass(c, t, x, i); });
        for (std::size_t j = 0; j < 4; ++j)
            out[j] += (q + g * lp) * dpi[j] / dens + g * dlp * dpi[j] - 2.0 * w1 * F * dF[j] -
                      2.0 * w2 * (mass - 1.0) * dmass[j];
    }
    return out;
}

/// KL actor increment at step k: -(log pi(a) - q/gamma) dlog pi. Zero when log pi < -700.
inline Vec4 kl_actor_increment(const ProbeSet& ps, const Trajectory& tr, std::size_t k) {
    const int i0 = tr.regimes.front();
    const EvalContext base = ps.base.context(i0);
    const double t = tr.times[k], x = tr.wealth[k], a = tr.actions[k];
    const int i = tr.regimes[k];
    auto log_density = [&](const EvalContext& c) {
        const Policy pi = policy_at(c, t, x, i);
        if (const auto* gp = std::get_if<GaussianPolicy>(&pi)) return gp->log_density(a);
        return std::log(std::get<QuadraticPolicy>(pi).density(a));
    };
    const double lp = log_density(base);
    if (!(lp >= -700.0)) return {};
    const double target = q_integrated(base, t, x, i) / base.settings->gamma;
    const Vec4 dl = ps.gradient(i0, log_density);
    Vec4 out{};
    for (std::size_t j = 0; j < 4; ++j) out[j] = -(lp - target) * dl[j];
    return out;
}

}  // namespace regime_q
