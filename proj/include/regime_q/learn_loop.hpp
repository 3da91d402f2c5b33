#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "regime_q/critic_actor.hpp"
#include "regime_q/market_sim.hpp"
#include "regime_q/params.hpp"
#include "regime_q/rng.hpp"

namespace regime_q {

enum class Algorithm { martingale = 1, actor_critic = 2, kl_actor = 3 };

/// Constant `rate` for k <= hold. Afterwards either rate * decay^floor((k - hold)/every),
/// or Adam with `rate` as its base step.
struct RateSchedule {
    double rate = 1e-3;
    int hold = 0;
    bool adam_after = false;
    double decay = 0.995;
    int every = 10;
    friend bool operator==(const RateSchedule&, const RateSchedule&) = default;
};

inline double schedule_rate(const RateSchedule& s, int k) {
    if (k <= s.hold || s.adam_after) return s.rate;
    return s.rate * std::pow(s.decay, (k - s.hold) / s.every);
}

inline bool adam_phase(const RateSchedule& s, int k) { return s.adam_after && k > s.hold; }

struct AdamSettings {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    friend bool operator==(const AdamSettings&, const AdamSettings&) = default;
};

// Per-coordinate step counters: each coordinate enters its Adam phase at its own iteration.
struct AdamState {
    Vec4 m{}, v{};
    std::array<int, 4> t{};
};

/// Adam step for the active coordinates. Returns the ascent increment; inactive entries are 0.
inline Vec4 adam_step(AdamState& st, const Vec4& grad, const Vec4& rate, const AdamSettings& a,
                      std::array<bool, 4> active = {true, true, true, true}) {
    Vec4 delta{};
    for (std::size_t j = 0; j < 4; ++j) {
        if (!active[j]) continue;
        ++st.t[j];
        st.m[j] = a.beta1 * st.m[j] + (1.0 - a.beta1) * grad[j];
        st.v[j] = a.beta2 * st.v[j] + (1.0 - a.beta2) * grad[j] * grad[j];
        const double mh = st.m[j] / (1.0 - std::pow(a.beta1, st.t[j]));
        const double vh = st.v[j] / (1.0 - std::pow(a.beta2, st.t[j]));
        delta[j] = rate[j] * mh / (std::sqrt(vh) + a.eps);
    }
    return delta;
}

struct LearningConfig {
    std::string name = "custom";
    MarketParams market;
    double T = 1.0;
    int K = 25;
    double x0 = 1.0;
    double z = 1.4;
    double gamma = 0.5;
    int n_paths = 100;
    int n_iters = 6000;
    std::uint64_t seed = 1;
    int entropy_order = 1;
    Algorithm algorithm = Algorithm::martingale;
    std::array<RateSchedule, 4> schedules{};
    double w1 = 0.0;
    double w2 = 0.0;
    AdamSettings adam{};
    std::array<std::array<double, 2>, 4> init_ranges{};
    ActionInterval interval{};
    EulerForm euler_form = EulerForm::amount_invested;
    bool clamp_actions = false;
    int substeps = 10;
    double fd_step = 1e-5;
    double beta = 0.0;
    int initial_regime = -1;  // -1: uniform over regimes
    LearnParams theta_true{};
    friend bool operator==(const LearningConfig&, const LearningConfig&) = default;
};

inline void validate(const LearningConfig& c) {
    validate(c.market);
    if (c.market.regimes() != 2) throw config_error("learner supports two regimes");
    if (!(c.T > 0.0) || c.K < 1) throw config_error("horizon and step count must be positive");
    if (c.n_paths < 1 || c.n_iters < 0) throw config_error("n_paths must be >= 1 and n_iters >= 0");
    if (!(c.gamma > 0.0)) throw config_error("gamma must be positive");
    if (c.entropy_order != 1 && c.entropy_order != 2) throw config_error("entropy order must be 1 or 2");
    if (c.algorithm == Algorithm::actor_critic && c.entropy_order != 2)
        throw config_error("actor-critic runs are set up for entropy order 2");
    if (c.algorithm == Algorithm::kl_actor && c.entropy_order != 1)
        throw config_error("the KL actor is set up for entropy order 1");
    validate(c.interval);
    for (const auto& r : c.init_ranges)
        if (!(r[0] <= r[1])) throw config_error("init range lower bound above upper bound");
    for (const auto& s : c.schedules)
        if (!(s.rate >= 0.0) || s.hold < 0 || s.every < 1) throw config_error("bad learning-rate schedule");
    if (c.initial_regime >= 2) throw config_error("initial regime out of range");
    if (!(c.fd_step > 0.0)) throw config_error("fd_step must be positive");
    if (c.substeps < 1) throw config_error("substeps must be >= 1");
}

inline std::shared_ptr<const ModelSettings> model_settings(const LearningConfig& c) {
    auto s = std::make_shared<ModelSettings>();
    s->order = c.entropy_order;
    s->gamma = c.gamma;
    s->z = c.z;
    s->x0 = c.x0;
    s->T = c.T;
    s->K = c.K;
    s->substeps = c.substeps;
    s->rates = {{c.market.r[0], c.market.r[1]}};
    s->generator = generator2(c.market);
    s->interval = c.interval;
    return s;
}

inline int thread_count() {
    if (const char* env = std::getenv("REGIME_Q_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(0..n-1) over `threads` workers with a static interleaved split.
template <class F>
void parallel_for(int n, int threads, F&& fn) {
    threads = std::clamp(threads, 1, std::max(n, 1));
    if (threads == 1) {
        for (int k = 0; k < n; ++k) fn(k);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            try {
                for (int k = w; k < n; k += threads) fn(k);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Stream domains so that different uses of one seed never share draws.
enum : std::uint64_t { stream_paths = 1, stream_init = 2, stream_diagnostic = 3 };

template <class Rng>
Trajectory rollout(const LearningConfig& c, const Model& m, const Environment& env, Rng& rng) {
    const int i0 = c.initial_regime >= 0 ? c.initial_regime : (rng.uniform() < 0.5 ? 0 : 1);
    const EvalContext ctx = m.context(i0);
    std::optional<ActionInterval> clamp;
    if (c.clamp_actions) clamp = c.interval;
    return simulate_episode(
        c.x0, i0, [&](double t, double x, int i) { return policy_at(ctx, t, x, i); }, c.K, env, rng, clamp);
}

struct BatchGradients {
    Vec4 critic_theta{};  // sum_k dJ/dtheta G_k
    Vec4 critic_zeta{};   // sum_k dq/dzeta G_k
    Vec4 actor{};         // actor-critic or KL actor increment
    double mean_abs_G = 0.0;
    int valid = 0;
    int blowups = 0;
    int clamps = 0;
    Vec2 w{};
};

/// Batch-averaged learning signals at `params` for iteration `iter`.
inline BatchGradients batch_gradients(const LearningConfig& c, std::shared_ptr<const ModelSettings> s,
                                      const LearnParams& params, int iter, double fd_h, int threads) {
    const ProbeSet ps = ProbeSet::build(params, s, fd_h);
    const Environment env(c.market, c.T / c.K, c.euler_form);

    struct PathOut {
        Vec4 th{}, ze{}, ac{};
        double abs_g = 0.0;
        int steps = 0;
        bool truncated = false;
    };
    std::vector<PathOut> out(static_cast<std::size_t>(c.n_paths));
    parallel_for(c.n_paths, threads, [&](int p) {
        Stream rng(c.seed, stream_paths, static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(p));
        const Trajectory tr = rollout(c, ps.base, env, rng);
        PathOut& o = out[static_cast<std::size_t>(p)];
        if (tr.truncated) {
            o.truncated = true;
            return;
        }
        const int i0 = tr.regimes.front();
        const EvalContext ctx = ps.base.context(i0);
        for (std::size_t k = 0; k < tr.steps(); ++k) {
            const double G = td_residual(ctx, ctx, tr, k, c.beta);
            const double t = tr.times[k], x = tr.wealth[k];
            const int i = tr.regimes[k];
            const Vec4 dJ = ps.gradient(i0, [&](const EvalContext& e) { return value_J(e, t, x, i); });
            const Vec4 dq = ps.gradient(i0, [&](const EvalContext& e) { return q_integrated(e, t, x, i); });
            for (std::size_t j = 0; j < 4; ++j) {
                o.th[j] += dJ[j] * G;
                o.ze[j] += dq[j] * G;
            }
            o.abs_g += std::abs(G);
            ++o.steps;
            if (c.algorithm == Algorithm::kl_actor) {
                const Vec4 inc = kl_actor_increment(ps, tr, k);
                for (std::size_t j = 0; j < 4; ++j) o.ac[j] += inc[j];
            }
        }
        if (c.algorithm == Algorithm::actor_critic) o.ac = actor_gradient_terms(ps, tr, c.w1, c.w2);
    });

    BatchGradients b;
    b.w = ps.base.w();
    b.clamps = ps.base.clamp_count();
    long steps = 0;
    for (const PathOut& o : out) {
        if (o.truncated) {
            ++b.blowups;
            continue;
        }
        ++b.valid;
        for (std::size_t j = 0; j < 4; ++j) {
            b.critic_theta[j] += o.th[j];
            b.critic_zeta[j] += o.ze[j];
            b.actor[j] += o.ac[j];
        }
        b.mean_abs_G += o.abs_g;
        steps += o.steps;
    }
    if (b.valid > 0) {
        for (std::size_t j = 0; j < 4; ++j) {
            b.critic_theta[j] /= b.valid;
            b.critic_zeta[j] /= b.valid;
            b.actor[j] /= b.valid;
        }
    }
    b.mean_abs_G = steps > 0 ? b.mean_abs_G / static_cast<double>(steps) : 0.0;
    return b;
}

struct TraceRow {
    int iter = 0;
    LearnParams params{};
    double mean_abs_G = 0.0;
    int clamps = 0;
    int blowups = 0;
    bool rejected = false;
};

struct TrainTrace {
    LearnParams initial{};
    std::vector<TraceRow> rows;

    LearnParams final_params() const { return rows.empty() ? initial : rows.back().params; }

    /// Mean of the last n iterations' parameters.
    LearnParams tail_mean(std::size_t n) const {
        LearnParams m{};
        n = std::min(n, rows.size());
        if (n == 0) return initial;
        for (std::size_t r = rows.size() - n; r < rows.size(); ++r)
            for (std::size_t j = 0; j < 4; ++j) m[j] += rows[r].params[j];
        for (std::size_t j = 0; j < 4; ++j) m[j] /= static_cast<double>(n);
        return m;
    }
};

inline LearnParams initial_params(const LearningConfig& c) {
    Stream rng(c.seed, stream_init);
    LearnParams p;
    for (std::size_t j = 0; j < 4; ++j) {
        const auto& r = c.init_ranges[j];
        p[j] = r[0] + (r[1] - r[0]) * rng.uniform();
    }
    return p;
}

/// Algorithms 1-3: martingale critic, plus the actor-critic or KL actor increment.
/// A failed coefficient solve at the proposed parameters rejects the update and halves
/// the rates for the next attempt.
inline TrainTrace train(const LearningConfig& c, std::optional<LearnParams> start = std::nullopt) {
    validate(c);
    const auto s = model_settings(c);
    const int threads = thread_count();
    TrainTrace trace;
    trace.initial = start ? *start : initial_params(c);
    LearnParams theta = trace.initial;
    AdamState adam;
    double factor = 1.0;
    trace.rows.reserve(static_cast<std::size_t>(c.n_iters));

    for (int n = 1; n <= c.n_iters; ++n) {
        TraceRow row;
        row.iter = n;
        BatchGradients b;
        bool ok = true;
        try {
            b = batch_gradients(c, s, theta, n, c.fd_step, threads);
        } catch (const std::runtime_error&) {
            ok = false;
        } catch (const std::domain_error&) {
            ok = false;
        }
        if (ok) {
            Vec4 g{}, rate{};
            std::array<bool, 4> active{};
            for (std::size_t j = 0; j < 4; ++j) {
                g[j] = b.critic_theta[j] + b.critic_zeta[j] + b.actor[j];
                rate[j] = schedule_rate(c.schedules[j], n) * factor;
                active[j] = adam_phase(c.schedules[j], n);
            }
            AdamState next_adam = adam;
            const Vec4 ad = adam_step(next_adam, g, rate, c.adam, active);
            LearnParams proposal = theta;
            for (std::size_t j = 0; j < 4; ++j) proposal[j] += active[j] ? ad[j] : rate[j] * g[j];
            for (std::size_t j = 2; j < 4; ++j) proposal[j] = std::max(proposal[j], sigma_floor);
            try {
                for (double v : proposal.v)
                    if (!std::isfinite(v)) throw ansatz_violation("non-finite parameter update");
                (void)Model::build(proposal, s);
            } catch (const std::exception&) {
                ok = false;
            }
            if (ok) {
                theta = proposal;
                adam = next_adam;
            }
            row.mean_abs_G = b.mean_abs_G;
            row.clamps = b.clamps;
            row.blowups = b.blowups;
        }
        factor = ok ? 1.0 : 0.5 * factor;
        row.rejected = !ok;
        row.params = theta;
        trace.rows.push_back(row);
    }
    return trace;
}

inline TrainTrace run_algorithm1(LearningConfig c) {
    c.algorithm = Algorithm::martingale;
    return train(c);
}
inline TrainTrace run_algorithm2(LearningConfig c) {
    c.algorithm = Algorithm::actor_critic;
    return train(c);
}
inline TrainTrace run_algorithm3(LearningConfig c) {
    c.algorithm = Algorithm::kl_actor;
    return train(c);
}

struct MartingaleStat {
    double mean = 0.0;
    double se = 0.0;
    int episodes = 0;
    double z() const { return se > 0.0 ? mean / se : 0.0; }
};

/// Mean and standard error of sum_k G_k over independent episodes at fixed parameters.
inline MartingaleStat martingale_statistic(const LearningConfig& c, const LearnParams& params, int episodes,
                                           std::uint64_t seed) {
    const auto s = model_settings(c);
    const Model m = Model::build(params, s);
    const Environment env(c.market, c.T / c.K, c.euler_form);
    std::vector<double> sums(static_cast<std::size_t>(episodes), NAN);
    parallel_for(episodes, thread_count(), [&](int p) {
        Stream rng(seed, stream_diagnostic, static_cast<std::uint64_t>(p));
        const Trajectory tr = rollout(c, m, env, rng);
        if (tr.truncated) return;
        const EvalContext ctx = m.context(tr.regimes.front());
        double g = 0.0;
        for (std::size_t k = 0; k < tr.steps(); ++k) g += td_residual(ctx, ctx, tr, k, c.beta);
        sums[static_cast<std::size_t>(p)] = g;
    });
    MartingaleStat st;
    double s1 = 0.0, s2 = 0.0;
    for (double v : sums) {
        if (std::isnan(v)) continue;
        ++st.episodes;
        s1 += v;
    }
    if (st.episodes < 2) return st;
    st.mean = s1 / st.episodes;
    for (double v : sums)
        if (!std::isnan(v)) s2 += (v - st.mean) * (v - st.mean);
    st.se = std::sqrt(s2 / (st.episodes - 1) / st.episodes);
    return st;
}

}  // namespace regime_q
