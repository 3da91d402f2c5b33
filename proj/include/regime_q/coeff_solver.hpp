#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "regime_q/errors.hpp"
#include "regime_q/linalg.hpp"
#include "regime_q/params.hpp"
#include "regime_q/tsallis_policy.hpp"

namespace regime_q {

/// A, B, C, D and their time derivatives on the K+1 trajectory times t_k = k T / K.
struct CoeffTable {
    int order = 1;
    double T = 1.0;
    int K = 0;
    std::vector<double> grid;
    std::vector<Vec2> A, B, C, D;
    std::vector<Vec2> A_dot, B_dot, C_dot, D_dot;
    // order 2 only: policy statistics at the reference state used for B and D
    double w = 0.0;
    std::vector<Vec2> mean_ref, second_ref, sq_ref;
    int clamp_count = 0;

    std::size_t index_of(double t) const {
        const double s = t / T * K;
        const double k = std::round(s);
        if (std::abs(s - k) > 1e-7 || k < 0 || k > K) throw domain_error("CoeffTable: time is not on the grid");
        return static_cast<std::size_t>(k);
    }
};

struct SolveOptions {
    double gamma = 0.5;
    double T = 1.0;
    int K = 25;
    int substeps = 10;
};

namespace detail {

inline void check_options(const SolveOptions& o) {
    if (!(o.T > 0.0) || o.K < 1 || o.substeps < 1) throw domain_error("coefficient solve: bad grid");
    if (!(o.gamma > 0.0)) throw domain_error("coefficient solve: gamma must be positive");
}

// Coupling vectors of the regime sum:
// N_i = (1/A_i) sum_j q_ij A_j (B_j - B_i),  M_i = sum_j q_ij A_j (B_j - B_i)^2.
inline Vec2 coupling_N(const Mat2& Q, Vec2 A, Vec2 B) {
    return {{Q(0, 1) * A[1] * (B[1] - B[0]) / A[0], Q(1, 0) * A[0] * (B[0] - B[1]) / A[1]}};
}
inline Vec2 coupling_M(const Mat2& Q, Vec2 A, Vec2 B) {
    const double d = B[1] - B[0];
    return {{Q(0, 1) * A[1] * d * d, Q(1, 0) * A[0] * d * d}};
}

// A(t) = exp(Omega (t - T)) 1 on the half-step grid t = j h / 2, j = 0..2N.
inline std::vector<Vec2> terminal_propagation(const Mat2& omega, double T, std::size_t N) {
    std::vector<Vec2> out(2 * N + 1);
    const Mat2 half_back = expm((-0.5 * T / static_cast<double>(N)) * omega);
    out[2 * N] = Vec2::constant(1.0);
    for (std::size_t j = 2 * N; j-- > 0;) out[j] = half_back * out[j + 1];
    return out;
}

// Backward RK4 on the fine grid for B_t = f(j_half_index, B).
template <class F>
std::vector<Vec2> backward_rk4(F&& f, double h, std::size_t N) {
    std::vector<Vec2> B(N + 1);
    B[N] = Vec2::constant(1.0);
    for (std::size_t n = N; n-- > 0;) {
        const Vec2 y = B[n + 1];
        const std::size_t j1 = 2 * (n + 1), jm = 2 * n + 1, j0 = 2 * n;
        const Vec2 k1 = f(j1, y);
        const Vec2 k2 = f(jm, y - (0.5 * h) * k1);
        const Vec2 k3 = f(jm, y - (0.5 * h) * k2);
        const Vec2 k4 = f(j0, y - h * k3);
        B[n] = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return B;
}

// Y(t) = \int_t^T e^{Q(s-t)} S(s) ds by the composite trapezoid rule, written as a recursion.
inline std::vector<Vec2> backward_integral(const Mat2& Q, const std::vector<Vec2>& S, double h) {
    const std::size_t N = S.size() - 1;
    const Mat2 E = expm(h * Q);
    std::vector<Vec2> Y(N + 1);
    Y[N] = Vec2::constant(0.0);
    for (std::size_t n = N; n-- > 0;) Y[n] = E * Y[n + 1] + (0.5 * h) * (S[n] + E * S[n + 1]);
    return Y;
}

inline void sample_table(CoeffTable& t, const SolveOptions& o, const std::vector<Vec2>& Afine,
                         const std::vector<Vec2>& B, const std::vector<Vec2>& C, const std::vector<Vec2>& D) {
    const std::size_t K = static_cast<std::size_t>(o.K), s = static_cast<std::size_t>(o.substeps);
    t.T = o.T;
    t.K = o.K;
    t.grid.resize(K + 1);
    t.A.resize(K + 1);
    t.B.resize(K + 1);
    t.C.resize(K + 1);
    t.D.resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
        t.grid[k] = o.T * static_cast<double>(k) / static_cast<double>(K);
        t.A[k] = Afine[2 * k * s];
        t.B[k] = B[k * s];
        t.C[k] = C[k * s];
        t.D[k] = D[k * s];
    }
}

}  // namespace detail

/// Entropy source of the p = 1 problem: (gamma/2)(1 + log(2 pi e gamma / (sigma^2 A))).
inline Vec2 shannon_source(Vec2 sigma, Vec2 A, double gamma) {
    Vec2 L;
    for (std::size_t i = 0; i < 2; ++i) {
        const double arg = 2.0 * std::numbers::pi * std::numbers::e * gamma / (sigma[i] * sigma[i] * A[i]);
        if (!(A[i] > 0.0) || !(arg > 0.0) || !std::isfinite(arg))
            throw ansatz_violation("shannon source: log argument not positive");
        L[i] = 0.5 * gamma * (1.0 + std::log(arg));
    }
    return L;
}

/// p = 1 coefficients:
///   A = exp((t-T)(P-Q)) 1,  P = diag(2(rho^2 - r)),
///   B_t = R B - N,  C_t = -Q C - M,  D_t = -Q D - L,  B(T) = 1, C(T) = D(T) = 0.
inline CoeffTable solve_p1(const LearnParams& params, Vec2 rates, const Mat2& Q, const SolveOptions& o) {
    detail::check_options(o);
    const Vec2 rho = params.rho(), sigma = params.sigma();
    const std::size_t N = static_cast<std::size_t>(o.K) * o.substeps;
    const double h = o.T / static_cast<double>(N);
    const Mat2 R = Mat2::diag(rates);
    const Mat2 P = Mat2::diag({{2.0 * (rho[0] * rho[0] - rates[0]), 2.0 * (rho[1] * rho[1] - rates[1])}});
    const Mat2 PQ = P - Q;

    const std::vector<Vec2> Ah = detail::terminal_propagation(PQ, o.T, N);
    auto f = [&](std::size_t j, Vec2 B) { return R * B - detail::coupling_N(Q, Ah[j], B); };
    const std::vector<Vec2> B = detail::backward_rk4(f, h, N);

    std::vector<Vec2> M(N + 1), L(N + 1);
    for (std::size_t n = 0; n <= N; ++n) {
        M[n] = detail::coupling_M(Q, Ah[2 * n], B[n]);
        L[n] = shannon_source(sigma, Ah[2 * n], o.gamma);
    }
    const std::vector<Vec2> C = detail::backward_integral(Q, M, h);
    const std::vector<Vec2> D = detail::backward_integral(Q, L, h);

    CoeffTable t;
    t.order = 1;
    detail::sample_table(t, o, Ah, B, C, D);
    const std::size_t K = static_cast<std::size_t>(o.K);
    t.A_dot.resize(K + 1);
    t.B_dot.resize(K + 1);
    t.C_dot.resize(K + 1);
    t.D_dot.resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
        const std::size_t n = k * o.substeps;
        t.A_dot[k] = PQ * t.A[k];
        t.B_dot[k] = R * t.B[k] - detail::coupling_N(Q, t.A[k], t.B[k]);
        t.C_dot[k] = -(Q * t.C[k]) - M[n];
        t.D_dot[k] = -(Q * t.D[k]) - L[n];
    }
    return t;
}

/// Fundamental matrix Phi(t, T) of B_t = (R - K(t)) B, returned at t = 0 and every grid time.
inline std::vector<Mat2> solve_phi_B_p1(const LearnParams& params, Vec2 rates, const Mat2& Q, const SolveOptions& o) {
    detail::check_options(o);
    const Vec2 rho = params.rho();
    const std::size_t N = static_cast<std::size_t>(o.K) * o.substeps;
    const double h = o.T / static_cast<double>(N);
    const Mat2 P = Mat2::diag({{2.0 * (rho[0] * rho[0] - rates[0]), 2.0 * (rho[1] * rho[1] - rates[1])}});
    const std::vector<Vec2> Ah = detail::terminal_propagation(P - Q, o.T, N);
    auto gen = [&](std::size_t j) {
        const Vec2 A = Ah[j];
        const double k01 = Q(0, 1) * A[1] / A[0], k10 = Q(1, 0) * A[0] / A[1];
        const Mat2 Kt{{-k01, k01, k10, -k10}};
        return Mat2::diag(rates) - Kt;
    };
    std::vector<Mat2> phi(N + 1);
    phi[N] = Mat2::identity();
    for (std::size_t n = N; n-- > 0;) {
        const Mat2 y = phi[n + 1];
        const Mat2 k1 = gen(2 * (n + 1)) * y;
        const Mat2 k2 = gen(2 * n + 1) * (y - (0.5 * h) * k1);
        const Mat2 k3 = gen(2 * n + 1) * (y - (0.5 * h) * k2);
        const Mat2 k4 = gen(2 * n) * (y - h * k3);
        phi[n] = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    std::vector<Mat2> out(o.K + 1);
    for (int k = 0; k <= o.K; ++k) out[k] = phi[static_cast<std::size_t>(k) * o.substeps];
    return out;
}

/// Policy parameters of the p = 2 problem: K1 = (2 x A + w B) rho sigma, K2 = A sigma^2.
inline QuadraticPolicy quadratic_policy(double rho, double sigma, double A, double B, double x, double w,
                                        double gamma, const ActionInterval& iv) {
    return QuadraticPolicy((2.0 * x * A + w * B) * rho * sigma, A * sigma * sigma, gamma, iv);
}

/// p = 2 coefficients for a fixed multiplier w, with policy moments taken at x_ref(t):
///   A_t = (-2R - Q) A,  B_t = R B - (1/w) rho sigma E[a] - N,
///   C_t = -Q C - M,  D_t = -Q D - (A sigma^2 E[a^2] + gamma (1 - \int pi^2)).
inline CoeffTable solve_p2(const LearnParams& params, Vec2 rates, const Mat2& Q, const SolveOptions& o,
                           const ActionInterval& iv, double w, const std::function<double(double)>& x_ref) {
    detail::check_options(o);
    if (w == 0.0 || !std::isfinite(w)) throw ansatz_violation("solve_p2: multiplier must be finite and non-zero");
    const Vec2 rho = params.rho(), sigma = params.sigma();
    const std::size_t N = static_cast<std::size_t>(o.K) * o.substeps;
    const double h = o.T / static_cast<double>(N);
    const Mat2 R = Mat2::diag(rates);
    const Mat2 omega = (-2.0) * R - Q;
    const std::vector<Vec2> Ah = detail::terminal_propagation(omega, o.T, N);

    int clamps = 0;
    auto policy = [&](std::size_t j, Vec2 B, std::size_t i) {
        const double t = 0.5 * h * static_cast<double>(j);
        return quadratic_policy(rho[i], sigma[i], Ah[j][i], B[i], x_ref(t), w, o.gamma, iv);
    };
    auto f = [&](std::size_t j, Vec2 B) {
        Vec2 LB = detail::coupling_N(Q, Ah[j], B);
        for (std::size_t i = 0; i < 2; ++i) LB[i] += rho[i] * sigma[i] * quadratic_moments(policy(j, B, i)).mean / w;
        return R * B - LB;
    };
    const std::vector<Vec2> B = detail::backward_rk4(f, h, N);

    std::vector<Vec2> M(N + 1), LD(N + 1), E1(N + 1), E2(N + 1), SQ(N + 1);
    for (std::size_t n = 0; n <= N; ++n) {
        const Vec2 A = Ah[2 * n];
        M[n] = detail::coupling_M(Q, A, B[n]);
        for (std::size_t i = 0; i < 2; ++i) {
            const QuadraticPolicy pi = policy(2 * n, B[n], i);
            if (pi.clamped()) ++clamps;
            const Moments E = quadratic_moments(pi);
            E1[n][i] = E.mean;
            E2[n][i] = E.second;
            SQ[n][i] = pi.squared_integral();
            LD[n][i] = A[i] * sigma[i] * sigma[i] * E.second - squared_density_term(pi);
        }
    }
    const std::vector<Vec2> C = detail::backward_integral(Q, M, h);
    const std::vector<Vec2> D = detail::backward_integral(Q, LD, h);

    CoeffTable t;
    t.order = 2;
    t.w = w;
    t.clamp_count = clamps;
    detail::sample_table(t, o, Ah, B, C, D);
    const std::size_t K = static_cast<std::size_t>(o.K);
    t.A_dot.resize(K + 1);
    t.B_dot.resize(K + 1);
    t.C_dot.resize(K + 1);
    t.D_dot.resize(K + 1);
    t.mean_ref.resize(K + 1);
    t.second_ref.resize(K + 1);
    t.sq_ref.resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
        const std::size_t n = k * o.substeps;
        t.A_dot[k] = omega * t.A[k];
        t.B_dot[k] = f(2 * n, t.B[k]);
        t.C_dot[k] = -(Q * t.C[k]) - M[n];
        t.D_dot[k] = -(Q * t.D[k]) - LD[n];
        t.mean_ref[k] = E1[n];
        t.second_ref[k] = E2[n];
        t.sq_ref[k] = SQ[n];
    }
    return t;
}

/// w = (z - A B x0) / (A B^2 + C - 1), componentwise at t = 0.
inline Vec2 lagrange_w(Vec2 A0, Vec2 B0, Vec2 C0, double x0, double z) {
    Vec2 w;
    for (std::size_t i = 0; i < 2; ++i) {
        const double den = A0[i] * B0[i] * B0[i] + C0[i] - 1.0;
        if (!(std::abs(den) >= 1e-10)) throw degenerate_horizon("lagrange_w: denominator vanishes");
        w[i] = (z - A0[i] * B0[i] * x0) / den;
    }
    return w;
}

inline Vec2 lagrange_w(const CoeffTable& t, double x0, double z) { return lagrange_w(t.A[0], t.B[0], t.C[0], x0, z); }

}  // namespace regime_q
