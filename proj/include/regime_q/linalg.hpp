#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "regime_q/errors.hpp"

namespace regime_q {

struct Vec2 {
    std::array<double, 2> v{};

    constexpr double& operator[](std::size_t i) { return v[i]; }
    constexpr double operator[](std::size_t i) const { return v[i]; }
    static constexpr Vec2 constant(double c) { return Vec2{{c, c}}; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

inline constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {{a[0] + b[0], a[1] + b[1]}}; }
inline constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {{a[0] - b[0], a[1] - b[1]}}; }
inline constexpr Vec2 operator-(Vec2 a) { return {{-a[0], -a[1]}}; }
inline constexpr Vec2 operator*(double s, Vec2 a) { return {{s * a[0], s * a[1]}}; }
inline constexpr Vec2 operator*(Vec2 a, double s) { return s * a; }
inline constexpr Vec2 hadamard(Vec2 a, Vec2 b) { return {{a[0] * b[0], a[1] * b[1]}}; }

// Row-major 2x2.
struct Mat2 {
    std::array<double, 4> m{};

    constexpr double& operator()(std::size_t i, std::size_t j) { return m[2 * i + j]; }
    constexpr double operator()(std::size_t i, std::size_t j) const { return m[2 * i + j]; }

    static constexpr Mat2 identity() { return Mat2{{1.0, 0.0, 0.0, 1.0}}; }
    static constexpr Mat2 diag(Vec2 d) { return Mat2{{d[0], 0.0, 0.0, d[1]}}; }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

inline constexpr Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {{a.m[0] + b.m[0], a.m[1] + b.m[1], a.m[2] + b.m[2], a.m[3] + b.m[3]}};
}
inline constexpr Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {{a.m[0] - b.m[0], a.m[1] - b.m[1], a.m[2] - b.m[2], a.m[3] - b.m[3]}};
}
inline constexpr Mat2 operator*(double s, const Mat2& a) {
    return {{s * a.m[0], s * a.m[1], s * a.m[2], s * a.m[3]}};
}
inline constexpr Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {{a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0), a(0, 0) * b(0, 1) + a(0, 1) * b(1, 1),
             a(1, 0) * b(0, 0) + a(1, 1) * b(1, 0), a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1)}};
}
inline constexpr Vec2 operator*(const Mat2& a, Vec2 x) {
    return {{a(0, 0) * x[0] + a(0, 1) * x[1], a(1, 0) * x[0] + a(1, 1) * x[1]}};
}

/// Matrix exponential of a 2x2 matrix.
///
/// Writes M = mI + N with N traceless, so N^2 = s^2 I and
/// exp(M) = e^m (cosh s I + sinh(s)/s N); complex s becomes cos/sin.
inline Mat2 expm(const Mat2& a) {
    const double mid = 0.5 * (a(0, 0) + a(1, 1));
    const double half = 0.5 * (a(0, 0) - a(1, 1));
    const double s2 = half * half + a(0, 1) * a(1, 0);
    double c, sc;  // cosh-like part, sinh(s)/s-like part
    if (std::abs(s2) < 1e-8) {
        // series keeps sinh(s)/s accurate near the repeated-eigenvalue point
        c = 1.0 + s2 / 2.0 + s2 * s2 / 24.0 + s2 * s2 * s2 / 720.0;
        sc = 1.0 + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0;
    } else if (s2 > 0.0) {
        const double s = std::sqrt(s2);
        c = std::cosh(s);
        sc = std::sinh(s) / s;
    } else {
        const double w = std::sqrt(-s2);
        c = std::cos(w);
        sc = std::sin(w) / w;
    }
    const double e = std::exp(mid);
    Mat2 out;
    out(0, 0) = e * (c + sc * half);
    out(1, 1) = e * (c - sc * half);
    out(0, 1) = e * sc * a(0, 1);
    out(1, 0) = e * sc * a(1, 0);
    return out;
}

/// exp(Q * tau) for a 2-state generator.
inline Mat2 regime_matrix_exp(const Mat2& generator, double tau) { return expm(tau * generator); }

// Small dense square matrix for the L-regime simulator.
struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t size) : n(size), a(size * size, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }

    static DenseMatrix identity(std::size_t size) {
        DenseMatrix out(size);
        for (std::size_t i = 0; i < size; ++i) out(i, i) = 1.0;
        return out;
    }
};

inline DenseMatrix multiply(const DenseMatrix& x, const DenseMatrix& y) {
    DenseMatrix out(x.n);
    for (std::size_t i = 0; i < x.n; ++i)
        for (std::size_t k = 0; k < x.n; ++k) {
            const double xik = x(i, k);
            for (std::size_t j = 0; j < x.n; ++j) out(i, j) += xik * y(k, j);
        }
    return out;
}

/// Scaling and squaring with a truncated Taylor series.
inline DenseMatrix expm(const DenseMatrix& x) {
    double norm = 0.0;
    for (std::size_t i = 0; i < x.n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < x.n; ++j) row += std::abs(x(i, j));
        norm = std::max(norm, row);
    }
    int squarings = 0;
    while (norm > 0.25) {
        norm *= 0.5;
        ++squarings;
    }
    DenseMatrix scaled = x;
    const double f = std::ldexp(1.0, -squarings);
    for (double& v : scaled.a) v *= f;

    DenseMatrix result = DenseMatrix::identity(x.n);
    DenseMatrix term = DenseMatrix::identity(x.n);
    for (int k = 1; k <= 20; ++k) {
        term = multiply(term, scaled);
        for (double& v : term.a) v /= k;
        for (std::size_t i = 0; i < result.a.size(); ++i) result.a[i] += term.a[i];
    }
    for (int k = 0; k < squarings; ++k) result = multiply(result, result);
    return result;
}

}  // namespace regime_q
