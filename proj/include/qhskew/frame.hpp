#pragma once

// Unit-determinant 2x2 frames, the diagonal flow and Iwasawa coordinates.
//
// A frame m is a point of PSL(2,R) (m and -m identified). Its base point in
// the upper half-plane is m.i and cosh d(m.i, i) = |m|_F^2 / 2. The flow acts
// on the right, m -> m diag(e^{t/2}, e^{-t/2}); the lattice acts on the left.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace qhskew {

struct Frame {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    static constexpr Frame identity() noexcept { return {}; }

    constexpr double det() const noexcept { return a * d - b * c; }
    constexpr double norm2() const noexcept { return a * a + b * b + c * c + d * d; }

    /// Inverse of a unit-determinant matrix.
    constexpr Frame inverse() const noexcept { return {d, -b, -c, a}; }

    /// Moebius image of i.
    std::complex<double> point() const noexcept {
        const double s = c * c + d * d;
        return {(a * c + b * d) / s, 1.0 / s};
    }

    friend constexpr Frame operator*(const Frame& l, const Frame& r) noexcept {
        return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c,
                l.c * r.b + l.d * r.d};
    }

    std::array<double, 4> entries() const noexcept { return {a, b, c, d}; }
};

/// |l * r|_F^2 without forming the product.
constexpr double product_norm2(const Frame& l, const Frame& r) noexcept {
    const double p = l.a * r.a + l.b * r.c;
    const double q = l.a * r.b + l.b * r.d;
    const double s = l.c * r.a + l.d * r.c;
    const double t = l.c * r.b + l.d * r.d;
    return p * p + q * q + s * s + t * t;
}

/// Hyperbolic distance from m.i to i.
inline double distance_to_center(const Frame& m) noexcept {
    return std::acosh(std::max(1.0, 0.5 * m.norm2()));
}

inline double hyperbolic_distance(std::complex<double> z, std::complex<double> w) noexcept {
    const double dx = z.real() - w.real();
    const double dy = z.imag() - w.imag();
    return std::acosh(std::max(1.0, 1.0 + (dx * dx + dy * dy) / (2.0 * z.imag() * w.imag())));
}

inline std::complex<double> moebius(const Frame& m, std::complex<double> z) noexcept {
    return (m.a * z + m.b) / (m.c * z + m.d);
}

/// diag(e^{t/2}, e^{-t/2}).
inline Frame diagonal(double t) noexcept {
    const double e = std::exp(0.5 * t);
    return {e, 0.0, 0.0, 1.0 / e};
}

/// Rotation about i: k(phi) = [[cos, sin], [-sin, cos]].
inline Frame rotation(double phi) noexcept {
    const double c = std::cos(phi), s = std::sin(phi);
    return {c, s, -s, c};
}

struct Iwasawa {
    double x = 0.0;
    double y = 1.0;
    double theta = 0.0;  // in [0, pi)
};

/// n(x) a(y) k(theta).
inline Frame from_iwasawa(const Iwasawa& w) noexcept {
    const double sy = std::sqrt(w.y);
    const double c = std::cos(w.theta), s = std::sin(w.theta);
    return {sy * c - w.x * s / sy, sy * s + w.x * c / sy, -s / sy, c / sy};
}

/// Iwasawa coordinates read from the bottom row and a.c + b.d; these stay
/// accurate when the determinant itself has been lost to cancellation.
inline Iwasawa to_iwasawa(const Frame& m) noexcept {
    const double s = m.c * m.c + m.d * m.d;
    Iwasawa w;
    w.y = 1.0 / s;
    w.x = (m.a * m.c + m.b * m.d) / s;
    double th = std::atan2(-m.c, m.d);
    if (th < 0.0) th += std::numbers::pi;
    if (th >= std::numbers::pi) th -= std::numbers::pi;
    w.theta = th;
    return w;
}

/// Restores det = 1: rescaling when the drift is small, Iwasawa re-projection
/// otherwise.
inline void normalize(Frame& m) noexcept {
    const double det = m.det();
    if (det > 0.0 && std::abs(det - 1.0) < 1e-6) {
        const double s = 1.0 / std::sqrt(det);
        m.a *= s;
        m.b *= s;
        m.c *= s;
        m.d *= s;
        return;
    }
    m = from_iwasawa(to_iwasawa(m));
}

inline Frame normalized(Frame m) noexcept {
    normalize(m);
    return m;
}

/// Entrywise distance between frames in PSL(2,R) (sign ambiguity removed),
/// relative to the larger norm when that exceeds 1.
inline double frame_distance(const Frame& l, const Frame& r) noexcept {
    const auto x = l.entries();
    const auto y = r.entries();
    double plus = 0.0, minus = 0.0;
    for (int i = 0; i < 4; ++i) {
        plus = std::max(plus, std::abs(x[i] - y[i]));
        minus = std::max(minus, std::abs(x[i] + y[i]));
    }
    const double scale = std::max({1.0, std::sqrt(l.norm2()), std::sqrt(r.norm2())});
    return std::min(plus, minus) / scale;
}

/// Largest |t| accepted by a single flow call.
inline constexpr double kMaxFlowTime = 100.0;

/// Right multiplication by the diagonal flow. No lattice reduction.
inline Frame flow(const Frame& y, double t) {
    if (!std::isfinite(t) || std::abs(t) > kMaxFlowTime)
        throw std::out_of_range("flow: |t| must be finite and at most 100; split longer flows");
    const double e = std::exp(0.5 * t);
    const double ie = 1.0 / e;
    Frame out{y.a * e, y.b * ie, y.c * e, y.d * ie};
    normalize(out);
    return out;
}

}  // namespace qhskew
