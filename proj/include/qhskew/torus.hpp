#pragma once

// Hyperbolic toral automorphisms on T^2, trigonometric base observables,
// ergodic sums, the Green-Kubo variance and the homoclinic diagnostic.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qhskew/parallel.hpp"
#include "qhskew/rng.hpp"

namespace qhskew {

/// Reduction mod 1 into [0, 1).
inline double wrap01(double v) noexcept {
    const double r = v - std::floor(v);
    return r >= 1.0 ? 0.0 : r;
}

struct TorusPoint {
    double x1 = 0.0;
    double x2 = 0.0;

    static TorusPoint wrapped(double a, double b) noexcept { return {wrap01(a), wrap01(b)}; }
    friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
};

using PlanePoint = std::array<double, 2>;

/// Distance on T^2 from p to the lattice point 0.
inline double torus_norm(TorusPoint p) noexcept {
    const double a = std::min(p.x1, 1.0 - p.x1);
    const double b = std::min(p.x2, 1.0 - p.x2);
    return std::hypot(a, b);
}

inline TorusPoint uniform_torus_point(CounterRng& rng) noexcept {
    const double a = uniform01(rng);
    const double b = uniform01(rng);
    return {a, b};
}

/// Integer 2x2 matrix with |det| = 1 and |trace| > 2 acting on T^2.
///
/// The eigen-data come from the characteristic quadratic in closed form; the
/// unstable and stable directions are parametrised as (1, slope), which
/// requires the upper-right entry to be non-zero.
class ToralAutomorphism {
  public:
    ToralAutomorphism(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d)
        : a_(a), b_(b), c_(c), d_(d) {
        const std::int64_t det = a * d - b * c;
        if (det != 1 && det != -1)
            throw std::invalid_argument("toral automorphism must have determinant +-1, got " +
                                        std::to_string(det));
        const std::int64_t tr = a + d;
        if (tr * tr <= 4)
            throw std::invalid_argument("toral automorphism is not hyperbolic (|trace| <= 2)");
        if (b == 0)
            throw std::invalid_argument("upper-right entry must be non-zero for (1, slope) eigenlines");
        const double trd = static_cast<double>(tr);
        const double disc = std::sqrt(trd * trd - 4.0 * static_cast<double>(det));
        expanding_ = tr > 0 ? 0.5 * (trd + disc) : 0.5 * (trd - disc);
        contracting_ = static_cast<double>(det) / expanding_;
        unstable_slope_ = (expanding_ - static_cast<double>(a)) / static_cast<double>(b);
        stable_slope_ = (contracting_ - static_cast<double>(a)) / static_cast<double>(b);
    }

    /// A = [[2,1],[1,1]].
    static ToralAutomorphism cat_map() { return {2, 1, 1, 1}; }

    std::int64_t a() const noexcept { return a_; }
    std::int64_t b() const noexcept { return b_; }
    std::int64_t c() const noexcept { return c_; }
    std::int64_t d() const noexcept { return d_; }
    std::int64_t det() const noexcept { return a_ * d_ - b_ * c_; }

    /// |expanding eigenvalue| > 1.
    double lambda() const noexcept { return std::abs(expanding_); }
    double expanding_eigenvalue() const noexcept { return expanding_; }
    double contracting_eigenvalue() const noexcept { return contracting_; }
    double unstable_slope() const noexcept { return unstable_slope_; }
    double stable_slope() const noexcept { return stable_slope_; }

    ToralAutomorphism inverse() const {
        const std::int64_t det = this->det();
        return {d_ * det, -b_ * det, -c_ * det, a_ * det};
    }

    TorusPoint apply(TorusPoint p) const noexcept {
        const double ad = static_cast<double>(a_), bd = static_cast<double>(b_);
        const double cd = static_cast<double>(c_), dd = static_cast<double>(d_);
        return TorusPoint::wrapped(ad * p.x1 + bd * p.x2, cd * p.x1 + dd * p.x2);
    }

    /// Linear action on R^2 (no reduction).
    PlanePoint apply_plane(PlanePoint p) const noexcept {
        return {static_cast<double>(a_) * p[0] + static_cast<double>(b_) * p[1],
                static_cast<double>(c_) * p[0] + static_cast<double>(d_) * p[1]};
    }

    /// Transpose action on integer frequencies: (f o A) has frequency A^T k.
    std::array<std::int64_t, 2> pull_frequency(std::array<std::int64_t, 2> k) const noexcept {
        return {a_ * k[0] + c_ * k[1], b_ * k[0] + d_ * k[1]};
    }

    friend bool operator==(const ToralAutomorphism& l, const ToralAutomorphism& r) noexcept {
        return l.a_ == r.a_ && l.b_ == r.b_ && l.c_ == r.c_ && l.d_ == r.d_;
    }

  private:
    std::int64_t a_, b_, c_, d_;
    double expanding_ = 0.0;
    double contracting_ = 0.0;
    double unstable_slope_ = 0.0;
    double stable_slope_ = 0.0;
};

inline TorusPoint apply_automorphism(const ToralAutomorphism& m, TorusPoint p) noexcept {
    return m.apply(p);
}

struct TrigTerm {
    std::array<std::int64_t, 2> k{0, 0};
    double cos_coef = 0.0;
    double sin_coef = 0.0;
};

/// Finite trigonometric polynomial without constant term:
///   f(x) = sum c_k cos(2 pi k.x) + s_k sin(2 pi k.x).
class TrigObservable {
  public:
    TrigObservable() = default;
    explicit TrigObservable(std::vector<TrigTerm> terms) : terms_(std::move(terms)) {
        for (const auto& t : terms_)
            if (t.k[0] == 0 && t.k[1] == 0)
                throw std::invalid_argument("trigonometric observable must be mean-zero: "
                                            "zero frequency term not allowed");
    }

    /// sin(2 pi x1).
    static TrigObservable sin_x1() { return TrigObservable({{{1, 0}, 0.0, 1.0}}); }

    double operator()(TorusPoint p) const noexcept {
        double v = 0.0;
        for (const auto& t : terms_) {
            const double arg = 2.0 * std::numbers::pi *
                               (static_cast<double>(t.k[0]) * p.x1 + static_cast<double>(t.k[1]) * p.x2);
            if (t.cos_coef != 0.0) v += t.cos_coef * std::cos(arg);
            if (t.sin_coef != 0.0) v += t.sin_coef * std::sin(arg);
        }
        return v;
    }

    /// Lipschitz constant for the flat metric on T^2.
    double lipschitz() const noexcept {
        double l = 0.0;
        for (const auto& t : terms_)
            l += 2.0 * std::numbers::pi *
                 std::hypot(static_cast<double>(t.k[0]), static_cast<double>(t.k[1])) *
                 std::hypot(t.cos_coef, t.sin_coef);
        return l;
    }

    double sup_norm_bound() const noexcept {
        double s = 0.0;
        for (const auto& t : terms_) s += std::hypot(t.cos_coef, t.sin_coef);
        return s;
    }

    /// f o A as a trigonometric polynomial.
    TrigObservable compose(const ToralAutomorphism& m) const {
        std::vector<TrigTerm> out;
        out.reserve(terms_.size());
        for (const auto& t : terms_) out.push_back({m.pull_frequency(t.k), t.cos_coef, t.sin_coef});
        return TrigObservable(std::move(out));
    }

    /// Coboundary g o A - g.
    static TrigObservable coboundary(const TrigObservable& g, const ToralAutomorphism& m) {
        auto terms = g.compose(m).terms_;
        for (auto t : g.terms_) {
            t.cos_coef = -t.cos_coef;
            t.sin_coef = -t.sin_coef;
            terms.push_back(t);
        }
        return TrigObservable(std::move(terms));
    }

    bool is_zero() const noexcept {
        for (const auto& t : terms_)
            if (t.cos_coef != 0.0 || t.sin_coef != 0.0) return false;
        return true;
    }

    const std::vector<TrigTerm>& terms() const noexcept { return terms_; }

  private:
    std::vector<TrigTerm> terms_;
};

/// S_n f(p) = sum_{k<n} f(A^k p); S_0 = 0.
inline double ergodic_sum(const ToralAutomorphism& m, const TrigObservable& f, TorusPoint p,
                          std::uint64_t n) noexcept {
    double s = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) {
        s += f(p);
        p = m.apply(p);
    }
    return s;
}

/// Monte Carlo estimate of int f^2 + 2 sum_{k=1}^{k_max} <f, f o A^k>.
inline Estimate green_kubo_sigma2(const ToralAutomorphism& m, const TrigObservable& f,
                                  std::size_t k_max, std::size_t samples, std::uint64_t seed,
                                  unsigned threads = 0) {
    if (k_max < 1) throw std::invalid_argument("green_kubo_sigma2: k_max must be >= 1");
    if (samples < 1) throw std::invalid_argument("green_kubo_sigma2: samples must be >= 1");
    std::vector<double> per(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i);
        TorusPoint p = uniform_torus_point(rng);
        const double f0 = f(p);
        double acc = 0.0;
        for (std::size_t k = 1; k <= k_max; ++k) {
            p = m.apply(p);
            acc += f(p);
        }
        per[i] = f0 * f0 + 2.0 * f0 * acc;
    });
    return mean_and_stderr(per);
}

/// Exact L^2 inner product of two trigonometric polynomials on T^2.
inline double inner_product(const TrigObservable& f, const TrigObservable& g) noexcept {
    double s = 0.0;
    for (const auto& a : f.terms())
        for (const auto& b : g.terms()) {
            if (a.k == b.k)
                s += 0.5 * (a.cos_coef * b.cos_coef + a.sin_coef * b.sin_coef);
            else if (a.k[0] == -b.k[0] && a.k[1] == -b.k[1])
                s += 0.5 * (a.cos_coef * b.cos_coef - a.sin_coef * b.sin_coef);
        }
    return s;
}

/// int f^2 + 2 sum_{k=1}^{k_max} <f, f o A^k> from the Fourier coefficients.
/// Frequencies of f o A^k grow like lambda^k; once they pass 2^40 no term can
/// match f again and the sum stops.
inline double fourier_sigma2(const ToralAutomorphism& m, const TrigObservable& f, std::size_t k_max = 64) {
    double s = inner_product(f, f);
    TrigObservable g = f;
    constexpr std::int64_t kLimit = std::int64_t{1} << 40;  // keeps compose() away from overflow
    for (std::size_t k = 1; k <= k_max; ++k) {
        for (const auto& t : g.terms())
            if (std::abs(t.k[0]) > kLimit || std::abs(t.k[1]) > kLimit) return s;
        g = g.compose(m);
        s += 2.0 * inner_product(f, g);
    }
    return s;
}

/// The two homoclinic points of the fixed point 0.
///
/// x0_tilde: stable line through (1,0) meets the unstable line through (1,1).
/// xm1_tilde: stable line through (1,-1) meets the unstable line through (1,1).
struct HomoclinicPair {
    PlanePoint x0_tilde{};
    PlanePoint xm1_tilde{};
    PlanePoint stable_anchor0{1.0, 0.0};
    PlanePoint stable_anchor_m1{1.0, -1.0};
    PlanePoint unstable_anchor{1.0, 1.0};
};

namespace detail {
// p + alpha (1, sp) = q + beta (1, sq)
inline PlanePoint intersect_lines(PlanePoint p, double sp, PlanePoint q, double sq) {
    const double det = sq - sp;
    if (std::abs(det) < 1e-14) throw std::domain_error("eigenlines are parallel: automorphism not hyperbolic");
    const double rx = q[0] - p[0];
    const double ry = q[1] - p[1];
    // alpha - beta = rx, sp alpha - sq beta = ry
    const double alpha = (sq * rx - ry) / det;
    return {p[0] + alpha, p[1] + sp * alpha};
}
}  // namespace detail

inline HomoclinicPair homoclinic_points(const ToralAutomorphism& m) {
    HomoclinicPair h;
    const double s = m.stable_slope();
    const double u = m.unstable_slope();
    h.x0_tilde = detail::intersect_lines(h.stable_anchor0, s, h.unstable_anchor, u);
    h.xm1_tilde = detail::intersect_lines(h.stable_anchor_m1, s, h.unstable_anchor, u);
    return h;
}

/// A^k x mod 1 for a homoclinic point x, k of either sign.
///
/// Uses A^k(anchor + alpha v) = A^k anchor + alpha mu^k v with integer
/// A^k anchor, so the orbit is exact rather than amplifying round-off by
/// lambda^|k| as direct iteration would.
inline TorusPoint homoclinic_orbit_point(const ToralAutomorphism& m, PlanePoint x, PlanePoint stable_anchor,
                                         PlanePoint unstable_anchor, int k) {
    if (k >= 0) {
        const double alpha = x[0] - stable_anchor[0];
        const double scale = alpha * std::pow(m.contracting_eigenvalue(), k);
        return TorusPoint::wrapped(scale, scale * m.stable_slope());
    }
    const double beta = x[0] - unstable_anchor[0];
    const double scale = beta * std::pow(m.expanding_eigenvalue(), k);
    return TorusPoint::wrapped(scale, scale * m.unstable_slope());
}

struct HomoclinicSum {
    double value = 0.0;
    double tail_bound = 0.0;
};

/// Geometric constant C with dist(A^k x, 0) <= C lambda^-|k| for both points.
inline double homoclinic_decay_constant(const ToralAutomorphism& m, const HomoclinicPair& h) {
    const double ns = std::hypot(1.0, m.stable_slope());
    const double nu = std::hypot(1.0, m.unstable_slope());
    double c = 0.0;
    for (const auto& x : {h.x0_tilde, h.xm1_tilde}) {
        c = std::max(c, std::abs(x[0] - 1.0) * ns);
        c = std::max(c, std::abs(x[0] - h.unstable_anchor[0]) * nu);
    }
    return c;
}

/// sum_{k=-K}^{K} f(A^k x0) - f(A^k xm1) with a bound on the neglected tail.
inline HomoclinicSum homoclinic_sum(const ToralAutomorphism& m, const TrigObservable& f, int K) {
    if (K < 1) throw std::invalid_argument("homoclinic_sum: K must be >= 1");
    const auto h = homoclinic_points(m);
    HomoclinicSum out;
    std::vector<double> terms;
    terms.reserve(2 * static_cast<std::size_t>(K) + 1);
    for (int k = -K; k <= K; ++k) {
        const auto p = homoclinic_orbit_point(m, h.x0_tilde, h.stable_anchor0, h.unstable_anchor, k);
        const auto q = homoclinic_orbit_point(m, h.xm1_tilde, h.stable_anchor_m1, h.unstable_anchor, k);
        terms.push_back(f(p) - f(q));
    }
    out.value = pairwise_sum(terms);
    // |f(p)-f(q)| <= Lip (d(p,0) + d(q,0)); two tails, two points each.
    const double lam = m.lambda();
    const double c = 4.0 * homoclinic_decay_constant(m, h);
    out.tail_bound = f.lipschitz() * c * std::pow(lam, -K) / (1.0 - 1.0 / lam);
    return out;
}

}  // namespace qhskew
