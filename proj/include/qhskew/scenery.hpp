#pragma once

// Occupation counts of the roof's ergodic sums, random walk in random
// scenery, Brownian local time and the limit law
//   int_0^inf L_1(x) dW_+(x) + int_0^inf L_1(-x) dW_-(x).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "qhskew/empirical_law.hpp"
#include "qhskew/parallel.hpp"
#include "qhskew/rng.hpp"
#include "qhskew/skew.hpp"

namespace qhskew {

// ---------------------------------------------------------------------------
// Occupation counts N(n, p) = #{k < n : S_k f in [p, p+1)}

struct OccupationProfile {
    std::map<std::int64_t, std::uint64_t> counts;
    std::uint64_t n = 0;

    std::uint64_t at(std::int64_t p) const {
        const auto it = counts.find(p);
        return it == counts.end() ? 0 : it->second;
    }
    std::uint64_t total() const {
        std::uint64_t s = 0;
        for (const auto& [p, c] : counts) s += c;
        return s;
    }
};

inline OccupationProfile occupation_counts(const SkewSystem& sys, TorusPoint x, std::uint64_t n) {
    if (n < 1) throw std::invalid_argument("occupation_counts: n must be >= 1");
    OccupationProfile prof;
    prof.n = n;
    for (double s : roof_sums(sys, x, n)) ++prof.counts[static_cast<std::int64_t>(std::floor(s))];
    return prof;
}

// ---------------------------------------------------------------------------
// Random walk in random scenery

struct SceneryConfig {
    std::vector<std::int64_t> walk_support{-1, 1};  // uniform over the listed steps
    double scenery_variance = 1.0;

    double walk_variance() const {
        double m = 0.0, v = 0.0;
        for (auto s : walk_support) {
            m += static_cast<double>(s);
            v += static_cast<double>(s * s);
        }
        const double k = static_cast<double>(walk_support.size());
        return v / k - (m / k) * (m / k);
    }

    void validate() const {
        if (walk_support.empty()) throw std::invalid_argument("scenery: empty walk support");
        const auto sum = std::accumulate(walk_support.begin(), walk_support.end(), std::int64_t{0});
        if (sum != 0) throw std::invalid_argument("scenery: walk steps must be centred");
        if (!(walk_variance() > 0.0)) throw std::invalid_argument("scenery: walk variance must be > 0");
        if (!(scenery_variance >= 0.0)) throw std::invalid_argument("scenery: scenery variance must be >= 0");
    }

    /// Scenery variance that gives the RWRS the limit variance
    /// (8/3) Sigma^2 / (sqrt(2 pi) sigma): v = Sigma^2 * s / sigma with s the walk std.
    static SceneryConfig matched(double sigma, double sigma2_capital, std::vector<std::int64_t> support = {-1, 1}) {
        SceneryConfig cfg;
        cfg.walk_support = std::move(support);
        cfg.scenery_variance = sigma2_capital * std::sqrt(cfg.walk_variance()) / sigma;
        cfg.validate();
        return cfg;
    }
};

/// Two-sided array of scenery values generated on first visit.
class LazyScenery {
  public:
    explicit LazyScenery(double stddev) : stddev_(stddev) {}

    double at(std::int64_t p, CounterRng& rng) {
        auto& side = p >= 0 ? pos_ : neg_;
        const auto idx = static_cast<std::size_t>(p >= 0 ? p : -p - 1);
        if (idx >= side.size()) side.resize(std::max(idx + 1, 2 * side.size()), kUnset);
        double& v = side[idx];
        if (std::isnan(v)) v = stddev_ * standard_normal(rng);
        return v;
    }

    std::size_t visited() const {
        auto cnt = [](const std::vector<double>& s) {
            return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](double v) { return !std::isnan(v); }));
        };
        return cnt(pos_) + cnt(neg_);
    }

  private:
    static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
    double stddev_;
    std::vector<double> pos_, neg_;
};

/// n^{-3/4} sum_{k<n} xi_{X_1+...+X_k}, position 0 at k = 0.
/// Draw order per step: scenery at the current site if new, then the step.
inline double rwrs_sample(const SceneryConfig& cfg, std::uint64_t n, CounterRng& rng) {
    if (n < 1) throw std::invalid_argument("rwrs_sample: n must be >= 1");
    LazyScenery scenery(std::sqrt(cfg.scenery_variance));
    const auto m = cfg.walk_support.size();
    std::int64_t pos = 0;
    double acc = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) {
        acc += scenery.at(pos, rng);
        const auto idx = std::min<std::size_t>(m - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(m)));
        pos += cfg.walk_support[idx];
    }
    return acc * std::pow(static_cast<double>(n), -0.75);
}

inline double rwrs_sample(const SceneryConfig& cfg, std::uint64_t n, std::uint64_t seed) {
    cfg.validate();
    auto rng = make_stream(seed, 0, 0x5C);
    return rwrs_sample(cfg, n, rng);
}

inline EmpiricalLaw rwrs_law(const SceneryConfig& cfg, std::uint64_t n, std::size_t samples, std::uint64_t seed,
                             unsigned threads = 0) {
    cfg.validate();
    EmpiricalLaw law{std::vector<double>(samples), n, 0.75, seed};
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i, 0x5C);
        law.values[i] = rwrs_sample(cfg, n, rng);
    });
    return law;
}

// ---------------------------------------------------------------------------
// Local time

struct LocalTimeProfile {
    double dx = 0.0;
    std::int64_t first_bin = 0;  // bin b covers [b dx, (b+1) dx)
    std::vector<double> values;

    double bin_left(std::size_t i) const { return static_cast<double>(first_bin + static_cast<std::int64_t>(i)) * dx; }
    double total_mass() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * dx;
    }
    /// int L(x)^2 dx.
    double squared_integral() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return s * dx;
    }
};

/// Occupation density of a path sampled at equally spaced times on [0, 1):
/// every point carries time 1/size.
inline LocalTimeProfile local_time(std::span<const double> path, double dx) {
    if (path.size() < 2) throw std::invalid_argument("local_time: path needs at least 2 points");
    if (!(dx > 0.0)) throw std::invalid_argument("local_time: dx must be > 0");
    const auto [lo_it, hi_it] = std::minmax_element(path.begin(), path.end());
    const double range = *hi_it - *lo_it;
    if (range > 0.0 && dx > range) throw std::invalid_argument("local_time: dx exceeds the path range");
    LocalTimeProfile prof;
    prof.dx = dx;
    const auto b_lo = static_cast<std::int64_t>(std::floor(*lo_it / dx));
    const auto b_hi = static_cast<std::int64_t>(std::floor(*hi_it / dx));
    prof.first_bin = b_lo;
    prof.values.assign(static_cast<std::size_t>(b_hi - b_lo + 1), 0.0);
    const double mass = 1.0 / (static_cast<double>(path.size()) * dx);
    for (double w : path) {
        const auto b = static_cast<std::int64_t>(std::floor(w / dx));
        prof.values[static_cast<std::size_t>(std::clamp(b, b_lo, b_hi) - b_lo)] += mass;
    }
    return prof;
}

/// W on [0, 1) with variance sigma^2 per unit time: points at 0, dt, ..., started at 0.
inline std::vector<double> brownian_path(double sigma, double dt, CounterRng& rng) {
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / dt));
    if (steps < 2) throw std::invalid_argument("brownian_path: dt too large");
    std::vector<double> w(steps);
    const double sd = sigma * std::sqrt(1.0 / static_cast<double>(steps));
    w[0] = 0.0;
    for (std::size_t j = 1; j < steps; ++j) w[j] = w[j - 1] + sd * standard_normal(rng);
    return w;
}

/// Default discretisation of the limit-law sampler.
struct LimitGrid {
    double dx;
    double dt;
    static LimitGrid for_sigma(double sigma) { return {sigma / 64.0, 1.0 / 4096.0}; }
};

/// One draw of int L_1(x) dW_+(x) + int L_1(-x) dW_-(x), with W of variance
/// sigma^2 per unit time and W_+- of variance Sigma^2 per unit length.
inline double ks_limit_sample(double sigma, double sigma2_capital, double dx, double dt, CounterRng& rng) {
    if (!(sigma > 0.0)) throw std::invalid_argument("ks_limit_sample: sigma must be > 0");
    if (!(sigma2_capital >= 0.0)) throw std::invalid_argument("ks_limit_sample: Sigma^2 must be >= 0");
    const auto path = brownian_path(sigma, dt, rng);
    const auto lt = local_time(path, dx);
    // Bins left of 0 take increments of W_-, the others of W_+; all are
    // independent N(0, Sigma^2 dx).
    const double inc = std::sqrt(sigma2_capital * dx);
    double z = 0.0;
    for (double l : lt.values) z += l * inc * standard_normal(rng);
    return z;
}

inline double ks_limit_sample(double sigma, double sigma2_capital, double dx, double dt, std::uint64_t seed) {
    auto rng = make_stream(seed, 0, 0x4B53);
    return ks_limit_sample(sigma, sigma2_capital, dx, dt, rng);
}

inline EmpiricalLaw ks_limit_law(double sigma, double sigma2_capital, LimitGrid grid, std::size_t samples,
                                 std::uint64_t seed, unsigned threads = 0) {
    EmpiricalLaw law{std::vector<double>(samples), 0, 0.75, seed};
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i, 0x4B53);
        law.values[i] = ks_limit_sample(sigma, sigma2_capital, grid.dx, grid.dt, rng);
    });
    return law;
}

/// (8/3) Sigma^2 / (sqrt(2 pi) sigma): asymptotic variance of n^{-3/4} sum phi o T^k.
inline double corollary_constant(double sigma, double sigma2_capital) {
    return (8.0 / 3.0) * sigma2_capital / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

// ---------------------------------------------------------------------------
// Decomposition of the fiber Birkhoff sum over unit intervals of flow time

struct FiberDecomposition {
    double direct = 0.0;    // sum_k phi(g_{S_k} y)
    double weighted = 0.0;  // sum_p N(n,p) Phi(g_p y)
    std::uint64_t n = 0;

    double scale() const { return std::pow(static_cast<double>(n), -0.75); }
    double residual() const { return scale() * (weighted - direct); }
    double normalized_weighted() const { return scale() * weighted; }
};

/// Both sides of the occupation decomposition for the fiber observable, with
/// Phi(y) = int_0^1 phi(g_t y) dt by 16-point Gauss-Legendre.
inline FiberDecomposition fiber_decomposition(const SkewSystem& sys, const BumpObservable& phi, const SkewState& s,
                                              std::uint64_t n) {
    if (n < 1) throw std::invalid_argument("decomposition: n must be >= 1");
    const auto sums = roof_sums(sys, s.base, n);
    FiberPath path(sys.group(), s.fiber);
    std::map<std::int64_t, std::uint64_t> counts;
    FiberDecomposition out;
    out.n = n;
    std::vector<double> direct(n);
    for (std::uint64_t k = 0; k < n; ++k) {
        ++counts[static_cast<std::int64_t>(std::floor(sums[k]))];
        direct[k] = phi(path.at(sums[k]));
    }
    out.direct = pairwise_sum(direct);
    using boost::math::quadrature::gauss;
    double w = 0.0;
    for (const auto& [p, c] : counts) {
        const Frame a = path.anchor(p);
        const double big_phi = gauss<double, 16>::integrate(
            [&](double t) { return phi(flow_reduced(sys.group(), a, t)); }, 0.0, 1.0);
        w += static_cast<double>(c) * big_phi;
    }
    out.weighted = w;
    return out;
}

/// n^{-3/4} sum_p [N(n,p) Phi(g_p y) - sum_{k: S_k in [p,p+1)} phi(g_{S_k} y)].
inline double decomposition_residual(const SkewSystem& sys, const SkewObservable& phi, const SkewState& s,
                                     std::uint64_t n) {
    if (!phi.fiber_only()) throw std::invalid_argument("decomposition_residual: observable must be fiber-only");
    return fiber_decomposition(sys, phi.fiber, s, n).residual();
}

/// Law of n^{-3/4} sum_p N(n,p) Phi(g_p y) under the product measure.
inline EmpiricalLaw occupation_weighted_law(const SkewSystem& sys, const SkewObservable& phi, std::uint64_t n,
                                            std::size_t samples, std::uint64_t seed, unsigned threads = 0) {
    if (!phi.fiber_only()) throw std::invalid_argument("occupation_weighted_law: observable must be fiber-only");
    EmpiricalLaw law{std::vector<double>(samples), n, 0.75, seed};
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i, 0x0CC);
        law.values[i] = fiber_decomposition(sys, phi.fiber, sample_state(sys, rng), n).normalized_weighted();
    });
    return law;
}

// ---------------------------------------------------------------------------

inline std::complex<double> empirical_characteristic_function(const EmpiricalLaw& law, double t) {
    double re = 0.0, im = 0.0;
    for (double v : law.values) {
        re += std::cos(t * v);
        im += std::sin(t * v);
    }
    const double n = static_cast<double>(law.values.size());
    return {re / n, im / n};
}

/// max over t_grid of |E exp(itA) - E exp(itB)| for the empirical laws.
inline double char_fn_distance(const EmpiricalLaw& a, const EmpiricalLaw& b, std::span<const double> t_grid) {
    a.validate();
    b.validate();
    double d = 0.0;
    for (double t : t_grid)
        d = std::max(d, std::abs(empirical_characteristic_function(a, t) - empirical_characteristic_function(b, t)));
    return d;
}

}  // namespace qhskew
