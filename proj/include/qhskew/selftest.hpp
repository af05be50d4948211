#pragma once

// Property checks over every module, run by `qhskew selftest`.

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "qhskew/experiments.hpp"

namespace qhskew {

struct Check {
    std::string group;
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

/// Frame with Haar-distributed direction at hyperbolic distance up to `radius` from i.
inline Frame random_frame(CounterRng& rng, double radius) {
    return frame_at(uniform(rng, 0.0, radius), uniform(rng, 0.0, 2.0 * std::numbers::pi),
                    uniform(rng, 0.0, std::numbers::pi));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Geometry

inline Check check_reduction_idempotent(const FuchsianGroup& g, std::uint64_t seed, std::size_t cases = 1000) {
    double worst = 0.0;
    std::size_t nonempty = 0;
    for (std::size_t i = 0; i < cases; ++i) {
        auto rng = make_stream(seed, i, 0x1D);
        const auto once = g.reduce(detail::random_frame(rng, 12.0));
        const auto twice = g.reduce(once.frame);
        if (!twice.word.empty()) ++nonempty;
        worst = std::max(worst, frame_distance(once.frame, twice.frame));
    }
    const bool ok = nonempty == 0 && worst <= 1e-12;
    return {"geometry", "reduction idempotence", ok,
            detail::fmt("%zu frames, %zu non-empty second words, max change %.2e", cases, nonempty, worst)};
}

inline Check check_observable_invariance(const FuchsianGroup& g, const BumpObservable& phi, std::uint64_t seed,
                                         std::size_t cases = 1000) {
    double worst = 0.0;
    for (std::size_t i = 0; i < cases; ++i) {
        auto rng = make_stream(seed, i, 0x1E);
        const Frame y = sample_haar(g, rng);
        const double v = phi(y);
        for (int k = 0; k < FuchsianGroup::kGenerators; ++k)
            worst = std::max(worst, std::abs(phi(g.reduce(g.generators()[k] * y).frame) - v));
    }
    return {"geometry", "observable Gamma-invariance", worst <= 1e-9,
            detail::fmt("%zu frames x 8 generators, max |phi(gamma y) - phi(y)| = %.2e (tol 1e-9)", cases, worst)};
}

inline Check check_flow_group_law(std::uint64_t seed, std::size_t cases = 1000) {
    double worst = 0.0;
    for (std::size_t i = 0; i < cases; ++i) {
        auto rng = make_stream(seed, i, 0x1F);
        const Frame y = detail::random_frame(rng, 3.0);
        const double s = uniform(rng, -50.0, 50.0), t = uniform(rng, -50.0, 50.0);
        worst = std::max(worst, frame_distance(flow(flow(y, s), t), flow(y, s + t)));
    }
    return {"geometry", "flow group law", worst <= 1e-9,
            detail::fmt("%zu cases |s|,|t| <= 50, max relative deviation %.2e (tol 1e-9)", cases, worst)};
}

inline Check check_haar_acceptance(const FuchsianGroup& g, std::uint64_t seed, std::size_t accepted = 200000) {
    const double rate = haar_acceptance_rate(g, accepted, seed);
    // Genus 2: the octagon has hyperbolic area 4 pi; the angle factor cancels.
    const double expected = 4.0 * std::numbers::pi / g.bounding_box().hyperbolic_area();
    const double rel = std::abs(rate / expected - 1.0);
    return {"geometry", "Haar acceptance vs area 4 pi", rel <= 0.02,
            detail::fmt("rate %.5f, area(octagon)/area(box) = %.5f, relative difference %.4f (tol 0.02)", rate,
                        expected, rel)};
}

inline Check check_rho_decay(Context& ctx) {
    const auto& S2 = ctx.sigma2_capital();
    if (!S2.decay)
        return {"geometry", "autocorrelation decay", false, "no decay fit (too few significant lags in [2, 12])"};
    const auto& f = *S2.decay;
    return {"geometry", "autocorrelation decay", f.slope + 3.0 * f.slope_error < 0.0,
            detail::fmt("log|rho| slope on [2,12] = %.3f +- %.3f", f.slope, f.slope_error)};
}

// ---------------------------------------------------------------------------
// Base

inline Check check_automorphism_inverse(const ToralAutomorphism& m, std::uint64_t seed, std::size_t cases = 10000) {
    const auto inv = m.inverse();
    double worst = 0.0;
    for (std::size_t i = 0; i < cases; ++i) {
        auto rng = make_stream(seed, i, 0x20);
        const auto p = uniform_torus_point(rng);
        const auto q = inv.apply(m.apply(p));
        worst = std::max(worst, torus_norm(TorusPoint::wrapped(q.x1 - p.x1, q.x2 - p.x2)));
    }
    return {"base", "automorphism inverse round trip", worst <= 1e-12,
            detail::fmt("%zu points, max error %.2e", cases, worst)};
}

inline Check check_ergodic_cocycle(const ToralAutomorphism& m, const TrigObservable& f, std::uint64_t seed,
                                   std::size_t cases = 1000) {
    double worst = 0.0;
    for (std::size_t i = 0; i < cases; ++i) {
        auto rng = make_stream(seed, i, 0x21);
        const auto p = uniform_torus_point(rng);
        const auto a = static_cast<std::uint64_t>(uniform(rng, 0.0, 101.0));
        const auto b = static_cast<std::uint64_t>(uniform(rng, 0.0, 101.0));
        TorusPoint q = p;
        for (std::uint64_t k = 0; k < a; ++k) q = m.apply(q);
        const double lhs = ergodic_sum(m, f, p, a + b);
        const double rhs = ergodic_sum(m, f, p, a) + ergodic_sum(m, f, q, b);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    return {"base", "ergodic sum cocycle", worst <= 1e-9, detail::fmt("max relative deviation %.2e", worst)};
}

inline Check check_fourier_orthogonality(const ToralAutomorphism& m, const TrigObservable& f, std::uint64_t seed,
                                         std::size_t samples) {
    int bad = 0;
    double worst = 0.0;
    TrigObservable fk = f;
    for (std::size_t k = 1; k <= 20; ++k) {
        fk = fk.compose(m);
        std::vector<double> v(samples);
        for (std::size_t i = 0; i < samples; ++i) {
            auto rng = make_stream(seed, i, 0x22 + k);
            TorusPoint p = uniform_torus_point(rng);
            const double f0 = f(p);
            for (std::size_t j = 0; j < k; ++j) p = m.apply(p);
            v[i] = f0 * f(p);
        }
        const auto e = mean_and_stderr(v);
        const double z = std::abs(e.value - inner_product(f, fk)) / e.error;
        worst = std::max(worst, z);
        if (z > 3.0) ++bad;
    }
    // Twenty 3-sigma tests: allow one marginal exceedance.
    return {"base", "correlations <f, f o A^k> vs Fourier, k = 1..20", bad <= 1 && worst < 4.5,
            detail::fmt("%d of 20 lags beyond 3 stderr, worst %.2f stderr", bad, worst)};
}

inline Check check_homoclinic_tail(const ToralAutomorphism& m, const TrigObservable& f, int K) {
    const auto a = homoclinic_sum(m, f, K);
    const auto b = homoclinic_sum(m, f, K + 20);
    const double diff = std::abs(a.value - b.value);
    return {"base", "homoclinic tail bound", diff <= a.tail_bound + 1e-14,
            detail::fmt("K=%d value %.12f, |S_K - S_{K+20}| = %.2e <= bound %.2e", K, a.value, diff, a.tail_bound)};
}

// ---------------------------------------------------------------------------
// Skew product

inline Check check_iterate_cocycle(const SkewSystem& sys, std::uint64_t seed, std::size_t cases = 200) {
    double worst = 0.0;
    for (std::size_t i = 0; i < cases; ++i) {
        auto rng = make_stream(seed, i, 0x30);
        const auto s = sample_state(sys, rng);
        const auto a = static_cast<std::uint64_t>(uniform(rng, 0.0, 21.0));
        const auto b = static_cast<std::uint64_t>(uniform(rng, 0.0, 21.0));
        const auto l = iterate(sys, s, a + b);
        const auto r = iterate(sys, iterate(sys, s, a), b);
        worst = std::max(worst, frame_distance(l.fiber, r.fiber));
    }
    return {"skew", "iterate cocycle (m, n <= 20)", worst <= 1e-7, detail::fmt("max fiber deviation %.2e", worst)};
}

inline Check check_birkhoff_naive(const SkewSystem& sys, const SkewObservable& phi, std::uint64_t seed,
                                  std::size_t cases = 50) {
    double worst = 0.0;
    for (std::size_t i = 0; i < cases; ++i) {
        auto rng = make_stream(seed, i, 0x31);
        const auto s = sample_state(sys, rng);
        const double fast = birkhoff_sum(sys, phi, s, 64);
        double naive = 0.0;
        for (std::uint64_t k = 0; k < 64; ++k) naive += phi(iterate(sys, s, k));
        worst = std::max(worst, std::abs(fast - naive));
    }
    return {"skew", "Birkhoff sum vs quadratic recomputation (n = 64)", worst <= 1e-7,
            detail::fmt("max difference %.2e", worst)};
}

// ---------------------------------------------------------------------------
// Scenery and statistics

inline Check check_occupation_mass(const SkewSystem& sys, std::uint64_t seed) {
    bool ok = true;
    for (std::size_t i = 0; i < 100; ++i) {
        auto rng = make_stream(seed, i, 0x40);
        const auto n = 1 + static_cast<std::uint64_t>(uniform(rng, 0.0, 5000.0));
        ok = ok && occupation_counts(sys, uniform_torus_point(rng), n).total() == n;
    }
    return {"scenery", "occupation counts conserve mass", ok, "100 random (x, n)"};
}

inline Check check_local_time_normalization(std::uint64_t seed) {
    double worst = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
        auto rng = make_stream(seed, i, 0x41);
        const auto path = brownian_path(uniform(rng, 0.2, 2.0), 1.0 / 2048.0, rng);
        worst = std::max(worst, std::abs(local_time(path, uniform(rng, 0.01, 0.1)).total_mass() - 1.0));
    }
    return {"scenery", "local time normalization", worst <= 1e-9, detail::fmt("max |dx sum L - 1| = %.2e", worst)};
}

inline Check check_limit_resolution(Context& ctx, std::size_t samples) {
    const double sigma = ctx.sigma(), S2 = ctx.sigma2_capital().value;
    const auto coarse = LimitGrid::for_sigma(sigma);
    const LimitGrid fine{coarse.dx / 2.0, coarse.dt / 2.0};
    const auto a = ks_limit_law(sigma, S2, coarse, samples, ctx.run().seed ^ 0x42, ctx.threads());
    const auto b = ks_limit_law(sigma, S2, fine, samples, ctx.run().seed ^ 0x43, ctx.threads());
    const double d = ks_distance(a, b);
    return {"scenery", "limit law invariant under grid refinement", d <= 0.03,
            detail::fmt("KS distance %.4f over %zu samples each (tol 0.03)", d, samples)};
}

inline Check check_rwrs_symmetry(Context& ctx, std::size_t samples) {
    const auto law = rwrs_law(SceneryConfig::matched(ctx.sigma(), std::max(ctx.sigma2_capital().value, 1e-3)), 4096,
                              samples, ctx.run().seed ^ 0x44, ctx.threads());
    const auto e = mean_and_stderr(law.values);
    return {"scenery", "RWRS law centred", std::abs(e.value) <= 3.0 * e.error,
            detail::fmt("mean %.2e +- %.2e", e.value, e.error)};
}

inline Check check_power_law_recovery() {
    std::vector<double> x, v1, v2;
    for (int i = 0; i < 8; ++i) {
        x.push_back(std::pow(2.0, 4 + i));
        v1.push_back(std::pow(x.back(), -0.5));
        v2.push_back(7.0 * std::pow(x.back(), 1.5));
    }
    const auto a = fit_power_law(x, v1), b = fit_power_law(x, v2);
    const double err = std::max({std::abs(a.exponent + 0.5), std::abs(b.exponent - 1.5), std::abs(b.constant() / 7.0 - 1.0)});
    return {"stats", "power-law fit recovers exact laws", err <= 1e-10, detail::fmt("max error %.2e", err)};
}

inline Check check_ks_distance_properties(std::uint64_t seed) {
    auto rng = make_stream(seed, 0, 0x50);
    EmpiricalLaw a, b;
    for (int i = 0; i < 500; ++i) a.values.push_back(standard_normal(rng));
    for (int i = 0; i < 700; ++i) b.values.push_back(0.3 + standard_normal(rng));
    const double ab = ks_distance(a, b), ba = ks_distance(b, a), aa = ks_distance(a, a);
    const bool ok = ab == ba && aa == 0.0 && ab >= 0.0 && ab <= 1.0;
    return {"stats", "KS distance symmetric, in [0,1]", ok, detail::fmt("d(a,b) = %.4f, d(b,a) = %.4f", ab, ba)};
}

inline Check check_lag_zero(Context& ctx) {
    const std::uint64_t lags[] = {0, 4};
    const std::size_t samples = 2000, per = 4;
    const auto cs = correlation_series(ctx.system(), ctx.phi(), lags, samples, 0x5E, per, ctx.threads());
    // Same draws as correlation_series: group g, base point then fibers.
    std::vector<double> sq;
    for (std::size_t g = 0; g < samples / per; ++g) {
        auto rng = make_stream(0x5E, g, 0xC0);
        const auto x = uniform_torus_point(rng);
        double acc = 0.0;
        for (std::size_t j = 0; j < per; ++j) {
            const double v = ctx.phi()(x, sample_haar(ctx.system().group(), rng));
            acc += v * v;
        }
        sq.push_back(acc / static_cast<double>(per));
    }
    const double direct = mean_and_stderr(sq).value;
    const double diff = std::abs(direct - cs.values[0]);
    return {"stats", "lag-0 correlation equals mean phi^2", diff <= 1e-12, detail::fmt("difference %.2e", diff)};
}

inline Check check_seed_determinism(Context& ctx) {
    const std::uint64_t ns[] = {64, 128};
    const auto a = variance_scan(ctx.system(), ctx.phi(), ns, 64, 0xDE7, 1);
    const auto b = variance_scan(ctx.system(), ctx.phi(), ns, 64, 0xDE7, 4);
    const bool ok = a.variances == b.variances;
    return {"stats", "seed determinism across thread counts", ok, ok ? "bit-identical" : "outputs differ"};
}

// ---------------------------------------------------------------------------

inline std::vector<Check> geometry_checks(Context& ctx) {
    const auto& g = ctx.system().group();
    const auto seed = ctx.run().seed;
    return {check_reduction_idempotent(g, seed), check_observable_invariance(g, ctx.phi().fiber, seed),
            check_flow_group_law(seed), check_haar_acceptance(g, seed)};
}

inline std::vector<Check> run_selftest(Context& ctx) {
    auto out = geometry_checks(ctx);
    const auto& sys = ctx.system();
    const auto seed = ctx.run().seed;
    out.push_back(check_rho_decay(ctx));
    out.push_back(check_automorphism_inverse(sys.map(), seed));
    out.push_back(check_ergodic_cocycle(sys.map(), sys.roof(), seed));
    out.push_back(check_fourier_orthogonality(sys.map(), sys.roof(), seed, 20000));
    out.push_back(check_homoclinic_tail(sys.map(), sys.roof(), static_cast<int>(ctx.run().homoclinic_terms)));
    out.push_back(check_iterate_cocycle(sys, seed));
    out.push_back(check_birkhoff_naive(sys, ctx.phi(), seed));
    out.push_back(check_occupation_mass(sys, seed));
    out.push_back(check_local_time_normalization(seed));
    out.push_back(check_limit_resolution(ctx, 10000));
    out.push_back(check_rwrs_symmetry(ctx, 10000));
    out.push_back(check_power_law_recovery());
    out.push_back(check_ks_distance_properties(seed));
    out.push_back(check_lag_zero(ctx));
    out.push_back(check_seed_determinism(ctx));
    return out;
}

}  // namespace qhskew
