#pragma once

// Estimators and scaling fits: correlation series, variance scans, law
// distances, and the tail / multi-correlation / occupation-moment scans.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qhskew/empirical_law.hpp"
#include "qhskew/fit.hpp"
#include "qhskew/parallel.hpp"
#include "qhskew/rng.hpp"
#include "qhskew/scenery.hpp"
#include "qhskew/skew.hpp"

namespace qhskew {

// ---------------------------------------------------------------------------
// Power-law fits

struct ExponentFit {
    double exponent = 0.0;
    double log_constant = 0.0;
    double fit_error = 0.0;  // slope standard error
    double range_lo = 0.0;
    double range_hi = 0.0;
    std::size_t points = 0;

    double constant() const { return std::exp(log_constant); }
};

class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Least squares of log|v| on log x over x in [lo, hi], keeping only points
/// with |v| > 3 err (all points when errors are empty).
inline ExponentFit fit_power_law(std::span<const double> x, std::span<const double> values,
                                 std::span<const double> errors = {},
                                 double lo = 0.0, double hi = std::numeric_limits<double>::infinity()) {
    if (x.size() != values.size() || (!errors.empty() && errors.size() != x.size()))
        throw std::invalid_argument("fit_power_law: length mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < lo || x[i] > hi || !(x[i] > 0.0)) continue;
        const double v = std::abs(values[i]);
        const double e = errors.empty() ? 0.0 : errors[i];
        if (!(v > 3.0 * e) || !(v > 0.0)) continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(v));
    }
    if (lx.size() < 3)
        throw FitError("fit_power_law: only " + std::to_string(lx.size()) +
                       " points pass the significance filter, need 3");
    const auto ls = ordinary_least_squares(lx, ly);
    ExponentFit out;
    out.exponent = ls.slope;
    out.log_constant = ls.intercept;
    out.fit_error = ls.slope_error;
    out.range_lo = std::exp(*std::min_element(lx.begin(), lx.end()));
    out.range_hi = std::exp(*std::max_element(lx.begin(), lx.end()));
    out.points = lx.size();
    return out;
}

// ---------------------------------------------------------------------------
// Correlations <phi o T^k, phi>

struct CorrelationSeries {
    std::vector<std::uint64_t> lags;
    std::vector<double> values;
    std::vector<double> errors;
    std::size_t samples = 0;
    std::uint64_t seed = 0;

    std::vector<double> lags_as_double() const { return {lags.begin(), lags.end()}; }
};

/// Averages phi(T^k s) phi(s) over product-measure draws. Draws come in
/// groups sharing one base point and `fibers_per_base` Haar fibers; the
/// standard error is taken over groups, which are independent.
inline CorrelationSeries correlation_series(const SkewSystem& sys, const SkewObservable& phi,
                                            std::span<const std::uint64_t> lags, std::size_t samples,
                                            std::uint64_t seed, std::size_t fibers_per_base = 8,
                                            unsigned threads = 0) {
    if (samples < 2) throw std::invalid_argument("correlation_series: samples must be >= 2");
    if (lags.empty()) throw std::invalid_argument("correlation_series: no lags");
    for (std::size_t i = 1; i < lags.size(); ++i)
        if (lags[i] <= lags[i - 1]) throw std::invalid_argument("correlation_series: lags must increase strictly");
    fibers_per_base = std::clamp<std::size_t>(fibers_per_base, 1, samples / 2);
    const std::size_t groups = samples / fibers_per_base;
    const std::uint64_t k_max = lags.back();
    const std::size_t width = lags.size();
    std::vector<double> per(groups * width, 0.0);
    parallel_for(groups, threads, [&](std::size_t g) {
        auto rng = make_stream(seed, g, 0xC0);
        const TorusPoint x0 = uniform_torus_point(rng);
        // Flow times S_k and base terms at the requested lags only.
        std::vector<double> flow_time(width), base_term(width);
        TorusPoint x = x0;
        double acc = 0.0;
        for (std::uint64_t k = 0, li = 0; k <= k_max; ++k) {
            if (k == lags[li]) {
                flow_time[li] = acc;
                base_term[li] = phi.base(x);
                ++li;
            }
            acc += sys.roof()(x);
            x = sys.map().apply(x);
        }
        const double base0 = phi.base(x0);
        double* out = &per[g * width];
        for (std::size_t j = 0; j < fibers_per_base; ++j) {
            const Frame y = sample_haar(sys.group(), rng);
            FiberPath path(sys.group(), y);
            const double p0 = phi.fiber(y) + base0;
            for (std::size_t li = 0; li < width; ++li)
                out[li] += p0 * (phi.fiber(lags[li] == 0 ? y : path.at(flow_time[li])) + base_term[li]);
        }
        for (std::size_t li = 0; li < width; ++li) out[li] /= static_cast<double>(fibers_per_base);
    });
    CorrelationSeries cs;
    cs.lags.assign(lags.begin(), lags.end());
    cs.samples = groups * fibers_per_base;
    cs.seed = seed;
    std::vector<double> col(groups);
    for (std::size_t li = 0; li < width; ++li) {
        for (std::size_t g = 0; g < groups; ++g) col[g] = per[g * width + li];
        const auto e = mean_and_stderr(col);
        cs.values.push_back(e.value);
        cs.errors.push_back(e.error);
    }
    return cs;
}

/// k^{1/2} sqrt(2 pi) sigma(f) <phi o T^k, phi>, which tends to Sigma^2(phi).
inline Estimate correlation_constant(const CorrelationSeries& cs, std::size_t i, double sigma) {
    const double s = std::sqrt(static_cast<double>(cs.lags.at(i)) * 2.0 * std::numbers::pi) * sigma;
    return {s * cs.values.at(i), s * cs.errors.at(i)};
}

// ---------------------------------------------------------------------------
// Variance of Birkhoff sums

struct VarianceScan {
    std::vector<std::uint64_t> ns;
    std::vector<double> variances;
    std::vector<double> errors;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::optional<ExponentFit> fit;
    std::string fit_failure;
};

/// Sample variance of sum_{k<n} phi o T^k at each n (one trajectory per
/// sample, partial sums read at the checkpoints) and a power-law fit.
inline VarianceScan variance_scan(const SkewSystem& sys, const SkewObservable& phi,
                                  std::span<const std::uint64_t> ns, std::size_t samples, std::uint64_t seed,
                                  unsigned threads = 0) {
    if (ns.empty()) throw std::invalid_argument("variance_scan: empty n list");
    for (std::size_t i = 1; i < ns.size(); ++i)
        if (ns[i] <= ns[i - 1]) throw std::invalid_argument("variance_scan: n list must increase");
    if (samples < 2) throw std::invalid_argument("variance_scan: samples must be >= 2");
    const std::size_t width = ns.size();
    std::vector<double> sums(samples * width);
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i, 0x5A);
        const auto c = birkhoff_checkpoints(sys, phi, sample_state(sys, rng), ns);
        std::copy(c.begin(), c.end(), sums.begin() + static_cast<std::ptrdiff_t>(i * width));
    });
    VarianceScan out;
    out.ns.assign(ns.begin(), ns.end());
    out.samples = samples;
    out.seed = seed;
    std::vector<double> col(samples);
    for (std::size_t j = 0; j < width; ++j) {
        for (std::size_t i = 0; i < samples; ++i) col[i] = sums[i * width + j];
        const auto e = variance_and_stderr(col);
        out.variances.push_back(e.value);
        out.errors.push_back(e.error);
    }
    std::vector<double> x(out.ns.begin(), out.ns.end());
    try {
        out.fit = fit_power_law(x, out.variances, out.errors);
    } catch (const FitError& e) {
        out.fit_failure = e.what();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Law distances

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_distance(const EmpiricalLaw& a, const EmpiricalLaw& b) {
    a.validate();
    b.validate();
    std::vector<double> x = a.values, y = b.values;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

/// Asymptotic two-sample KS critical value at level alpha (0.05 -> c = 1.358).
inline double ks_critical_value(std::size_t na, std::size_t nb, double alpha = 0.05) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(static_cast<double>(na + nb) / (static_cast<double>(na) * static_cast<double>(nb)));
}

// ---------------------------------------------------------------------------
// Tail probabilities P(S_n f > n^{1-beta})

/// Plain frequency of {S_n f > threshold} over uniform starts.
inline Estimate tail_frequency(const ToralAutomorphism& m, const TrigObservable& f, std::uint64_t n,
                               double threshold, std::size_t samples, std::uint64_t seed, unsigned threads = 0) {
    if (samples < 1) throw std::invalid_argument("tail_probability: samples must be >= 1");
    std::vector<double> hit(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i, 0x7A);
        hit[i] = ergodic_sum(m, f, uniform_torus_point(rng), n) > threshold ? 1.0 : 0.0;
    });
    const double p = pairwise_sum(hit) / static_cast<double>(samples);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

inline Estimate tail_probability(const SkewSystem& sys, std::uint64_t n, double beta, std::size_t samples,
                                 std::uint64_t seed, unsigned threads = 0) {
    if (!(beta > 0.0 && beta < 0.5)) throw std::invalid_argument("tail_probability: beta must lie in (0, 1/2)");
    const double threshold = std::pow(static_cast<double>(n), 1.0 - beta);
    return tail_frequency(sys.map(), sys.roof(), n, threshold, samples, seed, threads);
}

struct ClonedTailOptions {
    std::size_t population = 2048;
    std::size_t replicas = 16;
    double jitter = 1e-9;  // uniform noise added to each coordinate per step
    double tilt = 0.0;     // 0: threshold / (n sigma^2)
    double sigma2 = 0.0;   // 0: Fourier value of f
};

/// Independent replica estimates of P(S_n f > threshold) by population
/// dynamics with exponential tilting exp(tilt * S_n f). Each particle follows
/// A plus a tiny Lebesgue-preserving jitter so that resampled copies split;
/// particles are resampled (systematic) after every step and carry their own
/// S_k f, and the replica estimate is
///   prod_k mean(w_k) * mean_i exp(-tilt S_i) 1{S_i > threshold},
/// which is unbiased for the jittered chain.
inline std::vector<double> cloned_tail_replicas(const ToralAutomorphism& m, const TrigObservable& f,
                                                std::uint64_t n, double threshold, ClonedTailOptions opt,
                                                std::uint64_t seed, unsigned threads = 0) {
    if (opt.population < 2 || opt.replicas < 1) throw std::invalid_argument("cloned tail: population/replicas too small");
    if (opt.sigma2 <= 0.0) opt.sigma2 = fourier_sigma2(m, f);
    if (opt.tilt <= 0.0) opt.tilt = threshold / (static_cast<double>(n) * opt.sigma2);
    std::vector<double> est(opt.replicas);
    parallel_for(opt.replicas, threads, [&](std::size_t r) {
        auto rng = make_stream(seed, r, 0xC10E);
        const std::size_t M = opt.population;
        std::vector<TorusPoint> x(M), xn(M);
        std::vector<double> s(M, 0.0), sn(M), w(M);
        for (auto& p : x) p = uniform_torus_point(rng);
        double log_z = 0.0;
        for (std::uint64_t k = 0; k < n; ++k) {
            double wsum = 0.0;
            for (std::size_t i = 0; i < M; ++i) {
                const double v = f(x[i]);
                s[i] += v;
                w[i] = std::exp(opt.tilt * v);
                wsum += w[i];
                const TorusPoint a = m.apply(x[i]);
                x[i] = TorusPoint::wrapped(a.x1 + opt.jitter * (2.0 * uniform01(rng) - 1.0),
                                           a.x2 + opt.jitter * (2.0 * uniform01(rng) - 1.0));
            }
            log_z += std::log(wsum / static_cast<double>(M));
            // Systematic resampling.
            const double step = wsum / static_cast<double>(M);
            double u = uniform01(rng) * step;
            double cum = w[0];
            std::size_t src = 0;
            for (std::size_t i = 0; i < M; ++i) {
                while (u > cum && src + 1 < M) cum += w[++src];
                xn[i] = x[src];
                sn[i] = s[src];
                u += step;
            }
            std::swap(x, xn);
            std::swap(s, sn);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < M; ++i)
            if (s[i] > threshold) acc += std::exp(-opt.tilt * s[i]);
        est[r] = std::exp(log_z) * acc / static_cast<double>(M);
    });
    return est;
}

struct TailScan {
    double beta = 0.0;
    std::vector<std::uint64_t> ns;
    std::vector<double> probability;
    std::vector<double> errors;
    std::vector<std::vector<double>> replicas;
    LinearFit fit;                // log p against n^{1 - 2 beta}
    double slope_upper = 0.0;     // upper bootstrap quantile of the slope
    double slope_lower = 0.0;
    std::size_t bootstrap = 0;
    double confidence = 0.0;
};

/// Cloned tail estimates over n and the slope of log P against n^{1-2beta},
/// with a percentile bootstrap over replicas.
inline TailScan tail_scan(const SkewSystem& sys, std::span<const std::uint64_t> ns, double beta,
                          ClonedTailOptions opt, std::uint64_t seed, std::size_t bootstrap = 2000,
                          double confidence = 0.99, unsigned threads = 0) {
    if (!(beta > 0.0 && beta < 0.5)) throw std::invalid_argument("tail_scan: beta must lie in (0, 1/2)");
    if (ns.size() < 2) throw std::invalid_argument("tail_scan: need at least 2 values of n");
    TailScan out;
    out.beta = beta;
    out.ns.assign(ns.begin(), ns.end());
    out.bootstrap = bootstrap;
    out.confidence = confidence;
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < ns.size(); ++j) {
        const double nd = static_cast<double>(ns[j]);
        auto rep = cloned_tail_replicas(sys.map(), sys.roof(), ns[j], std::pow(nd, 1.0 - beta), opt,
                                        seed + 0x9E37 * (j + 1), threads);
        const auto e = mean_and_stderr(rep);
        out.probability.push_back(e.value);
        out.errors.push_back(e.error);
        out.replicas.push_back(std::move(rep));
        xs.push_back(std::pow(nd, 1.0 - 2.0 * beta));
        ys.push_back(std::log(e.value));
    }
    out.fit = ordinary_least_squares(xs, ys);
    std::vector<double> slopes;
    slopes.reserve(bootstrap);
    auto rng = make_stream(seed, 0, 0xB007);
    std::vector<double> yb(ns.size());
    for (std::size_t b = 0; b < bootstrap; ++b) {
        for (std::size_t j = 0; j < ns.size(); ++j) {
            const auto& rep = out.replicas[j];
            double m = 0.0;
            for (std::size_t r = 0; r < rep.size(); ++r)
                m += rep[std::min(rep.size() - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(rep.size())))];
            yb[j] = std::log(m / static_cast<double>(rep.size()));
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double k = static_cast<double>(ns.size());
        for (std::size_t j = 0; j < ns.size(); ++j) {
            sx += xs[j];
            sy += yb[j];
            sxx += xs[j] * xs[j];
            sxy += xs[j] * yb[j];
        }
        const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
        if (std::isfinite(slope)) slopes.push_back(slope);
    }
    if (!slopes.empty()) {
        std::sort(slopes.begin(), slopes.end());
        const auto q = [&](double p) {
            const auto i = static_cast<std::size_t>(std::clamp(p, 0.0, 1.0) * static_cast<double>(slopes.size() - 1));
            return slopes[i];
        };
        out.slope_lower = q(0.5 * (1.0 - confidence));
        out.slope_upper = q(1.0 - 0.5 * (1.0 - confidence));
    } else {
        out.slope_lower = out.slope_upper = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Covariance of flow products

/// Cov(prod_i Phi_i(g_{t_i} y), prod_j Phi'_j(g_{s_j + T} y)) under Haar,
/// with phis[0..m) paired with t_list and phis[m..m+m') with s_list.
/// Every sample follows one flow trajectory through all the times in order.
inline Estimate multi_correlation(const FuchsianGroup& group, std::span<const BumpObservable* const> phis,
                                  std::span<const double> t_list, std::span<const double> s_list, double T,
                                  std::size_t samples, std::uint64_t seed, unsigned threads = 0) {
    if (phis.size() != t_list.size() + s_list.size())
        throw std::invalid_argument("multi_correlation: need one observable per time");
    if (t_list.empty() || s_list.empty()) throw std::invalid_argument("multi_correlation: empty time list");
    if (!std::is_sorted(t_list.begin(), t_list.end()) || !std::is_sorted(s_list.begin(), s_list.end()) ||
        t_list.back() > 0.0 || s_list.front() < 0.0)
        throw std::invalid_argument("multi_correlation: need t_1 <= ... <= t_m <= 0 <= s_1 <= ... <= s_m'");
    if (!(T > 0.0)) throw std::invalid_argument("multi_correlation: T must be > 0");
    if (samples < 2) throw std::invalid_argument("multi_correlation: samples must be >= 2");
    std::vector<double> times(t_list.begin(), t_list.end());
    for (double s : s_list) times.push_back(s + T);
    const std::size_t m = t_list.size();
    std::vector<double> p1(samples), p2(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i, 0x3C);
        Frame z = sample_haar(group, rng);
        double now = 0.0, a = 1.0, b = 1.0;
        for (std::size_t j = 0; j < times.size(); ++j) {
            z = flow_reduced(group, z, times[j] - now);
            now = times[j];
            (j < m ? a : b) *= (*phis[j])(z);
        }
        p1[i] = a;
        p2[i] = b;
    });
    const double n = static_cast<double>(samples);
    const double m1 = pairwise_sum(p1) / n, m2 = pairwise_sum(p2) / n;
    std::vector<double> c(samples);
    for (std::size_t i = 0; i < samples; ++i) c[i] = (p1[i] - m1) * (p2[i] - m2);
    const auto e = mean_and_stderr(c);
    return {e.value * n / (n - 1.0), e.error};
}

/// Pointwise covariances on a grid of T from shared trajectories, kept per
/// batch so that squared covariances can be estimated without noise bias.
struct CovarianceProfile {
    std::vector<double> T;
    std::vector<Estimate> cov;               // all samples
    std::vector<std::vector<double>> batch;  // batch[a][k]
    std::size_t samples = 0;
};

inline CovarianceProfile covariance_profile(const FuchsianGroup& group, std::span<const BumpObservable* const> phis,
                                            std::span<const double> t_list, std::span<const double> s_list,
                                            std::span<const double> T_grid, std::size_t samples, std::uint64_t seed,
                                            std::size_t batches = 64, unsigned threads = 0) {
    if (phis.size() != t_list.size() + s_list.size())
        throw std::invalid_argument("covariance_profile: need one observable per time");
    if (t_list.empty() || s_list.empty() || T_grid.empty()) throw std::invalid_argument("covariance_profile: empty list");
    if (!std::is_sorted(t_list.begin(), t_list.end()) || !std::is_sorted(s_list.begin(), s_list.end()) ||
        t_list.back() > 0.0 || s_list.front() < 0.0)
        throw std::invalid_argument("covariance_profile: need t_1 <= ... <= t_m <= 0 <= s_1 <= ... <= s_m'");
    for (double T : T_grid)
        if (!(T > 0.0)) throw std::invalid_argument("covariance_profile: T must be > 0");
    if (batches < 2 || samples < 2 * batches) throw std::invalid_argument("covariance_profile: too few samples");
    const std::size_t m = t_list.size(), K = T_grid.size();
    // Every evaluation (time, observable, slot): slot K is the left product.
    struct Eval {
        double time;
        std::size_t phi;
        std::size_t slot;
    };
    std::vector<Eval> evals;
    for (std::size_t i = 0; i < m; ++i) evals.push_back({t_list[i], i, K});
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t j = 0; j < s_list.size(); ++j) evals.push_back({s_list[j] + T_grid[k], m + j, k});
    std::stable_sort(evals.begin(), evals.end(), [](const Eval& a, const Eval& b) { return a.time < b.time; });
    // Per batch: sum P1, then sum P2[k], sum P1 P2[k].
    std::vector<std::vector<double>> acc(batches, std::vector<double>(1 + 2 * K, 0.0));
    parallel_for(batches, threads, [&](std::size_t a) {
        auto& s = acc[a];
        std::vector<double> prod(K + 1);
        const std::size_t lo = a * samples / batches, hi = (a + 1) * samples / batches;
        for (std::size_t i = lo; i < hi; ++i) {
            auto rng = make_stream(seed, i, 0x3C);
            Frame z = sample_haar(group, rng);
            std::fill(prod.begin(), prod.end(), 1.0);
            double now = 0.0;
            for (const auto& e : evals) {
                if (e.time != now) {
                    z = flow_reduced(group, z, e.time - now);
                    now = e.time;
                }
                prod[e.slot] *= (*phis[e.phi])(z);
            }
            s[0] += prod[K];
            for (std::size_t k = 0; k < K; ++k) {
                s[1 + k] += prod[k];
                s[1 + K + k] += prod[K] * prod[k];
            }
        }
    });
    CovarianceProfile out;
    out.T.assign(T_grid.begin(), T_grid.end());
    out.samples = samples;
    std::vector<double> total(1 + 2 * K, 0.0);
    for (std::size_t a = 0; a < batches; ++a) {
        const double n = static_cast<double>((a + 1) * samples / batches - a * samples / batches);
        const auto& s = acc[a];
        std::vector<double> c(K);
        for (std::size_t k = 0; k < K; ++k) c[k] = (s[1 + K + k] - s[0] * s[1 + k] / n) / (n - 1.0);
        out.batch.push_back(std::move(c));
        for (std::size_t j = 0; j < total.size(); ++j) total[j] += s[j];
    }
    const double n = static_cast<double>(samples), b = static_cast<double>(batches);
    for (std::size_t k = 0; k < K; ++k) {
        const double c = (total[1 + K + k] - total[0] * total[1 + k] / n) / (n - 1.0);
        double m2 = 0.0, mean = 0.0;
        for (const auto& row : out.batch) mean += row[k];
        mean /= b;
        for (const auto& row : out.batch) m2 += (row[k] - mean) * (row[k] - mean);
        out.cov.push_back({c, std::sqrt(m2 / (b - 1.0) / b)});
    }
    return out;
}

/// Root-mean-square covariance over |T - center| <= half_width. The mean
/// square uses products of covariances from distinct batches, which are
/// unbiased for cov^2; errors come from a jackknife over batches.
struct EnvelopePoint {
    double center = 0.0;
    double mean_square = 0.0;
    double mean_square_error = 0.0;
};

inline EnvelopePoint covariance_envelope(const CovarianceProfile& p, double center, double half_width) {
    const std::size_t B = p.batch.size();
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < p.T.size(); ++k)
        if (std::abs(p.T[k] - center) <= half_width + 1e-12) idx.push_back(k);
    if (idx.empty() || B < 3) throw std::invalid_argument("covariance_envelope: empty window");
    std::vector<double> sum(idx.size(), 0.0), sumsq(idx.size(), 0.0);
    for (const auto& row : p.batch)
        for (std::size_t w = 0; w < idx.size(); ++w) {
            sum[w] += row[idx[w]];
            sumsq[w] += row[idx[w]] * row[idx[w]];
        }
    const auto ustat = [&](std::size_t leave_out) {
        const double nb = static_cast<double>(leave_out < B ? B - 1 : B);
        double e = 0.0;
        for (std::size_t w = 0; w < idx.size(); ++w) {
            double s = sum[w], q = sumsq[w];
            if (leave_out < B) {
                const double v = p.batch[leave_out][idx[w]];
                s -= v;
                q -= v * v;
            }
            e += (s * s - q) / (nb * (nb - 1.0));
        }
        return e / static_cast<double>(idx.size());
    };
    EnvelopePoint out;
    out.center = center;
    out.mean_square = ustat(B);
    double jm = 0.0;
    std::vector<double> jk(B);
    for (std::size_t a = 0; a < B; ++a) jm += (jk[a] = ustat(a));
    jm /= static_cast<double>(B);
    double v = 0.0;
    for (double x : jk) v += (x - jm) * (x - jm);
    out.mean_square_error = std::sqrt(v * static_cast<double>(B - 1) / static_cast<double>(B));
    return out;
}

struct CovarianceDecay {
    std::vector<EnvelopePoint> points;
    std::optional<LinearFit> fit;  // log rms covariance against T, weighted
    std::string fit_failure;
};

/// Weighted fit of (1/2) log(mean square cov) against the window centres,
/// over the windows whose mean square exceeds 2 jackknife errors.
inline CovarianceDecay envelope_decay(const CovarianceProfile& p, std::span<const double> centers,
                                      double half_width) {
    CovarianceDecay out;
    std::vector<double> x, y, s;
    for (double c : centers) {
        const auto e = covariance_envelope(p, c, half_width);
        out.points.push_back(e);
        if (!(e.mean_square > 2.0 * e.mean_square_error)) continue;
        x.push_back(c);
        y.push_back(0.5 * std::log(e.mean_square));
        s.push_back(0.5 * e.mean_square_error / e.mean_square);
    }
    if (x.size() < 2) {
        out.fit_failure = "fewer than 2 windows have a covariance distinguishable from zero";
        return out;
    }
    out.fit = weighted_least_squares(x, y, s);
    return out;
}

// ---------------------------------------------------------------------------
// Occupation moments of the roof's ergodic sums

struct MomentRow {
    std::uint64_t n = 0;
    std::uint64_t pieces = 0;  // [n^epsilon]
    Estimate first, second, third;  // E N(n,I)^j, I = [0,1)
    Estimate cross_ij;              // [n^e] E[N(n,I) N(n,J)]
    Estimate cross_jk;              // [n^e]^2 E[N(n,J) N(n,K)]
};

struct MomentReport {
    double epsilon = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    std::vector<MomentRow> rows;
    std::optional<ExponentFit> first_fit, second_fit, third_fit;
    std::string fit_failure;
};

/// Moments of N(n, I) for I = [0, 1) and sub-intervals J, K of length
/// 1/[n^eps] drawn uniformly (independently) among the [n^eps] pieces of I.
inline MomentReport occupation_moments(const SkewSystem& sys, std::span<const std::uint64_t> ns, double epsilon,
                                       std::size_t samples, std::uint64_t seed, unsigned threads = 0) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("occupation_moments: epsilon must lie in (0, 1/2)");
    if (ns.empty() || ns.front() < 16) throw std::invalid_argument("occupation_moments: n must be >= 16");
    if (!std::is_sorted(ns.begin(), ns.end())) throw std::invalid_argument("occupation_moments: n list must increase");
    if (samples < 2) throw std::invalid_argument("occupation_moments: samples must be >= 2");
    const std::size_t width = ns.size();
    // per sample and n: N_I, N_I N_J, N_J N_K
    std::vector<double> ni(samples * width), nij(samples * width), njk(samples * width);
    std::vector<std::uint64_t> pieces(width);
    for (std::size_t j = 0; j < width; ++j)
        pieces[j] = static_cast<std::uint64_t>(std::floor(std::pow(static_cast<double>(ns[j]), epsilon)));
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i, 0x0C);
        const auto sums = roof_sums(sys, uniform_torus_point(rng), ns.back());
        for (std::size_t j = 0; j < width; ++j) {
            const double q = static_cast<double>(pieces[j]);
            const auto pj = static_cast<std::uint64_t>(uniform01(rng) * q);
            const auto pk = static_cast<std::uint64_t>(uniform01(rng) * q);
            double cI = 0, cJ = 0, cK = 0;
            for (std::uint64_t k = 0; k < ns[j]; ++k) {
                const double v = sums[k];
                if (v < 0.0 || v >= 1.0) continue;
                cI += 1;
                const auto piece = std::min(pieces[j] - 1, static_cast<std::uint64_t>(v * q));
                if (piece == pj) cJ += 1;
                if (piece == pk) cK += 1;
            }
            ni[i * width + j] = cI;
            nij[i * width + j] = q * cI * cJ;
            njk[i * width + j] = q * q * cJ * cK;
        }
    });
    MomentReport out;
    out.epsilon = epsilon;
    out.samples = samples;
    out.seed = seed;
    std::vector<double> c1(samples), c2(samples), c3(samples), cij(samples), cjk(samples);
    for (std::size_t j = 0; j < width; ++j) {
        for (std::size_t i = 0; i < samples; ++i) {
            const double v = ni[i * width + j];
            c1[i] = v;
            c2[i] = v * v;
            c3[i] = v * v * v;
            cij[i] = nij[i * width + j];
            cjk[i] = njk[i * width + j];
        }
        out.rows.push_back({ns[j], pieces[j], mean_and_stderr(c1), mean_and_stderr(c2), mean_and_stderr(c3),
                            mean_and_stderr(cij), mean_and_stderr(cjk)});
    }
    std::vector<double> x(ns.begin(), ns.end()), v1, e1, v2, e2, v3, e3;
    for (const auto& r : out.rows) {
        v1.push_back(r.first.value);
        e1.push_back(r.first.error);
        v2.push_back(r.second.value);
        e2.push_back(r.second.error);
        v3.push_back(r.third.value);
        e3.push_back(r.third.error);
    }
    try {
        out.first_fit = fit_power_law(x, v1, e1);
        out.second_fit = fit_power_law(x, v2, e2);
        out.third_fit = fit_power_law(x, v3, e3);
    } catch (const FitError& e) {
        out.fit_failure = e.what();
    }
    return out;
}

}  // namespace qhskew
