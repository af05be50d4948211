#pragma once

// Flow autocorrelation rho(b) = int phi(g_b y) phi(y) dnu(y) and its integral
// Sigma^2 = int_R rho(b) db.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qhskew/fit.hpp"
#include "qhskew/fuchsian.hpp"
#include "qhskew/observable.hpp"
#include "qhskew/parallel.hpp"

namespace qhskew {

inline Estimate fiber_autocorrelation(const BumpObservable& phi, const FuchsianGroup& group, double b,
                                      std::size_t samples, std::uint64_t seed, unsigned threads = 0) {
    if (samples < 1) throw std::invalid_argument("fiber_autocorrelation: samples must be >= 1");
    std::vector<double> v(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i, 0xAC);
        const Frame y = sample_haar(group, rng);
        v[i] = phi(y) * phi(flow_reduced(group, y, b));
    });
    return mean_and_stderr(v);
}

struct Sigma2Result {
    double value = 0.0;
    double error = 0.0;       // statistical + tail
    double stat_error = 0.0;
    double tail_bound = 0.0;  // bound on |int_{|b|>b_max} rho|
    std::optional<LinearFit> decay;  // log|rho| against b
    bool tail_warning = false;
    std::string warning;
    std::vector<double> lags;  // b >= 0
    std::vector<double> rho;   // symmetrised estimate at each lag
    std::vector<double> rho_error;
};

namespace detail {
inline constexpr std::size_t kChunk = 256;
}

/// Symmetrised rho(b) on b = 0, step, ..., b_max from one forward and one
/// backward trajectory per Haar sample.
struct RhoScan {
    std::vector<double> lags, rho, rho_error;
    double integral = 0.0;        // trapezoid over [-b_max, b_max]
    double integral_error = 0.0;
};

inline RhoScan scan_autocorrelation(const BumpObservable& phi, const FuchsianGroup& group, double b_max,
                                    double step, std::size_t samples, std::uint64_t seed, unsigned threads = 0) {
    if (!(b_max > 0.0) || !(step > 0.0)) throw std::invalid_argument("autocorrelation scan: b_max and step must be > 0");
    if (samples < 2) throw std::invalid_argument("autocorrelation scan: need at least 2 samples");
    const auto steps = static_cast<std::size_t>(std::llround(b_max / step));
    if (steps < 1 || std::abs(static_cast<double>(steps) * step - b_max) > 1e-9 * b_max)
        throw std::invalid_argument("autocorrelation scan: b_max must be a multiple of step");
    const std::size_t width = steps + 1;
    // Per chunk: sum rho_j, sum rho_j^2 (for j = 0..steps), then sum I, sum I^2.
    const std::size_t chunks = (samples + detail::kChunk - 1) / detail::kChunk;
    std::vector<std::vector<double>> acc(chunks, std::vector<double>(2 * width + 2, 0.0));
    parallel_for(chunks, threads, [&](std::size_t c) {
        auto& a = acc[c];
        std::vector<double> fwd(width), bwd(width);
        const std::size_t lo = c * detail::kChunk;
        const std::size_t hi = std::min(samples, lo + detail::kChunk);
        for (std::size_t i = lo; i < hi; ++i) {
            auto rng = make_stream(seed, i, 0x5162);
            const Frame y = sample_haar(group, rng);
            const double p0 = phi(y);
            fwd[0] = bwd[0] = p0;
            Frame zf = y, zb = y;
            for (std::size_t j = 1; j < width; ++j) {
                zf = flow_reduced(group, zf, step);
                zb = flow_reduced(group, zb, -step);
                fwd[j] = phi(zf);
                bwd[j] = phi(zb);
            }
            double integral = 0.0;
            for (std::size_t j = 0; j < width; ++j) {
                const double r = 0.5 * p0 * (fwd[j] + bwd[j]);
                a[j] += r;
                a[width + j] += r * r;
                const double w = (j == 0) ? 1.0 : (j + 1 == width ? 1.0 : 2.0);
                integral += w * r;
            }
            integral *= step;
            a[2 * width] += integral;
            a[2 * width + 1] += integral * integral;
        }
    });
    std::vector<double> total(2 * width + 2, 0.0);
    for (const auto& a : acc)
        for (std::size_t j = 0; j < total.size(); ++j) total[j] += a[j];
    const double n = static_cast<double>(samples);
    RhoScan out;
    for (std::size_t j = 0; j < width; ++j) {
        const double m = total[j] / n;
        const double var = std::max(0.0, (total[width + j] / n - m * m) * n / (n - 1.0));
        out.lags.push_back(static_cast<double>(j) * step);
        out.rho.push_back(m);
        out.rho_error.push_back(std::sqrt(var / n));
    }
    const double im = total[2 * width] / n;
    const double iv = std::max(0.0, (total[2 * width + 1] / n - im * im) * n / (n - 1.0));
    out.integral = im;
    out.integral_error = std::sqrt(iv / n);
    return out;
}

/// Log-linear fit of |rho(b)| over lags in [b_lo, b_hi] passing |rho| > 3 stderr.
inline std::optional<LinearFit> fit_decay(const std::vector<double>& lags, const std::vector<double>& rho,
                                          const std::vector<double>& err, double b_lo, double b_hi) {
    std::vector<double> x, y;
    for (std::size_t j = 0; j < lags.size(); ++j) {
        if (lags[j] < b_lo - 1e-12 || lags[j] > b_hi + 1e-12) continue;
        if (!(std::abs(rho[j]) > 3.0 * err[j])) continue;
        x.push_back(lags[j]);
        y.push_back(std::log(std::abs(rho[j])));
    }
    if (x.size() < 3) return std::nullopt;
    return ordinary_least_squares(x, y);
}

/// Sigma^2 by trapezoid quadrature of rho over [-b_max, b_max] with an
/// exponential tail bound fitted on b in [2, 12].
inline Sigma2Result sigma2_capital(const BumpObservable& phi, const FuchsianGroup& group, double b_max = 30.0,
                                   double step = 0.25, std::size_t samples = 20000, std::uint64_t seed = 7,
                                   unsigned threads = 0) {
    Sigma2Result out;
    if (phi.is_zero()) {
        out.lags = {0.0};
        out.rho = {0.0};
        out.rho_error = {0.0};
        return out;
    }
    const auto scan = scan_autocorrelation(phi, group, b_max, step, samples, seed, threads);
    out.lags = scan.lags;
    out.rho = scan.rho;
    out.rho_error = scan.rho_error;
    out.value = scan.integral;
    out.stat_error = scan.integral_error;
    out.decay = fit_decay(scan.lags, scan.rho, scan.rho_error, 2.0, std::min(12.0, b_max));
    if (out.decay && out.decay->slope < 0.0) {
        const double rate = -out.decay->slope;
        out.tail_bound = 2.0 * std::exp(out.decay->intercept - rate * b_max) / rate;
    } else {
        out.tail_bound = std::numeric_limits<double>::infinity();
    }
    out.error = out.stat_error + (std::isfinite(out.tail_bound) ? out.tail_bound : 0.0);
    if (!(out.tail_bound <= 0.01 * std::abs(out.value))) {
        out.tail_warning = true;
        out.warning = "fitted tail beyond b_max exceeds 1% of Sigma^2; increase b_max";
    }
    return out;
}

}  // namespace qhskew
