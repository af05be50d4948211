#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace qhskew {

/// Number of worker threads used when a caller passes 0.
inline unsigned default_threads() noexcept {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1u : hc;
}

/// Runs fn(i) for i in [0, count) over contiguous index blocks.
///
/// fn must only write to per-index storage; results are then reduced by the
/// caller in index order, which keeps every estimator bit-stable for a given
/// seed independently of the thread count.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = default_threads();
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    const std::size_t block = (count + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::size_t lo = w * block;
        const std::size_t hi = std::min(count, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

/// Pairwise (cascade) summation in fixed order.
inline double pairwise_sum(std::span<const double> v) noexcept {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

/// Sample mean and standard error of the mean.
inline Estimate mean_and_stderr(std::span<const double> v) {
    Estimate out;
    if (v.empty()) return out;
    const double n = static_cast<double>(v.size());
    out.value = pairwise_sum(v) / n;
    if (v.size() < 2) return out;
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - out.value) * (v[i] - out.value);
    const double var = pairwise_sum(dev) / (n - 1.0);
    out.error = std::sqrt(var / n);
    return out;
}

/// Unbiased sample variance with a delta-method standard error.
inline Estimate variance_and_stderr(std::span<const double> v) {
    Estimate out;
    if (v.size() < 2) return out;
    const double n = static_cast<double>(v.size());
    const double mean = pairwise_sum(v) / n;
    std::vector<double> d2(v.size()), d4(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - mean;
        d2[i] = d * d;
        d4[i] = d2[i] * d2[i];
    }
    const double m2 = pairwise_sum(d2) / n;
    const double m4 = pairwise_sum(d4) / n;
    out.value = m2 * n / (n - 1.0);
    out.error = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
    return out;
}

}  // namespace qhskew
