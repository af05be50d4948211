#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace qhskew {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: the n-th output is mix64(key + n * golden).
///
/// Streams are addressed by (seed, stream id, substream) so that every Monte
/// Carlo sample owns an independent, reproducible sequence regardless of how
/// samples are distributed over threads.
class CounterRng {
  public:
    using result_type = std::uint64_t;

    constexpr CounterRng() noexcept = default;
    constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * kGolden);
    }

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t counter() const noexcept { return counter_; }

  private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

constexpr CounterRng make_stream(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t substream = 0) noexcept {
    const std::uint64_t k =
        mix64(mix64(seed ^ 0x6A09E667F3BCC909ULL) + mix64(stream + 0x3C6EF372FE94F82BULL) +
              mix64(substream ^ 0xA54FF53A5F1D36F1ULL));
    return CounterRng(k);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(CounterRng& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(CounterRng& rng, double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal via Box-Muller, no cached state so draws are position-stable.
inline double standard_normal(CounterRng& rng) noexcept {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace qhskew
