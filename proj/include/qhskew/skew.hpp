#pragma once

// The skew product T(x, y) = (A x, g_{f(x)} y) on T^2 x Gamma\PSL(2,R).

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "qhskew/empirical_law.hpp"
#include "qhskew/fuchsian.hpp"
#include "qhskew/observable.hpp"
#include "qhskew/parallel.hpp"
#include "qhskew/rng.hpp"
#include "qhskew/torus.hpp"

namespace qhskew {

/// Base point and reduced fiber frame.
struct SkewState {
    TorusPoint base;
    Frame fiber;
};

class SkewSystem {
  public:
    SkewSystem(ToralAutomorphism map, TrigObservable roof, std::shared_ptr<const FuchsianGroup> group)
        : map_(std::move(map)), roof_(std::move(roof)), group_(std::move(group)) {
        if (!group_) throw std::invalid_argument("skew system needs a lattice");
    }

    /// Cat map base, f = sin(2 pi x1), regular octagon fiber.
    static SkewSystem standard() {
        return {ToralAutomorphism::cat_map(), TrigObservable::sin_x1(),
                std::make_shared<const FuchsianGroup>(FuchsianGroup::regular_octagon())};
    }

    const ToralAutomorphism& map() const noexcept { return map_; }
    const TrigObservable& roof() const noexcept { return roof_; }
    const FuchsianGroup& group() const noexcept { return *group_; }
    std::shared_ptr<const FuchsianGroup> group_ptr() const noexcept { return group_; }

    /// One application of T in place; the roof is evaluated before the base moves.
    void advance(TorusPoint& x, Frame& y) const {
        const double t = roof_(x);
        x = map_.apply(x);
        y = flow_reduced(*group_, y, t);
    }

  private:
    ToralAutomorphism map_;
    TrigObservable roof_;
    std::shared_ptr<const FuchsianGroup> group_;
};

/// phi(x, y) = bump(y) + base(x); the base term is optional.
struct SkewObservable {
    BumpObservable fiber;
    TrigObservable base{};

    double operator()(TorusPoint x, const Frame& y) const noexcept { return fiber(y) + base(x); }
    double operator()(const SkewState& s) const noexcept { return (*this)(s.base, s.fiber); }

    bool fiber_only() const noexcept { return base.is_zero(); }
    bool is_zero() const noexcept { return fiber.is_zero() && base.is_zero(); }
};

inline SkewState step(const SkewSystem& sys, SkewState s) {
    sys.advance(s.base, s.fiber);
    return s;
}

/// T^n via the cocycle: one pass over the base orbit, then a single chunked
/// flow by S_n f.
inline SkewState iterate(const SkewSystem& sys, const SkewState& s, std::uint64_t n) {
    double total = 0.0;
    TorusPoint x = s.base;
    for (std::uint64_t k = 0; k < n; ++k) {
        total += sys.roof()(x);
        x = sys.map().apply(x);
    }
    return {x, flow_reduced(sys.group(), s.fiber, total)};
}

/// S_0, ..., S_{n-1} of the roof along the base orbit of x.
inline std::vector<double> roof_sums(const SkewSystem& sys, TorusPoint x, std::uint64_t n) {
    std::vector<double> s(n);
    double acc = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) {
        s[k] = acc;
        acc += sys.roof()(x);
        x = sys.map().apply(x);
    }
    return s;
}

/// The fiber orbit s -> g_s y as a function of flow time alone. Anchors g_p y
/// at integers p are built on demand by unit flows from y, and g_s y is read
/// off as g_{s - p}(g_p y) with p = floor(s).
///
/// Flowing step by step instead makes the point at flow time s depend on the
/// route to s: round-off from an excursion of length D comes back amplified by
/// about e^D, so revisits of the same flow time stop seeing the same fiber
/// point, and the long-range correlations of T are lost.
class FiberPath {
  public:
    FiberPath(const FuchsianGroup& group, const Frame& y) : group_(&group), fwd_{y} {}

    Frame anchor(std::int64_t p) {
        if (p >= 0) {
            while (static_cast<std::int64_t>(fwd_.size()) <= p)
                fwd_.push_back(flow_reduced(*group_, fwd_.back(), 1.0));
            return fwd_[static_cast<std::size_t>(p)];
        }
        const auto idx = static_cast<std::size_t>(-p - 1);
        while (bwd_.size() <= idx) bwd_.push_back(flow_reduced(*group_, bwd_.empty() ? fwd_[0] : bwd_.back(), -1.0));
        return bwd_[idx];
    }

    Frame at(double s) {
        const double p = std::floor(s);
        return flow_reduced(*group_, anchor(static_cast<std::int64_t>(p)), s - p);
    }

  private:
    const FuchsianGroup* group_;
    std::vector<Frame> fwd_;  // g_p y, p >= 0
    std::vector<Frame> bwd_;  // g_{-p-1} y
};

/// Partial Birkhoff sums at increasing checkpoints from one trajectory, with
/// the fiber read from a FiberPath.
inline std::vector<double> birkhoff_checkpoints(const SkewSystem& sys, const SkewObservable& phi, const SkewState& s,
                                                std::span<const std::uint64_t> checkpoints) {
    std::vector<double> out;
    out.reserve(checkpoints.size());
    const bool fiber = !phi.fiber.is_zero();
    FiberPath path(sys.group(), s.fiber);
    TorusPoint x = s.base;
    double flow_time = 0.0, acc = 0.0;
    std::uint64_t k = 0;
    for (std::uint64_t target : checkpoints) {
        if (target < k) throw std::invalid_argument("birkhoff_checkpoints: checkpoints must increase");
        for (; k < target; ++k) {
            acc += phi.base(x);
            if (fiber) acc += phi.fiber(k == 0 ? s.fiber : path.at(flow_time));
            flow_time += sys.roof()(x);
            x = sys.map().apply(x);
        }
        out.push_back(acc);
    }
    return out;
}

/// sum_{k<n} phi(T^k s) = sum_k phi(A^k x, g_{S_k f(x)} y), O(n) work.
inline double birkhoff_sum(const SkewSystem& sys, const SkewObservable& phi, const SkewState& s, std::uint64_t n) {
    const std::uint64_t cp[] = {n};
    return birkhoff_checkpoints(sys, phi, s, cp).front();
}

/// Draw from the product of Lebesgue on T^2 and Haar on the quotient.
inline SkewState sample_state(const SkewSystem& sys, CounterRng& rng) {
    SkewState s;
    s.base = uniform_torus_point(rng);
    s.fiber = sample_haar(sys.group(), rng);
    return s;
}

/// Law of n^{-exponent} sum_{k<n} phi o T^k under the product measure.
inline EmpiricalLaw sample_normalized_sums(const SkewSystem& sys, const SkewObservable& phi, std::uint64_t n,
                                           std::size_t samples, std::uint64_t seed, double exponent = 0.75,
                                           unsigned threads = 0) {
    if (!(exponent > 0.0 && exponent <= 1.0))
        throw std::invalid_argument("sample_normalized_sums: exponent must lie in (0, 1]");
    if (samples < 1) throw std::invalid_argument("sample_normalized_sums: samples must be >= 1");
    EmpiricalLaw law;
    law.n = n;
    law.exponent = exponent;
    law.seed = seed;
    law.values.resize(samples);
    const double scale = std::pow(static_cast<double>(n), -exponent);
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i, 0xB1);
        law.values[i] = scale * birkhoff_sum(sys, phi, sample_state(sys, rng), n);
    });
    return law;
}

}  // namespace qhskew
