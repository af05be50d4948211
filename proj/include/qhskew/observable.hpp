#pragma once

// Quotient observables on Gamma\PSL(2,R) built as finite Poincare series of
// a smooth compactly supported bump.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "qhskew/frame.hpp"
#include "qhskew/fuchsian.hpp"
#include "qhskew/parallel.hpp"
#include "qhskew/rng.hpp"

namespace qhskew {

/// Smooth bump on [-1, 1] with value 1 at the origin.
inline double bump_profile(double r) noexcept {
    const double r2 = r * r;
    if (r2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - r2));
}

/// Frame at hyperbolic distance `distance` from i in direction `direction`
/// (rotation parameter), with extra frame rotation `angle`.
inline Frame frame_at(double distance, double direction, double angle) noexcept {
    return normalized(rotation(direction) * diagonal(distance) * rotation(angle));
}

struct BumpParams {
    Frame center = frame_at(1.2, 0.3, 0.4);
    double plane_width = 1.0;
    double angle_width = 1.0;
    double amplitude = 1.0;
};

/// phi(y) = sum_gamma h(gamma y) - mean_offset with
/// h(m) = amplitude * bump(d(u.i, i)/plane_width) * bump(|theta(u)|/angle_width),
/// u = center^{-1} m and theta(u) the Iwasawa angle taken mod pi.
class BumpObservable {
  public:
    BumpObservable(const FuchsianGroup& group, const BumpParams& params, double mean_offset)
        : params_(params), mean_offset_(mean_offset) {
        if (!(params.plane_width > 0.0)) throw std::invalid_argument("bump: plane_width must be > 0");
        if (!(params.angle_width > 0.0) || params.angle_width > 0.5 * std::numbers::pi)
            throw std::invalid_argument("bump: angle_width must lie in (0, pi/2]");
        if (std::abs(params.center.det() - 1.0) > 1e-10)
            throw std::invalid_argument("bump: center frame must have det 1");
        const double center_dist = distance_to_center(params.center);
        const double reach = group.domain_radius() + params.plane_width;
        if (reach + center_dist + 1e-9 > group.cache_radius())
            throw std::invalid_argument("bump: group ball cache radius " + std::to_string(group.cache_radius()) +
                                        " is smaller than the required " + std::to_string(reach + center_dist));
        const Frame cinv = params.center.inverse();
        const double bound = 2.0 * std::cosh(reach + 1e-9);
        for (const auto& g : group.ball()) {
            const Frame p = normalized(cinv * g);
            if (p.norm2() < bound) translates_.push_back(p);
        }
        support_norm2_ = 2.0 * std::cosh(params.plane_width);
    }

    /// Bump with the offset set to the exact Haar mean of the Poincare series.
    static BumpObservable centered(const FuchsianGroup& group, const BumpParams& params) {
        return BumpObservable(group, params, exact_mean(params));
    }

    /// Integral of h over G divided by the quotient volume 4 pi * pi.
    static double exact_mean(const BumpParams& p) {
        using boost::math::quadrature::gauss_kronrod;
        const double pw = p.plane_width;
        const double radial = 2.0 * std::numbers::pi *
                              gauss_kronrod<double, 61>::integrate(
                                  [pw](double r) { return bump_profile(r / pw) * std::sinh(r); }, 0.0, pw, 8, 1e-14);
        const double angular =
            p.angle_width * gauss_kronrod<double, 61>::integrate([](double s) { return bump_profile(s); }, -1.0, 1.0,
                                                                   8, 1e-14);
        return p.amplitude * radial * angular / (FuchsianGroup::domain_area() * std::numbers::pi);
    }

    /// Poincare series value at a reduced frame, before subtracting the offset.
    double raw(const Frame& y) const noexcept {
        if (params_.amplitude == 0.0) return 0.0;
        double s = 0.0;
        for (const auto& p : translates_) {
            const double n2 = product_norm2(p, y);
            if (n2 >= support_norm2_) continue;
            const Frame u = p * y;
            double th = std::atan2(-u.c, u.d);
            if (th > 0.5 * std::numbers::pi) th -= std::numbers::pi;
            if (th <= -0.5 * std::numbers::pi) th += std::numbers::pi;
            const double ang = std::abs(th) / params_.angle_width;
            if (ang >= 1.0) continue;
            const double rho = std::acosh(std::max(1.0, 0.5 * n2));
            s += bump_profile(rho / params_.plane_width) * bump_profile(ang);
        }
        return params_.amplitude * s;
    }

    double operator()(const Frame& reduced) const noexcept { return raw(reduced) - mean_offset_; }

    const BumpParams& params() const noexcept { return params_; }
    double mean_offset() const noexcept { return mean_offset_; }
    std::size_t translate_count() const noexcept { return translates_.size(); }
    bool is_zero() const noexcept { return params_.amplitude == 0.0 && mean_offset_ == 0.0; }

    nlohmann::json to_json() const {
        const auto& c = params_.center;
        return {{"center", {c.a, c.b, c.c, c.d}},
                {"plane_width", params_.plane_width},
                {"angle_width", params_.angle_width},
                {"amplitude", params_.amplitude},
                {"mean_offset", mean_offset_}};
    }

  private:
    BumpParams params_;
    double mean_offset_ = 0.0;
    double support_norm2_ = 0.0;
    std::vector<Frame> translates_;
};

inline double evaluate_observable(const BumpObservable& phi, const ReducedFrame& y) noexcept {
    return phi(y.frame);
}

/// Monte Carlo Haar mean of the uncentred Poincare series.
inline Estimate calibrate_mean_offset(const FuchsianGroup& group, const BumpParams& params,
                                      std::size_t samples = 1000000, std::uint64_t seed = 0xCA11B4A7E,
                                      unsigned threads = 0) {
    const BumpObservable raw(group, params, 0.0);
    std::vector<double> v(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i, 0xCA1);
        v[i] = raw.raw(sample_haar(group, rng));
    });
    return mean_and_stderr(v);
}

/// Haar mean of phi (should vanish for a centred observable).
inline Estimate haar_mean(const FuchsianGroup& group, const BumpObservable& phi, std::size_t samples,
                          std::uint64_t seed, unsigned threads = 0) {
    std::vector<double> v(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        auto rng = make_stream(seed, i, 0x4E);
        v[i] = phi(sample_haar(group, rng));
    });
    return mean_and_stderr(v);
}

}  // namespace qhskew
