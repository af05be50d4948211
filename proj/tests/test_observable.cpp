#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qhskew/observable.hpp"

using namespace qhskew;

namespace {

const FuchsianGroup& octagon() {
    static const FuchsianGroup g = FuchsianGroup::regular_octagon();
    return g;
}

double simpson(auto f, double a, double b, int n = 20000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

}  // namespace

TEST(BumpProfile, ShapeAndSupport) {
    EXPECT_DOUBLE_EQ(bump_profile(0.0), 1.0);
    EXPECT_NEAR(bump_profile(0.5), std::exp(-1.0 / 3.0), 1e-15);
    EXPECT_EQ(bump_profile(1.0), 0.0);
    EXPECT_EQ(bump_profile(-1.5), 0.0);
    EXPECT_EQ(bump_profile(0.3), bump_profile(-0.3));
}

TEST(Bump, ValidatesParameters) {
    BumpParams p;
    p.plane_width = 0.0;
    EXPECT_THROW(BumpObservable(octagon(), p, 0.0), std::invalid_argument);
    p = {};
    p.angle_width = 2.0;
    EXPECT_THROW(BumpObservable(octagon(), p, 0.0), std::invalid_argument);
    p = {};
    p.center = frame_at(20.0, 0.0, 0.0);  // beyond the cached group ball
    EXPECT_THROW(BumpObservable(octagon(), p, 0.0), std::invalid_argument);
}

TEST(Bump, ExactMeanMatchesSimpsonQuadrature) {
    for (double pw : {0.5, 1.0, 1.3}) {
        BumpParams p;
        p.plane_width = pw;
        p.angle_width = 0.7;
        p.amplitude = 2.0;
        const double radial = simpson([&](double r) { return 2.0 * std::numbers::pi * std::sinh(r) * bump_profile(r / pw); },
                                      0.0, pw);
        const double angular = simpson([&](double t) { return bump_profile(t / 0.7); }, -0.7, 0.7);
        const double oracle = 2.0 * radial * angular / (4.0 * std::numbers::pi * std::numbers::pi);
        EXPECT_NEAR(BumpObservable::exact_mean(p), oracle, 1e-10 * oracle) << "pw = " << pw;
    }
}

TEST(Bump, ExactMeanMatchesMonteCarlo) {
    const BumpParams p;
    const auto mc = calibrate_mean_offset(octagon(), p, 200000, 21);
    EXPECT_NEAR(BumpObservable::exact_mean(p), mc.value, 4.0 * mc.error);
}

TEST(Bump, CenteredHasZeroHaarMean) {
    const auto phi = BumpObservable::centered(octagon(), {});
    const auto e = haar_mean(octagon(), phi, 200000, 22);
    EXPECT_NEAR(e.value, 0.0, 4.0 * e.error);
}

TEST(Bump, GammaInvariance) {
    const auto& g = octagon();
    const auto phi = BumpObservable::centered(g, {});
    for (std::size_t i = 0; i < 1000; ++i) {
        auto rng = make_stream(23, i);
        const Frame y = sample_haar(g, rng);
        for (int k = 0; k < FuchsianGroup::kGenerators; ++k)
            EXPECT_NEAR(phi(g.reduce(g.generator(k) * y).frame), phi(y), 1e-9);
    }
}

TEST(Bump, PeaksAtItsCenter) {
    const BumpParams p;
    const BumpObservable phi(octagon(), p, 0.0);
    const Frame c = octagon().reduce(p.center).frame;
    EXPECT_GE(phi.raw(c), 1.0 - 1e-12);  // own term is bump(0)^2, the others are >= 0
}

TEST(Bump, LinearInAmplitude) {
    BumpParams p;
    const BumpObservable one(octagon(), p, 0.0);
    p.amplitude = -2.5;
    const BumpObservable scaled(octagon(), p, 0.0);
    for (std::size_t i = 0; i < 200; ++i) {
        auto rng = make_stream(24, i);
        const Frame y = sample_haar(octagon(), rng);
        EXPECT_NEAR(scaled.raw(y), -2.5 * one.raw(y), 1e-12);
    }
}

TEST(Bump, ZeroAmplitudeIsZero) {
    BumpParams p;
    p.amplitude = 0.0;
    const BumpObservable phi(octagon(), p, 0.0);
    EXPECT_TRUE(phi.is_zero());
    EXPECT_EQ(phi(Frame{}), 0.0);
}
