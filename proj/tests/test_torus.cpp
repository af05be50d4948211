#include <cmath>
#include <numbers>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "qhskew/torus.hpp"

using namespace qhskew;

namespace {

const ToralAutomorphism kCat = ToralAutomorphism::cat_map();

TrigObservable sin_term(std::int64_t k1, std::int64_t k2) { return TrigObservable({{{k1, k2}, 0.0, 1.0}}); }

// Average of f*g over an N x N grid; exact for trigonometric polynomials
// whose frequency sums stay below N.
double grid_inner_product(const TrigObservable& f, const TrigObservable& g, int N = 64) {
    double s = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const TorusPoint p{(i + 0.5) / N, (j + 0.5) / N};
            s += f(p) * g(p);
        }
    return s / (N * N);
}

}  // namespace

TEST(Automorphism, RejectsNonHyperbolicOrSingular) {
    EXPECT_THROW(ToralAutomorphism(2, 0, 0, 1), std::invalid_argument);   // det 2
    EXPECT_THROW(ToralAutomorphism(1, 1, 0, 1), std::invalid_argument);   // parabolic
    EXPECT_THROW(ToralAutomorphism(0, -1, 1, 0), std::invalid_argument);  // elliptic
    EXPECT_NO_THROW(ToralAutomorphism(3, 1, 2, 1));
}

TEST(Automorphism, Eigenvalues) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    EXPECT_NEAR(kCat.lambda(), phi * phi, 1e-14);
    EXPECT_NEAR(kCat.contracting_eigenvalue(), 1.0 / (phi * phi), 1e-14);
    EXPECT_NEAR(kCat.unstable_slope(), phi - 1.0, 1e-14);
    EXPECT_NEAR(kCat.stable_slope(), -phi, 1e-14);
}

TEST(Automorphism, InverseRoundTrip) {
    const auto inv = kCat.inverse();
    for (std::size_t i = 0; i < 2000; ++i) {
        auto rng = make_stream(11, i);
        const auto p = uniform_torus_point(rng);
        const auto q = inv.apply(kCat.apply(p));
        EXPECT_LT(torus_norm(TorusPoint::wrapped(q.x1 - p.x1, q.x2 - p.x2)), 1e-12);
    }
}

TEST(Automorphism, ApplyWrapsIntoUnitSquare) {
    const auto q = kCat.apply({0.9, 0.8});
    EXPECT_NEAR(q.x1, 0.6, 1e-12);  // 2.6
    EXPECT_NEAR(q.x2, 0.7, 1e-12);  // 1.7
}

TEST(TrigObservable, RejectsConstantTerm) {
    EXPECT_THROW(TrigObservable({{{0, 0}, 1.0, 0.0}}), std::invalid_argument);
}

TEST(TrigObservable, ComposeMatchesPointwise) {
    const TrigObservable f({{{1, 0}, 0.3, 1.0}, {{1, -2}, -0.5, 0.0}});
    const auto g = f.compose(kCat);
    for (std::size_t i = 0; i < 100; ++i) {
        auto rng = make_stream(12, i);
        const auto p = uniform_torus_point(rng);
        EXPECT_NEAR(g(p), f(kCat.apply(p)), 1e-11);
    }
}

TEST(ErgodicSum, MatchesHandUnrolledOrbit) {
    // A = [[2,1],[1,1]], A^2 = [[5,3],[3,2]]: f(p) + f(Ap) + f(A^2 p) written out.
    const auto f = TrigObservable::sin_x1();
    for (std::size_t i = 0; i < 200; ++i) {
        auto rng = make_stream(13, i);
        const auto p = uniform_torus_point(rng);
        const double two_pi = 2.0 * std::numbers::pi;
        const double expected = std::sin(two_pi * p.x1) + std::sin(two_pi * (2 * p.x1 + p.x2)) +
                                std::sin(two_pi * (5 * p.x1 + 3 * p.x2));
        EXPECT_NEAR(ergodic_sum(kCat, f, p, 3), expected, 1e-12);
    }
    EXPECT_EQ(ergodic_sum(kCat, f, {0.3, 0.1}, 0), 0.0);
}

TEST(InnerProduct, MatchesGridQuadrature) {
    const TrigObservable f({{{1, 0}, 0.3, 1.0}, {{2, 1}, -0.7, 0.2}, {{0, 3}, 0.0, 0.5}});
    const TrigObservable g({{{2, 1}, 1.0, 1.0}, {{-1, 0}, 0.4, -0.6}, {{0, -3}, 0.0, 2.0}});
    EXPECT_NEAR(inner_product(f, g), grid_inner_product(f, g), 1e-12);
    EXPECT_NEAR(inner_product(f, f), grid_inner_product(f, f), 1e-12);
}

TEST(FourierSigma2, SinX1IsOneHalf) {
    // Frequencies (A^T)^k (1,0) never repeat, so only int f^2 = 1/2 survives.
    EXPECT_NEAR(fourier_sigma2(kCat, TrigObservable::sin_x1()), 0.5, 1e-15);
}

TEST(FourierSigma2, SumWithOwnImage) {
    // f = g + g o A with g = sin(2 pi x1) is 2g plus a coboundary: sigma^2 = 4 * 1/2.
    const TrigObservable f({{{1, 0}, 0.0, 1.0}, {{2, 1}, 0.0, 1.0}});
    EXPECT_NEAR(fourier_sigma2(kCat, f), 2.0, 1e-12);
}

TEST(FourierSigma2, CoboundaryVanishes) {
    const TrigObservable g({{{1, 0}, 0.0, 1.0}, {{0, 1}, 0.5, 0.0}});
    EXPECT_NEAR(fourier_sigma2(kCat, TrigObservable::coboundary(g, kCat)), 0.0, 1e-12);
}

TEST(GreenKubo, MonteCarloAgreesWithFourier) {
    const auto e = green_kubo_sigma2(kCat, TrigObservable::sin_x1(), 10, 40000, 14);
    EXPECT_NEAR(e.value, 0.5, 4.0 * e.error);
    const TrigObservable f({{{1, 0}, 0.0, 1.0}, {{2, 1}, 0.0, 1.0}});
    const auto e2 = green_kubo_sigma2(kCat, f, 10, 40000, 15);
    EXPECT_NEAR(e2.value, 2.0, 4.0 * e2.error);
}

TEST(GreenKubo, SeedDeterminismAcrossThreads) {
    const auto a = green_kubo_sigma2(kCat, TrigObservable::sin_x1(), 5, 3000, 16, 1);
    const auto b = green_kubo_sigma2(kCat, TrigObservable::sin_x1(), 5, 3000, 16, 3);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.error, b.error);
}

TEST(Homoclinic, PointsLieOnEigenlines) {
    const auto h = homoclinic_points(kCat);
    const double s = kCat.stable_slope(), u = kCat.unstable_slope();
    // x0: on the stable line through (1,0) and the unstable line through (1,1).
    EXPECT_NEAR((h.x0_tilde[1] - 0.0) - s * (h.x0_tilde[0] - 1.0), 0.0, 1e-14);
    EXPECT_NEAR((h.x0_tilde[1] - 1.0) - u * (h.x0_tilde[0] - 1.0), 0.0, 1e-14);
    EXPECT_NEAR((h.xm1_tilde[1] + 1.0) - s * (h.xm1_tilde[0] - 1.0), 0.0, 1e-14);
    EXPECT_NEAR((h.xm1_tilde[1] - 1.0) - u * (h.xm1_tilde[0] - 1.0), 0.0, 1e-14);
}

TEST(Homoclinic, SumMatchesFiftyDigitOrbit) {
    using big = boost::multiprecision::cpp_bin_float_50;
    const big pi = boost::math::constants::pi<big>();
    const big r5 = sqrt(big(5));
    const big s = -(1 + r5) / 2, u = (r5 - 1) / 2;
    // Stable line through (1, c) meets the unstable line through (1, 1):
    // c + s a = 1 + u a.
    const auto meet = [&](int c) {
        const big a = (big(1) - c) / (s - u);
        return std::array<big, 2>{1 + a, c + s * a};
    };
    const auto f = [&](const std::array<big, 2>& p) { return sin(2 * pi * (p[0] - floor(p[0]))); };
    const auto orbit_sum = [&](std::array<big, 2> x0, int K) {
        big acc = f(x0);
        auto p = x0;
        for (int k = 1; k <= K; ++k) {
            p = {2 * p[0] + p[1], p[0] + p[1]};
            acc += f(p);
        }
        p = x0;
        for (int k = 1; k <= K; ++k) {
            p = {p[0] - p[1], -p[0] + 2 * p[1]};
            acc += f(p);
        }
        return acc;
    };
    const int K = 40;
    const big oracle = orbit_sum(meet(0), K) - orbit_sum(meet(-1), K);
    const auto hs = homoclinic_sum(kCat, TrigObservable::sin_x1(), K);
    EXPECT_NEAR(hs.value, static_cast<double>(oracle), 1e-12);
    EXPECT_GT(std::abs(hs.value), 10.0 * hs.tail_bound);  // non-degenerate
}

TEST(Homoclinic, TailBoundHolds) {
    const auto f = TrigObservable::sin_x1();
    for (int K : {5, 10, 20}) {
        const auto a = homoclinic_sum(kCat, f, K);
        const auto b = homoclinic_sum(kCat, f, K + 25);
        EXPECT_LE(std::abs(a.value - b.value), a.tail_bound + 1e-15) << "K = " << K;
    }
    EXPECT_THROW(homoclinic_sum(kCat, f, 0), std::invalid_argument);
}
