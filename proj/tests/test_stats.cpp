#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qhskew/fiber_stats.hpp"
#include "qhskew/stats.hpp"

using namespace qhskew;

namespace {

const SkewSystem& sys() {
    static const SkewSystem s = SkewSystem::standard();
    return s;
}

const SkewObservable& phi() {
    static const SkewObservable p{BumpObservable::centered(sys().group(), {}), {}};
    return p;
}

double brute_ks(const std::vector<double>& a, const std::vector<double>& b) {
    const auto cdf = [](const std::vector<double>& v, double x) {
        double c = 0.0;
        for (double u : v) c += u <= x ? 1.0 : 0.0;
        return c / static_cast<double>(v.size());
    };
    double d = 0.0;
    for (const auto* v : {&a, &b})
        for (double x : *v) d = std::max(d, std::abs(cdf(a, x) - cdf(b, x)));
    return d;
}

}  // namespace

TEST(PowerLaw, RecoversExactLaws) {
    std::vector<double> x, y1, y2;
    for (int i = 0; i < 6; ++i) {
        x.push_back(16.0 * std::pow(2.0, i));
        y1.push_back(3.0 * std::pow(x.back(), -0.5));
        y2.push_back(-0.2 * std::pow(x.back(), 1.5));  // sign is ignored
    }
    const auto a = fit_power_law(x, y1);
    EXPECT_NEAR(a.exponent, -0.5, 1e-12);
    EXPECT_NEAR(a.constant(), 3.0, 1e-11);
    EXPECT_NEAR(a.fit_error, 0.0, 1e-10);
    const auto b = fit_power_law(x, y2);
    EXPECT_NEAR(b.exponent, 1.5, 1e-12);
    EXPECT_NEAR(b.constant(), 0.2, 1e-12);
    EXPECT_EQ(b.points, 6u);
}

TEST(PowerLaw, RangeAndSignificanceFilters) {
    std::vector<double> x{1, 2, 4, 8, 16, 32}, y, e;
    for (double v : x) y.push_back(std::pow(v, -1.0));
    e = {0, 0, 0, 0, 1.0, 1.0};  // last two insignificant
    const auto f = fit_power_law(x, y, e);
    EXPECT_EQ(f.points, 4u);
    EXPECT_DOUBLE_EQ(f.range_hi, 8.0);
    const auto g = fit_power_law(x, y, {}, 2.0, 16.0);
    EXPECT_EQ(g.points, 4u);
    EXPECT_DOUBLE_EQ(g.range_lo, 2.0);
    EXPECT_THROW(fit_power_law(x, y, {}, 10.0, 40.0), FitError);
    EXPECT_THROW(fit_power_law(x, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(PowerLaw, NoisySlopeWithinErrors) {
    std::vector<double> x, y;
    auto rng = make_stream(61, 0);
    for (int i = 0; i < 12; ++i) {
        x.push_back(std::pow(2.0, 4 + 0.5 * i));
        y.push_back(std::pow(x.back(), 0.75) * std::exp(0.05 * standard_normal(rng)));
    }
    const auto f = fit_power_law(x, y);
    EXPECT_NEAR(f.exponent, 0.75, 4.0 * f.fit_error);
    EXPECT_GT(f.fit_error, 0.0);
}

TEST(Ks, MatchesBruteForce) {
    for (std::size_t t = 0; t < 5; ++t) {
        auto rng = make_stream(62, t);
        EmpiricalLaw a, b;
        for (int i = 0; i < 150; ++i) a.values.push_back(std::round(4.0 * standard_normal(rng)) / 4.0);  // ties
        for (int i = 0; i < 90; ++i) b.values.push_back(0.3 + std::round(4.0 * standard_normal(rng)) / 4.0);
        EXPECT_NEAR(ks_distance(a, b), brute_ks(a.values, b.values), 1e-15);
        EXPECT_EQ(ks_distance(a, b), ks_distance(b, a));
    }
    EmpiricalLaw a{{1.0, 2.0}, 0, 0.75, 0}, b{{3.0, 4.0}, 0, 0.75, 0};
    EXPECT_EQ(ks_distance(a, b), 1.0);
    EXPECT_THROW(ks_distance(a, EmpiricalLaw{}), std::invalid_argument);
}

TEST(Ks, CriticalValue) {
    // c(0.05) = sqrt(-ln(0.025) / 2) = 1.3581.
    EXPECT_NEAR(ks_critical_value(100, 100), 1.3581015 * std::sqrt(0.02), 1e-6);
}

TEST(Correlation, LagsMatchIterateOracle) {
    const std::uint64_t lags[] = {0, 3, 9};
    const std::size_t samples = 400, per = 4;
    const auto cs = correlation_series(sys(), phi(), lags, samples, 63, per, 1);
    ASSERT_EQ(cs.values.size(), 3u);
    // Same draws: per group a base point, then `per` fibers.
    for (std::size_t li = 0; li < 3; ++li) {
        std::vector<double> g;
        for (std::size_t grp = 0; grp < samples / per; ++grp) {
            auto rng = make_stream(63, grp, 0xC0);
            const auto x = uniform_torus_point(rng);
            double acc = 0.0;
            for (std::size_t j = 0; j < per; ++j) {
                const SkewState s{x, sample_haar(sys().group(), rng)};
                acc += phi()(s) * phi()(iterate(sys(), s, lags[li]));
            }
            g.push_back(acc / per);
        }
        EXPECT_NEAR(cs.values[li], mean_and_stderr(g).value, 1e-8) << "lag " << lags[li];
    }
    EXPECT_THROW(correlation_series(sys(), phi(), std::vector<std::uint64_t>{4, 2}, 100, 1), std::invalid_argument);
}

TEST(Correlation, NormalizedConstant) {
    CorrelationSeries cs;
    cs.lags = {64};
    cs.values = {0.002};
    cs.errors = {0.0001};
    const auto c = correlation_constant(cs, 0, 0.5);
    EXPECT_NEAR(c.value, 8.0 * std::sqrt(2.0 * std::numbers::pi) * 0.5 * 0.002, 1e-15);
    EXPECT_NEAR(c.error, 8.0 * std::sqrt(2.0 * std::numbers::pi) * 0.5 * 0.0001, 1e-15);
}

TEST(VarianceScan, BaseOnlyGrowsLinearly) {
    // phi = cos(2 pi x2) has sigma^2 = 1/2, so Var S_n ~ n / 2.
    BumpParams none;
    none.amplitude = 0.0;
    const SkewObservable base_only{BumpObservable(sys().group(), none, 0.0), TrigObservable({{{0, 1}, 1.0, 0.0}})};
    const std::uint64_t ns[] = {64, 128, 256, 512};
    const auto vs = variance_scan(sys(), base_only, ns, 4000, 64);
    for (std::size_t j = 0; j < 4; ++j)
        EXPECT_NEAR(vs.variances[j] / static_cast<double>(ns[j]), 0.5, 4.0 * vs.errors[j] / ns[j] + 0.01);
    ASSERT_TRUE(vs.fit.has_value());
    EXPECT_NEAR(vs.fit->exponent, 1.0, 0.1);
}

TEST(Tail, FrequencyMatchesDirectCount) {
    const auto e = tail_frequency(sys().map(), sys().roof(), 64, 4.0, 2000, 65, 2);
    double hits = 0;
    for (std::size_t i = 0; i < 2000; ++i) {
        auto rng = make_stream(65, i, 0x7A);
        hits += ergodic_sum(sys().map(), sys().roof(), uniform_torus_point(rng), 64) > 4.0 ? 1 : 0;
    }
    EXPECT_EQ(e.value, hits / 2000);
    EXPECT_THROW(tail_probability(sys(), 64, 0.5, 10, 1), std::invalid_argument);
}

TEST(Tail, ClonedEstimatorAgreesWithPlainFrequency) {
    // beta = 0.45 at n = 256 is moderate enough for direct counting.
    const std::uint64_t n = 256;
    const double threshold = std::pow(256.0, 0.55);
    const auto plain = tail_frequency(sys().map(), sys().roof(), n, threshold, 200000, 66);
    ClonedTailOptions opt;
    opt.population = 1024;
    opt.replicas = 16;
    const auto reps = cloned_tail_replicas(sys().map(), sys().roof(), n, threshold, opt, 67);
    const auto cl = mean_and_stderr(reps);
    EXPECT_NEAR(cl.value, plain.value, 4.0 * std::hypot(cl.error, plain.error));
}

TEST(MultiCorrelation, PairReducesToAutocorrelation) {
    const BumpObservable& b = phi().fiber;
    const BumpObservable* phis[2] = {&b, &b};
    const double t[1] = {0.0}, s[1] = {0.0};
    const auto mc = multi_correlation(sys().group(), phis, t, s, 1.5, 100000, 68);
    const auto ac = fiber_autocorrelation(b, sys().group(), 1.5, 100000, 69);
    // Centred observable: the covariance is the autocorrelation.
    EXPECT_NEAR(mc.value, ac.value, 4.0 * std::hypot(mc.error, ac.error));
}

TEST(Envelope, SyntheticDecayRecovered) {
    // Batches carry cov(T) = e^{-T} cos(2 T) exactly: the mean square over a
    // window is the average of cov^2, and the fitted rate is -1.
    CovarianceProfile p;
    for (double T = 1.0; T <= 11.0 + 1e-9; T += 0.25) p.T.push_back(T);
    p.batch.assign(32, {});
    auto rng = make_stream(70, 0);
    for (auto& row : p.batch)
        for (double T : p.T) row.push_back(std::exp(-T) * std::cos(2.0 * T) * (1.0 + 1e-3 * standard_normal(rng)));
    const double centers[] = {3.0, 6.0, 9.0};
    for (double c : centers) {
        double ms = 0.0;
        int cnt = 0;
        for (double T : p.T)
            if (std::abs(T - c) <= 2.0 + 1e-12) {
                ms += std::exp(-2 * T) * std::pow(std::cos(2 * T), 2);
                ++cnt;
            }
        const auto e = covariance_envelope(p, c, 2.0);
        EXPECT_NEAR(e.mean_square / (ms / cnt), 1.0, 1e-2);
    }
    const auto dec = envelope_decay(p, centers, 2.0);
    ASSERT_TRUE(dec.fit.has_value());
    EXPECT_NEAR(dec.fit->slope, -1.0, 0.05);
}

TEST(Moments, FirstMomentFollowsLocalLimit) {
    // E N(n, [0,1)) = sum_{k<n} P(S_k in [0,1)) ~ 1 + sum_{k>=1} 1 / sqrt(2 pi sigma^2 k), sigma^2 = 1/2.
    const std::uint64_t ns[] = {256, 1024};
    const auto mr = occupation_moments(sys(), ns, 0.25, 3000, 71);
    for (const auto& row : mr.rows) {
        double llt = 1.0;
        for (std::uint64_t k = 1; k < row.n; ++k) llt += 1.0 / std::sqrt(std::numbers::pi * static_cast<double>(k));
        EXPECT_NEAR(row.first.value / llt, 1.0, 0.1) << "n = " << row.n;
        EXPECT_EQ(row.pieces, static_cast<std::uint64_t>(std::floor(std::pow(row.n, 0.25))));
        EXPECT_GE(row.second.value, row.first.value * row.first.value);
    }
}

TEST(Moments, BruteForceFirstMoment) {
    const std::uint64_t ns[] = {16, 100};
    const auto mr = occupation_moments(sys(), ns, 0.25, 50, 72);
    double n16 = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
        auto rng = make_stream(72, i, 0x0C);
        const auto x = uniform_torus_point(rng);
        for (std::uint64_t k = 0; k < 16; ++k) {
            const double s = ergodic_sum(sys().map(), sys().roof(), x, k);
            n16 += (s >= 0.0 && s < 1.0) ? 1.0 : 0.0;
        }
    }
    EXPECT_NEAR(mr.rows[0].first.value, n16 / 50, 1e-12);
}

TEST(Sigma2, RhoAtZeroIsSecondMoment) {
    const auto r = sigma2_capital(phi().fiber, sys().group(), 4.0, 0.5, 20000, 73);
    ASSERT_FALSE(r.rho.empty());
    const auto m2 = fiber_autocorrelation(phi().fiber, sys().group(), 0.0, 20000, 74);
    EXPECT_NEAR(r.rho[0], m2.value, 4.0 * (m2.error + r.rho_error[0]));
    EXPECT_GT(r.value, 0.0);
}
