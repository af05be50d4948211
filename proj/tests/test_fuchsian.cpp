#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "qhskew/fuchsian.hpp"
#include "qhskew/observable.hpp"

using namespace qhskew;

namespace {

const FuchsianGroup& octagon() {
    static const FuchsianGroup g = FuchsianGroup::regular_octagon();
    return g;
}

Frame random_frame(std::uint64_t seed, std::size_t i, double radius) {
    auto rng = make_stream(seed, i);
    return frame_at(uniform(rng, 0.0, radius), uniform(rng, 0.0, 2.0 * std::numbers::pi),
                    uniform(rng, 0.0, std::numbers::pi));
}

}  // namespace

TEST(Frame, IwasawaRoundTrip) {
    for (std::size_t i = 0; i < 200; ++i) {
        const Frame m = random_frame(1, i, 5.0);
        EXPECT_LT(frame_distance(from_iwasawa(to_iwasawa(m)), m), 1e-12);
    }
}

TEST(Frame, DistanceToCenterOfFrameAt) {
    EXPECT_NEAR(distance_to_center(frame_at(2.5, 0.7, 1.1)), 2.5, 1e-12);
    EXPECT_NEAR(hyperbolic_distance({0.0, 1.0}, {0.0, std::exp(1.5)}), 1.5, 1e-12);
}

TEST(Flow, GroupLaw) {
    for (std::size_t i = 0; i < 500; ++i) {
        auto rng = make_stream(2, i);
        const Frame y = random_frame(3, i, 3.0);
        const double s = uniform(rng, -50.0, 50.0), t = uniform(rng, -50.0, 50.0);
        EXPECT_LT(frame_distance(flow(flow(y, s), t), flow(y, s + t)), 1e-9);
    }
}

TEST(Flow, MovesBasePointAtUnitSpeed) {
    const Frame y = random_frame(4, 0, 1.0);
    EXPECT_NEAR(hyperbolic_distance(y.point(), flow(y, 3.25).point()), 3.25, 1e-10);
}

TEST(Flow, RejectsLongOrNonFiniteTimes) {
    EXPECT_THROW(flow(Frame{}, 100.5), std::out_of_range);
    EXPECT_THROW(flow(Frame{}, std::nan("")), std::out_of_range);
}

TEST(Octagon, GeneratorsAndInverses) {
    const auto& g = octagon();
    for (int k = 0; k < FuchsianGroup::kGenerators; ++k) {
        EXPECT_NEAR(g.generator(k).det(), 1.0, 1e-12);
        // Translation length of the Bolza surface side pairings: 2 arccosh(1 + sqrt 2).
        EXPECT_NEAR(std::abs(g.generator(k).a + g.generator(k).d), 2.0 + 2.0 * std::numbers::sqrt2, 1e-12);
        EXPECT_LT(frame_distance(g.generator(k) * g.generator((k + 4) % 8), Frame::identity()), 1e-12);
    }
}

TEST(Octagon, VertexCycleRelation) {
    const auto cyc = octagon().vertex_cycle();
    EXPECT_EQ(cyc.word.size(), 8u);
    EXPECT_LT(frame_distance(cyc.product, Frame::identity()), 1e-10);
}

TEST(Octagon, AreaAndRadii) {
    // Gauss-Bonnet for an octagon with angles pi/4: 6 pi - 8 pi/4.
    EXPECT_NEAR(FuchsianGroup::domain_area(), 6.0 * std::numbers::pi - 2.0 * std::numbers::pi, 1e-15);
    const double inr = std::acosh(1.0 + std::numbers::sqrt2);
    EXPECT_NEAR(octagon().inradius(), inr, 1e-12);
    // Vertex distance: cosh R = cot^2(pi/8) for the regular octagon with angle pi/4.
    const double cot = 1.0 / std::tan(std::numbers::pi / 8.0);
    EXPECT_NEAR(octagon().domain_radius(), std::acosh(cot * cot), 1e-9);
}

TEST(Reduction, LandsInDomainAndUndoes) {
    const auto& g = octagon();
    for (std::size_t i = 0; i < 500; ++i) {
        const Frame y = random_frame(5, i, 12.0);
        const auto r = g.reduce(y);
        EXPECT_TRUE(g.in_domain(r.frame));
        EXPECT_LT(frame_distance(g.unreduce(r.frame, r.word), y), 1e-8);
    }
}

TEST(Reduction, Idempotent) {
    const auto& g = octagon();
    for (std::size_t i = 0; i < 500; ++i) {
        const auto once = g.reduce(random_frame(6, i, 12.0));
        const auto twice = g.reduce(once.frame);
        EXPECT_TRUE(twice.word.empty());
        EXPECT_LT(frame_distance(once.frame, twice.frame), 1e-12);
    }
}

TEST(Reduction, GammaEquivalentInputsReduceToSamePoint) {
    const auto& g = octagon();
    for (std::size_t i = 0; i < 300; ++i) {
        const Frame y = g.reduce(random_frame(7, i, 1.0)).frame;
        ASSERT_TRUE(g.in_domain(y, -1e-6));  // strictly interior: the representative is unique
        for (int k = 0; k < FuchsianGroup::kGenerators; ++k)
            EXPECT_LT(frame_distance(g.reduce(g.generator(k) * y).frame, y), 1e-9);
    }
}

TEST(FlowReduced, AgreesWithReducedPlainFlow) {
    const auto& g = octagon();
    const BumpObservable probe = BumpObservable::centered(g, {});
    for (std::size_t i = 0; i < 200; ++i) {
        const Frame y = g.reduce(random_frame(8, i, 1.0)).frame;
        const double t = -8.0 + 16.0 * static_cast<double>(i) / 199.0;
        const auto a = g.reduce(flow(y, t)).frame;
        const auto b = flow_reduced(g, y, t);
        EXPECT_NEAR(probe(a), probe(b), 1e-7);
    }
}

TEST(Haar, SamplesInsideDomainWithUniformAngle) {
    const auto& g = octagon();
    double sin2 = 0.0;
    const std::size_t n = 20000;
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = make_stream(9, i);
        const Frame y = sample_haar(g, rng);
        ASSERT_TRUE(g.in_domain(y, 0.0));
        sin2 += std::pow(std::sin(to_iwasawa(y).theta), 2);
    }
    // E sin^2(theta) = 1/2 for theta uniform on [0, pi).
    EXPECT_NEAR(sin2 / n, 0.5, 4.0 * std::sqrt(0.125 / n));
}

TEST(Haar, InscribedDiscHoldsItsAreaFraction) {
    // The disc of radius inradius about i lies in the octagon; its area is
    // 2 pi (cosh r - 1) out of 4 pi.
    const auto& g = octagon();
    const double p = (std::cosh(g.inradius()) - 1.0) / 2.0;
    const std::size_t n = 40000;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = make_stream(10, i);
        inside += distance_to_center(sample_haar(g, rng)) < g.inradius() ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(inside) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Haar, AcceptanceRateMatchesArea) {
    const auto& g = octagon();
    const double expected = FuchsianGroup::domain_area() / g.bounding_box().hyperbolic_area();
    EXPECT_NEAR(haar_acceptance_rate(g, 50000, 11) / expected, 1.0, 0.02);
}

TEST(GroupFile, RoundTripAndValidation) {
    const auto path = (std::filesystem::temp_directory_path() / "qhskew_group_test.json").string();
    octagon().save(path);
    const auto g = FuchsianGroup::load(path);
    for (int k = 0; k < FuchsianGroup::kGenerators; ++k)
        EXPECT_LT(frame_distance(g.generator(k), octagon().generator(k)), 1e-15);

    auto j = octagon().to_json();
    j["generators"][0] = {2.0, 0.0, 0.0, 0.5};
    EXPECT_THROW(FuchsianGroup::from_json(j), std::invalid_argument);
    auto k = octagon().to_json();
    k["schema_version"] = 99;
    EXPECT_THROW(FuchsianGroup::from_json(k), std::invalid_argument);
    std::remove(path.c_str());
}
