#pragma once

// Cocompact lattice of the genus-2 surface built on the regular hyperbolic
// octagon with interior angles pi/4 and opposite sides identified.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhskew/frame.hpp"
#include "qhskew/rng.hpp"

namespace qhskew {

/// A frame whose base point lies in the closed Dirichlet domain, together with
/// the generator indices applied to get there (in order).
struct ReducedFrame {
    Frame frame;
    std::vector<int> word;
};

class ReductionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class FuchsianGroup {
  public:
    static constexpr int kGenerators = 8;
    static constexpr int kSchemaVersion = 1;
    static constexpr std::size_t kMaxReductionSteps = 10000;
    static constexpr double kDefaultCacheRadius = 6.5;

    /// Regular octagon group. Generator k translates by 2 arccosh(1+sqrt 2)
    /// towards side k and maps side k+4 onto side k; generator k+4 is its
    /// inverse.
    static FuchsianGroup regular_octagon(double cache_radius = kDefaultCacheRadius) {
        const double inr = std::acosh(1.0 + std::numbers::sqrt2);
        std::array<Frame, kGenerators> gens{};
        for (int k = 0; k < kGenerators; ++k) {
            const Frame rot = rotation(k * std::numbers::pi / 8.0);
            gens[k] = normalized(rot * diagonal(2.0 * inr) * rot.inverse());
        }
        return FuchsianGroup(gens, cache_radius);
    }

    FuchsianGroup(const std::array<Frame, kGenerators>& generators, double cache_radius)
        : generators_(generators), cache_radius_(cache_radius) {
        for (int k = 0; k < kGenerators; ++k) {
            if (std::abs(generators_[k].det() - 1.0) > 1e-10)
                throw std::invalid_argument("generator " + std::to_string(k) + " does not have det 1");
            const Frame prod = generators_[k] * generators_[inverse_index(k)];
            if (frame_distance(prod, Frame::identity()) > 1e-8)
                throw std::invalid_argument("generator " + std::to_string(k) + " and " +
                                            std::to_string(inverse_index(k)) + " are not inverse");
        }
        if (!(cache_radius_ > 0.0)) throw std::invalid_argument("cache radius must be positive");
        inradius_ = 0.5 * distance_to_center(generators_[0]);
        // Regular 8-gon with interior angle pi/4: cosh R = cot(pi/8) cot(pi/8).
        const double cot = 1.0 / std::tan(std::numbers::pi / 8.0);
        domain_radius_ = std::acosh(cot * cot);
        build_vertices();
        build_ball();
    }

    static constexpr int inverse_index(int k) noexcept { return (k + kGenerators / 2) % kGenerators; }

    std::span<const Frame> generators() const noexcept { return generators_; }
    const Frame& generator(int k) const { return generators_.at(static_cast<std::size_t>(k)); }
    double domain_radius() const noexcept { return domain_radius_; }
    double inradius() const noexcept { return inradius_; }
    double cache_radius() const noexcept { return cache_radius_; }

    /// Hyperbolic area of the fundamental domain (genus 2, Gauss-Bonnet).
    static constexpr double domain_area() noexcept { return 4.0 * std::numbers::pi; }

    /// Every gamma with d(gamma.i, i) < cache_radius, identity first.
    std::span<const Frame> ball() const noexcept { return ball_; }

    /// Octagon vertices in the upper half-plane, counter-clockwise from side 0/1.
    std::span<const std::complex<double>> vertices() const noexcept { return vertices_; }

    /// True if no generator brings m.i strictly closer to i (up to slack in cosh-distance).
    bool in_domain(const Frame& m, double slack = 1e-10) const noexcept {
        const double n0 = m.norm2();
        for (const auto& g : generators_)
            if (product_norm2(g, m) < n0 - slack * n0) return false;
        return true;
    }

    bool in_domain(std::complex<double> z, double slack = 1e-10) const noexcept {
        const double r0 = cosh_distance_to_center(z);
        for (const auto& g : generators_)
            if (cosh_distance_to_center(moebius(g, z)) < r0 - slack * r0) return false;
        return true;
    }

    /// Greedy Dirichlet reduction on a frame in place. Returns the number of
    /// generators applied; appends them to word when given.
    std::size_t reduce_in_place(Frame& m, std::vector<int>* word = nullptr) const {
        std::size_t steps = 0;
        for (;;) {
            const double n0 = m.norm2();
            int best = -1;
            double best_norm = n0 - kStrictDecrease * n0;
            for (int k = 0; k < kGenerators; ++k) {
                const double nk = product_norm2(generators_[k], m);
                if (nk < best_norm) {
                    best_norm = nk;
                    best = k;
                }
            }
            if (best < 0) return steps;
            m = generators_[best] * m;
            normalize(m);
            if (word) word->push_back(best);
            if (++steps > kMaxReductionSteps) {
                std::ostringstream os;
                os << "reduction exceeded " << kMaxReductionSteps
                   << " steps; group data corrupted? |m|^2=" << m.norm2();
                throw ReductionError(os.str());
            }
        }
    }

    ReducedFrame reduce(const Frame& y) const {
        ReducedFrame out{y, {}};
        normalize(out.frame);
        reduce_in_place(out.frame, &out.word);
        return out;
    }

    /// Undo a reduction: returns word^{-1} applied to m.
    Frame unreduce(const Frame& m, std::span<const int> word) const {
        Frame out = m;
        for (auto it = word.rbegin(); it != word.rend(); ++it) out = generators_[inverse_index(*it)] * out;
        return out;
    }

    /// Bounding box of the disc of radius R about i: x in [-sinh R, sinh R], y in [e^-R, e^R].
    struct Box {
        double x_lo, x_hi, y_lo, y_hi;
        double hyperbolic_area() const noexcept { return (x_hi - x_lo) * (1.0 / y_lo - 1.0 / y_hi); }
    };
    Box bounding_box() const noexcept {
        const double sh = std::sinh(domain_radius_);
        return {-sh, sh, std::exp(-domain_radius_), std::exp(domain_radius_)};
    }

    /// Product of the side pairings around the single vertex cycle, and the
    /// generator indices in application order.
    struct VertexCycle {
        std::vector<int> word;
        std::vector<int> vertices;
        Frame product;
    };
    VertexCycle vertex_cycle() const {
        VertexCycle cyc;
        // Vertex j lies on sides j and j+1 (mod 8).
        const int j0 = 0;
        const int s0 = 0;
        int j = j0, side = s0;
        Frame prod = Frame::identity();
        for (int guard = 0; guard < 4 * kGenerators; ++guard) {
            cyc.vertices.push_back(j);
            // Pairing that carries `side` onto its partner side+4.
            const int g = (side + kGenerators / 2) % kGenerators;
            prod = generators_[g] * prod;
            cyc.word.push_back(g);
            const auto img = moebius(generators_[g], vertices_[j]);
            int jn = -1;
            double best = 1e-6;
            for (int v = 0; v < kGenerators; ++v) {
                const double dd = std::abs(img - vertices_[v]);
                if (dd < best) {
                    best = dd;
                    jn = v;
                }
            }
            if (jn < 0) throw std::logic_error("vertex cycle: image is not a vertex");
            const int partner = (side + kGenerators / 2) % kGenerators;
            const int other = (partner == jn) ? (jn + 1) % kGenerators : jn;
            j = jn;
            side = other;
            if (j == j0 && side == s0) break;
        }
        cyc.product = prod;
        return cyc;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema_version"] = kSchemaVersion;
        j["kind"] = "regular_octagon_genus2";
        j["domain_radius"] = domain_radius_;
        j["inradius"] = inradius_;
        j["cache_radius"] = cache_radius_;
        auto& gens = j["generators"] = nlohmann::json::array();
        for (const auto& g : generators_) gens.push_back({g.a, g.b, g.c, g.d});
        return j;
    }

    static FuchsianGroup from_json(const nlohmann::json& j) {
        if (!j.contains("schema_version") || j["schema_version"].get<int>() != kSchemaVersion)
            throw std::invalid_argument("group file: unsupported or missing schema_version");
        const auto& gens = j.at("generators");
        if (!gens.is_array() || gens.size() != kGenerators)
            throw std::invalid_argument("group file: 'generators' must list 8 matrices");
        std::array<Frame, kGenerators> g{};
        for (int k = 0; k < kGenerators; ++k) {
            const auto& e = gens[static_cast<std::size_t>(k)];
            if (!e.is_array() || e.size() != 4)
                throw std::invalid_argument("group file: generators[" + std::to_string(k) + "] must have 4 entries");
            g[k] = {e[0].get<double>(), e[1].get<double>(), e[2].get<double>(), e[3].get<double>()};
        }
        FuchsianGroup out(g, j.value("cache_radius", kDefaultCacheRadius));
        const auto cyc = out.vertex_cycle();
        if (frame_distance(cyc.product, Frame::identity()) > 1e-8)
            throw std::invalid_argument("group file: side pairings do not satisfy the vertex relation");
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write group file " + path);
        os << to_json().dump(2) << '\n';
    }

    static FuchsianGroup load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot read group file " + path);
        return from_json(nlohmann::json::parse(is));
    }

  private:
    static constexpr double kStrictDecrease = 1e-12;

    static double cosh_distance_to_center(std::complex<double> z) noexcept {
        return (z.real() * z.real() + z.imag() * z.imag() + 1.0) / (2.0 * z.imag());
    }

    void build_vertices() {
        // Sides k are centred in the direction of generator k; vertex j sits
        // halfway between sides j and j+1 at the circumradius.
        vertices_.clear();
        for (int j = 0; j < kGenerators; ++j) {
            const Frame rot = rotation((j + 0.5) * std::numbers::pi / 8.0);
            vertices_.push_back(moebius(rot, std::complex<double>(0.0, std::exp(domain_radius_))));
        }
    }

    void build_ball() {
        // Breadth-first growth by left multiplication. Greedy reduction of any
        // gamma.i strictly decreases the distance, so every element of the
        // ball is reachable through elements of the ball.
        const double bound = 2.0 * std::cosh(cache_radius_);
        ball_.clear();
        std::map<std::array<long long, 4>, int> seen;
        auto key = [](Frame m) {
            if (m.a < 0 || (m.a == 0 && m.b < 0)) m = {-m.a, -m.b, -m.c, -m.d};
            return std::array<long long, 4>{std::llround(m.a * 1e6), std::llround(m.b * 1e6),
                                            std::llround(m.c * 1e6), std::llround(m.d * 1e6)};
        };
        ball_.push_back(Frame::identity());
        seen[key(Frame::identity())] = 0;
        for (std::size_t head = 0; head < ball_.size(); ++head) {
            const Frame cur = ball_[head];
            for (const auto& g : generators_) {
                Frame nxt = g * cur;
                normalize(nxt);
                if (nxt.norm2() >= bound) continue;
                if (seen.emplace(key(nxt), static_cast<int>(ball_.size())).second) ball_.push_back(nxt);
            }
        }
    }

    std::array<Frame, kGenerators> generators_{};
    double cache_radius_ = kDefaultCacheRadius;
    double inradius_ = 0.0;
    double domain_radius_ = 0.0;
    std::vector<std::complex<double>> vertices_;
    std::vector<Frame> ball_;
};

inline ReducedFrame reduce(const FuchsianGroup& g, const Frame& y) { return g.reduce(y); }

/// Flow by t in steps of at most max_step, reducing after each step.
inline Frame flow_reduced(const FuchsianGroup& g, Frame y, double t, double max_step = 5.0) {
    if (!std::isfinite(t)) throw std::out_of_range("flow_reduced: non-finite time");
    while (t != 0.0) {
        const double dt = std::clamp(t, -max_step, max_step);
        y = flow(y, dt);
        g.reduce_in_place(y);
        t -= dt;
    }
    return y;
}

/// Haar draw on the quotient: base point by rejection from dx dy / y^2 on the
/// bounding box of the domain, angle uniform on [0, pi).
inline Frame sample_haar(const FuchsianGroup& g, CounterRng& rng, std::size_t* proposals = nullptr) {
    static constexpr std::size_t kMaxProposals = 1000000;
    const auto box = g.bounding_box();
    for (std::size_t n = 1; n <= kMaxProposals; ++n) {
        const double x = uniform(rng, box.x_lo, box.x_hi);
        const double w = uniform(rng, 1.0 / box.y_hi, 1.0 / box.y_lo);
        const std::complex<double> z(x, 1.0 / w);
        if (!g.in_domain(z, 0.0)) continue;
        const double theta = std::numbers::pi * uniform01(rng);
        if (proposals) *proposals += n;
        return from_iwasawa({z.real(), z.imag(), theta});
    }
    throw std::runtime_error("sample_haar: exceeded 10^6 proposals");
}

inline ReducedFrame sample_haar(const FuchsianGroup& g, std::uint64_t seed) {
    auto rng = make_stream(seed, 0, 0x4A41);
    return {sample_haar(g, rng), {}};
}

/// Fraction of bounding-box proposals accepted over `accepted` draws.
inline double haar_acceptance_rate(const FuchsianGroup& g, std::size_t accepted, std::uint64_t seed) {
    auto rng = make_stream(seed, 0, 0x4A42);
    std::size_t proposals = 0;
    for (std::size_t i = 0; i < accepted; ++i) (void)sample_haar(g, rng, &proposals);
    return static_cast<double>(accepted) / static_cast<double>(proposals);
}

}  // namespace qhskew
