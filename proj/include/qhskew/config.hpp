#pragma once

// Experiment configuration: a versioned JSON document with three blocks
// (system, run, output). Every field is optional; defaults describe the cat
// map with f = sin(2 pi x1) over the regular-octagon surface.

#include <array>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhskew/fuchsian.hpp"
#include "qhskew/observable.hpp"
#include "qhskew/skew.hpp"
#include "qhskew/torus.hpp"

namespace qhskew {

inline constexpr int kConfigSchemaVersion = 1;

/// Raised for unreadable or invalid configuration; `where` names the field
/// ("run.samples") or the text position ("line 3, column 7").
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
    const std::string& where() const noexcept { return where_; }

  private:
    std::string where_;
};

struct BumpConfig {
    double distance = 1.2;   // hyperbolic distance of the bump centre from i
    double direction = 0.3;
    double angle = 0.4;
    double plane_width = 1.0;
    double angle_width = 1.0;
    double amplitude = 1.0;
    std::optional<double> mean_offset;  // unset: exact Haar mean

    BumpParams params() const {
        return {frame_at(distance, direction, angle), plane_width, angle_width, amplitude};
    }
};

struct SystemConfig {
    std::array<std::int64_t, 4> matrix{2, 1, 1, 1};
    std::vector<TrigTerm> roof{{{1, 0}, 0.0, 1.0}};
    std::string group_file;  // empty: built-in regular octagon
    BumpConfig bump;
};

struct RunConfig {
    std::uint64_t seed = 20240611;
    std::size_t samples = 10000;
    unsigned threads = 0;  // 0: hardware concurrency

    // constants
    double bmax = 30.0;
    double step = 0.25;
    std::size_t sigma2_samples = 200000;
    std::optional<double> sigma2_capital;  // skip the estimate when set
    std::size_t homoclinic_terms = 40;

    // correlations
    std::vector<std::uint64_t> k{16, 23, 32, 45, 64, 91, 128, 181, 256};
    std::size_t correlation_samples = 100000;
    std::size_t fibers_per_base = 8;

    // variance-scan, lemmas (occupation moments)
    std::vector<std::uint64_t> n{1024, 2048, 4096, 8192, 16384};

    // distribution
    std::uint64_t distribution_n = 16384;
    std::size_t distribution_samples = 2000;
    std::uint64_t charfn_n = 4096;
    double charfn_t_max = 3.0;
    double charfn_t_step = 0.05;

    // lemmas
    double beta = 0.25;
    std::vector<std::uint64_t> tail_n{256, 1024, 4096};
    std::size_t population = 2048;
    std::size_t replicas = 16;
    std::size_t bootstrap = 2000;
    double epsilon = 0.25;
    std::vector<double> lemma2_T{4.0, 8.0, 12.0};
    double lemma2_tau = 0.25;
    double lemma2_half_width = 2.0;
    double lemma2_grid_step = 0.25;
    std::size_t lemma2_samples = 4000000;

    // decomposition
    std::vector<std::uint64_t> decomposition_n{1024, 4096, 16384};
    std::size_t decomposition_samples = 500;
    double residual_threshold = 0.1;
};

struct OutputConfig {
    std::string format = "csv";
    std::string path = "qhskew-out";
};

struct ExperimentConfig {
    SystemConfig system;
    RunConfig run;
    OutputConfig output;

    void validate() const;
};

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

class Reader {
  public:
    Reader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const auto& v = j_.at(key);
        if (const char* err = kind_error<T>(v)) throw ConfigError(field(key), err);
        try {
            out = v.get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(field(key), e.what());
        }
    }

    template <class T>
    void get(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!j_.contains(key) || j_.at(key).is_null()) return;
        T v{};
        get(key, v);
        out = v;
    }

    const nlohmann::json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void reject_unknown() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError(field(k), "unknown field");
    }

  private:
    /// Error text when v cannot hold a T, else nullptr.
    template <class T>
    static const char* kind_error(const nlohmann::json& v) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) return "expected a boolean";
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!v.is_number_unsigned()) return "expected a non-negative integer";
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) return "expected an integer";
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) return "expected a number";
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) return "expected a string";
        }
        return nullptr;
    }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline std::string position_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json roof = nlohmann::json::array();
    for (const auto& t : c.system.roof) roof.push_back({{"k", t.k}, {"cos", t.cos_coef}, {"sin", t.sin_coef}});
    const auto& b = c.system.bump;
    nlohmann::json bump = {{"distance", b.distance},       {"direction", b.direction},
                           {"angle", b.angle},             {"plane_width", b.plane_width},
                           {"angle_width", b.angle_width}, {"amplitude", b.amplitude},
                           {"mean_offset", b.mean_offset ? nlohmann::json(*b.mean_offset) : nlohmann::json()}};
    const auto& r = c.run;
    nlohmann::json run = {
        {"seed", r.seed},
        {"samples", r.samples},
        {"threads", r.threads},
        {"bmax", r.bmax},
        {"step", r.step},
        {"sigma2_samples", r.sigma2_samples},
        {"sigma2_capital", r.sigma2_capital ? nlohmann::json(*r.sigma2_capital) : nlohmann::json()},
        {"homoclinic_terms", r.homoclinic_terms},
        {"k", r.k},
        {"correlation_samples", r.correlation_samples},
        {"fibers_per_base", r.fibers_per_base},
        {"n", r.n},
        {"distribution_n", r.distribution_n},
        {"distribution_samples", r.distribution_samples},
        {"charfn_n", r.charfn_n},
        {"charfn_t_max", r.charfn_t_max},
        {"charfn_t_step", r.charfn_t_step},
        {"beta", r.beta},
        {"tail_n", r.tail_n},
        {"population", r.population},
        {"replicas", r.replicas},
        {"bootstrap", r.bootstrap},
        {"epsilon", r.epsilon},
        {"lemma2_T", r.lemma2_T},
        {"lemma2_tau", r.lemma2_tau},
        {"lemma2_half_width", r.lemma2_half_width},
        {"lemma2_grid_step", r.lemma2_grid_step},
        {"lemma2_samples", r.lemma2_samples},
        {"decomposition_n", r.decomposition_n},
        {"decomposition_samples", r.decomposition_samples},
        {"residual_threshold", r.residual_threshold},
    };
    return {{"schema_version", kConfigSchemaVersion},
            {"system",
             {{"matrix", c.system.matrix}, {"roof", roof}, {"group_file", c.system.group_file}, {"bump", bump}}},
            {"run", run},
            {"output", {{"format", c.output.format}, {"path", c.output.path}}}};
}

/// Reads a configuration object; a run manifest (which embeds its
/// configuration under "config") is accepted as well.
inline ExperimentConfig config_from_json(const nlohmann::json& doc) {
    const nlohmann::json& j = (doc.is_object() && doc.contains("config") && doc.contains("manifest_schema_version"))
                                  ? doc.at("config")
                                  : doc;
    ExperimentConfig c;
    detail::Reader root(j, "");
    int version = kConfigSchemaVersion;
    root.get("schema_version", version);
    if (version != kConfigSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                                std::to_string(kConfigSchemaVersion) + ")");
    if (const auto* s = root.child("system")) {
        detail::Reader sys(*s, "system");
        sys.get("matrix", c.system.matrix);
        sys.get("group_file", c.system.group_file);
        if (const auto* roof = sys.child("roof")) {
            if (!roof->is_array()) throw ConfigError("system.roof", "expected an array of terms");
            c.system.roof.clear();
            for (std::size_t i = 0; i < roof->size(); ++i) {
                detail::Reader t((*roof)[i], "system.roof[" + std::to_string(i) + "]");
                TrigTerm term;
                t.get("k", term.k);
                t.get("cos", term.cos_coef);
                t.get("sin", term.sin_coef);
                t.reject_unknown();
                c.system.roof.push_back(term);
            }
        }
        if (const auto* b = sys.child("bump")) {
            detail::Reader r(*b, "system.bump");
            auto& o = c.system.bump;
            r.get("distance", o.distance);
            r.get("direction", o.direction);
            r.get("angle", o.angle);
            r.get("plane_width", o.plane_width);
            r.get("angle_width", o.angle_width);
            r.get("amplitude", o.amplitude);
            r.get("mean_offset", o.mean_offset);
            r.reject_unknown();
        }
        sys.reject_unknown();
    }
    if (const auto* rj = root.child("run")) {
        detail::Reader r(*rj, "run");
        auto& o = c.run;
        r.get("seed", o.seed);
        r.get("samples", o.samples);
        r.get("threads", o.threads);
        r.get("bmax", o.bmax);
        r.get("step", o.step);
        r.get("sigma2_samples", o.sigma2_samples);
        r.get("sigma2_capital", o.sigma2_capital);
        r.get("homoclinic_terms", o.homoclinic_terms);
        r.get("k", o.k);
        r.get("correlation_samples", o.correlation_samples);
        r.get("fibers_per_base", o.fibers_per_base);
        r.get("n", o.n);
        r.get("distribution_n", o.distribution_n);
        r.get("distribution_samples", o.distribution_samples);
        r.get("charfn_n", o.charfn_n);
        r.get("charfn_t_max", o.charfn_t_max);
        r.get("charfn_t_step", o.charfn_t_step);
        r.get("beta", o.beta);
        r.get("tail_n", o.tail_n);
        r.get("population", o.population);
        r.get("replicas", o.replicas);
        r.get("bootstrap", o.bootstrap);
        r.get("epsilon", o.epsilon);
        r.get("lemma2_T", o.lemma2_T);
        r.get("lemma2_tau", o.lemma2_tau);
        r.get("lemma2_half_width", o.lemma2_half_width);
        r.get("lemma2_grid_step", o.lemma2_grid_step);
        r.get("lemma2_samples", o.lemma2_samples);
        r.get("decomposition_n", o.decomposition_n);
        r.get("decomposition_samples", o.decomposition_samples);
        r.get("residual_threshold", o.residual_threshold);
        r.reject_unknown();
    }
    if (const auto* oj = root.child("output")) {
        detail::Reader r(*oj, "output");
        r.get("format", c.output.format);
        r.get("path", c.output.path);
        r.reject_unknown();
    }
    root.reject_unknown();
    c.validate();
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(detail::position_of(text, e.byte == 0 ? 0 : e.byte - 1), "malformed JSON");
    }
    return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open configuration file");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.where(), std::string(e.what()).substr(e.where().size() + 2));
    }
}

inline void ExperimentConfig::validate() const {
    const auto need = [](bool ok, const char* field, const char* what) {
        if (!ok) throw ConfigError(field, what);
    };
    const auto& m = system.matrix;
    const std::int64_t det = m[0] * m[3] - m[1] * m[2];
    const std::int64_t tr = m[0] + m[3];
    need(det == 1 || det == -1, "system.matrix", "determinant must be +-1");
    need(tr > 2 || tr < -2, "system.matrix", "matrix must be hyperbolic (|trace| > 2)");
    need(m[1] != 0, "system.matrix", "entry b must be non-zero");
    for (const auto& t : system.roof)
        need(t.k[0] != 0 || t.k[1] != 0, "system.roof", "zero frequency term (roof must be mean-zero)");
    need(system.bump.plane_width > 0.0, "system.bump.plane_width", "must be > 0");
    need(system.bump.angle_width > 0.0 && system.bump.angle_width <= 1.5707963267948966, "system.bump.angle_width",
         "must lie in (0, pi/2]");
    need(run.samples >= 2, "run.samples", "must be >= 2");
    need(run.bmax > 0.0 && run.step > 0.0, "run.bmax", "bmax and step must be > 0");
    need(!run.k.empty(), "run.k", "must be non-empty");
    for (std::size_t i = 1; i < run.k.size(); ++i) need(run.k[i] > run.k[i - 1], "run.k", "must increase strictly");
    need(!run.n.empty(), "run.n", "must be non-empty");
    for (std::size_t i = 1; i < run.n.size(); ++i) need(run.n[i] > run.n[i - 1], "run.n", "must increase strictly");
    need(run.beta > 0.0 && run.beta < 0.5, "run.beta", "must lie in (0, 1/2)");
    need(run.epsilon > 0.0 && run.epsilon < 0.5, "run.epsilon", "must lie in (0, 1/2)");
    need(run.distribution_n >= 1 && run.charfn_n >= 1, "run.distribution_n", "must be >= 1");
    need(run.population >= 2 && run.replicas >= 2, "run.population", "population and replicas must be >= 2");
    need(run.lemma2_tau >= 0.0 && run.lemma2_half_width >= 0.0 && run.lemma2_grid_step > 0.0, "run.lemma2_tau",
         "lemma 2 offsets and grid must be non-negative");
    need(output.format == "csv" || output.format == "json", "output.format", "must be \"csv\" or \"json\"");
}

// ---------------------------------------------------------------------------

inline ToralAutomorphism build_map(const ExperimentConfig& c) {
    const auto& m = c.system.matrix;
    return {m[0], m[1], m[2], m[3]};
}

inline SkewSystem build_system(const ExperimentConfig& c) {
    std::shared_ptr<const FuchsianGroup> group;
    if (c.system.group_file.empty()) {
        group = std::make_shared<const FuchsianGroup>(FuchsianGroup::regular_octagon());
    } else {
        try {
            group = std::make_shared<const FuchsianGroup>(FuchsianGroup::load(c.system.group_file));
        } catch (const std::exception& e) {
            throw ConfigError("system.group_file", e.what());
        }
    }
    return {build_map(c), TrigObservable(c.system.roof), std::move(group)};
}

inline BumpObservable build_observable(const ExperimentConfig& c, const FuchsianGroup& group) {
    const auto p = c.system.bump.params();
    try {
        return c.system.bump.mean_offset ? BumpObservable(group, p, *c.system.bump.mean_offset)
                                         : BumpObservable::centered(group, p);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("system.bump", e.what());
    }
}

}  // namespace qhskew
