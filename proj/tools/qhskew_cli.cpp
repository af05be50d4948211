// qhskew: experiment driver. One subcommand per experiment; every run writes
// its tables and a manifest that reproduces it via --config.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/version.hpp>

#include "qhskew/qhskew.hpp"

namespace fs = std::filesystem;
using namespace qhskew;

namespace {

constexpr int kManifestSchemaVersion = 1;
constexpr const char* kVersion = "1.0.0";

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<std::string> out, format;
    std::optional<unsigned> threads;
    std::vector<std::uint64_t> k, n;
    std::optional<double> beta, epsilon, bmax, step;
    bool acceptance = false;
};

/// --samples means the sample count of the subcommand's main estimate.
void apply(ExperimentConfig& c, const Overrides& o, const std::string& cmd) {
    auto& r = c.run;
    if (o.seed) r.seed = *o.seed;
    if (o.threads) r.threads = *o.threads;
    if (o.out) c.output.path = *o.out;
    if (o.format) c.output.format = *o.format;
    if (o.bmax) r.bmax = *o.bmax;
    if (o.step) r.step = *o.step;
    if (o.beta) r.beta = *o.beta;
    if (o.epsilon) r.epsilon = *o.epsilon;
    if (!o.k.empty()) r.k = o.k;
    if (!o.n.empty()) {
        if (cmd == "distribution") {
            r.distribution_n = o.n.back();
        } else if (cmd == "decomposition") {
            r.decomposition_n = o.n;
        } else {
            r.n = o.n;
        }
    }
    if (o.samples) {
        if (cmd == "constants" || cmd == "selftest") r.sigma2_samples = *o.samples;
        else if (cmd == "correlations") r.correlation_samples = *o.samples;
        else if (cmd == "distribution") r.distribution_samples = *o.samples;
        else if (cmd == "decomposition") r.decomposition_samples = *o.samples;
        else r.samples = *o.samples;
    }
    c.validate();
}

std::string timestamp() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

nlohmann::json versions() {
    return {{"qhskew", kVersion},
            {"compiler", __VERSION__},
            {"boost", BOOST_LIB_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

/// Tables go to <out>/<command>[_<table>].csv (or one <command>.json), plus
/// <out>/<command>_manifest.json.
void write_outputs(const ExperimentConfig& c, const std::string& cmd, const ExperimentResult& res, double seconds,
                   const std::string& started) {
    const fs::path dir(c.output.path);
    fs::create_directories(dir);
    nlohmann::json files = nlohmann::json::array();
    if (c.output.format == "csv") {
        for (const auto& [suffix, table] : res.tables) {
            const std::string name = cmd + (suffix.empty() ? "" : "_" + suffix) + ".csv";
            write_csv(table, dir / name);
            files.push_back(name);
        }
    } else {
        nlohmann::json doc = {{"schema_version", kManifestSchemaVersion}, {"summary", res.summary}};
        for (const auto& [suffix, table] : res.tables) doc["tables"][suffix.empty() ? "main" : suffix] = table.to_json();
        const std::string name = cmd + ".json";
        write_json(doc, dir / name);
        files.push_back(name);
    }
    const nlohmann::json manifest = {{"manifest_schema_version", kManifestSchemaVersion},
                                     {"command", cmd},
                                     {"config", to_json(c)},
                                     {"seed", c.run.seed},
                                     {"threads", c.run.threads},
                                     {"versions", versions()},
                                     {"started", started},
                                     {"wall_seconds", seconds},
                                     {"files", files},
                                     {"summary", res.summary}};
    write_json(manifest, dir / (cmd + "_manifest.json"));
    std::cout << "wrote " << (dir / (cmd + "_manifest.json")).string() << '\n';
}

ExperimentResult run_selftest_command(Context& ctx, bool acceptance, bool& ok) {
    ExperimentResult res;
    Table checks{{"group", "name", "passed", "detail"}, {}};
    ok = true;
    for (const auto& c : run_selftest(ctx)) {
        std::printf("%s  %-10s %s: %s\n", c.passed ? "PASS" : "FAIL", c.group.c_str(), c.name.c_str(),
                    c.detail.c_str());
        checks.add({c.group, c.name, c.passed, c.detail});
        ok = ok && c.passed;
    }
    res.tables[""] = checks;
    if (acceptance) {
        Table crit{{"criterion", "name", "passed", "detail"}, {}};
        for (const auto& c : run_acceptance(ctx, [](const Criterion& c) {
                 std::printf("%s  criterion %2d  %s: %s\n", c.passed ? "PASS" : "FAIL", c.id, c.name.c_str(),
                             c.detail.c_str());
                 std::fflush(stdout);
             })) {
            crit.add({c.id, c.name, c.passed, c.detail});
            ok = ok && c.passed;
        }
        res.tables["acceptance"] = crit;
    }
    res.summary["passed"] = ok;
    return res;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulations of a skew product over the cat map with geodesic-flow fibers"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config, "JSON configuration or a manifest from an earlier run")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--samples", o.samples, "sample count of the subcommand's main estimate");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--format", o.format, "table format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", o.threads, "worker threads (0: all cores)");
    app.add_option("--k", o.k, "correlation lags")->delimiter(',');
    app.add_option("--n", o.n, "n grid (distribution: the last value)")->delimiter(',');
    app.add_option("--beta", o.beta, "tail exponent for lemmas");
    app.add_option("--epsilon", o.epsilon, "occupation piece exponent for lemmas");
    app.add_option("--bmax", o.bmax, "autocorrelation cutoff for Sigma^2");
    app.add_option("--step", o.step, "autocorrelation lag step for Sigma^2");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"constants", "sigma^2(f), Sigma^2(phi), homoclinic sum and the variance constant"},
        {"correlations", "<phi o T^k, phi> over the k grid with a power-law fit"},
        {"variance-scan", "Var of Birkhoff sums over the n grid with a power-law fit"},
        {"distribution", "dynamical, random-walk and limit laws with KS and char. fn. distances"},
        {"lemmas", "tail probabilities, flow covariance decay and occupation moments"},
        {"decomposition", "residual of the occupation decomposition over the n grid"},
        {"selftest", "invariant checks (exit 1 on failure)"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        if (name == "selftest") sub->add_flag("--acceptance", o.acceptance, "also run the acceptance criteria");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    ExperimentConfig cfg;
    std::optional<Context> ctx;
    try {
        if (!o.config.empty()) cfg = load_config(o.config);
        apply(cfg, o, cmd);
        ctx.emplace(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    const std::string started = timestamp();
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res;
    bool ok = true;
    try {
        if (cmd == "constants") res = run_constants(*ctx);
        else if (cmd == "correlations") res = run_correlations(*ctx);
        else if (cmd == "variance-scan") res = run_variance_scan(*ctx);
        else if (cmd == "distribution") res = run_distribution(*ctx);
        else if (cmd == "lemmas") res = run_lemmas(*ctx);
        else if (cmd == "decomposition") res = run_decomposition(*ctx);
        else res = run_selftest_command(*ctx, o.acceptance, ok);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cmd != "selftest") std::cout << res.summary.dump(2) << '\n';
    write_outputs(cfg, cmd, res, seconds, started);
    return ok ? 0 : 1;
}
