#pragma once

// One runner per experiment. Each returns the plot-ready tables and a JSON
// summary; the command-line driver writes them and the acceptance suite
// reads the summaries.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhskew/config.hpp"
#include "qhskew/fiber_stats.hpp"
#include "qhskew/io.hpp"
#include "qhskew/scenery.hpp"
#include "qhskew/skew.hpp"
#include "qhskew/stats.hpp"
#include "qhskew/torus.hpp"

namespace qhskew {

struct ExperimentResult {
    std::map<std::string, Table> tables;  // file stem suffix -> table ("" for the main table)
    nlohmann::json summary = nlohmann::json::object();
};

/// The system, observable and the constants that several experiments share.
class Context {
  public:
    explicit Context(ExperimentConfig cfg)
        : cfg_(std::move(cfg)),
          sys_(build_system(cfg_)),
          phi_{build_observable(cfg_, sys_.group())},
          sigma2_f_(fourier_sigma2(sys_.map(), sys_.roof())) {}

    const ExperimentConfig& config() const noexcept { return cfg_; }
    const RunConfig& run() const noexcept { return cfg_.run; }
    const SkewSystem& system() const noexcept { return sys_; }
    const SkewObservable& phi() const noexcept { return phi_; }
    unsigned threads() const noexcept { return cfg_.run.threads; }

    /// sigma^2(f) from the Fourier coefficients of the roof.
    double sigma2_f() const noexcept { return sigma2_f_; }
    double sigma() const noexcept { return std::sqrt(sigma2_f_); }

    /// Sigma^2(phi): the configured value, or the quadrature estimate (computed once).
    const Sigma2Result& sigma2_capital() {
        if (!Sigma2_) {
            if (cfg_.run.sigma2_capital) {
                Sigma2Result r;
                r.value = *cfg_.run.sigma2_capital;
                Sigma2_ = r;
            } else {
                Sigma2_ = qhskew::sigma2_capital(phi_.fiber, sys_.group(), cfg_.run.bmax, cfg_.run.step,
                                                 cfg_.run.sigma2_samples, cfg_.run.seed ^ 0x5167, threads());
            }
        }
        return *Sigma2_;
    }

    double corollary_constant() { return qhskew::corollary_constant(sigma(), sigma2_capital().value); }

  private:
    ExperimentConfig cfg_;
    SkewSystem sys_;
    SkewObservable phi_;
    double sigma2_f_;
    std::optional<Sigma2Result> Sigma2_;
};

inline nlohmann::json fit_json(const ExponentFit& f) {
    return {{"exponent", f.exponent},
            {"constant", f.constant()},
            {"stderr", f.fit_error},
            {"range", {f.range_lo, f.range_hi}},
            {"points", f.points}};
}

inline nlohmann::json fit_json(const LinearFit& f) {
    return {{"slope", f.slope},
            {"intercept", f.intercept},
            {"slope_stderr", f.slope_error},
            {"intercept_stderr", f.intercept_error},
            {"points", f.points}};
}

// ---------------------------------------------------------------------------

inline ExperimentResult run_constants(Context& ctx) {
    const auto& r = ctx.run();
    const auto& sys = ctx.system();
    ExperimentResult out;
    const auto mc = green_kubo_sigma2(sys.map(), sys.roof(), 20, r.samples, r.seed ^ 0x6B, ctx.threads());
    const auto& S2 = ctx.sigma2_capital();
    const auto hom = homoclinic_sum(sys.map(), sys.roof(), static_cast<int>(r.homoclinic_terms));
    Table t{{"name", "value", "stderr"}, {}};
    t.add({"sigma2_f", ctx.sigma2_f(), 0.0});
    t.add({"sigma2_f_monte_carlo", mc.value, mc.error});
    t.add({"Sigma2_phi", S2.value, S2.error});
    t.add({"Sigma2_tail_bound", S2.tail_bound, 0.0});
    t.add({"homoclinic_sum", hom.value, hom.tail_bound});
    t.add({"corollary_constant", ctx.corollary_constant(), 0.0});
    t.add({"mean_offset", ctx.phi().fiber.mean_offset(), 0.0});
    out.tables[""] = t;
    out.summary = {{"sigma2_f", ctx.sigma2_f()},
                   {"sigma2_f_monte_carlo", {{"value", mc.value}, {"stderr", mc.error}}},
                   {"Sigma2_phi", {{"value", S2.value}, {"stderr", S2.error}, {"tail_bound", S2.tail_bound}}},
                   {"homoclinic_sum", {{"value", hom.value}, {"tail_bound", hom.tail_bound}}},
                   {"corollary_constant", ctx.corollary_constant()},
                   {"observable", ctx.phi().fiber.to_json()}};
    if (S2.decay) out.summary["Sigma2_phi"]["decay_fit"] = fit_json(*S2.decay);
    if (S2.tail_warning) out.summary["Sigma2_phi"]["warning"] = S2.warning;
    if (!S2.lags.empty() && S2.lags.size() > 1) {
        Table rho{{"b", "rho", "stderr"}, {}};
        for (std::size_t i = 0; i < S2.lags.size(); ++i) rho.add({S2.lags[i], S2.rho[i], S2.rho_error[i]});
        out.tables["rho"] = rho;
    }
    return out;
}

inline ExperimentResult run_correlations(Context& ctx) {
    const auto& r = ctx.run();
    ExperimentResult out;
    const auto cs = correlation_series(ctx.system(), ctx.phi(), r.k, r.correlation_samples, r.seed ^ 0xC0,
                                       r.fibers_per_base, ctx.threads());
    Table t{{"k", "value", "stderr", "normalized", "normalized_stderr"}, {}};
    for (std::size_t i = 0; i < cs.lags.size(); ++i) {
        const auto c = correlation_constant(cs, i, ctx.sigma());
        t.add({cs.lags[i], cs.values[i], cs.errors[i], c.value, c.error});
    }
    out.tables[""] = t;
    out.summary["samples"] = cs.samples;
    out.summary["normalization"] = "k^(1/2) sqrt(2 pi) sigma(f) <phi o T^k, phi>";
    try {
        const auto x = cs.lags_as_double();
        out.summary["fit"] = fit_json(fit_power_law(x, cs.values, cs.errors));
    } catch (const FitError& e) {
        out.summary["fit"] = nullptr;
        out.summary["fit_failure"] = e.what();
    }
    return out;
}

inline ExperimentResult run_variance_scan(Context& ctx, const SkewObservable& phi) {
    const auto& r = ctx.run();
    ExperimentResult out;
    const auto vs = variance_scan(ctx.system(), phi, r.n, r.samples, r.seed ^ 0x5A, ctx.threads());
    Table t{{"n", "variance", "stderr", "normalized"}, {}};
    for (std::size_t i = 0; i < vs.ns.size(); ++i)
        t.add({vs.ns[i], vs.variances[i], vs.errors[i], vs.variances[i] / std::pow(static_cast<double>(vs.ns[i]), 1.5)});
    out.tables[""] = t;
    out.summary["samples"] = vs.samples;
    if (vs.fit) {
        out.summary["fit"] = fit_json(*vs.fit);
    } else {
        out.summary["fit"] = nullptr;
        out.summary["fit_failure"] = vs.fit_failure;
    }
    return out;
}

inline ExperimentResult run_variance_scan(Context& ctx) {
    auto out = run_variance_scan(ctx, ctx.phi());
    out.summary["corollary_constant"] = ctx.corollary_constant();
    return out;
}

inline std::vector<double> charfn_grid(const RunConfig& r) {
    std::vector<double> t;
    const auto steps = static_cast<long>(std::floor(r.charfn_t_max / r.charfn_t_step + 1e-9));
    for (long i = -steps; i <= steps; ++i) t.push_back(static_cast<double>(i) * r.charfn_t_step);
    return t;
}

inline ExperimentResult run_distribution(Context& ctx) {
    const auto& r = ctx.run();
    const auto& sys = ctx.system();
    const double sigma = ctx.sigma(), S2 = ctx.sigma2_capital().value;
    const auto scenery = SceneryConfig::matched(sigma, S2);
    const std::size_t m = r.distribution_samples;
    const auto dyn = sample_normalized_sums(sys, ctx.phi(), r.distribution_n, m, r.seed ^ 0xD1, 0.75, ctx.threads());
    const auto rw = rwrs_law(scenery, r.distribution_n, m, r.seed ^ 0xD2, ctx.threads());
    const auto lim = ks_limit_law(sigma, S2, LimitGrid::for_sigma(sigma), m, r.seed ^ 0xD3, ctx.threads());
    ExperimentResult out;
    Table laws{{"dynamical", "rwrs", "limit"}, {}};
    for (std::size_t i = 0; i < m; ++i) laws.add({dyn.values[i], rw.values[i], lim.values[i]});
    out.tables["laws"] = laws;
    const double crit = ks_critical_value(m, m);
    Table d{{"pair", "ks_distance", "ks_critical_5pct"}, {}};
    const double d_dr = ks_distance(dyn, rw), d_dl = ks_distance(dyn, lim), d_rl = ks_distance(rw, lim);
    d.add({"dynamical-rwrs", d_dr, crit});
    d.add({"dynamical-limit", d_dl, crit});
    d.add({"rwrs-limit", d_rl, crit});
    out.tables[""] = d;
    // Occupation-weighted law against the RWRS law at charfn_n.
    const auto grid = charfn_grid(r);
    double cf = std::numeric_limits<double>::quiet_NaN();
    nlohmann::json weighted_var = nullptr;
    if (ctx.phi().fiber_only()) {
        const auto w = occupation_weighted_law(sys, ctx.phi(), r.charfn_n, m, r.seed ^ 0xD4, ctx.threads());
        const auto rw2 = rwrs_law(scenery, r.charfn_n, m, r.seed ^ 0xD5, ctx.threads());
        cf = char_fn_distance(w, rw2, grid);
        weighted_var = variance_and_stderr(w.values).value;
    }
    const auto var = [](const EmpiricalLaw& l) { return variance_and_stderr(l.values).value; };
    out.summary = {{"n", r.distribution_n},
                   {"samples", m},
                   {"ks", {{"dynamical_rwrs", d_dr}, {"dynamical_limit", d_dl}, {"rwrs_limit", d_rl}}},
                   {"variance",
                    {{"dynamical", var(dyn)},
                     {"rwrs", var(rw)},
                     {"limit", var(lim)},
                     {"occupation_weighted", weighted_var},
                     {"predicted", ctx.corollary_constant()}}},
                   {"charfn", {{"n", r.charfn_n}, {"t_max", r.charfn_t_max}, {"distance", cf}}},
                   {"scenery", {{"walk_support", scenery.walk_support}, {"scenery_variance", scenery.scenery_variance}}}};
    return out;
}

/// Limit-law variance over `samples` draws against the predicted constant.
inline nlohmann::json limit_variance(Context& ctx, std::size_t samples) {
    const double sigma = ctx.sigma(), S2 = ctx.sigma2_capital().value;
    const auto law = ks_limit_law(sigma, S2, LimitGrid::for_sigma(sigma), samples, ctx.run().seed ^ 0xD6, ctx.threads());
    const auto v = variance_and_stderr(law.values);
    return {{"variance", v.value}, {"stderr", v.error}, {"predicted", ctx.corollary_constant()}, {"samples", samples}};
}

inline ExperimentResult run_lemmas(Context& ctx) {
    const auto& r = ctx.run();
    const auto& sys = ctx.system();
    ExperimentResult out;

    ClonedTailOptions opt;
    opt.population = r.population;
    opt.replicas = r.replicas;
    opt.sigma2 = ctx.sigma2_f();
    const auto ts = tail_scan(sys, r.tail_n, r.beta, opt, r.seed ^ 0x71, r.bootstrap, 0.99, ctx.threads());
    Table tail{{"n", "threshold", "probability", "stderr"}, {}};
    for (std::size_t i = 0; i < ts.ns.size(); ++i)
        tail.add({ts.ns[i], std::pow(static_cast<double>(ts.ns[i]), 1.0 - r.beta), ts.probability[i], ts.errors[i]});
    out.tables["tail"] = tail;
    out.summary["tail"] = {{"beta", r.beta},
                           {"probability", ts.probability},
                           {"fit", fit_json(ts.fit)},
                           {"abscissa", "n^(1-2 beta)"},
                           {"bootstrap", {{"resamples", ts.bootstrap}, {"confidence", ts.confidence},
                                          {"slope_lower", ts.slope_lower}, {"slope_upper", ts.slope_upper}}}};

    // Covariance of flow products: Phi(g_{-tau} y) Phi(y) against Phi(g_T y) Phi(g_{T+tau} y).
    const BumpObservable& b = ctx.phi().fiber;
    const BumpObservable* phis[4] = {&b, &b, &b, &b};
    const double t_list[2] = {-r.lemma2_tau, 0.0}, s_list[2] = {0.0, r.lemma2_tau};
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double T : r.lemma2_T) {
        lo = std::min(lo, T - r.lemma2_half_width);
        hi = std::max(hi, T + r.lemma2_half_width);
    }
    lo = std::max(lo, r.lemma2_grid_step);
    std::vector<double> grid;
    for (double T = lo; T <= hi + 1e-9; T += r.lemma2_grid_step) grid.push_back(T);
    const auto prof = covariance_profile(sys.group(), phis, t_list, s_list, grid, r.lemma2_samples, r.seed ^ 0x72,
                                         64, ctx.threads());
    Table cov{{"T", "covariance", "stderr"}, {}};
    for (std::size_t i = 0; i < grid.size(); ++i) cov.add({grid[i], prof.cov[i].value, prof.cov[i].error});
    out.tables["covariance"] = cov;
    const auto dec = envelope_decay(prof, r.lemma2_T, r.lemma2_half_width);
    Table env{{"T", "mean_square", "stderr"}, {}};
    for (const auto& p : dec.points) env.add({p.center, p.mean_square, p.mean_square_error});
    out.tables["envelope"] = env;
    out.summary["covariance"] = {{"tau", r.lemma2_tau},
                                 {"half_width", r.lemma2_half_width},
                                 {"samples", r.lemma2_samples},
                                 {"fit", dec.fit ? fit_json(*dec.fit) : nlohmann::json()},
                                 {"fit_failure", dec.fit_failure}};

    const auto mr = occupation_moments(sys, r.n, r.epsilon, r.samples, r.seed ^ 0x73, ctx.threads());
    Table mom{{"n", "pieces", "E_N", "E_N_stderr", "E_N2", "E_N2_stderr", "E_N3", "E_N3_stderr", "cross_IJ",
               "cross_IJ_stderr", "cross_JK", "cross_JK_stderr"},
              {}};
    for (const auto& row : mr.rows)
        mom.add({row.n, row.pieces, row.first.value, row.first.error, row.second.value, row.second.error,
                 row.third.value, row.third.error, row.cross_ij.value, row.cross_ij.error, row.cross_jk.value,
                 row.cross_jk.error});
    out.tables["moments"] = mom;
    nlohmann::json mj = {{"epsilon", r.epsilon}, {"samples", mr.samples}};
    if (mr.first_fit) {
        mj["first"] = fit_json(*mr.first_fit);
        mj["second"] = fit_json(*mr.second_fit);
        mj["third"] = fit_json(*mr.third_fit);
    } else {
        mj["fit_failure"] = mr.fit_failure;
    }
    out.summary["moments"] = mj;
    return out;
}

inline ExperimentResult run_decomposition(Context& ctx) {
    const auto& r = ctx.run();
    const auto& sys = ctx.system();
    if (!ctx.phi().fiber_only()) throw std::invalid_argument("decomposition needs a fiber-only observable");
    ExperimentResult out;
    Table t{{"n", "exceed_probability", "exceed_stderr", "rms_residual", "samples"}, {}};
    std::vector<double> probs;
    for (std::uint64_t n : r.decomposition_n) {
        std::vector<double> res(r.decomposition_samples);
        parallel_for(res.size(), ctx.threads(), [&](std::size_t i) {
            auto rng = make_stream(r.seed ^ 0xDC, i, n);
            res[i] = decomposition_residual(sys, ctx.phi(), sample_state(sys, rng), n);
        });
        double exceed = 0.0, sq = 0.0;
        for (double v : res) {
            exceed += std::abs(v) > r.residual_threshold ? 1.0 : 0.0;
            sq += v * v;
        }
        const double m = static_cast<double>(res.size());
        const double p = exceed / m;
        probs.push_back(p);
        t.add({n, p, std::sqrt(p * (1.0 - p) / m), std::sqrt(sq / m), res.size()});
    }
    out.tables[""] = t;
    out.summary = {{"threshold", r.residual_threshold},
                   {"n", r.decomposition_n},
                   {"exceed_probability", probs},
                   {"amplitude", ctx.phi().fiber.params().amplitude}};
    return out;
}

}  // namespace qhskew
