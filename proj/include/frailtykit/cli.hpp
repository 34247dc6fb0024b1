#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "frailtykit/baseline.hpp"
#include "frailtykit/errors.hpp"
#include "frailtykit/fit.hpp"
#include "frailtykit/io.hpp"
#include "frailtykit/monte_carlo.hpp"
#include "frailtykit/simulation.hpp"

namespace frailtykit::cli {

inline constexpr int kOk = 0;
inline constexpr int kValidationFailure = 1;
inline constexpr int kNumericalFailure = 2;

namespace fs = std::filesystem;

struct FitArgs {
    std::string data;
    std::string model = "pe";
    std::string frailty = "gamma";
    int intervals = 5;
    int degree = 5;
    std::optional<double> tau;
    int iterations = 10000;
    int burnin = 5000;
    int thin = 1;
    int chains = 4;
    std::uint64_t seed = 1;
    double level = 0.95;
    std::string out;
    std::string name;
    std::string priors;
    bool draws = false;
    bool record_time = false;
};

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir + ": " + ec.message());
}

inline int run_fit(const FitArgs& a) {
    const auto started = std::chrono::steady_clock::now();
    const auto data = io::read_dataset(a.data);
    validate_dataset(data);
    const auto frailty = parse_frailty(a.frailty);
    ModelSpec spec;
    if (parse_baseline(a.model) == Baseline::pe) {
        spec = ModelSpec::pe(build_time_grid(event_times(data), a.intervals), frailty);
    } else {
        spec = ModelSpec::bp(a.degree, a.tau ? *a.tau : 1.01 * max_time(data), frailty);
    }
    FitConfig cfg;
    cfg.chains = a.chains;
    cfg.chain.iterations = a.iterations;
    cfg.chain.burnin = a.burnin;
    cfg.chain.thin = a.thin;
    cfg.chain.seed = a.seed;
    cfg.level = a.level;
    if (!a.priors.empty()) {
        std::ifstream in(a.priors, std::ios::binary);
        if (!in) throw ValidationError("cannot open " + a.priors);
        try {
            cfg.priors = io::priors_from_json(io::json::parse(in));
        } catch (const io::json::parse_error& e) {
            throw ValidationError(a.priors + ": " + e.what());
        }
    }
    const auto fit = fit_model(data, spec, cfg);
    const std::string name =
        a.name.empty() ? std::string(to_string(spec.baseline)) + "-" + std::string(to_string(spec.frailty)) : a.name;

    ensure_dir(a.out);
    std::optional<double> elapsed;
    if (a.record_time)
        elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    io::write_json(fs::path(a.out) / "fit_report.json", io::fit_report_json(fit, data, name, elapsed));
    {
        auto out = io::detail::open_out(fs::path(a.out) / "posterior_summary.csv");
        io::write_posterior_summary(out, fit);
    }
    if (a.draws) {
        auto out = io::detail::open_out(fs::path(a.out) / "draws.csv");
        io::write_draws(out, fit.draws);
    }
    if (fit.diagnostics.available && fit.diagnostics.max_rhat() > 1.1)
        std::cerr << "warning: max split R-hat " << io::format_double(fit.diagnostics.max_rhat()) << " exceeds 1.1\n";
    return kOk;
}

inline int run_simulate(const std::string& config, const std::string& out_dir) {
    const auto cfg = io::read_scenario(config);
    auto rng = make_rng(cfg.scenario.seed, {0, 0});
    const auto data = simulate_dataset(cfg.scenario, rng);
    ensure_dir(out_dir);
    auto out = io::detail::open_out(fs::path(out_dir) / "dataset.csv");
    io::write_dataset(out, data, cfg.scenario.seed);
    return kOk;
}

inline int run_mc_study(const std::string& config, int replicas, const std::string& out_dir) {
    const auto cfg = io::read_scenario(config);
    McStudyConfig mc;
    mc.replicas = replicas;
    mc.level = cfg.fit.fit.level;
    const auto study =
        run_monte_carlo(cfg.scenario, bayes_fitter(cfg.scenario.spec, cfg.fit.fit, cfg.fit.max_rhat), mc);
    ensure_dir(out_dir);
    {
        auto out = io::detail::open_out(fs::path(out_dir) / "mc_metrics.csv");
        io::write_mc_metrics(out, study, cfg.scenario.seed);
    }
    {
        auto out = io::detail::open_out(fs::path(out_dir) / "replicas.csv");
        io::write_replicas(out, study, cfg.scenario.seed);
    }
    for (const auto& w : study.warnings) std::cerr << "WARN " << w << '\n';
    if (study.study_failed) {
        std::cerr << "study failed: " << study.failed << " of " << study.replicas.size()
                  << " replicas flagged (limit " << io::format_double(mc.max_failed_fraction * 100.0) << "%)\n";
        return kNumericalFailure;
    }
    return kOk;
}

inline int run_compare(const std::vector<std::string>& runs, const std::string& out_dir) {
    if (runs.size() < 2) throw ValidationError("compare needs at least two --runs");
    std::vector<NamedWaic> models;
    std::set<std::string> names;
    for (const auto& path : runs) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ValidationError("cannot open " + path);
        io::json report;
        try {
            report = io::json::parse(in);
        } catch (const io::json::parse_error& e) {
            throw ValidationError(path + ": " + e.what());
        }
        auto nw = io::named_waic_from_report(report, fs::path(path).stem().string());
        if (!names.insert(nw.name).second) nw.name += " (" + path + ")";
        models.push_back(std::move(nw));
    }
    const auto ranking = compare(models);
    ensure_dir(out_dir);
    io::write_json(fs::path(out_dir) / "waic_compare.json", io::compare_report_json(ranking));
    return kOk;
}

/// Parses argv and runs one subcommand. Returns 0 on success, 1 on usage or
/// validation errors, 2 on numerical failure.
inline int cli_dispatch(int argc, const char* const* argv) {
    CLI::App app{"Bayesian frailty survival models: fit, simulate, Monte Carlo studies, WAIC comparison",
                 "frailtykit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit a PE or BP frailty model to a CSV dataset");
    fit->add_option("--data", fa.data, "Input CSV (cluster,time,status,covariates...)")->required();
    fit->add_option("--model", fa.model, "Baseline family")->check(CLI::IsMember({"pe", "bp"}));
    fit->add_option("--frailty", fa.frailty, "Frailty distribution")->check(CLI::IsMember({"gamma", "none"}));
    fit->add_option("--intervals", fa.intervals, "PE interval count J")->check(CLI::PositiveNumber);
    fit->add_option("--degree", fa.degree, "Bernstein degree m")->check(CLI::PositiveNumber);
    fit->add_option("--tau", fa.tau, "Bernstein time horizon (default 1.01 x max time)");
    fit->add_option("--iter", fa.iterations, "Iterations per chain");
    fit->add_option("--burnin", fa.burnin, "Burn-in iterations per chain");
    fit->add_option("--thin", fa.thin, "Thinning interval");
    fit->add_option("--chains", fa.chains, "Number of chains");
    fit->add_option("--seed", fa.seed, "Master seed");
    fit->add_option("--level", fa.level, "Credible level of equal-tailed intervals");
    fit->add_option("--name", fa.name, "Model label used by compare");
    fit->add_option("--priors", fa.priors, "JSON file with prior hyperparameters");
    fit->add_flag("--draws", fa.draws, "Also write draws.csv");
    fit->add_flag("--record-time", fa.record_time, "Record wall-clock time in fit_report.json");
    fit->add_option("--out", fa.out, "Output directory")->required();

    std::string sim_config, sim_out;
    auto* sim = app.add_subcommand("simulate", "Simulate one dataset from a scenario");
    sim->add_option("--config", sim_config, "Scenario JSON")->required();
    sim->add_option("--out", sim_out, "Output directory")->required();

    std::string mc_config, mc_out;
    int mc_replicas = 100;
    auto* mc = app.add_subcommand("mc-study", "Run a Monte Carlo simulation study");
    mc->add_option("--config", mc_config, "Scenario JSON")->required();
    mc->add_option("--replicas", mc_replicas, "Number of replicas M_C");
    mc->add_option("--out", mc_out, "Output directory")->required();

    std::vector<std::string> runs;
    std::string cmp_out;
    auto* cmp = app.add_subcommand("compare", "Rank fitted models by WAIC");
    cmp->add_option("--runs", runs, "fit_report.json files")->required();
    cmp->add_option("--out", cmp_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        std::cout << kVersion << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kValidationFailure;
    }

    try {
        if (*fit) return run_fit(fa);
        if (*sim) return run_simulate(sim_config, sim_out);
        if (*mc) return run_mc_study(mc_config, mc_replicas, mc_out);
        if (*cmp) return run_compare(runs, cmp_out);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
    return kValidationFailure;
}

inline int cli_dispatch(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"frailtykit"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace frailtykit::cli
