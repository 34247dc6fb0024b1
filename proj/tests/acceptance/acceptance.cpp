// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero if
// any criterion fails.
//
//   acceptance [--cli PATH] [--only N]...
//
// --cli points at the frailtykit executable used by the determinism check.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "frailtykit/frailtykit.hpp"
#include "frailtykit/io.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace frailtykit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

double rel_err(double got, double ref) { return std::abs(got - ref) / std::max(1.0, std::abs(ref)); }

// ---------------------------------------------------------------------------

Outcome likelihood_oracle() {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    int clusters = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto data = testsupport::random_dataset(rng, 5, 5, 2);
        const auto spec = rep % 2 == 0 ? ModelSpec::pe(TimeGrid({0.0, 0.7, 1.5, 2.2}), Frailty::gamma)
                                       : ModelSpec::bp(1 + rep % 6, 3.2, Frailty::gamma);
        const auto pv = testsupport::random_params(rng, spec, 2, 0.05 + 2.5 * unit(rng));
        const auto index = index_clusters(data);
        for (const auto& members : index.members) {
            std::vector<ObservationRecord> cl;
            std::vector<double> h, H, eta;
            std::vector<int> status;
            for (auto i : members) {
                const auto& r = data.records[i];
                cl.push_back(r);
                const auto coef = std::span<const double>(spec.baseline == Baseline::pe ? pv.lambda : pv.gamma_coef);
                if (spec.baseline == Baseline::pe) {
                    const auto& cuts = spec.grid.cutpoints();
                    h.push_back(oracle::pe_step(r.time, cuts, pv.lambda));
                    H.push_back(oracle::adaptive_simpson(
                        [&](double s) { return oracle::pe_step(s, cuts, pv.lambda); }, 0.0, r.time));
                } else {
                    const double tau = spec.tau;
                    auto bp = [&](double s) {
                        return static_cast<double>(oracle::bernstein_direct(pv.gamma_coef, std::min(s, tau) / tau));
                    };
                    h.push_back(bp(r.time));
                    const double upto = std::min(r.time, tau);
                    H.push_back(oracle::gauss_kronrod(bp, 0.0, upto) + (r.time - upto) * coef.back());
                }
                eta.push_back(r.covariates[0] * pv.beta[0] + r.covariates[1] * pv.beta[1]);
                status.push_back(r.status);
            }
            const double ref = oracle::frailty_integral_log(h, H, eta, status, pv.theta);
            worst = std::max(worst, rel_err(cluster_log_likelihood(cl, pv, spec), ref));
            ++clusters;
        }
    }
    return {worst <= 1e-6, "50 datasets, " + std::to_string(clusters) + " clusters, max rel err " + fmt(worst, 3)};
}

Outcome cumulative_hazard_oracle() {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_pe = 0.0, worst_bp = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const int J = 1 + static_cast<int>(unit(rng) * 8);
        std::vector<double> cuts{0.0}, rates;
        for (int j = 1; j < J; ++j) cuts.push_back(cuts.back() + 0.05 + unit(rng));
        for (int j = 0; j < J; ++j) rates.push_back(0.01 + 4.0 * unit(rng));
        const double t_pe = 1e-3 + (cuts.back() + 1.0) * unit(rng);
        const double ref_pe =
            oracle::adaptive_simpson([&](double s) { return oracle::pe_step(s, cuts, rates); }, 0.0, t_pe);
        worst_pe = std::max(worst_pe, std::abs(pe_cum_hazard(t_pe, rates, TimeGrid(cuts)) - ref_pe));

        const int m = 1 + static_cast<int>(unit(rng) * 10);
        std::vector<double> coef(static_cast<std::size_t>(m) + 1);
        for (double& c : coef) c = 4.0 * unit(rng);
        const double tau = 0.2 + 4.0 * unit(rng);
        const double t_bp = 1.5 * tau * unit(rng);
        auto f = [&](double s) { return static_cast<double>(oracle::bernstein_direct(coef, std::min(s, tau) / tau)); };
        const double upto = std::min(t_bp, tau);
        const double ref_bp = oracle::gauss_kronrod(f, 0.0, upto) + (t_bp - upto) * coef.back();
        worst_bp = std::max(worst_bp, std::abs(bp_cum_hazard(t_bp, coef, tau) - ref_bp));
    }
    return {std::max(worst_pe, worst_bp) <= 1e-8,
            "200 draws, max abs err pe " + fmt(worst_pe, 3) + " bp " + fmt(worst_bp, 3)};
}

Outcome mc_arithmetic() {
    // Several of the inputs (1.8, 2.2) are not exact binary fractions, so the
    // "exact" reference is the same formula evaluated in long double on the
    // stored doubles; the tolerance is a few ulps.
    auto near = [](double got, long double ref) {
        return std::abs(static_cast<long double>(got) - ref) <= 8.0L * std::numeric_limits<double>::epsilon() *
                                                                     std::max(1.0L, std::abs(ref));
    };
    bool ok = true;
    std::string d;

    const std::vector<double> a{1.8, 2.2}, se{0.1, 0.1};
    const auto r1 = mc_metrics(2.0, a, se, {true, true});
    ok &= near(r1.est, (static_cast<long double>(1.8) + static_cast<long double>(2.2)) / 2.0L);
    ok &= std::abs(r1.rb_percent) <= 1e-13;
    ok &= near(r1.sde, std::sqrt(std::pow(static_cast<long double>(1.8) - 2.0L, 2) +
                                 std::pow(static_cast<long double>(2.2) - 2.0L, 2)));
    ok &= std::abs(r1.sde - 0.28284) < 1e-5;
    d += "est=" + fmt(r1.est, 17) + " rb=" + fmt(r1.rb_percent, 3) + " sde=" + fmt(r1.sde, 8);

    const std::vector<double> b{2.2, 2.2};
    const auto r2 = mc_metrics(2.0, b, se, {true, true});
    const long double rb_ref = 100.0L * (static_cast<long double>(2.2) - 2.0L) / 2.0L;
    ok &= near(r2.rb_percent, rb_ref);
    ok &= std::abs(r2.rb_percent - 10.0) < 1e-12;
    d += " rb=" + fmt(r2.rb_percent, 17);

    const std::vector<double> c{1.0, 1.0, 1.0, 1.0}, se4(4, 0.1);
    const auto r3 = mc_metrics(1.0, c, se4, {true, true, true, false});
    ok &= r3.cp == 0.75;
    d += " cp=" + fmt(r3.cp);
    return {ok, d};
}

Outcome waic_arithmetic() {
    // Reference values evaluated independently (short Python script).
    const double ref_p = 0.12011325347955035;
    const double ref_waic = 2.201885012982553;
    const auto ll = Matrix::from_rows({{std::log(0.5)}, {std::log(0.25)}});
    const auto w = waic(ll);
    const double want_lppd = std::log(0.375);
    bool ok = std::abs(w.lppd - want_lppd) <= 4.0 * std::numeric_limits<double>::epsilon();
    ok &= std::abs(w.p_waic - ref_p) <= 1e-5 && std::abs(w.p_waic - 0.12011) <= 1e-5;
    ok &= std::abs(w.waic - ref_waic) <= 1e-4 && std::abs(w.waic - 2.20188) <= 1e-4;
    const auto flat = Matrix::from_rows({{-1.3, -0.2}, {-1.3, -0.2}, {-1.3, -0.2}});
    const auto wf = waic(flat);
    ok &= wf.p_waic == 0.0;
    return {ok, "lppd=" + fmt(w.lppd, 12) + " p_waic=" + fmt(w.p_waic, 8) + " waic=" + fmt(w.waic, 8) +
                    " degenerate p_waic=" + fmt(wf.p_waic)};
}

double batch_means_se(const std::vector<double>& x, std::size_t batches = 50) {
    const std::size_t b = x.size() / batches;
    std::vector<double> means;
    for (std::size_t k = 0; k < batches; ++k) {
        double s = 0.0;
        for (std::size_t i = k * b; i < (k + 1) * b; ++i) s += x[i];
        means.push_back(s / static_cast<double>(b));
    }
    double mu = 0.0;
    for (double m : means) mu += m;
    mu /= static_cast<double>(batches);
    double ss = 0.0;
    for (double m : means) ss += (m - mu) * (m - mu);
    return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

Outcome sampler_correctness() {
    bool ok = true;
    std::string d;

    // Exponential data, single-interval PE, no frailty: Gamma(a + n, b + sum t) posterior.
    std::mt19937_64 rng(4242);
    std::exponential_distribution<double> e(1.5);
    Dataset data;
    double total = 0.0;
    const int n = 80;
    for (int i = 0; i < n; ++i) {
        data.records.push_back({i, e(rng), 1, {}});
        total += data.records.back().time;
    }
    const double a = 3.0, b = 2.0;
    const double post_mean = (a + n) / (b + total);
    const double post_sd = std::sqrt(a + n) / (b + total);
    FitConfig cfg;
    cfg.chains = 4;
    cfg.chain.iterations = 10000;
    cfg.chain.burnin = 2000;
    cfg.chain.seed = 11;
    cfg.priors.baseline_shape = a;
    cfg.priors.baseline_rate = b;
    const auto fit = fit_model(data, ModelSpec::pe(TimeGrid(), Frailty::none), cfg);
    const double ess = fit.diagnostics.ess[0];
    const double z_mean = (fit.summary[0].mean - post_mean) / (post_sd / std::sqrt(ess));
    const double z_sd = (fit.summary[0].sd - post_sd) / (post_sd / std::sqrt(2.0 * ess));
    ok &= std::abs(z_mean) < 3.0 && std::abs(z_sd) < 3.0;
    d += "conjugate mean z=" + fmt(z_mean, 3) + " sd z=" + fmt(z_sd, 3);

    ChainConfig cc;
    cc.iterations = 52000;
    cc.burnin = 2000;
    cc.seed = 2718;
    const auto res = run_chain({2.5}, [](std::span<const double> z) { return -0.5 * z[0] * z[0]; }, cc);
    const auto x = res.draws.column(0);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    std::vector<double> sq;
    for (double v : x) sq.push_back((v - mean) * (v - mean));
    double var = 0.0;
    for (double v : sq) var += v;
    var /= static_cast<double>(x.size() - 1);
    const double zm = mean / batch_means_se(x);
    const double zv = (var - 1.0) / batch_means_se(sq);
    ok &= std::abs(zm) < 3.0 && std::abs(zv) < 3.0;
    d += "; normal mean z=" + fmt(zm, 3) + " var z=" + fmt(zv, 3);
    return {ok, d};
}

Scenario recovery_scenario() {
    Scenario sc;
    sc.spec = ModelSpec::pe(TimeGrid({0.0, 0.5, 1.5}), Frailty::gamma);
    sc.truth.lambda = {0.5, 1.0, 1.5};
    sc.truth.beta = {0.5, -0.5};
    sc.truth.theta = 0.5;
    sc.n_clusters = 100;
    sc.cluster_size = 2;
    sc.covariates = {CovariateKind::normal, CovariateKind::bernoulli};
    sc.censoring = {CensoringKind::exponential, 0.0, 0.2, {}};
    sc.seed = 2024;
    return sc;
}

Outcome parameter_recovery() {
    const auto sc = recovery_scenario();
    FitConfig fit;  // 4 chains, 10000 iterations, 5000 burn-in
    McStudyConfig mc;
    mc.replicas = 100;
    const auto study = run_monte_carlo(sc, bayes_fitter(sc.spec, fit), mc);
    bool ok = true;
    std::ostringstream rows;
    for (const auto& r : study.rows) {
        rows << "\n    " << r.parameter << " truth=" << fmt(r.truth) << " est=" << fmt(r.est) << " rb%=" << fmt(r.rb_percent, 4)
             << " ase=" << fmt(r.ase, 4) << " sde=" << fmt(r.sde, 4) << " cp=" << fmt(r.cp, 3) << " m_c=" << r.m_c;
        if (r.parameter.rfind("beta", 0) == 0) ok &= std::abs(r.rb_percent) <= 10.0 && r.cp >= 0.88 && r.cp <= 0.99;
    }
    for (const auto& w : study.warnings) rows << "\n    WARN " << w;
    return {ok, "M_C=100 flagged=" + std::to_string(study.failed) + rows.str()};
}

Outcome model_selection() {
    // Truth A: PE hazard that jumps up then down. Truth B: smooth convex BP hazard.
    // Each replica is fitted with the default structures a user would pick:
    // a 5-interval quantile grid and a degree-5 polynomial on 1.01 x max time.
    Scenario pe, bp;
    pe.spec = ModelSpec::pe(TimeGrid({0.0, 1.0, 2.0}), Frailty::gamma);
    pe.truth.lambda = {0.2, 1.5, 0.4};
    pe.seed = 31;
    bp.spec = ModelSpec::bp(3, 3.0, Frailty::gamma);
    bp.truth.gamma_coef = {0.05, 0.2, 1.0, 4.0};
    bp.seed = 32;
    for (auto* s : {&pe, &bp}) {
        s->truth.beta = {0.5, -0.5};
        s->truth.theta = 0.5;
        s->n_clusters = 100;
        s->cluster_size = 2;
        s->covariates = {CovariateKind::normal, CovariateKind::bernoulli};
        s->censoring = {CensoringKind::exponential, 0.0, 0.2, {}};
        s->censoring.rate = tune_censoring_rate(*s);
    }
    FitConfig cfg;
    cfg.chain.iterations = 4000;
    cfg.chain.burnin = 2000;

    const int reps = 20;
    int correct[2] = {0, 0};
    bool ordering_ok = true;
    const Scenario* truths[2] = {&pe, &bp};
    for (int which = 0; which < 2; ++which) {
        const auto& sc = *truths[which];
        std::vector<int> hits(reps, 0);
        std::vector<int> order_bad(reps, 0);
        parallel_for(reps, default_thread_count(), [&](std::size_t r) {
            auto rng = make_rng(sc.seed, {r, 0});
            const auto data = simulate_dataset(sc, rng);
            auto c = cfg;
            c.threads = 1;
            c.chain.seed = make_rng(sc.seed, {r, 1})();
            const auto fp = fit_model(data, ModelSpec::pe(build_time_grid(event_times(data), 5), Frailty::gamma), c);
            const auto fb = fit_model(data, ModelSpec::bp(5, 1.01 * max_time(data), Frailty::gamma), c);
            const auto ranking = compare({io::named_waic_from_report(io::fit_report_json(fp, data, "pe"), "pe"),
                                          io::named_waic_from_report(io::fit_report_json(fb, data, "bp"), "bp")});
            const auto report = io::compare_report_json(ranking);
            const std::string lower = fp.waic.waic < fb.waic.waic ? "pe" : "bp";
            const auto& models = report.at("models");
            if (report.at("best").get<std::string>() != lower || models.at(0).at("model").get<std::string>() != lower ||
                !(models.at(0).at("waic").get<double>() <= models.at(1).at("waic").get<double>()) ||
                models.at(0).at("delta").get<double>() != 0.0)
                order_bad[r] = 1;
            hits[r] = (lower == (which == 0 ? "pe" : "bp")) ? 1 : 0;
        });
        for (int r = 0; r < reps; ++r) {
            correct[which] += hits[r];
            if (order_bad[r]) ordering_ok = false;
        }
    }
    const bool ok = correct[0] >= 0.6 * reps && correct[1] >= 0.6 * reps && ordering_ok;
    return {ok, "pe truth " + std::to_string(correct[0]) + "/" + std::to_string(reps) + ", bp truth " +
                    std::to_string(correct[1]) + "/" + std::to_string(reps) +
                    ", compare ordering " + (ordering_ok ? "ascending" : "WRONG")};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome determinism(const std::string& cli) {
    if (cli.empty() || !fs::exists(cli)) return {false, "frailtykit executable not found (pass --cli)"};
    const auto dir = fs::temp_directory_path() / ("frailtykit_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream sc(dir / "scenario.json");
        sc << R"({
  "seed": 99,
  "n_clusters": 30,
  "cluster_size": 3,
  "model": {"baseline": "pe", "frailty": "gamma", "cutpoints": [0, 0.6]},
  "truth": {"lambda": [0.8, 1.2], "beta": [0.4], "theta": 0.6},
  "covariates": ["normal"],
  "censoring": {"scheme": "exponential", "target": 0.25},
  "fit": {"iterations": 1500, "burnin": 500, "chains": 3, "max_rhat": 100}
})";
    }
    ::setenv("FRAILTYKIT_THREADS", "2", 1);
    auto run = [&](const std::string& args) {
        const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    const std::string scen = (dir / "scenario.json").string();
    bool ok = run("simulate --config \"" + scen + "\" --out \"" + (dir / "data").string() + "\"") == 0;
    const std::string data = (dir / "data" / "dataset.csv").string();
    for (const char* sub : {"fit1", "fit2"})
        ok &= run("fit --data \"" + data + "\" --model bp --frailty gamma --iter 2000 --burnin 1000 --chains 2 --seed 5 --draws --out \"" +
                  (dir / sub).string() + "\"") == 0;
    for (const char* sub : {"mc1", "mc2"})
        ok &= run("mc-study --config \"" + scen + "\" --replicas 6 --out \"" + (dir / sub).string() + "\"") == 0;
    if (!ok) return {false, "a CLI run failed; outputs left in " + dir.string()};

    int files = 0;
    bool same = true;
    for (const char* f : {"fit_report.json", "posterior_summary.csv", "draws.csv"}) {
        same &= slurp(dir / "fit1" / f) == slurp(dir / "fit2" / f) && !slurp(dir / "fit1" / f).empty();
        ++files;
    }
    for (const char* f : {"mc_metrics.csv", "replicas.csv"}) {
        same &= slurp(dir / "mc1" / f) == slurp(dir / "mc2" / f) && !slurp(dir / "mc1" / f).empty();
        ++files;
    }
    if (same) fs::remove_all(dir);
    return {same, std::to_string(files) + " output files compared, threads=2" +
                      (same ? std::string() : ", mismatch kept in " + dir.string())};
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--cli" && i + 1 < argc) cli = argv[++i];
        else if (a == "--only" && i + 1 < argc) only.insert(std::atoi(argv[++i]));
        else {
            std::cerr << "usage: acceptance [--cli PATH] [--only N]...\n";
            return 2;
        }
    }

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"likelihood matches frailty integral", likelihood_oracle},
        {"cumulative hazards match quadrature", cumulative_hazard_oracle},
        {"Monte Carlo metric arithmetic", mc_arithmetic},
        {"WAIC arithmetic", waic_arithmetic},
        {"sampler correctness", sampler_correctness},
        {"parameter recovery", parameter_recovery},
        {"model selection by WAIC", model_selection},
        {"determinism", [&] { return determinism(cli); }},
    };

    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[k].first << ": " << o.detail
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
