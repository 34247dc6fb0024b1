#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "frailtykit/fit.hpp"
#include "frailtykit/parallel.hpp"
#include "frailtykit/posterior.hpp"
#include "frailtykit/simulation.hpp"

namespace frailtykit {

/// Monte Carlo summary of one parameter across replicas.
struct McMetricsRow {
    std::string parameter;
    double truth = 0.0;
    double est = 0.0;
    double rb_percent = 0.0;  // NaN when truth == 0
    double ase = 0.0;
    double sde = 0.0;
    double cp = 0.0;
    int m_c = 0;
};

/// est, relative bias (%), average standard error, standard deviation of the
/// estimates (1/(M_C - 1)) and coverage. Throws when truth == 0 because the
/// relative bias is undefined; see mc_metrics_unscaled for that case.
inline McMetricsRow mc_metrics(double truth, std::span<const double> estimates, std::span<const double> ses,
                               const std::vector<bool>& covered) {
    if (truth == 0.0) throw DomainError("relative bias undefined for a true value of 0");
    const std::size_t m = estimates.size();
    if (m < 2) throw InsufficientDrawsError("Monte Carlo metrics need at least 2 replicas");
    if (ses.size() != m || covered.size() != m) throw ValidationError("replica vectors differ in length");
    const double mc = static_cast<double>(m);
    McMetricsRow row;
    row.truth = truth;
    row.m_c = static_cast<int>(m);
    double rel = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        row.est += estimates[k];
        rel += (estimates[k] - truth) / std::abs(truth);
        row.ase += ses[k];
        row.cp += covered[k] ? 1.0 : 0.0;
    }
    row.est /= mc;
    row.rb_percent = 100.0 / mc * rel;
    row.ase /= mc;
    row.cp /= mc;
    double ss = 0.0;
    for (double e : estimates) ss += (e - row.est) * (e - row.est);
    row.sde = std::sqrt(ss / (mc - 1.0));
    return row;
}

/// Same as mc_metrics but tolerates truth == 0, leaving rb_percent as NaN.
inline McMetricsRow mc_metrics_unscaled(double truth, std::span<const double> estimates, std::span<const double> ses,
                                        const std::vector<bool>& covered) {
    if (truth != 0.0) return mc_metrics(truth, estimates, ses, covered);
    auto row = mc_metrics(1.0, estimates, ses, covered);
    row.truth = 0.0;
    row.rb_percent = std::numeric_limits<double>::quiet_NaN();
    return row;
}

/// What a fitter reports for one replica, per parameter.
struct ReplicaFit {
    std::vector<double> estimate;
    std::vector<double> se;
    std::vector<double> lower;
    std::vector<double> upper;
    double max_rhat = 1.0;
    double min_ess = 0.0;
    bool failed = false;  // diagnostics flagged the fit
    std::string note;
};

/// Fits one simulated dataset. Receives the dataset and a seed reserved for the replica.
using ReplicaFitter = std::function<ReplicaFit(const Dataset&, std::uint64_t)>;

struct McStudyConfig {
    int replicas = 100;
    double level = 0.95;
    double max_failed_fraction = 0.20;
    unsigned threads = 0;
};

struct ReplicaRecord {
    int replica = 0;
    bool ok = false;  // a fit was produced
    ReplicaFit fit;
};

struct McStudy {
    std::vector<std::string> names;
    std::vector<double> truth;
    std::vector<McMetricsRow> rows;
    std::vector<ReplicaRecord> replicas;
    std::vector<std::string> warnings;
    int failed = 0;  // replicas flagged by diagnostics or with no fit at all
    bool study_failed = false;
    double level = 0.95;
};

/// Posterior mean / sd / equal-tailed interval from a full Bayesian fit.
/// A replica is flagged when diagnostics are unavailable or any split R-hat
/// exceeds `max_rhat`.
inline ReplicaFitter bayes_fitter(ModelSpec spec, FitConfig config, double max_rhat = 1.1) {
    return [spec = std::move(spec), config, max_rhat](const Dataset& data, std::uint64_t seed) {
        auto cfg = config;
        cfg.chain.seed = seed;
        cfg.threads = 1;
        const auto fit = fit_model(data, spec, cfg);
        ReplicaFit out;
        for (const auto& s : fit.summary) {
            out.estimate.push_back(s.mean);
            out.se.push_back(s.sd);
            out.lower.push_back(s.lower);
            out.upper.push_back(s.upper);
        }
        out.max_rhat = fit.diagnostics.available ? fit.diagnostics.max_rhat() : std::numeric_limits<double>::quiet_NaN();
        out.min_ess = fit.diagnostics.available ? fit.diagnostics.min_ess() : std::numeric_limits<double>::quiet_NaN();
        if (!fit.diagnostics.available) {
            out.failed = true;
            out.note = "diagnostics unavailable";
        } else if (out.max_rhat > max_rhat) {
            out.failed = true;
            out.note = "split R-hat above threshold";
        }
        return out;
    };
}

/// Replica k simulates with stream (seed, k, 0) and fits with a seed drawn from
/// stream (seed, k, 1). Aggregation runs in replica order.
inline McStudy run_monte_carlo(const Scenario& scenario, const ReplicaFitter& fitter, const McStudyConfig& config) {
    scenario.validate();
    if (config.replicas < 2) throw ValidationError("a Monte Carlo study needs at least 2 replicas");
    Scenario sc = scenario;
    if (sc.censoring.kind == CensoringKind::exponential && !sc.censoring.rate)
        sc.censoring.rate = tune_censoring_rate(sc);

    McStudy study;
    study.level = config.level;
    const ParameterLayout layout(sc.spec, sc.covariate_names());
    study.names = layout.names();
    study.truth = layout.pack(sc.truth);

    const auto m = static_cast<std::size_t>(config.replicas);
    study.replicas.resize(m);
    const unsigned threads = config.threads ? config.threads : default_thread_count();
    parallel_for(m, threads, [&](std::size_t k) {
        auto& rec = study.replicas[k];
        rec.replica = static_cast<int>(k) + 1;
        auto sim_rng = make_rng(sc.seed, {k, 0});
        const auto data = simulate_dataset(sc, sim_rng);
        const std::uint64_t fit_seed = make_rng(sc.seed, {k, 1})();
        try {
            rec.fit = fitter(data, fit_seed);
            if (rec.fit.estimate.size() != study.names.size())
                throw ValidationError("fitter returned the wrong number of parameters");
            rec.ok = true;
        } catch (const NumericalError& e) {
            rec.ok = false;
            rec.fit = ReplicaFit{};
            rec.fit.failed = true;
            rec.fit.note = e.what();
        }
    });

    for (const auto& r : study.replicas)
        if (!r.ok || r.fit.failed) ++study.failed;
    study.study_failed = static_cast<double>(study.failed) > config.max_failed_fraction * static_cast<double>(m);

    for (std::size_t p = 0; p < study.names.size(); ++p) {
        std::vector<double> est, se;
        std::vector<bool> covered;
        for (const auto& r : study.replicas) {
            if (!r.ok) continue;
            est.push_back(r.fit.estimate[p]);
            se.push_back(r.fit.se[p]);
            covered.push_back(r.fit.lower[p] <= study.truth[p] && study.truth[p] <= r.fit.upper[p]);
        }
        if (est.size() < 2) {
            study.study_failed = true;
            continue;
        }
        auto row = mc_metrics_unscaled(study.truth[p], est, se, covered);
        row.parameter = study.names[p];
        if (row.ase < row.sde && row.cp < config.level)
            study.warnings.push_back(row.parameter + ": ASE < SDE with CP below nominal level");
        if (row.truth == 0.0)
            study.warnings.push_back(row.parameter + ": truth is 0, relative bias undefined; absolute bias " +
                                     std::to_string(row.est - row.truth));
        study.rows.push_back(std::move(row));
    }
    return study;
}

}  // namespace frailtykit
