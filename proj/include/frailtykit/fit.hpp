#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "frailtykit/matrix.hpp"
#include "frailtykit/parallel.hpp"
#include "frailtykit/posterior.hpp"
#include "frailtykit/sampler.hpp"
#include "frailtykit/summary.hpp"
#include "frailtykit/waic.hpp"

namespace frailtykit {

struct FitConfig {
    int chains = 4;
    ChainConfig chain;  // chain.seed is the master seed of the fit
    PriorSpec priors;
    double level = 0.95;
    double init_jitter = 0.1;  // sd of the per-chain perturbation of the start point
    unsigned threads = 0;      // 0 = default_thread_count()

    void validate() const {
        if (chains < 1) throw ValidationError("chain count must be >= 1");
        chain.validate();
        priors.validate();
        if (!(level > 0.0 && level < 1.0)) throw ValidationError("credible level must lie in (0, 1)");
    }
};

/// Retained draws of every chain on the natural parameter scale, plus the
/// pointwise log-likelihood at each draw (rows stacked in chain order).
struct PosteriorDraws {
    std::vector<std::string> names;
    std::vector<Matrix> chains;
    Matrix pointwise_ll;
    std::vector<std::vector<double>> acceptance_rate;  // [chain][parameter]
    std::uint64_t seed = 0;

    Matrix stacked() const {
        Matrix all;
        for (const auto& c : chains) all.append_rows(c);
        return all;
    }
};

struct FitResult {
    ModelSpec spec;
    FitConfig config;
    PosteriorDraws draws;
    std::vector<ParameterSummary> summary;
    Diagnostics diagnostics;
    WaicResult waic;
};

/// Crude data-driven start: occurrence/exposure rates, beta = 0, theta = 0.5.
inline ParameterVector initial_values(const Dataset& data, const ModelSpec& spec) {
    double events = 0.0;
    double exposure = 0.0;
    for (const auto& r : data.records) {
        events += r.status;
        exposure += r.time;
    }
    const double overall = (events + 0.5) / exposure;
    ParameterVector pv;
    if (spec.baseline == Baseline::pe) {
        const auto& a = spec.grid.cutpoints();
        std::vector<double> d(a.size(), 0.0);
        std::vector<double> e(a.size(), 0.0);
        for (const auto& r : data.records) {
            for (std::size_t j = 0; j < a.size() && r.time > a[j]; ++j) {
                const double right = j + 1 < a.size() ? std::min(r.time, a[j + 1]) : r.time;
                e[j] += right - a[j];
            }
            if (r.status == 1) d[spec.grid.interval_of(r.time)] += 1.0;
        }
        for (std::size_t j = 0; j < a.size(); ++j) pv.lambda.push_back(e[j] > 0.0 ? (d[j] + 0.5) / e[j] : overall);
    } else {
        pv.gamma_coef.assign(spec.baseline_size(), overall);
    }
    pv.beta.assign(data.covariate_count(), 0.0);
    pv.theta = spec.frailty == Frailty::gamma ? 0.5 : 0.0;
    return pv;
}

inline FitResult fit_model(const Dataset& data, const ModelSpec& spec, const FitConfig& config) {
    config.validate();
    const LogPosterior target(data, spec, config.priors);
    const auto& layout = target.layout();
    const auto start = layout.from_natural(layout.pack(initial_values(data, spec)));

    const auto nchains = static_cast<std::size_t>(config.chains);
    std::vector<ChainResult> results(nchains);
    const unsigned threads = config.threads ? config.threads : default_thread_count();
    parallel_for(nchains, threads, [&](std::size_t c) {
        auto rng = make_rng(config.chain.seed, {c, 1});
        std::normal_distribution<double> jitter(0.0, config.init_jitter);
        auto init = start;
        for (double& z : init) z += jitter(rng);
        results[c] = run_chain(std::move(init), target, config.chain, c);
    });

    FitResult fit;
    fit.spec = spec;
    fit.config = config;
    auto& draws = fit.draws;
    draws.names = layout.names();
    draws.seed = config.chain.seed;
    const std::size_t per_chain = static_cast<std::size_t>(config.chain.retained());
    draws.pointwise_ll = Matrix(per_chain * nchains, target.pointwise_size());
    for (std::size_t c = 0; c < nchains; ++c) {
        Matrix natural(per_chain, layout.dim());
        for (std::size_t s = 0; s < per_chain; ++s) {
            natural.set_row(s, layout.to_natural(results[c].draws.row(s)));
            target.pointwise(natural.row(s), draws.pointwise_ll.row(c * per_chain + s));
        }
        draws.chains.push_back(std::move(natural));
        draws.acceptance_rate.push_back(results[c].acceptance_rate);
    }

    fit.summary = summarize_posterior(draws.stacked(), draws.names, config.level);
    fit.diagnostics = diagnostics(draws.chains);
    fit.waic = waic(draws.pointwise_ll);
    return fit;
}

}  // namespace frailtykit
