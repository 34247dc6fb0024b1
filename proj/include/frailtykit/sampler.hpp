#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "frailtykit/errors.hpp"
#include "frailtykit/matrix.hpp"
#include "frailtykit/rng.hpp"

namespace frailtykit {

struct ChainConfig {
    int iterations = 10000;
    int burnin = 5000;
    int thin = 1;
    std::uint64_t seed = 1;
    double initial_scale = 0.1;
    int adapt_batch = 50;
    double target_acceptance = 0.44;

    void validate() const {
        if (iterations <= burnin || burnin < 0) throw ValidationError("need iterations > burnin >= 0");
        if (thin < 1) throw ValidationError("thin must be >= 1");
        if (!(initial_scale > 0.0)) throw ValidationError("initial proposal scale must be positive");
        if (adapt_batch < 1) throw ValidationError("adaptation batch must be >= 1");
    }

    /// Retained draws per chain: (iterations - burnin) / thin, rounded down.
    int retained() const noexcept { return (iterations - burnin) / thin; }
};

struct ChainResult {
    Matrix draws;                         // retained states, one row per draw
    std::vector<double> log_density;      // target value at each retained draw
    std::vector<double> acceptance_rate;  // per block, post burn-in
    std::vector<double> proposal_scale;   // per block, frozen values
};

/// Component-wise adaptive random-walk Metropolis. Each coordinate is its own
/// block with a Gaussian proposal whose log-scale is nudged toward the target
/// acceptance after every batch during burn-in, then frozen.
///
/// The random stream is (config.seed, stream), so chains with distinct stream
/// ids are independent and reruns are bit-identical.
template <class Target>
ChainResult run_chain(std::vector<double> state, const Target& target, const ChainConfig& config,
                      std::uint64_t stream = 0) {
    config.validate();
    const std::size_t dim = state.size();
    double current = target(std::span<const double>(state));
    if (!std::isfinite(current)) throw InitializationError("initial state has non-finite log density");

    auto rng = make_rng(config.seed, {stream});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    std::vector<double> log_scale(dim, std::log(config.initial_scale));
    std::vector<int> batch_accepts(dim, 0);
    std::vector<long> kept_accepts(dim, 0);
    int batch_no = 0;

    ChainResult out;
    out.draws = Matrix(static_cast<std::size_t>(config.retained()), dim);
    out.log_density.reserve(static_cast<std::size_t>(config.retained()));
    std::size_t next_row = 0;

    for (int it = 0; it < config.iterations; ++it) {
        const bool adapting = it < config.burnin;
        for (std::size_t k = 0; k < dim; ++k) {
            const double old = state[k];
            state[k] = old + std::exp(log_scale[k]) * normal(rng);
            const double proposed = target(std::span<const double>(state));
            const double log_u = std::log(uniform(rng));
            if (std::isfinite(proposed) && log_u < proposed - current) {
                current = proposed;
                if (adapting) ++batch_accepts[k];
                else ++kept_accepts[k];
            } else {
                state[k] = old;
            }
        }
        if (adapting && (it + 1) % config.adapt_batch == 0) {
            ++batch_no;
            const double delta = std::min(0.25, 1.0 / std::sqrt(static_cast<double>(batch_no)));
            for (std::size_t k = 0; k < dim; ++k) {
                const double rate = static_cast<double>(batch_accepts[k]) / config.adapt_batch;
                log_scale[k] += rate > config.target_acceptance ? delta : -delta;
                batch_accepts[k] = 0;
            }
        }
        if (!adapting && (it - config.burnin + 1) % config.thin == 0 &&
            next_row < out.draws.rows()) {
            out.draws.set_row(next_row++, state);
            out.log_density.push_back(current);
        }
    }

    const double post = static_cast<double>(config.iterations - config.burnin);
    for (std::size_t k = 0; k < dim; ++k) {
        out.acceptance_rate.push_back(static_cast<double>(kept_accepts[k]) / post);
        out.proposal_scale.push_back(std::exp(log_scale[k]));
    }
    return out;
}

}  // namespace frailtykit
