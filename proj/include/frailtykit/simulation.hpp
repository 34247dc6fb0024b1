#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "frailtykit/baseline.hpp"
#include "frailtykit/errors.hpp"
#include "frailtykit/likelihood.hpp"
#include "frailtykit/rng.hpp"
#include "frailtykit/types.hpp"

namespace frailtykit {

/// Solves H0(t) = u for t. Closed form for PE; bisection on [0, tau] for BP,
/// with the linear frozen-hazard tail handled directly.
inline double invert_cum_hazard(double u, std::span<const double> coef, const ModelSpec& spec) {
    if (!(u > 0.0) || !std::isfinite(u)) throw DomainError("cumulative hazard target must be positive and finite");
    if (spec.baseline == Baseline::pe) {
        const auto& a = spec.grid.cutpoints();
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < a.size(); ++j) {
            const double seg = coef[j] * (a[j + 1] - a[j]);
            if (acc + seg >= u) return a[j] + (u - acc) / coef[j];
            acc += seg;
        }
        return a.back() + (u - acc) / coef.back();
    }
    const double tau = spec.tau;
    const double at_tau = bp_cum_hazard(tau, coef, tau);
    if (u >= at_tau) {
        if (!(coef.back() > 0.0)) throw NumericalError("cumulative hazard is bounded; cannot invert beyond tau");
        return tau + (u - at_tau) / coef.back();
    }
    const double tol = 1e-10 * std::max(1.0, u);
    double lo = 0.0;
    double hi = tau;
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double diff = bp_cum_hazard(mid, coef, tau) - u;
        if (std::abs(diff) < tol) break;
        if (diff < 0.0) lo = mid;
        else hi = mid;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    }
    return mid;
}

enum class CovariateKind { normal, bernoulli };
enum class CensoringKind { none, administrative, exponential };

struct Censoring {
    CensoringKind kind = CensoringKind::none;
    double time = 0.0;            // administrative cut-off
    double target = 0.0;          // exponential: desired censored fraction
    std::optional<double> rate;   // exponential: tuned rate, filled by tune_censoring_rate

    bool operator==(const Censoring&) const = default;
};

/// Data-generating design for one simulated study.
struct Scenario {
    ModelSpec spec;
    ParameterVector truth;
    int n_clusters = 100;
    int cluster_size = 2;
    std::vector<CovariateKind> covariates;
    Censoring censoring;
    std::uint64_t seed = 1;

    std::vector<std::string> covariate_names() const {
        std::vector<std::string> out;
        for (std::size_t k = 0; k < covariates.size(); ++k) out.push_back("x" + std::to_string(k + 1));
        return out;
    }

    void validate() const {
        if (n_clusters < 1 || cluster_size < 1) throw ValidationError("n_clusters and cluster_size must be >= 1");
        validate_parameters(truth, spec, covariates.size());
        if (spec.baseline == Baseline::bp && !(truth.gamma_coef.back() > 0.0))
            throw ValidationError("simulation needs a positive last Bernstein coefficient (tail hazard)");
        if (censoring.kind == CensoringKind::administrative && !(censoring.time > 0.0))
            throw ValidationError("administrative censoring time must be positive");
        if (censoring.kind == CensoringKind::exponential && !(censoring.target >= 0.0 && censoring.target < 1.0))
            throw ValidationError("target censoring proportion must lie in [0, 1)");
    }
};

namespace detail {

inline double positive_exponential(Rng& rng) {
    std::exponential_distribution<double> expo(1.0);
    double e = 0.0;
    while (!(e > 0.0)) e = expo(rng);
    return e;
}

inline double draw_frailty(const Scenario& sc, Rng& rng) {
    if (sc.spec.frailty == Frailty::none || sc.truth.theta == 0.0) return 1.0;
    std::gamma_distribution<double> g(1.0 / sc.truth.theta, sc.truth.theta);
    return g(rng);
}

inline std::vector<double> draw_covariates(const Scenario& sc, Rng& rng) {
    std::vector<double> x;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    for (auto kind : sc.covariates) x.push_back(kind == CovariateKind::normal ? normal(rng) : (coin(rng) ? 1.0 : 0.0));
    return x;
}

inline double draw_event_time(const Scenario& sc, double frailty, std::span<const double> x, Rng& rng) {
    double eta = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) eta += x[k] * sc.truth.beta[k];
    const double u = positive_exponential(rng) / (frailty * std::exp(eta));
    return invert_cum_hazard(u, sc.truth.baseline(sc.spec), sc.spec);
}

}  // namespace detail

/// Exponential censoring rate giving the scenario's target censored fraction,
/// found by bisection on E[1 - exp(-r T)] over a fixed Monte Carlo sample of
/// event times.
inline double tune_censoring_rate(const Scenario& sc, std::size_t sample_size = 20000) {
    sc.validate();
    if (sc.censoring.target == 0.0) return 0.0;
    auto rng = make_rng(0x5eedc0de, {static_cast<std::uint64_t>(sc.seed)});
    std::vector<double> times;
    times.reserve(sample_size);
    while (times.size() < sample_size) {
        const double z = detail::draw_frailty(sc, rng);
        for (int j = 0; j < sc.cluster_size && times.size() < sample_size; ++j) {
            const auto x = detail::draw_covariates(sc, rng);
            times.push_back(detail::draw_event_time(sc, z, x, rng));
        }
    }
    auto censored_fraction = [&](double rate) {
        double acc = 0.0;
        for (double t : times) acc += -std::expm1(-rate * t);
        return acc / static_cast<double>(times.size());
    };
    double lo = 0.0;
    double hi = 1.0;
    while (censored_fraction(hi) < sc.censoring.target) {
        hi *= 2.0;
        if (hi > 1e300) throw NumericalError("could not bracket censoring rate");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (censored_fraction(mid) < sc.censoring.target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// n_clusters x cluster_size records: frailty per cluster, inverse-transform
/// event times, then censoring. Cluster ids run 1..n_clusters.
inline Dataset simulate_dataset(const Scenario& sc, Rng& rng) {
    sc.validate();
    double cens_rate = 0.0;
    if (sc.censoring.kind == CensoringKind::exponential)
        cens_rate = sc.censoring.rate ? *sc.censoring.rate : tune_censoring_rate(sc);
    std::exponential_distribution<double> cens(cens_rate > 0.0 ? cens_rate : 1.0);

    Dataset data;
    data.covariate_names = sc.covariate_names();
    data.records.reserve(static_cast<std::size_t>(sc.n_clusters) * static_cast<std::size_t>(sc.cluster_size));
    for (int i = 0; i < sc.n_clusters; ++i) {
        const double z = detail::draw_frailty(sc, rng);
        for (int j = 0; j < sc.cluster_size; ++j) {
            ObservationRecord r;
            r.cluster_id = i + 1;
            r.covariates = detail::draw_covariates(sc, rng);
            const double t = detail::draw_event_time(sc, z, r.covariates, rng);
            r.time = t;
            r.status = 1;
            switch (sc.censoring.kind) {
                case CensoringKind::none:
                    break;
                case CensoringKind::administrative:
                    if (t > sc.censoring.time) {
                        r.time = sc.censoring.time;
                        r.status = 0;
                    }
                    break;
                case CensoringKind::exponential:
                    if (cens_rate > 0.0) {
                        double c = 0.0;
                        while (!(c > 0.0)) c = cens(rng);
                        if (c < t) {
                            r.time = c;
                            r.status = 0;
                        }
                    }
                    break;
            }
            data.records.push_back(std::move(r));
        }
    }
    return data;
}

}  // namespace frailtykit
