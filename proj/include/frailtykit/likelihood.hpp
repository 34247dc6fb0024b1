#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "frailtykit/baseline.hpp"
#include "frailtykit/types.hpp"

namespace frailtykit {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Records grouped by cluster id (ascending). Within a cluster, members are
/// ordered by (time, status, covariates) so sums do not depend on file order.
struct ClusterIndex {
    std::vector<std::int64_t> ids;
    std::vector<std::vector<std::size_t>> members;

    std::size_t size() const noexcept { return ids.size(); }
};

inline ClusterIndex index_clusters(const Dataset& data) {
    std::map<std::int64_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.records.size(); ++i) groups[data.records[i].cluster_id].push_back(i);
    ClusterIndex out;
    for (auto& [id, members] : groups) {
        std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            const auto& ra = data.records[a];
            const auto& rb = data.records[b];
            if (ra.time != rb.time) return ra.time < rb.time;
            if (ra.status != rb.status) return ra.status < rb.status;
            return ra.covariates < rb.covariates;
        });
        out.ids.push_back(id);
        out.members.push_back(std::move(members));
    }
    return out;
}

namespace detail {

struct RecordTerms {
    double log_event;  // log h0(t) + x'beta when status = 1, else 0
    double risk;       // H0(t) * exp(x'beta)
};

inline RecordTerms record_terms(const ObservationRecord& r, std::span<const double> coef,
                                std::span<const double> beta, const ModelSpec& spec) {
    double eta = 0.0;
    for (std::size_t k = 0; k < beta.size(); ++k) eta += r.covariates[k] * beta[k];
    const double risk = baseline_cum_hazard(r.time, coef, spec) * std::exp(eta);
    if (r.status == 0) return {0.0, risk};
    const double h = baseline_hazard(r.time, coef, spec);
    if (!(h > 0.0)) return {kNegInf, risk};
    return {std::log(h) + eta, risk};
}

/// Cluster contribution over records produced by `at(0..n-1)`, no argument checks.
template <class At>
double cluster_ll(std::size_t n, At&& at, const ParameterVector& params, const ModelSpec& spec) {
    const auto& coef = params.baseline(spec);
    if (spec.frailty == Frailty::none) {
        double ll = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const auto t = record_terms(at(j), coef, params.beta, spec);
            ll += t.log_event - t.risk;
        }
        return ll;
    }
    const double theta = params.theta;
    double log_events = 0.0;
    double risk = 0.0;
    int d = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& r = at(j);
        const auto t = record_terms(r, coef, params.beta, spec);
        log_events += t.log_event;
        risk += t.risk;
        d += r.status;
    }
    if (log_events == kNegInf) return kNegInf;
    // Gamma(1/theta + d) / Gamma(1/theta) * theta^d = prod_{k<d} (1 + k theta)
    double log_ratio = 0.0;
    for (int k = 1; k < d; ++k) log_ratio += std::log1p(k * theta);
    return log_ratio + log_events - (1.0 / theta + d) * std::log1p(theta * risk);
}

}  // namespace detail

/// Log marginal likelihood of one cluster, frailty integrated out in closed form.
inline double cluster_log_likelihood(std::span<const ObservationRecord> cluster, const ParameterVector& params,
                                     const ModelSpec& spec) {
    if (cluster.empty()) throw DomainError("empty cluster");
    validate_parameters(params, spec, cluster.front().covariates.size());
    return detail::cluster_ll(cluster.size(), [&](std::size_t j) -> const ObservationRecord& { return cluster[j]; },
                              params, spec);
}

namespace detail {

inline double total_ll(const Dataset& data, const ClusterIndex& clusters, const ParameterVector& params,
                       const ModelSpec& spec) {
    double total = 0.0;
    for (const auto& members : clusters.members) {
        total += cluster_ll(
            members.size(), [&](std::size_t j) -> const ObservationRecord& { return data.records[members[j]]; },
            params, spec);
    }
    return total;
}

inline void pointwise_ll(const Dataset& data, const ClusterIndex& clusters, const ParameterVector& params,
                         const ModelSpec& spec, std::span<double> out) {
    if (spec.frailty == Frailty::none) {
        const auto& coef = params.baseline(spec);
        for (std::size_t i = 0; i < data.records.size(); ++i) {
            const auto t = record_terms(data.records[i], coef, params.beta, spec);
            out[i] = t.log_event - t.risk;
        }
        return;
    }
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const auto& members = clusters.members[c];
        out[c] = cluster_ll(
            members.size(), [&](std::size_t j) -> const ObservationRecord& { return data.records[members[j]]; },
            params, spec);
    }
}

}  // namespace detail

inline double total_log_likelihood(const Dataset& data, const ParameterVector& params, const ModelSpec& spec) {
    validate_dataset(data);
    validate_parameters(params, spec, data.covariate_count());
    return detail::total_ll(data, index_clusters(data), params, spec);
}

/// Number of exchangeable units: clusters under gamma frailty, records otherwise.
inline std::size_t pointwise_size(const Dataset& data, const ClusterIndex& clusters, const ModelSpec& spec) {
    return spec.frailty == Frailty::gamma ? clusters.size() : data.size();
}

/// Per-unit log-likelihood: one entry per cluster (ascending id) under gamma
/// frailty, one per record (file order) without frailty.
inline std::vector<double> pointwise_log_likelihood(const Dataset& data, const ParameterVector& params,
                                                    const ModelSpec& spec) {
    validate_dataset(data);
    validate_parameters(params, spec, data.covariate_count());
    const auto clusters = index_clusters(data);
    std::vector<double> out(pointwise_size(data, clusters, spec));
    detail::pointwise_ll(data, clusters, params, spec, out);
    return out;
}

/// Conditional survival exp(-H0(t) e^{x'beta}) for a unit frailty.
inline double conditional_survival(double t, std::span<const double> x, const ParameterVector& params,
                                   const ModelSpec& spec) {
    double eta = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) eta += x[k] * params.beta[k];
    return std::exp(-baseline_cum_hazard(t, params.baseline(spec), spec) * std::exp(eta));
}

}  // namespace frailtykit
