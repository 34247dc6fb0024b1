#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "frailtykit/errors.hpp"
#include "frailtykit/matrix.hpp"

namespace frailtykit {

/// Widely applicable information criterion from an S x n matrix of pointwise
/// log-likelihoods (rows = posterior draws, columns = exchangeable units).
struct WaicResult {
    double lppd = 0.0;
    double p_waic = 0.0;
    double elppd_waic = 0.0;
    double waic = 0.0;
    std::vector<double> pointwise_elppd;  // lppd_i - p_waic_i

    std::size_t n() const noexcept { return pointwise_elppd.size(); }
};

namespace detail {

inline void check_ll_matrix(const Matrix& ll) {
    if (ll.rows() < 1 || ll.cols() < 1) throw ValidationError("log-likelihood matrix must be non-empty");
    for (std::size_t s = 0; s < ll.rows(); ++s)
        for (std::size_t i = 0; i < ll.cols(); ++i)
            if (!std::isfinite(ll(s, i)))
                throw ValidationError("non-finite log-likelihood at draw " + std::to_string(s) + ", point " +
                                      std::to_string(i));
}

inline double log_mean_exp(const Matrix& ll, std::size_t i) {
    double mx = ll(0, i);
    for (std::size_t s = 1; s < ll.rows(); ++s) mx = std::max(mx, ll(s, i));
    double acc = 0.0;
    for (std::size_t s = 0; s < ll.rows(); ++s) acc += std::exp(ll(s, i) - mx);
    return mx + std::log(acc / static_cast<double>(ll.rows()));
}

/// Variance over draws with the 1/S normalization. Deviations are taken from
/// the first draw so a constant column gives exactly 0.
inline double population_variance(const Matrix& ll, std::size_t i) {
    const double S = static_cast<double>(ll.rows());
    const double ref = ll(0, i);
    double mean = 0.0;
    for (std::size_t s = 0; s < ll.rows(); ++s) mean += ll(s, i) - ref;
    mean /= S;
    double ss = 0.0;
    for (std::size_t s = 0; s < ll.rows(); ++s) {
        const double d = ll(s, i) - ref - mean;
        ss += d * d;
    }
    return ss / S;
}

}  // namespace detail

/// sum_i log( (1/S) sum_s exp(ll[s][i]) ), stabilized by log-sum-exp.
inline double lppd(const Matrix& ll) {
    detail::check_ll_matrix(ll);
    double total = 0.0;
    for (std::size_t i = 0; i < ll.cols(); ++i) total += detail::log_mean_exp(ll, i);
    return total;
}

/// Sum over points of the posterior variance of the log-likelihood (1/S form).
inline double p_waic(const Matrix& ll) {
    detail::check_ll_matrix(ll);
    if (ll.rows() < 2) throw InsufficientDrawsError("p_waic needs at least 2 draws");
    double total = 0.0;
    for (std::size_t i = 0; i < ll.cols(); ++i) total += detail::population_variance(ll, i);
    return total;
}

inline WaicResult waic(const Matrix& ll) {
    detail::check_ll_matrix(ll);
    if (ll.rows() < 2) throw InsufficientDrawsError("WAIC needs at least 2 draws");
    WaicResult r;
    r.pointwise_elppd.reserve(ll.cols());
    for (std::size_t i = 0; i < ll.cols(); ++i) {
        const double lp = detail::log_mean_exp(ll, i);
        const double pv = detail::population_variance(ll, i);
        r.lppd += lp;
        r.p_waic += pv;
        r.pointwise_elppd.push_back(lp - pv);
    }
    r.elppd_waic = r.lppd - r.p_waic;
    r.waic = -2.0 * r.elppd_waic;
    return r;
}

struct NamedWaic {
    std::string name;
    WaicResult result;
};

struct WaicRanking {
    std::string name;
    WaicResult result;
    double delta = 0.0;  // waic - best waic
};

/// Ranks models by ascending WAIC (lower is better); equal WAIC values are
/// ordered by name.
inline std::vector<WaicRanking> compare(const std::vector<NamedWaic>& models) {
    if (models.size() < 2) throw ValidationError("comparison needs at least two models");
    for (const auto& m : models)
        if (m.result.n() != models.front().result.n())
            throw IncomparableModelsError("models '" + models.front().name + "' and '" + m.name +
                                          "' have different pointwise units (" +
                                          std::to_string(models.front().result.n()) + " vs " +
                                          std::to_string(m.result.n()) + ")");
    std::vector<WaicRanking> out;
    for (const auto& m : models) out.push_back({m.name, m.result, 0.0});
    std::sort(out.begin(), out.end(), [](const WaicRanking& a, const WaicRanking& b) {
        if (a.result.waic != b.result.waic) return a.result.waic < b.result.waic;
        return a.name < b.name;
    });
    for (auto& r : out) r.delta = r.result.waic - out.front().result.waic;
    return out;
}

}  // namespace frailtykit
