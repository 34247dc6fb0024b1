#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "frailtykit/baseline.hpp"
#include "frailtykit/errors.hpp"
#include "frailtykit/matrix.hpp"

namespace frailtykit {

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double median = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// Mean, sample sd and equal-tailed interval of one parameter's draws.
inline ParameterSummary summarize_draws(std::string name, std::span<const double> draws, double level = 0.95) {
    if (draws.size() < 2) throw InsufficientDrawsError("posterior summary needs at least 2 draws");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("credible level must lie in (0, 1)");
    ParameterSummary s;
    s.name = std::move(name);
    const double n = static_cast<double>(draws.size());
    for (double x : draws) s.mean += x;
    s.mean /= n;
    double ss = 0.0;
    for (double x : draws) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
    std::vector<double> sorted(draws.begin(), draws.end());
    std::sort(sorted.begin(), sorted.end());
    const double tail = (1.0 - level) / 2.0;
    s.median = quantile_sorted(sorted, 0.5);
    s.lower = quantile_sorted(sorted, tail);
    s.upper = quantile_sorted(sorted, 1.0 - tail);
    return s;
}

inline std::vector<ParameterSummary> summarize_posterior(const Matrix& draws, const std::vector<std::string>& names,
                                                         double level = 0.95) {
    if (names.size() != draws.cols()) throw ValidationError("parameter name count does not match draw columns");
    std::vector<ParameterSummary> out;
    for (std::size_t c = 0; c < draws.cols(); ++c) out.push_back(summarize_draws(names[c], draws.column(c), level));
    return out;
}

// ---------------------------------------------------------------------------
// Convergence diagnostics

struct Diagnostics {
    bool available = false;
    std::vector<double> rhat;  // split R-hat per parameter
    std::vector<double> ess;   // effective sample size per parameter

    double max_rhat() const {
        double m = 0.0;
        for (double r : rhat) m = std::max(m, r);
        return m;
    }
    double min_ess() const {
        double m = std::numeric_limits<double>::infinity();
        for (double e : ess) m = std::min(m, e);
        return ess.empty() ? 0.0 : m;
    }
};

namespace detail {

/// Draws of each chain split into first and second halves.
inline std::vector<std::vector<double>> split_halves(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<double>> out;
    for (const auto& c : chains) {
        const std::size_t half = c.size() / 2;
        out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
        out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
    }
    return out;
}

struct ChainMoments {
    std::vector<double> means;
    double within = 0.0;    // W: mean of per-chain sample variances
    double var_plus = 0.0;  // (n-1)/n W + B/n
};

inline ChainMoments chain_moments(const std::vector<std::vector<double>>& chains) {
    const double m = static_cast<double>(chains.size());
    const double n = static_cast<double>(chains.front().size());
    ChainMoments mo;
    double grand = 0.0;
    for (const auto& c : chains) {
        double mean = 0.0;
        for (double x : c) mean += x;
        mean /= n;
        double ss = 0.0;
        for (double x : c) ss += (x - mean) * (x - mean);
        mo.within += ss / (n - 1.0);
        mo.means.push_back(mean);
        grand += mean;
    }
    mo.within /= m;
    grand /= m;
    double between_over_n = 0.0;
    for (double mean : mo.means) between_over_n += (mean - grand) * (mean - grand);
    between_over_n = m > 1.0 ? between_over_n / (m - 1.0) : 0.0;
    mo.var_plus = (n - 1.0) / n * mo.within + between_over_n;
    return mo;
}

inline double rhat_of(const std::vector<std::vector<double>>& chains) {
    const auto mo = chain_moments(chains);
    if (mo.within == 0.0) return mo.var_plus == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(mo.var_plus / mo.within);
}

/// Multi-chain ESS with Geyer's initial positive (monotone) sequence.
inline double ess_of(const std::vector<std::vector<double>>& chains) {
    const auto mo = chain_moments(chains);
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    const double total = static_cast<double>(m * n);
    if (mo.var_plus == 0.0) return total;

    auto mean_autocov = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            const auto& x = chains[c];
            const double mu = mo.means[c];
            double s = 0.0;
            for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mu) * (x[i + lag] - mu);
            acc += s / static_cast<double>(n);
        }
        return acc / static_cast<double>(m);
    };
    auto rho = [&](std::size_t lag) { return 1.0 - (mo.within - mean_autocov(lag)) / mo.var_plus; };

    double sum_pairs = 0.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t + 1 < n; t += 2) {
        const double r0 = t == 0 ? 1.0 : rho(t);
        double pair = r0 + rho(t + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        sum_pairs += pair;
        prev_pair = pair;
    }
    const double tau = std::max(-1.0 + 2.0 * sum_pairs, 1.0 / std::log10(total));
    return total / tau;
}

}  // namespace detail

/// Split R-hat and ESS for every parameter. `chains[c]` holds chain c's draws
/// (rows) for all parameters (columns). Needs at least 4 draws per chain and
/// either two chains or 100 draws.
inline Diagnostics diagnostics(const std::vector<Matrix>& chains) {
    Diagnostics d;
    if (chains.empty()) return d;
    const std::size_t n = chains.front().rows();
    for (const auto& c : chains)
        if (c.rows() != n || c.cols() != chains.front().cols()) return d;
    if (n < 4 || (chains.size() < 2 && n < 100)) return d;
    d.available = true;
    for (std::size_t p = 0; p < chains.front().cols(); ++p) {
        std::vector<std::vector<double>> per_chain;
        for (const auto& c : chains) per_chain.push_back(c.column(p));
        const auto halves = detail::split_halves(per_chain);
        d.rhat.push_back(detail::rhat_of(halves));
        d.ess.push_back(detail::ess_of(halves));
    }
    return d;
}

}  // namespace frailtykit
