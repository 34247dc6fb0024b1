#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "frailtykit/errors.hpp"
#include "frailtykit/types.hpp"

namespace frailtykit {

/// Linearly interpolated sample quantile (the usual "type 7" rule).
inline double quantile_sorted(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw DomainError("quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Grid with J intervals whose interior cutpoints sit at the j/J empirical
/// quantiles of the event times.
inline TimeGrid build_time_grid(std::vector<double> times, int intervals) {
    if (intervals < 1) throw DomainError("interval count must be >= 1");
    std::sort(times.begin(), times.end());
    std::vector<double> uniq(times);
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < static_cast<std::size_t>(intervals))
        throw DomainError("degenerate grid: fewer distinct event times than intervals");
    std::vector<double> cuts{0.0};
    for (int j = 1; j < intervals; ++j) {
        const double q = quantile_sorted(times, static_cast<double>(j) / intervals);
        if (!(q > cuts.back())) throw DomainError("degenerate grid: duplicate cutpoint at quantile " + std::to_string(j) + "/" + std::to_string(intervals));
        cuts.push_back(q);
    }
    return TimeGrid(std::move(cuts));
}

// ---------------------------------------------------------------------------
// Piecewise exponential

inline double pe_hazard(double t, std::span<const double> lambda, const TimeGrid& grid) {
    if (!(t > 0.0)) throw DomainError("hazard evaluated at t <= 0");
    return lambda[grid.interval_of(t)];
}

inline double pe_cum_hazard(double t, std::span<const double> lambda, const TimeGrid& grid) {
    if (!(t > 0.0)) throw DomainError("cumulative hazard evaluated at t <= 0");
    const auto& a = grid.cutpoints();
    double h = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double right = j + 1 < a.size() ? a[j + 1] : t;
        if (t <= right) {
            h += lambda[j] * (t - a[j]);
            break;
        }
        h += lambda[j] * (right - a[j]);
    }
    return h;
}

// ---------------------------------------------------------------------------
// Bernstein polynomial

namespace detail {

/// Evaluates sum_k coef[k] * b_{k,n}(u) with n = coef.size() - 1 by de Casteljau.
inline double de_casteljau(std::span<const double> coef, double u) {
    constexpr std::size_t kInline = 64;
    std::array<double, kInline> small{};
    std::vector<double> big;
    double* w = small.data();
    if (coef.size() > kInline) {
        big.resize(coef.size());
        w = big.data();
    }
    std::copy(coef.begin(), coef.end(), w);
    const double v = 1.0 - u;
    for (std::size_t r = coef.size() - 1; r > 0; --r)
        for (std::size_t k = 0; k < r; ++k) w[k] = v * w[k] + u * w[k + 1];
    return w[0];
}

}  // namespace detail

/// All degree-m Bernstein basis values b_{0,m}(u) ... b_{m,m}(u).
inline std::vector<double> bernstein_basis(int m, double u) {
    std::vector<double> b(static_cast<std::size_t>(m) + 1, 0.0);
    b[0] = 1.0;
    const double v = 1.0 - u;
    for (int r = 1; r <= m; ++r) {
        for (int k = r; k > 0; --k) b[k] = v * b[k] + u * b[k - 1];
        b[0] *= v;
    }
    return b;
}

/// Hazard sum_k gamma_k b_{k,m}(t/tau); frozen at its value at tau beyond the horizon.
inline double bp_hazard(double t, std::span<const double> gamma_coef, double tau) {
    if (t < 0.0) throw DomainError("hazard evaluated at t < 0");
    if (t >= tau) return gamma_coef.back();
    return detail::de_casteljau(gamma_coef, t / tau);
}

/// Closed-form integral of bp_hazard. Integrating the degree-m basis raises it
/// to degree m+1 with cumulative-sum coefficients; linear beyond tau.
inline double bp_cum_hazard(double t, std::span<const double> gamma_coef, double tau) {
    if (t < 0.0) throw DomainError("cumulative hazard evaluated at t < 0");
    const std::size_t n = gamma_coef.size();  // m + 1
    const double scale = tau / static_cast<double>(n);
    if (t >= tau) {
        double total = 0.0;
        for (double g : gamma_coef) total += g;
        return scale * total + gamma_coef.back() * (t - tau);
    }
    constexpr std::size_t kInline = 64;
    std::array<double, kInline + 1> small{};
    std::vector<double> big;
    double* c = small.data();
    if (n + 1 > small.size()) {
        big.resize(n + 1);
        c = big.data();
    }
    c[0] = 0.0;
    for (std::size_t j = 1; j <= n; ++j) c[j] = c[j - 1] + scale * gamma_coef[j - 1];
    return detail::de_casteljau(std::span<const double>(c, n + 1), t / tau);
}

// ---------------------------------------------------------------------------
// Family dispatch

struct HazardValue {
    double hazard;
    double cum_hazard;
};

inline double baseline_hazard(double t, std::span<const double> coef, const ModelSpec& spec) {
    return spec.baseline == Baseline::pe ? pe_hazard(t, coef, spec.grid) : bp_hazard(t, coef, spec.tau);
}

inline double baseline_cum_hazard(double t, std::span<const double> coef, const ModelSpec& spec) {
    return spec.baseline == Baseline::pe ? pe_cum_hazard(t, coef, spec.grid) : bp_cum_hazard(t, coef, spec.tau);
}

inline HazardValue baseline_eval(double t, std::span<const double> coef, const ModelSpec& spec) {
    return {baseline_hazard(t, coef, spec), baseline_cum_hazard(t, coef, spec)};
}

}  // namespace frailtykit
