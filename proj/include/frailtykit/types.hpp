#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "frailtykit/errors.hpp"

namespace frailtykit {

inline constexpr std::string_view kVersion = "0.1.0";

/// One subject of a clustered, right-censored sample.
struct ObservationRecord {
    std::int64_t cluster_id = 0;
    double time = 0.0;
    int status = 0;  // 1 = event, 0 = censored
    std::vector<double> covariates;

    bool operator==(const ObservationRecord&) const = default;
};

struct Dataset {
    std::vector<ObservationRecord> records;
    std::vector<std::string> covariate_names;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    std::size_t covariate_count() const noexcept { return covariate_names.size(); }

    bool operator==(const Dataset&) const = default;
};

inline void validate_dataset(const Dataset& data) {
    if (data.empty()) throw DomainError("dataset is empty");
    const std::size_t p = data.covariate_count();
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const auto& r = data.records[i];
        const auto where = " (record " + std::to_string(i + 1) + ")";
        if (!(r.time > 0.0) || !std::isfinite(r.time)) throw DomainError("time must be positive and finite" + where);
        if (r.status != 0 && r.status != 1) throw DomainError("status must be 0 or 1" + where);
        if (r.covariates.size() != p) throw DomainError("covariate length mismatch" + where);
        for (double x : r.covariates)
            if (!std::isfinite(x)) throw DomainError("non-finite covariate" + where);
    }
}

inline std::vector<double> event_times(const Dataset& data) {
    std::vector<double> out;
    for (const auto& r : data.records)
        if (r.status == 1) out.push_back(r.time);
    return out;
}

inline double max_time(const Dataset& data) {
    double m = 0.0;
    for (const auto& r : data.records) m = std::max(m, r.time);
    return m;
}

/// Left endpoints of the piecewise-exponential intervals. Interval j covers
/// (cutpoints[j], cutpoints[j+1]]; the last one is open-ended.
class TimeGrid {
public:
    TimeGrid() : cutpoints_{0.0} {}

    explicit TimeGrid(std::vector<double> cutpoints) : cutpoints_(std::move(cutpoints)) {
        if (cutpoints_.empty()) throw DomainError("time grid needs at least one interval");
        if (cutpoints_.front() != 0.0) throw DomainError("time grid must start at 0");
        for (std::size_t j = 1; j < cutpoints_.size(); ++j) {
            if (!(cutpoints_[j] > cutpoints_[j - 1]) || !std::isfinite(cutpoints_[j]))
                throw DomainError("time grid cutpoints must be finite and strictly increasing");
        }
    }

    std::size_t intervals() const noexcept { return cutpoints_.size(); }
    const std::vector<double>& cutpoints() const noexcept { return cutpoints_; }

    /// Index of the interval containing t > 0 (right-closed intervals).
    std::size_t interval_of(double t) const noexcept {
        auto it = std::lower_bound(cutpoints_.begin() + 1, cutpoints_.end(), t);
        return static_cast<std::size_t>(it - cutpoints_.begin()) - 1;
    }

    bool operator==(const TimeGrid&) const = default;

private:
    std::vector<double> cutpoints_;
};

enum class Baseline { pe, bp };
enum class Frailty { gamma, none };

inline std::string_view to_string(Baseline b) { return b == Baseline::pe ? "pe" : "bp"; }
inline std::string_view to_string(Frailty f) { return f == Frailty::gamma ? "gamma" : "none"; }

inline Baseline parse_baseline(std::string_view s) {
    if (s == "pe") return Baseline::pe;
    if (s == "bp") return Baseline::bp;
    throw ValidationError("unknown baseline '" + std::string(s) + "' (expected pe or bp)");
}

inline Frailty parse_frailty(std::string_view s) {
    if (s == "gamma") return Frailty::gamma;
    if (s == "none") return Frailty::none;
    throw ValidationError("unknown frailty '" + std::string(s) + "' (expected gamma or none)");
}

/// Model family: baseline hazard shape plus frailty distribution.
struct ModelSpec {
    Baseline baseline = Baseline::pe;
    Frailty frailty = Frailty::gamma;
    TimeGrid grid;       // used when baseline == pe
    int degree = 1;      // used when baseline == bp
    double tau = 1.0;    // used when baseline == bp

    static ModelSpec pe(TimeGrid grid, Frailty frailty) {
        ModelSpec s;
        s.baseline = Baseline::pe;
        s.frailty = frailty;
        s.grid = std::move(grid);
        return s;
    }

    static ModelSpec bp(int degree, double tau, Frailty frailty) {
        ModelSpec s;
        s.baseline = Baseline::bp;
        s.frailty = frailty;
        s.degree = degree;
        s.tau = tau;
        s.validate();
        return s;
    }

    /// Number of baseline coefficients (J rates or m+1 Bernstein weights).
    std::size_t baseline_size() const noexcept {
        return baseline == Baseline::pe ? grid.intervals() : static_cast<std::size_t>(degree) + 1;
    }

    void validate() const {
        if (baseline == Baseline::bp) {
            if (degree < 1) throw DomainError("Bernstein degree must be >= 1");
            if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("Bernstein horizon tau must be positive");
        }
    }

    bool operator==(const ModelSpec&) const = default;
};

/// Free parameters on their natural scale. Only the baseline block matching
/// the spec's family is used.
struct ParameterVector {
    std::vector<double> lambda;      // PE rates
    std::vector<double> gamma_coef;  // BP basis coefficients
    std::vector<double> beta;        // log hazard ratios
    double theta = 0.0;              // frailty variance

    const std::vector<double>& baseline(const ModelSpec& spec) const {
        return spec.baseline == Baseline::pe ? lambda : gamma_coef;
    }
    std::vector<double>& baseline(const ModelSpec& spec) {
        return spec.baseline == Baseline::pe ? lambda : gamma_coef;
    }

    bool operator==(const ParameterVector&) const = default;
};

inline void validate_parameters(const ParameterVector& params, const ModelSpec& spec, std::size_t p) {
    spec.validate();
    const auto& base = params.baseline(spec);
    if (base.size() != spec.baseline_size()) throw DomainError("baseline coefficient count does not match model");
    if (spec.baseline == Baseline::pe) {
        for (double l : base)
            if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("PE rates must be positive");
    } else {
        bool any_positive = false;
        for (double g : base) {
            if (!(g >= 0.0) || !std::isfinite(g)) throw DomainError("Bernstein coefficients must be nonnegative");
            any_positive = any_positive || g > 0.0;
        }
        if (!any_positive) throw DomainError("at least one Bernstein coefficient must be positive");
    }
    if (params.beta.size() != p) throw DomainError("beta length does not match covariate count");
    if (!(params.theta >= 0.0) || !std::isfinite(params.theta)) throw DomainError("theta must be nonnegative");
    if (spec.frailty == Frailty::gamma && !(params.theta > 0.0))
        throw DomainError("gamma frailty requires theta > 0");
}

}  // namespace frailtykit
