#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "frailtykit/likelihood.hpp"
#include "frailtykit/types.hpp"

namespace frailtykit {

/// Independent priors. Positive parameters get Gamma(shape, rate), beta gets N(0, sd^2).
struct PriorSpec {
    double baseline_shape = 0.01;
    double baseline_rate = 0.01;
    double beta_sd = 10.0;
    double theta_shape = 0.01;
    double theta_rate = 0.01;

    void validate() const {
        for (double v : {baseline_shape, baseline_rate, beta_sd, theta_shape, theta_rate})
            if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("prior hyperparameters must be positive");
    }

    bool operator==(const PriorSpec&) const = default;
};

/// Maps the model's parameters to an unconstrained vector: log baseline
/// coefficients, then beta, then log theta (gamma frailty only).
class ParameterLayout {
public:
    ParameterLayout(ModelSpec spec, std::vector<std::string> covariate_names)
        : spec_(std::move(spec)), p_(covariate_names.size()) {
        const std::size_t nb = spec_.baseline_size();
        for (std::size_t j = 0; j < nb; ++j) {
            names_.push_back(spec_.baseline == Baseline::pe ? "lambda[" + std::to_string(j + 1) + "]"
                                                            : "gamma[" + std::to_string(j) + "]");
        }
        for (const auto& c : covariate_names) names_.push_back("beta[" + c + "]");
        if (spec_.frailty == Frailty::gamma) names_.push_back("theta");
    }

    std::size_t dim() const noexcept { return names_.size(); }
    std::size_t baseline_size() const noexcept { return spec_.baseline_size(); }
    std::size_t covariate_count() const noexcept { return p_; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const ModelSpec& spec() const noexcept { return spec_; }

    bool is_log_scale(std::size_t k) const noexcept {
        return k < baseline_size() || (spec_.frailty == Frailty::gamma && k + 1 == dim());
    }

    /// Natural-scale values in `names()` order.
    std::vector<double> to_natural(std::span<const double> z) const {
        std::vector<double> out(z.begin(), z.end());
        for (std::size_t k = 0; k < out.size(); ++k)
            if (is_log_scale(k)) out[k] = std::exp(out[k]);
        return out;
    }

    std::vector<double> from_natural(std::span<const double> x) const {
        std::vector<double> out(x.begin(), x.end());
        for (std::size_t k = 0; k < out.size(); ++k)
            if (is_log_scale(k)) out[k] = std::log(out[k]);
        return out;
    }

    ParameterVector unpack(std::span<const double> natural) const {
        ParameterVector pv;
        const std::size_t nb = baseline_size();
        pv.baseline(spec_).assign(natural.begin(), natural.begin() + static_cast<std::ptrdiff_t>(nb));
        pv.beta.assign(natural.begin() + static_cast<std::ptrdiff_t>(nb),
                       natural.begin() + static_cast<std::ptrdiff_t>(nb + p_));
        pv.theta = spec_.frailty == Frailty::gamma ? natural[nb + p_] : 0.0;
        return pv;
    }

    std::vector<double> pack(const ParameterVector& pv) const {
        std::vector<double> out(pv.baseline(spec_));
        out.insert(out.end(), pv.beta.begin(), pv.beta.end());
        if (spec_.frailty == Frailty::gamma) out.push_back(pv.theta);
        return out;
    }

private:
    ModelSpec spec_;
    std::size_t p_;
    std::vector<std::string> names_;
};

namespace detail {

inline double log_gamma_density_on_log_scale(double z, double x, double shape, double rate) {
    // log Gamma(x; shape, rate) + log|dx/dz| with x = e^z
    return shape * std::log(rate) - std::lgamma(shape) + shape * z - rate * x;
}

inline double log_normal_density(double x, double sd) {
    return -0.5 * std::log(2.0 * std::numbers::pi * sd * sd) - 0.5 * (x / sd) * (x / sd);
}

}  // namespace detail

/// Log posterior density of the unconstrained parameter vector, including the
/// Jacobian of the log transform. Returns -inf outside the valid region.
class LogPosterior {
public:
    LogPosterior(Dataset data, ModelSpec spec, PriorSpec priors)
        : data_(std::move(data)),
          clusters_(index_clusters(data_)),
          layout_(std::move(spec), data_.covariate_names),
          priors_(priors) {
        validate_dataset(data_);
        layout_.spec().validate();
        priors_.validate();
    }

    const ParameterLayout& layout() const noexcept { return layout_; }
    const Dataset& data() const noexcept { return data_; }
    const ClusterIndex& clusters() const noexcept { return clusters_; }
    const ModelSpec& spec() const noexcept { return layout_.spec(); }
    std::size_t pointwise_size() const noexcept { return frailtykit::pointwise_size(data_, clusters_, spec()); }

    double log_prior(std::span<const double> z) const {
        const std::size_t nb = layout_.baseline_size();
        const std::size_t p = layout_.covariate_count();
        double lp = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
            const double x = std::exp(z[k]);
            if (!(x > 0.0) || !std::isfinite(x)) return kNegInf;
            lp += detail::log_gamma_density_on_log_scale(z[k], x, priors_.baseline_shape, priors_.baseline_rate);
        }
        for (std::size_t k = nb; k < nb + p; ++k) {
            if (!std::isfinite(z[k])) return kNegInf;
            lp += detail::log_normal_density(z[k], priors_.beta_sd);
        }
        if (spec().frailty == Frailty::gamma) {
            const double zt = z[nb + p];
            const double theta = std::exp(zt);
            if (!(theta > 0.0) || !std::isfinite(theta)) return kNegInf;
            lp += detail::log_gamma_density_on_log_scale(zt, theta, priors_.theta_shape, priors_.theta_rate);
        }
        return lp;
    }

    double operator()(std::span<const double> z) const {
        const double lp = log_prior(z);
        if (lp == kNegInf) return kNegInf;
        const auto params = layout_.unpack(layout_.to_natural(z));
        const double ll = detail::total_ll(data_, clusters_, params, spec());
        if (std::isnan(ll)) return kNegInf;
        return ll + lp;
    }

    void pointwise(std::span<const double> natural, std::span<double> out) const {
        detail::pointwise_ll(data_, clusters_, layout_.unpack(natural), spec(), out);
    }

private:
    Dataset data_;
    ClusterIndex clusters_;
    ParameterLayout layout_;
    PriorSpec priors_;
};

}  // namespace frailtykit
