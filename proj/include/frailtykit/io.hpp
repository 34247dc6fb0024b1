#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "frailtykit/errors.hpp"
#include "frailtykit/fit.hpp"
#include "frailtykit/monte_carlo.hpp"
#include "frailtykit/simulation.hpp"
#include "frailtykit/types.hpp"
#include "frailtykit/waic.hpp"

namespace frailtykit::io {

using json = nlohmann::json;

/// 17 significant digits, locale independent; NaN prints as NA.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

/// Shortest representation that round-trips.
inline std::string format_short(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string header_comment(std::uint64_t seed, std::string_view extra = {}) {
    std::string s = "# frailtykit " + std::string(kVersion) + " seed=" + std::to_string(seed);
    if (!extra.empty()) s += " " + std::string(extra);
    return s;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Datasets

/// CSV with a header naming `cluster`, `time`, `status`; every other column is a
/// numeric covariate in header order. Lines starting with '#' are comments.
/// Row numbers in errors count data rows from 1.
inline Dataset parse_dataset(std::istream& in) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        for (auto f : detail::split_csv(t)) header.emplace_back(f);
        break;
    }
    if (header.empty()) throw ParseError("missing header", 0, "");
    int cluster_col = -1, time_col = -1, status_col = -1;
    std::vector<int> cov_cols;
    Dataset data;
    std::set<std::string> seen;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        const auto& name = header[static_cast<std::size_t>(c)];
        if (!seen.insert(name).second) throw ParseError("duplicate column", 0, name);
        if (name == "cluster") cluster_col = c;
        else if (name == "time") time_col = c;
        else if (name == "status") status_col = c;
        else {
            cov_cols.push_back(c);
            data.covariate_names.push_back(name);
        }
    }
    for (auto [col, name] : {std::pair{cluster_col, "cluster"}, {time_col, "time"}, {status_col, "status"}})
        if (col < 0) throw ParseError("missing required column", 0, name);

    std::size_t row = 0;
    while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        ++row;
        const auto fields = detail::split_csv(t);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             row, "");
        ObservationRecord r;
        if (!detail::parse_number(fields[static_cast<std::size_t>(cluster_col)], r.cluster_id))
            throw ParseError("cluster id is not an integer", row, "cluster");
        if (!detail::parse_number(fields[static_cast<std::size_t>(time_col)], r.time))
            throw ParseError("time is not numeric", row, "time");
        if (!(r.time > 0.0) || !std::isfinite(r.time)) throw ParseError("time must be positive", row, "time");
        if (!detail::parse_number(fields[static_cast<std::size_t>(status_col)], r.status) ||
            (r.status != 0 && r.status != 1))
            throw ParseError("status must be 0 or 1", row, "status");
        for (std::size_t k = 0; k < cov_cols.size(); ++k) {
            double x = 0.0;
            if (!detail::parse_number(fields[static_cast<std::size_t>(cov_cols[k])], x) || !std::isfinite(x))
                throw ParseError("covariate is not numeric", row, data.covariate_names[k]);
            r.covariates.push_back(x);
        }
        data.records.push_back(std::move(r));
    }
    if (data.records.empty()) throw ParseError("no data rows", 0, "");
    return data;
}

inline Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    return parse_dataset(in);
}

inline void write_dataset(std::ostream& out, const Dataset& data, std::uint64_t seed) {
    out << header_comment(seed) << '\n' << "cluster,time,status";
    for (const auto& n : data.covariate_names) out << ',' << n;
    out << '\n';
    for (const auto& r : data.records) {
        out << r.cluster_id << ',' << format_double(r.time) << ',' << r.status;
        for (double x : r.covariates) out << ',' << format_double(x);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Configuration

namespace detail {

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + " must be a JSON object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ValidationError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad value for '") + key + "': " + e.what());
    }
}

}  // namespace detail

inline ModelSpec model_from_json(const json& j) {
    detail::reject_unknown_keys(j, {"baseline", "frailty", "cutpoints", "degree", "tau"}, "model");
    const auto baseline = parse_baseline(detail::get_or<std::string>(j, "baseline", "pe"));
    const auto frailty = parse_frailty(detail::get_or<std::string>(j, "frailty", "gamma"));
    if (baseline == Baseline::pe) {
        if (!j.contains("cutpoints")) throw ValidationError("PE model needs 'cutpoints'");
        return ModelSpec::pe(TimeGrid(detail::get_or<std::vector<double>>(j, "cutpoints", {})), frailty);
    }
    if (!j.contains("tau")) throw ValidationError("BP model needs 'tau'");
    return ModelSpec::bp(detail::get_or<int>(j, "degree", 5), detail::get_or<double>(j, "tau", 0.0), frailty);
}

inline json model_to_json(const ModelSpec& spec) {
    json j;
    j["baseline"] = std::string(to_string(spec.baseline));
    j["frailty"] = std::string(to_string(spec.frailty));
    if (spec.baseline == Baseline::pe) {
        j["cutpoints"] = spec.grid.cutpoints();
    } else {
        j["degree"] = spec.degree;
        j["tau"] = spec.tau;
    }
    return j;
}

inline PriorSpec priors_from_json(const json& j) {
    detail::reject_unknown_keys(j, {"baseline_shape", "baseline_rate", "beta_sd", "theta_shape", "theta_rate"},
                                "priors");
    PriorSpec p;
    p.baseline_shape = detail::get_or(j, "baseline_shape", p.baseline_shape);
    p.baseline_rate = detail::get_or(j, "baseline_rate", p.baseline_rate);
    p.beta_sd = detail::get_or(j, "beta_sd", p.beta_sd);
    p.theta_shape = detail::get_or(j, "theta_shape", p.theta_shape);
    p.theta_rate = detail::get_or(j, "theta_rate", p.theta_rate);
    p.validate();
    return p;
}

inline json priors_to_json(const PriorSpec& p) {
    return json{{"baseline_shape", p.baseline_shape}, {"baseline_rate", p.baseline_rate}, {"beta_sd", p.beta_sd},
                {"theta_shape", p.theta_shape},       {"theta_rate", p.theta_rate}};
}

/// Fit settings of a study; max_rhat is the replica-flagging threshold.
struct StudyFitSettings {
    FitConfig fit;
    double max_rhat = 1.1;
};

inline StudyFitSettings fit_settings_from_json(const json& j) {
    detail::reject_unknown_keys(j, {"iterations", "burnin", "thin", "chains", "level", "priors", "max_rhat"}, "fit");
    StudyFitSettings s;
    s.fit.chain.iterations = detail::get_or(j, "iterations", s.fit.chain.iterations);
    s.fit.chain.burnin = detail::get_or(j, "burnin", s.fit.chain.burnin);
    s.fit.chain.thin = detail::get_or(j, "thin", s.fit.chain.thin);
    s.fit.chains = detail::get_or(j, "chains", s.fit.chains);
    s.fit.level = detail::get_or(j, "level", s.fit.level);
    if (j.contains("priors")) s.fit.priors = priors_from_json(j.at("priors"));
    s.max_rhat = detail::get_or(j, "max_rhat", s.max_rhat);
    s.fit.validate();
    return s;
}

struct ScenarioConfig {
    Scenario scenario;
    StudyFitSettings fit;
};

/// Scenario JSON. Unknown keys anywhere are rejected.
inline ScenarioConfig scenario_from_json(const json& j) {
    detail::reject_unknown_keys(
        j, {"seed", "n_clusters", "cluster_size", "model", "truth", "covariates", "censoring", "fit"}, "scenario");
    ScenarioConfig cfg;
    auto& sc = cfg.scenario;
    sc.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
    sc.n_clusters = detail::get_or(j, "n_clusters", 100);
    sc.cluster_size = detail::get_or(j, "cluster_size", 2);
    if (!j.contains("model")) throw ValidationError("scenario needs 'model'");
    sc.spec = model_from_json(j.at("model"));
    if (!j.contains("truth")) throw ValidationError("scenario needs 'truth'");
    const auto& t = j.at("truth");
    detail::reject_unknown_keys(t, {"lambda", "gamma_coef", "beta", "theta"}, "truth");
    sc.truth.lambda = detail::get_or<std::vector<double>>(t, "lambda", {});
    sc.truth.gamma_coef = detail::get_or<std::vector<double>>(t, "gamma_coef", {});
    sc.truth.beta = detail::get_or<std::vector<double>>(t, "beta", {});
    sc.truth.theta = detail::get_or(t, "theta", 0.0);
    for (const auto& kind : detail::get_or<std::vector<std::string>>(j, "covariates", {})) {
        if (kind == "normal") sc.covariates.push_back(CovariateKind::normal);
        else if (kind == "bernoulli") sc.covariates.push_back(CovariateKind::bernoulli);
        else throw ValidationError("unknown covariate generator '" + kind + "'");
    }
    sc.censoring.kind = CensoringKind::exponential;
    sc.censoring.target = 0.2;
    if (j.contains("censoring")) {
        const auto& c = j.at("censoring");
        detail::reject_unknown_keys(c, {"scheme", "time", "target"}, "censoring");
        const auto scheme = detail::get_or<std::string>(c, "scheme", "exponential");
        if (scheme == "none") sc.censoring = Censoring{};
        else if (scheme == "administrative") {
            sc.censoring = Censoring{CensoringKind::administrative, detail::get_or(c, "time", 0.0), 0.0, {}};
        } else if (scheme == "exponential") {
            sc.censoring = Censoring{CensoringKind::exponential, 0.0, detail::get_or(c, "target", 0.2), {}};
        } else {
            throw ValidationError("unknown censoring scheme '" + scheme + "'");
        }
    }
    if (j.contains("fit")) cfg.fit = fit_settings_from_json(j.at("fit"));
    sc.validate();
    return cfg;
}

inline ScenarioConfig read_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

// ---------------------------------------------------------------------------
// Fit outputs

inline json waic_to_json(const WaicResult& w) {
    return json{{"lppd", w.lppd},
                {"p_waic", w.p_waic},
                {"elppd_waic", w.elppd_waic},
                {"waic", w.waic},
                {"n", w.n()},
                {"pointwise_elppd", w.pointwise_elppd}};
}

inline WaicResult waic_from_json(const json& j) {
    WaicResult w;
    try {
        w.lppd = j.at("lppd").get<double>();
        w.p_waic = j.at("p_waic").get<double>();
        w.elppd_waic = j.at("elppd_waic").get<double>();
        w.waic = j.at("waic").get<double>();
        w.pointwise_elppd = j.at("pointwise_elppd").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed WAIC block: ") + e.what());
    }
    return w;
}

/// FitReport as JSON. Wall-clock time is only included when given, so that
/// reports of identical runs compare byte for byte.
inline json fit_report_json(const FitResult& fit, const Dataset& data, const std::string& name,
                            std::optional<double> wall_clock_seconds = std::nullopt) {
    json j;
    j["name"] = name;
    j["version"] = std::string(kVersion);
    j["seed"] = fit.config.chain.seed;
    j["model"] = model_to_json(fit.spec);
    j["sampler"] = json{{"algorithm", "componentwise adaptive random-walk Metropolis"},
                        {"iterations", fit.config.chain.iterations},
                        {"burnin", fit.config.chain.burnin},
                        {"thin", fit.config.chain.thin},
                        {"chains", fit.config.chains}};
    j["priors"] = priors_to_json(fit.config.priors);
    j["interval"] = json{{"level", fit.config.level}, {"type", "equal-tailed"}};
    std::size_t events = 0;
    for (const auto& r : data.records) events += static_cast<std::size_t>(r.status);
    j["data"] = json{{"records", data.size()},
                     {"clusters", index_clusters(data).size()},
                     {"events", events},
                     {"covariates", data.covariate_names}};
    json rows = json::array();
    for (std::size_t k = 0; k < fit.summary.size(); ++k) {
        const auto& s = fit.summary[k];
        json row{{"parameter", s.name}, {"mean", s.mean},   {"sd", s.sd},
                 {"median", s.median},  {"lower", s.lower}, {"upper", s.upper}};
        row["rhat"] = fit.diagnostics.available ? json(fit.diagnostics.rhat[k]) : json(nullptr);
        row["ess"] = fit.diagnostics.available ? json(fit.diagnostics.ess[k]) : json(nullptr);
        rows.push_back(std::move(row));
    }
    j["summary"] = std::move(rows);
    json diag{{"available", fit.diagnostics.available}, {"acceptance_rate", fit.draws.acceptance_rate}};
    if (fit.diagnostics.available) {
        diag["max_rhat"] = fit.diagnostics.max_rhat();
        diag["min_ess"] = fit.diagnostics.min_ess();
    }
    j["diagnostics"] = std::move(diag);
    j["waic"] = waic_to_json(fit.waic);
    if (wall_clock_seconds) j["wall_clock_seconds"] = *wall_clock_seconds;
    return j;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

inline void write_posterior_summary(std::ostream& out, const FitResult& fit) {
    out << header_comment(fit.config.chain.seed, "interval=" + format_short(fit.config.level) + " equal-tailed")
        << '\n'
        << "parameter,mean,sd,median,lower,upper,rhat,ess\n";
    for (std::size_t k = 0; k < fit.summary.size(); ++k) {
        const auto& s = fit.summary[k];
        out << s.name << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ','
            << format_double(s.median) << ',' << format_double(s.lower) << ',' << format_double(s.upper) << ','
            << (fit.diagnostics.available ? format_double(fit.diagnostics.rhat[k]) : "NA") << ','
            << (fit.diagnostics.available ? format_double(fit.diagnostics.ess[k]) : "NA") << '\n';
    }
}

/// Retained draws of all chains stacked in chain order; header = parameter names.
inline void write_draws(std::ostream& out, const PosteriorDraws& draws) {
    out << header_comment(draws.seed, "chains=" + std::to_string(draws.chains.size())) << '\n';
    for (std::size_t k = 0; k < draws.names.size(); ++k) out << (k ? "," : "") << draws.names[k];
    out << '\n';
    for (const auto& chain : draws.chains) {
        for (std::size_t s = 0; s < chain.rows(); ++s) {
            const auto row = chain.row(s);
            for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_double(row[k]);
            out << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Model comparison

inline NamedWaic named_waic_from_report(const json& report, const std::string& fallback_name) {
    if (!report.is_object() || !report.contains("waic")) throw ValidationError("fit report has no 'waic' block");
    NamedWaic nw;
    nw.name = report.contains("name") && report.at("name").is_string() ? report.at("name").get<std::string>()
                                                                        : fallback_name;
    nw.result = waic_from_json(report.at("waic"));
    return nw;
}

inline json compare_report_json(const std::vector<WaicRanking>& ranking) {
    json models = json::array();
    for (const auto& r : ranking) {
        models.push_back(json{{"model", r.name},
                              {"lppd", r.result.lppd},
                              {"p_waic", r.result.p_waic},
                              {"elppd", r.result.elppd_waic},
                              {"waic", r.result.waic},
                              {"delta", r.delta}});
    }
    return json{{"version", std::string(kVersion)},
                {"criterion", "waic (lower is better)"},
                {"best", ranking.front().name},
                {"n", ranking.front().result.n()},
                {"models", std::move(models)}};
}

// ---------------------------------------------------------------------------
// Monte Carlo outputs

inline void write_mc_metrics(std::ostream& out, const McStudy& study, std::uint64_t seed) {
    out << header_comment(seed, "interval=" + format_short(study.level) + " equal-tailed replicas=" +
                                    std::to_string(study.replicas.size()) + " failed=" + std::to_string(study.failed))
        << '\n';
    for (const auto& w : study.warnings) out << "# WARN " << w << '\n';
    out << "parameter,truth,est,rb_percent,ase,sde,cp,m_c\n";
    for (const auto& r : study.rows) {
        out << r.parameter << ',' << format_double(r.truth) << ',' << format_double(r.est) << ','
            << format_double(r.rb_percent) << ',' << format_double(r.ase) << ',' << format_double(r.sde) << ','
            << format_double(r.cp) << ',' << r.m_c << '\n';
    }
}

inline void write_replicas(std::ostream& out, const McStudy& study, std::uint64_t seed) {
    out << header_comment(seed) << '\n'
        << "replica,parameter,estimate,se,lower,upper,covered,max_rhat,min_ess,failed,note\n";
    for (const auto& r : study.replicas) {
        if (!r.ok) {
            out << r.replica << ",,NA,NA,NA,NA,NA,NA,NA,1," << r.fit.note << '\n';
            continue;
        }
        for (std::size_t p = 0; p < study.names.size(); ++p) {
            const bool covered = r.fit.lower[p] <= study.truth[p] && study.truth[p] <= r.fit.upper[p];
            out << r.replica << ',' << study.names[p] << ',' << format_double(r.fit.estimate[p]) << ','
                << format_double(r.fit.se[p]) << ',' << format_double(r.fit.lower[p]) << ','
                << format_double(r.fit.upper[p]) << ',' << (covered ? 1 : 0) << ',' << format_double(r.fit.max_rhat)
                << ',' << format_double(r.fit.min_ess) << ',' << (r.fit.failed ? 1 : 0) << ',' << r.fit.note << '\n';
        }
    }
}

}  // namespace frailtykit::io
