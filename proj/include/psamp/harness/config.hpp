#pragma once

// Experiment configuration, its JSON form, and JSON records for priors and
// fitted denoisers.

#include "psamp/amp.hpp"
#include "psamp/core.hpp"
#include "psamp/denoising.hpp"
#include "psamp/signal_models.hpp"
#include "psamp/state_evolution.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace psamp::harness {

using json = nlohmann::json;

enum class ExperimentKind { DenoiseSweep, RecoverySweep, SeCompare, RuntimeSweep };

inline std::string to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::DenoiseSweep: return "denoise-sweep";
    case ExperimentKind::RecoverySweep: return "recover";
    case ExperimentKind::SeCompare: return "se-compare";
    case ExperimentKind::RuntimeSweep: return "runtime";
    }
    return "?";
}

inline ExperimentKind experiment_kind_from(const std::string& s)
{
    if (s == "denoise-sweep") return ExperimentKind::DenoiseSweep;
    if (s == "recover") return ExperimentKind::RecoverySweep;
    if (s == "se-compare") return ExperimentKind::SeCompare;
    if (s == "runtime") return ExperimentKind::RuntimeSweep;
    throw ConfigurationError("unknown experiment kind '" + s + "'");
}

// ---------------------------------------------------------------- priors

inline json prior_to_json(const SignalPrior& p)
{
    switch (p.kind) {
    case PriorKind::BernoulliGaussian:
        return {{"kind", "bernoulli_gaussian"}, {"params", {{"sparsity", p.bg_sparsity}, {"variance", p.bg_variance}}}};
    case PriorKind::KDense:
        return {{"kind", "k_dense"},
                {"params", {{"continuous_fraction", p.kd_continuous_fraction}, {"magnitude", p.kd_magnitude}}}};
    case PriorKind::StudentT:
        return {{"kind", "student_t"},
                {"params",
                 {{"shape", p.st_shape}, {"form", p.st_form == StudentTForm::Literal ? "literal" : "standard"}}}};
    }
    throw ParameterError("prior_to_json: unknown prior kind");
}

namespace detail {

inline double number_at(const json& obj, const char* key, double fallback)
{
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigurationError(std::string("'") + key + "' must be a number");
    return v.get<double>();
}

} // namespace detail

inline SignalPrior prior_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("kind")) throw ConfigurationError("prior must be an object with a 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    const json params = j.value("params", json::object());
    SignalPrior p;
    if (kind == "bernoulli_gaussian") {
        p = SignalPrior::bernoulli_gaussian(detail::number_at(params, "sparsity", 0.1),
                                            detail::number_at(params, "variance", 1.0));
    } else if (kind == "k_dense") {
        p = SignalPrior::k_dense(detail::number_at(params, "continuous_fraction", 0.1),
                                 detail::number_at(params, "magnitude", 1.0));
    } else if (kind == "student_t") {
        const auto form = params.value("form", std::string("standard"));
        if (form != "standard" && form != "literal") throw ConfigurationError("student_t form must be standard or literal");
        p = SignalPrior::student_t(detail::number_at(params, "shape", 1.67),
                                   form == "literal" ? StudentTForm::Literal : StudentTForm::Standard);
    } else {
        throw ConfigurationError("unknown prior kind '" + kind + "'");
    }
    try {
        psamp::validate(p);
    } catch (const ParameterError& e) {
        throw ConfigurationError(e.what());
    }
    return p;
}

// ------------------------------------------------------------ denoisers

inline json denoiser_spec_to_json(const DenoiserSpec& spec)
{
    return {{"family", spec.family.name()}, {"c", spec.c}, {"weights", spec.weights}};
}

/// Built-in families only; a custom kernel cannot be rebuilt from its name.
inline DenoiserSpec denoiser_spec_from_json(const json& j)
{
    DenoiserSpec spec;
    const auto name = j.at("family").get<std::string>();
    try {
        spec.family = KernelFamily::from_name(name);
    } catch (const ParameterError&) {
        throw CapabilityError("cannot rebuild kernel family '" + name + "' from a record");
    }
    spec.c = j.at("c").get<double>();
    spec.weights = j.at("weights").get<std::vector<double>>();
    if (!(spec.c > 0.0)) throw ConfigurationError("denoiser record: c must be positive");
    check_spec(spec);
    return spec;
}

// --------------------------------------------------------------- config

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::RecoverySweep;
    std::string name = "custom";
    SignalPrior prior = SignalPrior::bernoulli_gaussian(0.1, 1.0);
    /// Denoisers (denoise sweeps) or AMP policies (all other kinds).
    std::vector<std::string> policies{"pwl1"};
    double l1_kappa = 2.0;
    /// Signal length; number of samples per draw for denoise sweeps.
    Eigen::Index n = 2000;
    std::vector<double> gammas;
    std::vector<double> cs;
    /// Optional separate state-evolution grid; must equal `gammas`.
    std::optional<std::vector<double>> se_gammas;
    /// Signal lengths for runtime sweeps.
    std::vector<Eigen::Index> sizes;
    std::optional<double> snr_y_db = 25.0;
    int monte_carlo = 20;
    Seed seed = 1;
    int max_iter = 100;
    double tol = 1e-6;
    /// State evolution: iterations recorded and Monte Carlo sample count.
    int se_iterations = 15;
    Eigen::Index se_samples = 200000;
    std::string output = "results.csv";
    /// Named tolerance checks applied with --check.
    std::string checks;
};

inline const std::vector<std::string>& denoiser_names()
{
    static const std::vector<std::string> names{"mmse", "mmse-numeric", "pwl1", "pwl2", "exp", "exp-wide", "soft"};
    return names;
}

inline const std::vector<std::string>& policy_names()
{
    static const std::vector<std::string> names{"pwl1", "pwl2", "exp", "exp-wide", "bamp", "l1amp"};
    return names;
}

/// Policy by configuration name.
inline DenoiserPolicy make_policy(const std::string& name, const SignalPrior& prior, double kappa)
{
    if (name == "bamp") return bamp_policy(prior);
    if (name == "l1amp") return l1amp_policy(kappa);
    if (name == "pwl1" || name == "pwl2" || name == "exp" || name == "exp-wide")
        return parametric_sure_policy(KernelFamily::from_name(name));
    throw ConfigurationError("unknown policy '" + name + "'");
}

namespace detail {

inline bool contains(const std::vector<std::string>& v, const std::string& s)
{
    return std::find(v.begin(), v.end(), s) != v.end();
}

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw ConfigurationError(what);
}

} // namespace detail

inline void validate(const ExperimentConfig& cfg)
{
    using detail::require;
    psamp::validate(cfg.prior);
    require(cfg.monte_carlo >= 1, "monte_carlo must be at least 1");
    require(!cfg.policies.empty(), "policy list is empty");
    require(cfg.l1_kappa >= 1.0 && cfg.l1_kappa <= 6.0, "l1_kappa must lie in [1, 6]");
    require(cfg.max_iter >= 1, "max_iter must be at least 1");
    require(cfg.tol >= 0.0 && std::isfinite(cfg.tol), "tol must be non-negative");
    if (cfg.snr_y_db) require(std::isfinite(*cfg.snr_y_db), "snr_y_db must be finite or null");
    const auto& known = cfg.kind == ExperimentKind::DenoiseSweep ? denoiser_names() : policy_names();
    for (const auto& p : cfg.policies) require(detail::contains(known, p), "unknown policy '" + p + "' for " + to_string(cfg.kind));
    for (double g : cfg.gammas) require(g > 0.0 && g <= 1.0, "sampling ratios must lie in (0, 1]");
    for (double c : cfg.cs) require(c > 0.0 && std::isfinite(c), "noise levels must be positive");

    switch (cfg.kind) {
    case ExperimentKind::DenoiseSweep:
        require(!cfg.cs.empty(), "denoise sweep needs a non-empty 'cs' list");
        require(cfg.n >= 3, "denoise sweep needs n >= 3 samples");
        break;
    case ExperimentKind::RecoverySweep:
        require(!cfg.gammas.empty(), "recovery sweep needs a non-empty 'gammas' list");
        require(cfg.n >= 10, "recovery sweep needs n >= 10");
        break;
    case ExperimentKind::SeCompare:
        require(!cfg.gammas.empty(), "se-compare needs a non-empty 'gammas' list");
        require(cfg.n >= 10, "se-compare needs n >= 10");
        if (cfg.se_gammas) require(*cfg.se_gammas == cfg.gammas, "se-compare: matrix and state-evolution grids differ");
        require(cfg.se_iterations >= 1, "se_iterations must be at least 1");
        require(cfg.se_samples >= kMinSeSamples, "se_samples must be at least 10000");
        break;
    case ExperimentKind::RuntimeSweep:
        require(cfg.gammas.size() == 1, "runtime sweep takes exactly one sampling ratio");
        require(!cfg.sizes.empty(), "runtime sweep needs a non-empty 'sizes' list");
        for (auto s : cfg.sizes) require(s >= 10, "runtime sizes must be at least 10");
        break;
    }
}

inline json config_to_json(const ExperimentConfig& cfg)
{
    json j{{"experiment", to_string(cfg.kind)},
           {"name", cfg.name},
           {"prior", prior_to_json(cfg.prior)},
           {"policies", cfg.policies},
           {"l1_kappa", cfg.l1_kappa},
           {"n", cfg.n},
           {"gammas", cfg.gammas},
           {"cs", cfg.cs},
           {"sizes", cfg.sizes},
           {"snr_y_db", cfg.snr_y_db ? json(*cfg.snr_y_db) : json(nullptr)},
           {"monte_carlo", cfg.monte_carlo},
           {"seed", cfg.seed},
           {"max_iter", cfg.max_iter},
           {"tol", cfg.tol},
           {"se_iterations", cfg.se_iterations},
           {"se_samples", cfg.se_samples},
           {"output", cfg.output},
           {"checks", cfg.checks}};
    if (cfg.se_gammas) j["se_gammas"] = *cfg.se_gammas;
    return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline ExperimentConfig config_from_json(const json& j)
{
    if (!j.is_object()) throw ConfigurationError("config must be a JSON object");
    static const std::vector<std::string> keys{"experiment", "name",     "prior",       "policies",   "l1_kappa",
                                               "n",          "gammas",   "cs",          "se_gammas",  "sizes",
                                               "snr_y_db",   "monte_carlo", "seed",     "max_iter",   "tol",
                                               "se_iterations", "se_samples", "output", "checks"};
    for (const auto& [k, v] : j.items()) {
        if (!detail::contains(keys, k)) throw ConfigurationError("unknown config key '" + k + "'");
    }
    ExperimentConfig cfg;
    try {
        if (j.contains("experiment")) cfg.kind = experiment_kind_from(j.at("experiment").get<std::string>());
        cfg.name = j.value("name", cfg.name);
        if (j.contains("prior")) cfg.prior = prior_from_json(j.at("prior"));
        if (j.contains("policies")) cfg.policies = j.at("policies").get<std::vector<std::string>>();
        cfg.l1_kappa = j.value("l1_kappa", cfg.l1_kappa);
        cfg.n = j.value("n", cfg.n);
        if (j.contains("gammas")) cfg.gammas = j.at("gammas").get<std::vector<double>>();
        if (j.contains("cs")) cfg.cs = j.at("cs").get<std::vector<double>>();
        if (j.contains("se_gammas")) cfg.se_gammas = j.at("se_gammas").get<std::vector<double>>();
        if (j.contains("sizes")) cfg.sizes = j.at("sizes").get<std::vector<Eigen::Index>>();
        if (j.contains("snr_y_db"))
            cfg.snr_y_db = j.at("snr_y_db").is_null() ? std::nullopt : std::optional<double>(j.at("snr_y_db").get<double>());
        cfg.monte_carlo = j.value("monte_carlo", cfg.monte_carlo);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.max_iter = j.value("max_iter", cfg.max_iter);
        cfg.tol = j.value("tol", cfg.tol);
        cfg.se_iterations = j.value("se_iterations", cfg.se_iterations);
        cfg.se_samples = j.value("se_samples", cfg.se_samples);
        cfg.output = j.value("output", cfg.output);
        cfg.checks = j.value("checks", cfg.checks);
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigurationError("config '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

/// Multiplies signal lengths by `factor` and divides the Monte Carlo count.
inline ExperimentConfig scaled(ExperimentConfig cfg, double factor)
{
    if (!(factor > 0.0) || !std::isfinite(factor)) throw ConfigurationError("scale must be positive");
    auto scale_n = [&](Eigen::Index n) { return std::max<Eigen::Index>(10, std::llround(static_cast<double>(n) * factor)); };
    cfg.n = scale_n(cfg.n);
    for (auto& s : cfg.sizes) s = scale_n(s);
    cfg.monte_carlo = std::max(1, static_cast<int>(std::ceil(cfg.monte_carlo / factor)));
    return cfg;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hash of the canonical (key-sorted) JSON form of the resolved config,
/// excluding the output path.
inline std::uint64_t config_hash(const ExperimentConfig& cfg)
{
    auto j = config_to_json(cfg);
    j.erase("output");
    return fnv1a(j.dump());
}

} // namespace psamp::harness
