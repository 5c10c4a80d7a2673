#pragma once

// The four experiment kinds. Every cell (noise level or sampling ratio,
// Monte Carlo index) derives its own seed from the base seed and is run on
// the worker pool; records are merged in cell order, so output does not
// depend on the thread count.

#include "psamp/amp.hpp"
#include "psamp/denoising.hpp"
#include "psamp/harness/config.hpp"
#include "psamp/harness/pool.hpp"
#include "psamp/harness/records.hpp"
#include "psamp/sensing.hpp"
#include "psamp/signal_models.hpp"
#include "psamp/state_evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

namespace psamp::harness {

struct RunOptions {
    unsigned threads = default_threads();
    /// Progress lines, when set.
    std::ostream* log = nullptr;
};

struct ExperimentOutput {
    ExperimentConfig config;
    std::vector<ResultRecord> records;
    /// Fitted denoisers of the first Monte Carlo draw, as {family, c, weights}.
    std::vector<json> denoisers;
    std::vector<RunError> errors;
};

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class Logger {
public:
    explicit Logger(std::ostream* out) : out_(out) {}
    template <class... Args>
    void operator()(fmt::format_string<Args...> f, Args&&... args)
    {
        if (!out_) return;
        const auto line = fmt::format(f, std::forward<Args>(args)...);
        std::lock_guard lock(mu_);
        *out_ << line << '\n' << std::flush;
    }

private:
    std::ostream* out_;
    std::mutex mu_;
};

inline double elapsed_ms(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

/// describe() without commas, so the label is a single CSV field.
inline std::string prior_label(const SignalPrior& p) { return sanitize(describe(p)); }

inline Eigen::Index rows_for(double gamma, Eigen::Index n)
{
    return std::max<Eigen::Index>(1, std::llround(gamma * static_cast<double>(n)));
}

inline void require_kind(const ExperimentConfig& cfg, ExperimentKind kind)
{
    if (cfg.kind != kind)
        throw ConfigurationError("config '" + cfg.name + "' is a " + to_string(cfg.kind) + " experiment, not " +
                                 to_string(kind));
}

struct Cell {
    std::vector<ResultRecord> records;
    std::vector<json> denoisers;
    std::vector<RunError> errors;
};

inline void merge(ExperimentOutput& out, std::vector<Cell>&& cells)
{
    for (auto& c : cells) {
        for (auto& r : c.records) out.records.push_back(std::move(r));
        for (auto& d : c.denoisers) out.denoisers.push_back(std::move(d));
        for (auto& e : c.errors) out.errors.push_back(std::move(e));
    }
}

inline double median(std::vector<double> v)
{
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

} // namespace detail

/// Seed of Monte Carlo draw `s`; shared across the grid so cells at
/// different noise levels or sampling ratios use common random numbers.
inline Seed draw_seed(const ExperimentConfig& cfg, int s) { return derive_seed(cfg.seed, {static_cast<std::uint64_t>(s)}); }

// ---------------------------------------------------------------- denoise

inline void check_denoisers(const ExperimentConfig& cfg)
{
    for (const auto& d : cfg.policies) {
        if (d == "mmse" && !has_analytic_mmse(cfg.prior))
            throw CapabilityError("denoiser 'mmse' has no closed form for prior " + describe(cfg.prior) +
                                  "; use 'mmse-numeric'");
    }
}

/// Denoises one draw at noise level c with every configured denoiser.
inline std::vector<ResultRecord> denoise_cell(const ExperimentConfig& cfg, double c, Seed seed,
                                              std::vector<json>* fitted = nullptr)
{
    const Vector x = sample_prior(cfg.prior, cfg.n, derive_seed(seed, {0}));
    const Vector r = x + gaussian_vector(cfg.n, derive_seed(seed, {1}), std::sqrt(c));
    std::vector<ResultRecord> out;
    auto record = [&](const std::string& policy, const std::string& metric, double value, double ms) {
        ResultRecord rec;
        rec.experiment = cfg.name;
        rec.prior = detail::prior_label(cfg.prior);
        rec.policy = policy;
        rec.c = c;
        rec.seed = seed;
        rec.metric_name = metric;
        rec.metric_value = value;
        rec.wall_ms = ms;
        rec.mode = "denoise";
        rec.n = cfg.n;
        out.push_back(std::move(rec));
    };
    for (const auto& name : cfg.policies) {
        const auto start = std::chrono::steady_clock::now();
        DenoisedVector d;
        std::optional<double> sure;
        if (name == "mmse" || name == "mmse-numeric") {
            d = mmse_denoise_vector(cfg.prior, r, c, name == "mmse-numeric");
        } else if (name == "soft") {
            d = soft_threshold(r, cfg.l1_kappa * std::sqrt(c));
        } else {
            const auto spec = optimize_weights(r, c, KernelFamily::from_name(name));
            d = apply_denoiser(spec, r);
            sure = sure_from_output(r, d, c);
            if (fitted) fitted->push_back(denoiser_spec_to_json(spec));
        }
        const double ms = detail::elapsed_ms(start);
        record(name, "mse", mean_squared_error(d.x_hat, x), ms);
        if (sure) record(name, "sure", *sure, ms);
    }
    return out;
}

inline ExperimentOutput run_denoise_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {})
{
    detail::require_kind(cfg, ExperimentKind::DenoiseSweep);
    validate(cfg);
    check_denoisers(cfg);
    detail::Logger log(opts.log);
    const std::size_t mc = static_cast<std::size_t>(cfg.monte_carlo);
    auto cells = parallel_map(cfg.cs.size() * mc, opts.threads, [&](std::size_t i) {
        const double c = cfg.cs[i / mc];
        const int s = static_cast<int>(i % mc);
        detail::Cell cell;
        cell.records = denoise_cell(cfg, c, draw_seed(cfg, s), s == 0 ? &cell.denoisers : nullptr);
        log("denoise c={} draw={} done", c, s);
        return cell;
    });
    ExperimentOutput out{cfg, {}, {}, {}};
    detail::merge(out, std::move(cells));
    return out;
}

// --------------------------------------------------------------- recovery

struct Problem {
    SensingOperator op;
    Vector x;
    Measurement meas;
};

inline Problem make_problem(const SignalPrior& prior, Eigen::Index n, double gamma, std::optional<double> snr_y_db,
                            Seed seed)
{
    auto op = gaussian_operator(detail::rows_for(gamma, n), n, derive_seed(seed, {0}));
    Vector x = sample_prior(prior, n, derive_seed(seed, {1}));
    auto meas = measure(op, x, snr_y_db, derive_seed(seed, {2}));
    return {std::move(op), std::move(x), std::move(meas)};
}

inline ExperimentOutput run_recovery_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {})
{
    detail::require_kind(cfg, ExperimentKind::RecoverySweep);
    validate(cfg);
    std::vector<DenoiserPolicy> policies;
    for (const auto& p : cfg.policies) policies.push_back(make_policy(p, cfg.prior, cfg.l1_kappa));
    detail::Logger log(opts.log);
    const std::size_t mc = static_cast<std::size_t>(cfg.monte_carlo);
    auto cells = parallel_map(cfg.gammas.size() * mc, opts.threads, [&](std::size_t i) {
        const double gamma = cfg.gammas[i / mc];
        const Seed seed = draw_seed(cfg, static_cast<int>(i % mc));
        detail::Cell cell;
        auto fail = [&](const std::string& policy, const std::string& msg, int iterations) {
            cell.errors.push_back({policy, gamma, seed, msg});
            ResultRecord rec;
            rec.experiment = cfg.name;
            rec.prior = detail::prior_label(cfg.prior);
            rec.policy = policy;
            rec.gamma = gamma;
            rec.snr_y_db = cfg.snr_y_db;
            rec.seed = seed;
            rec.metric_name = "snr_x_db";
            rec.metric_value = detail::kNaN;
            rec.iterations = iterations;
            rec.mode = "matrix";
            rec.n = cfg.n;
            cell.records.push_back(std::move(rec));
        };
        std::optional<Problem> pr;
        try {
            pr = make_problem(cfg.prior, cfg.n, gamma, cfg.snr_y_db, seed);
        } catch (const Error& e) {
            for (const auto& p : cfg.policies) fail(p, e.what(), 0);
            return cell;
        }
        AmpOptions ao;
        ao.max_iter = cfg.max_iter;
        ao.tol = cfg.tol > 0.0 ? cfg.tol : std::numeric_limits<double>::min();
        for (std::size_t k = 0; k < policies.size(); ++k) {
            try {
                const auto res = amp_run(pr->op, pr->meas.y, policies[k], ao);
                ResultRecord rec;
                rec.experiment = cfg.name;
                rec.prior = detail::prior_label(cfg.prior);
                rec.policy = cfg.policies[k];
                rec.gamma = gamma;
                rec.snr_y_db = cfg.snr_y_db;
                rec.seed = seed;
                rec.metric_name = "snr_x_db";
                rec.metric_value = snr_x(pr->x, res.x_hat);
                rec.iterations = res.iterations;
                rec.wall_ms = res.wall_ms;
                rec.mode = "matrix";
                rec.n = cfg.n;
                cell.records.push_back(rec);
                rec.metric_name = "mse";
                rec.metric_value = mean_squared_error(res.x_hat, pr->x);
                cell.records.push_back(std::move(rec));
            } catch (const DivergenceError& e) {
                fail(cfg.policies[k], e.what(), static_cast<int>(e.trajectory().size()));
            } catch (const Error& e) {
                fail(cfg.policies[k], e.what(), 0);
            }
        }
        log("recover gamma={} seed={:016x} done", gamma, seed);
        return cell;
    });
    ExperimentOutput out{cfg, {}, {}, {}};
    detail::merge(out, std::move(cells));
    return out;
}

// ------------------------------------------------------------- se-compare

/// Seed of the state-evolution run at grid index g for policy k.
inline Seed se_seed(const ExperimentConfig& cfg, std::size_t g, std::size_t k)
{
    return derive_seed(cfg.seed, {0x5e, static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(k)});
}

/// Matrix runs record per iteration t the MSE of x^{t+1} ("mse", iterations
/// = t + 1) and the effective noise <(r^t - x)^2> ("tau", iterations = t).
/// State evolution records the matching predictions. Matrix runs use the
/// full iteration budget; the convergence test is disabled.
inline ExperimentOutput run_se_compare(const ExperimentConfig& cfg, const RunOptions& opts = {})
{
    detail::require_kind(cfg, ExperimentKind::SeCompare);
    validate(cfg);
    std::vector<DenoiserPolicy> policies;
    for (const auto& p : cfg.policies) policies.push_back(make_policy(p, cfg.prior, cfg.l1_kappa));
    detail::Logger log(opts.log);
    const std::size_t mc = static_cast<std::size_t>(cfg.monte_carlo);

    struct MatrixCell {
        detail::Cell cell;
        double noise_variance = 0.0;
    };
    auto matrix = parallel_map(cfg.gammas.size() * mc, opts.threads, [&](std::size_t i) {
        const double gamma = cfg.gammas[i / mc];
        const Seed seed = draw_seed(cfg, static_cast<int>(i % mc));
        MatrixCell mcell;
        const auto pr = make_problem(cfg.prior, cfg.n, gamma, cfg.snr_y_db, seed);
        mcell.noise_variance = pr.meas.noise_variance;
        AmpOptions ao;
        ao.max_iter = cfg.se_iterations;
        ao.tol = std::numeric_limits<double>::min();
        ao.x_true = pr.x;
        for (std::size_t k = 0; k < policies.size(); ++k) {
            std::vector<IterationRecord> traj;
            double ms = 0.0;
            try {
                auto res = amp_run(pr.op, pr.meas.y, policies[k], ao);
                traj = std::move(res.trajectory);
                ms = res.wall_ms;
            } catch (const DivergenceError& e) {
                traj = e.trajectory();
                mcell.cell.errors.push_back({cfg.policies[k], gamma, seed, e.what()});
            }
            for (const auto& it : traj) {
                ResultRecord rec;
                rec.experiment = cfg.name;
                rec.prior = detail::prior_label(cfg.prior);
                rec.policy = cfg.policies[k];
                rec.gamma = gamma;
                rec.snr_y_db = cfg.snr_y_db;
                rec.seed = seed;
                rec.mode = "matrix";
                rec.n = cfg.n;
                rec.wall_ms = ms;
                rec.metric_name = "mse";
                rec.metric_value = *it.true_mse;
                rec.iterations = it.t + 1;
                mcell.cell.records.push_back(rec);
                rec.metric_name = "tau";
                rec.metric_value = *it.true_effective_noise;
                rec.iterations = it.t;
                mcell.cell.records.push_back(std::move(rec));
            }
        }
        log("se-compare matrix gamma={} seed={:016x} done", gamma, seed);
        return mcell;
    });

    // State evolution at the measurement noise actually realized in the
    // matrix runs (averaged per sampling ratio).
    std::vector<double> s2(cfg.gammas.size(), 0.0);
    for (std::size_t i = 0; i < matrix.size(); ++i) s2[i / mc] += matrix[i].noise_variance / static_cast<double>(mc);

    const std::size_t kp = policies.size();
    auto se = parallel_map(cfg.gammas.size() * kp, opts.threads, [&](std::size_t i) {
        const std::size_t g = i / kp, k = i % kp;
        const double gamma = cfg.gammas[g];
        const Seed seed = se_seed(cfg, g, k);
        detail::Cell cell;
        const auto start = std::chrono::steady_clock::now();
        const auto tr = se_run(cfg.prior, gamma, s2[g], policies[k], cfg.se_samples, cfg.se_iterations, seed);
        const double ms = detail::elapsed_ms(start);
        for (std::size_t t = 0; t < tr.mse.size(); ++t) {
            ResultRecord rec;
            rec.experiment = cfg.name;
            rec.prior = detail::prior_label(cfg.prior);
            rec.policy = cfg.policies[k];
            rec.gamma = gamma;
            rec.snr_y_db = cfg.snr_y_db;
            rec.seed = seed;
            rec.mode = "se";
            rec.n = cfg.se_samples;
            rec.wall_ms = ms;
            rec.metric_name = "mse";
            rec.metric_value = tr.mse[t];
            rec.iterations = static_cast<int>(t) + 1;
            cell.records.push_back(rec);
            rec.metric_name = "tau";
            rec.metric_value = tr.tau[t];
            rec.iterations = static_cast<int>(t);
            cell.records.push_back(std::move(rec));
        }
        log("se-compare state evolution gamma={} policy={} done", gamma, cfg.policies[k]);
        return cell;
    });

    ExperimentOutput out{cfg, {}, {}, {}};
    std::vector<detail::Cell> cells;
    for (auto& m : matrix) cells.push_back(std::move(m.cell));
    for (auto& c : se) cells.push_back(std::move(c));
    detail::merge(out, std::move(cells));
    return out;
}

// ---------------------------------------------------------------- runtime

/// Sequential so timings do not compete for cores. For each size and
/// policy one warm-up run is discarded, then the median over monte_carlo
/// repetitions of total time ("wall_ms") and time per iteration
/// ("ms_per_iteration") is recorded.
inline ExperimentOutput run_runtime_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {})
{
    detail::require_kind(cfg, ExperimentKind::RuntimeSweep);
    validate(cfg);
    std::vector<DenoiserPolicy> policies;
    for (const auto& p : cfg.policies) policies.push_back(make_policy(p, cfg.prior, cfg.l1_kappa));
    detail::Logger log(opts.log);
    const double gamma = cfg.gammas.front();
    AmpOptions ao;
    ao.max_iter = cfg.max_iter;
    ao.tol = cfg.tol > 0.0 ? cfg.tol : std::numeric_limits<double>::min();

    ExperimentOutput out{cfg, {}, {}, {}};
    for (auto n : cfg.sizes) {
        for (std::size_t k = 0; k < policies.size(); ++k) {
            std::vector<double> total, per_iter, iters;
            for (int rep = -1; rep < cfg.monte_carlo; ++rep) {
                const Seed seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep + 1)});
                const auto pr = make_problem(cfg.prior, n, gamma, cfg.snr_y_db, seed);
                try {
                    const auto res = amp_run(pr.op, pr.meas.y, policies[k], ao);
                    if (rep < 0) continue;
                    total.push_back(res.wall_ms);
                    per_iter.push_back(res.wall_ms / res.iterations);
                    iters.push_back(res.iterations);
                } catch (const Error& e) {
                    out.errors.push_back({cfg.policies[k], gamma, seed, e.what()});
                }
            }
            ResultRecord rec;
            rec.experiment = cfg.name;
            rec.prior = detail::prior_label(cfg.prior);
            rec.policy = cfg.policies[k];
            rec.gamma = gamma;
            rec.snr_y_db = cfg.snr_y_db;
            rec.seed = cfg.seed;
            rec.mode = "matrix";
            rec.n = n;
            rec.iterations = static_cast<int>(std::lround(detail::median(iters)));
            rec.wall_ms = detail::median(total);
            rec.metric_name = "wall_ms";
            rec.metric_value = rec.wall_ms;
            out.records.push_back(rec);
            rec.metric_name = "ms_per_iteration";
            rec.metric_value = detail::median(per_iter);
            out.records.push_back(std::move(rec));
            log("runtime n={} policy={} median {:.1f} ms", n, cfg.policies[k], out.records.back().wall_ms);
        }
    }
    return out;
}

// --------------------------------------------------------------- dispatch

inline ExperimentOutput run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {})
{
    switch (cfg.kind) {
    case ExperimentKind::DenoiseSweep: return run_denoise_sweep(cfg, opts);
    case ExperimentKind::RecoverySweep: return run_recovery_sweep(cfg, opts);
    case ExperimentKind::SeCompare: return run_se_compare(cfg, opts);
    case ExperimentKind::RuntimeSweep: return run_runtime_sweep(cfg, opts);
    }
    throw ConfigurationError("unknown experiment kind");
}

/// Writes the CSV to `csv_path` and the sidecar next to it.
inline void write_outputs(const ExperimentOutput& out, const std::filesystem::path& csv_path)
{
    if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
    {
        std::ofstream csv(csv_path);
        if (!csv) throw ConfigurationError("cannot write '" + csv_path.string() + "'");
        write_csv(csv, out.records);
    }
    std::ofstream side(sidecar_path(csv_path));
    if (!side) throw ConfigurationError("cannot write sidecar for '" + csv_path.string() + "'");
    side << sidecar_json(out.config, csv_path.filename().string(), out.denoisers, out.errors).dump(2) << '\n';
}

} // namespace psamp::harness
