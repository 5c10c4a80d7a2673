#pragma once

// Approximate message passing with a pluggable scalar denoiser:
//
//   r^t     = x^t + Phi^T z^t
//   x^{t+1} = f_t(r^t, c^t)
//   z^{t+1} = y - Phi x^{t+1} + (1/gamma) <f_t'> z^t
//   c^{t+1} = ||z^{t+1}||^2 / m
//
// f_t is chosen per iteration by the policy: SURE-optimal weights within a
// kernel family, the true-prior posterior mean (genie), or soft thresholding.

#include "psamp/core.hpp"
#include "psamp/denoising.hpp"
#include "psamp/sensing.hpp"
#include "psamp/signal_models.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace psamp {

struct ParametricSure {
    KernelFamily family = KernelFamily::piecewise_linear1();
};

struct GenieBamp {
    SignalPrior prior;
};

struct L1Amp {
    double kappa = 2.0; // threshold = kappa * sqrt(c)
};

using DenoiserPolicy = std::variant<ParametricSure, GenieBamp, L1Amp>;

inline DenoiserPolicy parametric_sure_policy(KernelFamily family) { return ParametricSure{std::move(family)}; }

inline DenoiserPolicy bamp_policy(const SignalPrior& prior)
{
    validate(prior);
    // Every prior kind has a posterior-mean route: closed form for
    // Bernoulli-Gaussian and k-dense, quadrature for Student's-t.
    switch (prior.kind) {
    case PriorKind::BernoulliGaussian:
    case PriorKind::KDense:
    case PriorKind::StudentT: return GenieBamp{prior};
    }
    throw CapabilityError("bamp_policy: no MMSE denoiser for this prior");
}

inline DenoiserPolicy l1amp_policy(double kappa)
{
    if (!(kappa >= 1.0 && kappa <= 6.0)) throw ParameterError("l1amp_policy: threshold multiple must lie in [1, 6]");
    return L1Amp{kappa};
}

inline std::string policy_name(const DenoiserPolicy& policy)
{
    struct Visitor {
        std::string operator()(const ParametricSure& p) const { return p.family.name(); }
        std::string operator()(const GenieBamp&) const { return "bamp"; }
        std::string operator()(const L1Amp&) const { return "l1amp"; }
    };
    return std::visit(Visitor{}, policy);
}

/// One denoising step at effective noise variance c.
struct DenoiseStep {
    Vector x_hat;
    double mean_derivative = 0.0;
    double sure = 0.0;            // SURE of x_hat, computed from r alone
    std::vector<double> weights;  // kernel weights, parametric policies only
    bool regularized = false;
};

inline DenoiseStep denoise_step(const DenoiserPolicy& policy, const VectorRef& r, double c)
{
    const double cc = clamp_noise(c);
    DenoiseStep step;
    DenoisedVector out;
    if (const auto* sure = std::get_if<ParametricSure>(&policy)) {
        const auto spec = optimize_weights(r, cc, sure->family);
        out = apply_denoiser(spec, r);
        step.weights = spec.weights;
        step.regularized = spec.regularized;
    } else if (const auto* genie = std::get_if<GenieBamp>(&policy)) {
        out = mmse_denoise_vector(genie->prior, r, cc);
    } else {
        const auto& l1 = std::get<L1Amp>(policy);
        out = soft_threshold(r, l1.kappa * std::sqrt(cc));
    }
    step.sure = sure_from_output(r, out, cc);
    step.x_hat = std::move(out.x_hat);
    step.mean_derivative = out.mean_derivative;
    return step;
}

struct AmpState {
    Vector x_hat; // x^t
    Vector z;     // z^t
    double c = 0; // c^t
    int t = 0;
};

struct IterationRecord {
    int t = 0;
    double c = 0.0;               // c^t, the noise level the denoiser saw
    double sure = 0.0;            // SURE estimate of the MSE of x^{t+1}
    double mean_derivative = 0.0; // nu^{t+1}
    std::optional<double> true_mse;             // <(x^{t+1} - x)^2>
    std::optional<double> true_effective_noise; // <(r^t - x)^2>
    std::vector<double> weights;
};

struct RecoveryResult {
    Vector x_hat;
    int iterations = 0;
    bool converged = false;
    std::vector<IterationRecord> trajectory;
    double wall_ms = 0.0;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::vector<IterationRecord> trajectory)
        : Error(what), trajectory_(std::move(trajectory))
    {
    }
    const std::vector<IterationRecord>& trajectory() const noexcept { return trajectory_; }

private:
    std::vector<IterationRecord> trajectory_;
};

/// Passed to AmpOptions::observer after each iteration.
struct IterationView {
    const AmpState& state; // already advanced to t+1
    const Vector& r;       // r^t
    const IterationRecord& record;
};

struct AmpOptions {
    int max_iter = 100;
    double tol = 1e-6;
    std::optional<Vector> x_true;
    /// Disabling the Onsager term turns the loop into plain iterative
    /// thresholding; used to study the correction's effect.
    bool onsager = true;
    /// Per-iteration "t c sure" lines, when set.
    std::ostream* trace = nullptr;
    std::function<void(const IterationView&)> observer;
};

inline constexpr double kRelativeChangeFloor = 1e-30;
inline constexpr double kDivergenceFactor = 1e3;

inline RecoveryResult amp_run(const SensingOperator& op, const VectorRef& y, const DenoiserPolicy& policy,
                              const AmpOptions& opts = {})
{
    if (y.size() != op.rows()) throw ParameterError("amp_run: measurement length does not match operator");
    if (!(opts.tol > 0.0)) throw ParameterError("amp_run: tolerance must be positive");
    if (opts.max_iter < 1) throw ParameterError("amp_run: max_iter must be at least 1");
    if (opts.x_true && opts.x_true->size() != op.cols())
        throw ParameterError("amp_run: reference signal length does not match operator");

    const auto start = std::chrono::steady_clock::now();
    const double inv_gamma = 1.0 / op.sampling_ratio();

    AmpState state{Vector::Zero(op.cols()), Vector(y), 0.0, 0};
    state.c = mean_square(state.z);
    const double c0 = state.c;

    RecoveryResult result;
    for (int t = 0; t < opts.max_iter; ++t) {
        const Vector r = state.x_hat + op.apply_transpose(state.z);
        auto step = denoise_step(policy, r, state.c);

        Vector z_next = y - op.apply(step.x_hat);
        if (opts.onsager) z_next += (inv_gamma * step.mean_derivative) * state.z;
        const double c_next = mean_square(z_next);

        IterationRecord rec;
        rec.t = t;
        rec.c = state.c;
        rec.sure = step.sure;
        rec.mean_derivative = step.mean_derivative;
        rec.weights = std::move(step.weights);
        if (opts.x_true) {
            rec.true_mse = mean_squared_error(step.x_hat, *opts.x_true);
            rec.true_effective_noise = mean_squared_error(r, *opts.x_true);
        }
        if (opts.trace) *opts.trace << t << ' ' << rec.c << ' ' << rec.sure << '\n';
        result.trajectory.push_back(rec);

        if (!std::isfinite(c_next) || c_next > kDivergenceFactor * c0) {
            throw DivergenceError("amp_run: effective noise diverged at iteration " + std::to_string(t),
                                  std::move(result.trajectory));
        }

        const double change =
            (step.x_hat - state.x_hat).norm() / std::max(state.x_hat.norm(), kRelativeChangeFloor);
        state.x_hat = std::move(step.x_hat);
        state.z = std::move(z_next);
        state.c = c_next;
        state.t = t + 1;
        if (opts.observer) opts.observer(IterationView{state, r, result.trajectory.back()});
        if (change < opts.tol) {
            result.converged = true;
            break;
        }
    }
    result.iterations = static_cast<int>(result.trajectory.size());
    result.x_hat = std::move(state.x_hat);
    result.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace psamp
