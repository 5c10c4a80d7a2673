#pragma once

// Scalar-channel Monte Carlo state evolution. Each iteration draws fresh
// x ~ prior and z ~ N(0,1), forms r = x + sqrt(tau) z, selects the denoiser
// with the same rule the matrix algorithm uses, and advances either
//
//   tau^{t+1} = s2 + (1/gamma) tau^t <f'(r)>          (derivative form)
//   tau^{t+1} = s2 + (1/gamma) <(x - f(r))^2>         (squared-error form)
//
// The two coincide when SURE at the selected denoiser equals c <f'>, which
// holds for the posterior mean and for SURE-optimal weights in any family
// whose span contains the identity. Both are recorded on every step.

#include "psamp/amp.hpp"
#include "psamp/core.hpp"
#include "psamp/signal_models.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace psamp {

enum class SeRecursion {
    Auto,         // derivative form where it is exact, squared-error form otherwise
    Derivative,
    SquaredError,
};

/// Whether the derivative form tracks the squared-error form for this policy.
inline bool derivative_form_exact(const DenoiserPolicy& policy)
{
    if (const auto* p = std::get_if<ParametricSure>(&policy))
        return p->family.spans_identity();
    return std::holds_alternative<GenieBamp>(policy);
}

struct SeTrajectory {
    std::vector<double> tau;              // tau^0 .. tau^T (effective noise)
    std::vector<double> tau_derivative;   // s2 + (1/gamma) tau^t E[f'], t = 0..T-1
    std::vector<double> tau_mse_form;     // s2 + (1/gamma) E[(x - f)^2], t = 0..T-1
    std::vector<double> mse;          // E[(x - f(x + sqrt(tau^t) z))^2], predicts MSE of x^{t+1}
    std::vector<double> sure;         // SURE of the selected denoiser at each step
    double gamma = 0.0;
    double noise_variance = 0.0;
    SignalPrior prior;
    std::string policy;
    Eigen::Index mc_samples = 0;
    SeRecursion recursion = SeRecursion::Derivative; // the form that advanced tau
};

inline constexpr Eigen::Index kMinSeSamples = 10000;

inline SeTrajectory se_run(const SignalPrior& prior, double gamma, double noise_variance,
                           const DenoiserPolicy& policy, Eigen::Index mc_samples, int iterations, Seed seed,
                           SeRecursion recursion = SeRecursion::Auto)
{
    validate(prior);
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ParameterError("se_run: sampling ratio must lie in (0, 1]");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
        throw ParameterError("se_run: noise variance must be non-negative");
    if (mc_samples < kMinSeSamples) throw ParameterError("se_run: need at least 10^4 Monte Carlo samples");
    if (iterations < 1) throw ParameterError("se_run: iterations must be at least 1");

    SeTrajectory out;
    out.gamma = gamma;
    out.noise_variance = noise_variance;
    out.prior = prior;
    out.policy = policy_name(policy);
    out.mc_samples = mc_samples;
    if (recursion == SeRecursion::Auto)
        recursion = derivative_form_exact(policy) ? SeRecursion::Derivative : SeRecursion::SquaredError;
    out.recursion = recursion;

    // tau^0 = <||y||^2>/m, i.e. s2 + E[x^2]/gamma for unit-norm columns;
    // E[x^2] is estimated from samples so heavy-tailed priors stay finite.
    const Vector x0 = sample_prior(prior, mc_samples, derive_seed(seed, {0, 0}));
    double tau = noise_variance + mean_square(x0) / gamma;
    out.tau.push_back(tau);

    for (int t = 0; t < iterations; ++t) {
        if (!std::isfinite(tau) || !(tau > 0.0)) {
            throw NumericalError("se_run: effective noise left (0, inf) at iteration " + std::to_string(t));
        }
        const auto tt = static_cast<std::uint64_t>(t) + 1;
        const Vector x = sample_prior(prior, mc_samples, derive_seed(seed, {tt, 0}));
        const Vector r = x + std::sqrt(tau) * gaussian_vector(mc_samples, derive_seed(seed, {tt, 1}));
        const auto step = denoise_step(policy, r, tau);
        const double mse = mean_squared_error(step.x_hat, x);
        out.mse.push_back(mse);
        out.sure.push_back(step.sure);
        const double by_derivative = noise_variance + tau * step.mean_derivative / gamma;
        const double by_mse = noise_variance + mse / gamma;
        out.tau_derivative.push_back(by_derivative);
        out.tau_mse_form.push_back(by_mse);
        tau = recursion == SeRecursion::Derivative ? by_derivative : by_mse;
        out.tau.push_back(tau);
    }
    if (!std::isfinite(tau)) throw NumericalError("se_run: effective noise is not finite");
    return out;
}

} // namespace psamp
