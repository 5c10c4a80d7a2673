#pragma once

// Scalar source priors: Bernoulli-Gaussian, k-dense and Student's-t.
// Samplers, densities, and the posterior-mean (MMSE) denoisers under
// additive Gaussian noise, both closed-form and by quadrature.

#include "psamp/core.hpp"
#include "psamp/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace psamp {

enum class PriorKind { BernoulliGaussian, KDense, StudentT };

/// Which Student's-t density to use. `Standard` is (1 + x^2/q)^{-(q+1)/2};
/// `Literal` drops the 1/q inside the bracket while keeping the standard
/// normalizing constant, so it does not integrate to one.
enum class StudentTForm { Standard, Literal };

struct SignalPrior {
    PriorKind kind = PriorKind::BernoulliGaussian;
    double bg_sparsity = 0.1;            // probability of a nonzero entry
    double bg_variance = 1.0;            // variance of the nonzero entries
    double kd_continuous_fraction = 0.1; // mass of the uniform part on (-mag, mag)
    double kd_magnitude = 1.0;           // atoms sit at +-kd_magnitude
    double st_shape = 1.67;              // degrees of freedom q
    StudentTForm st_form = StudentTForm::Standard;

    static SignalPrior bernoulli_gaussian(double sparsity, double variance)
    {
        SignalPrior p;
        p.kind = PriorKind::BernoulliGaussian;
        p.bg_sparsity = sparsity;
        p.bg_variance = variance;
        return p;
    }
    static SignalPrior k_dense(double continuous_fraction, double magnitude = 1.0)
    {
        SignalPrior p;
        p.kind = PriorKind::KDense;
        p.kd_continuous_fraction = continuous_fraction;
        p.kd_magnitude = magnitude;
        return p;
    }
    static SignalPrior student_t(double shape, StudentTForm form = StudentTForm::Standard)
    {
        SignalPrior p;
        p.kind = PriorKind::StudentT;
        p.st_shape = shape;
        p.st_form = form;
        return p;
    }

    friend bool operator==(const SignalPrior&, const SignalPrior&) = default;
};

inline bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

inline void validate(const SignalPrior& p)
{
    switch (p.kind) {
    case PriorKind::BernoulliGaussian:
        if (!is_probability(p.bg_sparsity)) throw ParameterError("Bernoulli-Gaussian sparsity must lie in [0,1]");
        if (!(p.bg_variance > 0.0) || !std::isfinite(p.bg_variance))
            throw ParameterError("Bernoulli-Gaussian variance must be positive");
        return;
    case PriorKind::KDense:
        if (!is_probability(p.kd_continuous_fraction))
            throw ParameterError("k-dense continuous fraction must lie in [0,1]");
        if (!(p.kd_magnitude > 0.0) || !std::isfinite(p.kd_magnitude))
            throw ParameterError("k-dense magnitude must be positive");
        return;
    case PriorKind::StudentT:
        if (!(p.st_shape > 0.0) || !std::isfinite(p.st_shape))
            throw ParameterError("Student's-t shape must be positive");
        return;
    }
    throw ParameterError("unknown prior kind");
}

inline std::string describe(const SignalPrior& p)
{
    switch (p.kind) {
    case PriorKind::BernoulliGaussian: return fmt::format("bg({:g},{:g})", p.bg_sparsity, p.bg_variance);
    case PriorKind::KDense: return fmt::format("kdense({:g},{:g})", p.kd_continuous_fraction, p.kd_magnitude);
    case PriorKind::StudentT:
        return fmt::format("student_t({:g}{})", p.st_shape, p.st_form == StudentTForm::Literal ? ",literal" : "");
    }
    return "unknown";
}

/// E[x^2]; +inf for Student's-t with q <= 2.
inline double second_moment(const SignalPrior& p)
{
    validate(p);
    switch (p.kind) {
    case PriorKind::BernoulliGaussian: return p.bg_sparsity * p.bg_variance;
    case PriorKind::KDense: {
        const double m2 = p.kd_magnitude * p.kd_magnitude;
        return (1.0 - p.kd_continuous_fraction) * m2 + p.kd_continuous_fraction * m2 / 3.0;
    }
    case PriorKind::StudentT: {
        const double q = p.st_shape;
        if (q <= 2.0) return std::numeric_limits<double>::infinity();
        return p.st_form == StudentTForm::Standard ? q / (q - 2.0) : 1.0 / (q - 2.0);
    }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

inline Vector sample_prior(const SignalPrior& p, Eigen::Index n, Seed seed)
{
    validate(p);
    if (n < 1) throw ParameterError("sample_prior: n must be at least 1");
    auto eng = make_engine(seed);
    Vector x(n);
    switch (p.kind) {
    case PriorKind::BernoulliGaussian: {
        std::bernoulli_distribution active(p.bg_sparsity);
        std::normal_distribution<double> slab(0.0, std::sqrt(p.bg_variance));
        for (Eigen::Index i = 0; i < n; ++i) x[i] = active(eng) ? slab(eng) : 0.0;
        break;
    }
    case PriorKind::KDense: {
        const double mag = p.kd_magnitude;
        std::bernoulli_distribution continuous(p.kd_continuous_fraction);
        std::bernoulli_distribution positive(0.5);
        std::uniform_real_distribution<double> uniform(-mag, mag);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (continuous(eng)) {
                double u = uniform(eng);
                while (u == -mag) u = uniform(eng); // keep the draw in the open interval
                x[i] = u;
            } else {
                x[i] = positive(eng) ? mag : -mag;
            }
        }
        break;
    }
    case PriorKind::StudentT: {
        std::student_t_distribution<double> t(p.st_shape);
        // The literal density normalizes to a Student's-t scaled by 1/sqrt(q).
        const double scale = p.st_form == StudentTForm::Standard ? 1.0 : 1.0 / std::sqrt(p.st_shape);
        for (Eigen::Index i = 0; i < n; ++i) x[i] = scale * t(eng);
        break;
    }
    }
    return x;
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

struct Atom {
    double location;
    double mass;
};

struct PriorDensity {
    double continuous = 0.0;
    std::vector<Atom> atoms;
};

inline std::vector<Atom> prior_atoms(const SignalPrior& p)
{
    std::vector<Atom> atoms;
    switch (p.kind) {
    case PriorKind::BernoulliGaussian:
        if (p.bg_sparsity < 1.0) atoms.push_back({0.0, 1.0 - p.bg_sparsity});
        break;
    case PriorKind::KDense:
        if (p.kd_continuous_fraction < 1.0) {
            const double m = 0.5 * (1.0 - p.kd_continuous_fraction);
            atoms.push_back({-p.kd_magnitude, m});
            atoms.push_back({p.kd_magnitude, m});
        }
        break;
    case PriorKind::StudentT: break;
    }
    return atoms;
}

inline double student_t_log_normalizer(double q)
{
    return std::lgamma(0.5 * (q + 1.0)) - std::lgamma(0.5 * q) - 0.5 * std::log(q * std::numbers::pi);
}

/// Log of the continuous part of the density, with the normalizing
/// constants computed once. -inf outside the support or when the continuous
/// part carries no mass.
class LogContinuousDensity {
public:
    explicit LogContinuousDensity(const SignalPrior& p) : prior_(p)
    {
        switch (p.kind) {
        case PriorKind::BernoulliGaussian:
            constant_ = p.bg_sparsity > 0.0
                          ? std::log(p.bg_sparsity) - 0.5 * std::log(2.0 * std::numbers::pi * p.bg_variance)
                          : kNegInf;
            break;
        case PriorKind::KDense:
            constant_ = p.kd_continuous_fraction > 0.0
                          ? std::log(p.kd_continuous_fraction / (2.0 * p.kd_magnitude))
                          : kNegInf;
            break;
        case PriorKind::StudentT: constant_ = student_t_log_normalizer(p.st_shape); break;
        }
    }

    double operator()(double x) const
    {
        switch (prior_.kind) {
        case PriorKind::BernoulliGaussian: return constant_ - 0.5 * x * x / prior_.bg_variance;
        case PriorKind::KDense: return std::abs(x) < prior_.kd_magnitude ? constant_ : kNegInf;
        case PriorKind::StudentT: {
            const double q = prior_.st_shape;
            const double u = prior_.st_form == StudentTForm::Standard ? x * x / q : x * x;
            return constant_ - 0.5 * (q + 1.0) * std::log1p(u);
        }
        }
        return kNegInf;
    }

private:
    static constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    SignalPrior prior_;
    double constant_ = kNegInf;
};

inline double log_continuous_density(const SignalPrior& p, double x) { return LogContinuousDensity(p)(x); }

inline PriorDensity prior_pdf(const SignalPrior& p, double x)
{
    validate(p);
    PriorDensity d;
    d.continuous = std::exp(log_continuous_density(p, x));
    d.atoms = prior_atoms(p);
    return d;
}

/// Closed interval outside of which the continuous part vanishes.
inline std::pair<double, double> continuous_support(const SignalPrior& p)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (p.kind == PriorKind::KDense) return {-p.kd_magnitude, p.kd_magnitude};
    return {-inf, inf};
}

inline bool has_continuous_part(const SignalPrior& p)
{
    switch (p.kind) {
    case PriorKind::BernoulliGaussian: return p.bg_sparsity > 0.0;
    case PriorKind::KDense: return p.kd_continuous_fraction > 0.0;
    case PriorKind::StudentT: return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// MMSE denoisers
// ---------------------------------------------------------------------------

/// Posterior mean E[x | r] and its derivative d/dr, which equals Var[x | r] / c.
struct PosteriorMean {
    double value = 0.0;
    double derivative = 0.0;
};

namespace detail {

inline void require_noise_variance(double c, const char* who)
{
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError(std::string(who) + ": noise variance must be positive");
}

/// Mixture component in log-weight form: conditional mean and variance.
struct Component {
    double log_weight;
    double mean;
    double variance;
};

template <std::size_t N>
PosteriorMean combine(const std::array<Component, N>& comps, std::size_t count, double c)
{
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) top = std::max(top, comps[k].log_weight);
    double z = 0.0, m = 0.0;
    std::array<double, N> w{};
    for (std::size_t k = 0; k < count; ++k) {
        w[k] = std::exp(comps[k].log_weight - top);
        z += w[k];
        m += w[k] * comps[k].mean;
    }
    m /= z;
    double v = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double d = comps[k].mean - m;
        v += w[k] * (comps[k].variance + d * d);
    }
    v /= z;
    return {m, std::max(0.0, v) / c};
}

} // namespace detail

/// Posterior mean for the Bernoulli-Gaussian prior (1-lambda) delta_0 + lambda N(0, var).
inline PosteriorMean mmse_denoise_bg(double r, double c, double sparsity, double variance)
{
    detail::require_noise_variance(c, "mmse_denoise_bg");
    if (!is_probability(sparsity)) throw ParameterError("mmse_denoise_bg: sparsity must lie in [0,1]");
    if (!(variance > 0.0)) throw ParameterError("mmse_denoise_bg: variance must be positive");
    const double w = variance / (variance + c);
    if (sparsity == 0.0) return {0.0, 0.0};
    if (sparsity == 1.0) return {w * r, w};
    // log of (spike evidence / slab evidence)
    const double a = variance / (2.0 * c * (variance + c));
    const double log_ratio =
        std::log((1.0 - sparsity) / sparsity) + 0.5 * std::log((variance + c) / c) - a * r * r;
    const double pi_slab = logistic(-log_ratio);
    const double pi_spike = logistic(log_ratio);
    return {pi_slab * w * r, w * pi_slab * (1.0 + 2.0 * a * r * r * pi_spike)};
}

/// Posterior mean for the k-dense prior: atoms at +-mag with mass (1-lambda)/2
/// each, uniform density lambda/(2 mag) on (-mag, mag).
inline PosteriorMean mmse_denoise_kdense(double r, double c, double continuous_fraction, double magnitude)
{
    detail::require_noise_variance(c, "mmse_denoise_kdense");
    if (!is_probability(continuous_fraction)) throw ParameterError("mmse_denoise_kdense: fraction must lie in [0,1]");
    if (!(magnitude > 0.0)) throw ParameterError("mmse_denoise_kdense: magnitude must be positive");

    const double rho = std::abs(r);
    const double sc = std::sqrt(c);
    const double mag = magnitude;
    const double lam = continuous_fraction;

    std::array<detail::Component, 3> comps{};
    std::size_t count = 0;
    if (lam < 1.0) {
        const double base = std::log(0.5 * (1.0 - lam)) - 0.5 * std::log(2.0 * std::numbers::pi * c);
        comps[count++] = {base - 0.5 * (rho - mag) * (rho - mag) / c, mag, 0.0};
        comps[count++] = {base - 0.5 * (rho + mag) * (rho + mag) / c, -mag, 0.0};
    }
    if (lam > 0.0) {
        // x = rho + sc * t with t standard normal truncated to [ta, tb].
        const double tb = (mag - rho) / sc;
        const double ta = (-mag - rho) / sc;
        double log_mass, phi_a_ratio, phi_b_ratio; // phi(t)/mass
        if (tb >= 0.0) {
            const double mass = 0.5 * (std::erf(tb / std::numbers::sqrt2) - std::erf(ta / std::numbers::sqrt2));
            log_mass = std::log(mass);
            phi_a_ratio = kInvSqrt2Pi * std::exp(-0.5 * ta * ta) / mass;
            phi_b_ratio = kInvSqrt2Pi * std::exp(-0.5 * tb * tb) / mass;
        } else {
            const double ub = -tb / std::numbers::sqrt2;
            const double ua = -ta / std::numbers::sqrt2;
            const double e = std::exp(-0.5 * (ta * ta - tb * tb));
            const double scaled = 0.5 * (erfcx(ub) - erfcx(ua) * e); // mass * exp(ub^2)
            log_mass = std::log(scaled) - ub * ub;
            phi_b_ratio = kInvSqrt2Pi / scaled;
            phi_a_ratio = kInvSqrt2Pi * e / scaled;
        }
        const double et = phi_a_ratio - phi_b_ratio;
        const double et2 = 1.0 + ta * phi_a_ratio - tb * phi_b_ratio;
        const double var_t = std::max(0.0, et2 - et * et);
        comps[count++] = {std::log(lam / (2.0 * mag)) + log_mass, rho + sc * et, c * var_t};
    }
    auto pm = detail::combine(comps, count, c);
    if (r < 0.0) pm.value = -pm.value;
    return pm;
}

struct NumericMmseOptions {
    double rel_tol = 1e-11;
    int max_intervals = 4000;
};

/// Posterior mean by adaptive quadrature of the continuous part; atoms are
/// added in closed form. Works for any of the symmetric priors and is the
/// only route for Student's-t.
inline PosteriorMean mmse_denoise_numeric(const SignalPrior& p, double r, double c,
                                          const NumericMmseOptions& opts = {})
{
    detail::require_noise_variance(c, "mmse_denoise_numeric");
    validate(p);
    const double rho = std::abs(r);
    const double sc = std::sqrt(c);
    const auto atoms = prior_atoms(p);
    const bool continuous = has_continuous_part(p);

    const double log_gauss_norm = -0.5 * std::log(2.0 * std::numbers::pi * c);
    auto log_gauss = [&](double d) { return -0.5 * d * d / c + log_gauss_norm; };

    // Window outside of which the integrand is below e^-800 of its value at
    // the window edge (both factors decay away from [0, rho] for unimodal
    // symmetric priors).
    auto [s_lo, s_hi] = continuous_support(p);
    const double lo = std::max(-40.0 * sc, s_lo);
    const double hi = std::min(rho + 40.0 * sc, s_hi);

    const LogContinuousDensity log_density(p);
    auto log_integrand = [&](double x) { return log_density(x) + log_gauss(rho - x); };

    // Reference log-level for rescaling, from a coarse scan.
    double ref = -std::numeric_limits<double>::infinity();
    std::vector<double> cuts{lo, hi};
    if (continuous && hi > lo) {
        constexpr int kScan = 32;
        double best_x = lo;
        for (int i = 0; i <= kScan; ++i) {
            double x = lo + (hi - lo) * i / kScan;
            if (i == kScan) x = hi;
            const double v = log_integrand(std::clamp(x, std::nextafter(lo, hi), std::nextafter(hi, lo)));
            if (v > ref) {
                ref = v;
                best_x = x;
            }
        }
        for (double x : {0.0, rho}) {
            if (x > lo && x < hi) {
                cuts.push_back(x);
                const double v = log_integrand(x);
                if (v > ref) ref = v;
            }
        }
        if (best_x > lo && best_x < hi) cuts.push_back(best_x);
    }
    for (const auto& a : atoms) ref = std::max(ref, std::log(a.mass) + log_gauss(rho - a.location));

    // Moments of u = x - rho.
    std::array<double, 3> atom_moments{};
    for (const auto& a : atoms) {
        const double w = std::exp(std::log(a.mass) + log_gauss(rho - a.location) - ref);
        const double u = a.location - rho;
        atom_moments[0] += w;
        atom_moments[1] += w * u;
        atom_moments[2] += w * u * u;
    }

    std::array<double, 3> moments = atom_moments;
    if (continuous && hi > lo) {
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        const double scale = sc + rho + 1.0;
        auto f = [&](double x) -> quadrature::Values<3> {
            const double w = std::exp(log_integrand(x) - ref);
            const double u = x - rho;
            return {w, w * u, w * u * u};
        };
        auto tol = [&](const quadrature::Values<3>& est) -> quadrature::Values<3> {
            const double m0 = est[0] + atom_moments[0];
            const double base = opts.rel_tol * m0;
            return {base, base * scale, base * scale * scale};
        };
        const auto res = quadrature::integrate<3>(f, cuts, tol, opts.max_intervals);
        for (int k = 0; k < 3; ++k) moments[k] += res.value[k];
    }
    if (!(moments[0] > 0.0) || !std::isfinite(moments[0])) {
        throw NumericalError(fmt::format("mmse_denoise_numeric: evidence underflow at r={} c={} prior={}", r, c,
                                         describe(p)));
    }
    const double eu = moments[1] / moments[0];
    const double var = std::max(0.0, moments[2] / moments[0] - eu * eu);
    const double value = rho + eu;
    return {r < 0.0 ? -value : value, var / c};
}

/// Closed form where available (Bernoulli-Gaussian, k-dense), quadrature otherwise.
inline PosteriorMean mmse_denoise(const SignalPrior& p, double r, double c)
{
    switch (p.kind) {
    case PriorKind::BernoulliGaussian: return mmse_denoise_bg(r, c, p.bg_sparsity, p.bg_variance);
    case PriorKind::KDense: return mmse_denoise_kdense(r, c, p.kd_continuous_fraction, p.kd_magnitude);
    case PriorKind::StudentT: return mmse_denoise_numeric(p, r, c);
    }
    throw CapabilityError("mmse_denoise: unsupported prior");
}

inline bool has_analytic_mmse(const SignalPrior& p)
{
    return p.kind == PriorKind::BernoulliGaussian || p.kind == PriorKind::KDense;
}

/// Elementwise posterior mean; `numeric` forces the quadrature route.
inline DenoisedVector mmse_denoise_vector(const SignalPrior& p, const VectorRef& r, double c, bool numeric = false)
{
    validate(p);
    DenoisedVector out{Vector(r.size()), 0.0};
    double dsum = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const auto pm = numeric ? mmse_denoise_numeric(p, r[i], c) : mmse_denoise(p, r[i], c);
        out.x_hat[i] = pm.value;
        dsum += pm.derivative;
    }
    out.mean_derivative = r.size() ? dsum / static_cast<double>(r.size()) : 0.0;
    return out;
}

} // namespace psamp
