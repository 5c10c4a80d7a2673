#pragma once

// Parametric SURE denoisers: f(r) = sum_i a_i f_i(r | hinges(c)), where the
// kernel hinges follow fixed ratios of sqrt(c) and the weights a minimize
// Stein's unbiased risk estimate over the observed noisy vector.

#include "psamp/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace psamp {

/// Effective noise variances below this are clamped before hinges are derived.
inline constexpr double kNoiseFloor = 1e-12;

enum class KernelKind { PiecewiseLinear1, PiecewiseLinear2, Exponential, Custom };

struct KernelValue {
    double value = 0.0;
    double derivative = 0.0;
};

/// User-supplied kernel: (r, c) -> (f(r), f'(r)).
using CustomKernel = std::function<KernelValue(double r, double c)>;

struct Pwl1Hinges {
    double alpha1, alpha2;
};
struct Pwl2Hinges {
    double beta1, beta2;
};

inline double clamp_noise(double c) { return std::max(c, kNoiseFloor); }

inline Pwl1Hinges pwl1_hinges(double c)
{
    const double s = std::sqrt(clamp_noise(c));
    return {2.0 * s, 4.0 * s};
}

inline Pwl2Hinges pwl2_hinges(double c)
{
    const double s = std::sqrt(clamp_noise(c));
    return {1.0 / (1.0 + 6.0 * s), 1.0 / (1.0 + 2.0 * s)};
}

/// Width rule for the exponential kernel r exp(-r^2 / 2T^2).
/// `SqrtSixC` is T = sqrt(6c), the exp(-r^2 / 12c) weighting used by
/// SURE-LET image denoisers; `SixSqrtC` is T = 6 sqrt(c).
enum class ExpWidth { SqrtSixC, SixSqrtC };

inline double exp_kernel_width(double c, ExpWidth rule = ExpWidth::SqrtSixC)
{
    const double cc = clamp_noise(c);
    return rule == ExpWidth::SqrtSixC ? std::sqrt(6.0 * cc) : 6.0 * std::sqrt(cc);
}

namespace detail {

// Kernels are odd: f(r) = sign(r) h(|r|), f'(r) = h'(|r|). At a breakpoint the
// derivative takes the branch on the right of r, which for r < 0 is the
// branch on the *left* in |r|.
inline bool past(double u, double breakpoint, bool negative)
{
    return negative ? u > breakpoint : u >= breakpoint;
}

inline KernelValue odd(double r, double h, double dh)
{
    return {r < 0.0 ? -h : h, dh};
}

// Transition ramp shared by the second kernel of both piecewise-linear families.
inline KernelValue ramp(double r, double lo, double hi)
{
    const double u = std::abs(r);
    const bool neg = r < 0.0;
    double h = u <= lo ? 0.0 : (u < hi ? (u - lo) / (hi - lo) : 1.0);
    double dh = past(u, hi, neg) ? 0.0 : (past(u, lo, neg) ? 1.0 / (hi - lo) : 0.0);
    return odd(r, h, dh);
}

inline KernelValue pwl1(std::size_t i, double r, const Pwl1Hinges& hg)
{
    const double u = std::abs(r);
    const bool neg = r < 0.0;
    const double a1 = hg.alpha1, a2 = hg.alpha2;
    switch (i) {
    case 0: {
        const double h = u <= a1 ? u / a1 : (u < 2.0 * a1 ? 2.0 - u / a1 : 0.0);
        const double dh = past(u, 2.0 * a1, neg) ? 0.0 : (past(u, a1, neg) ? -1.0 / a1 : 1.0 / a1);
        return odd(r, h, dh);
    }
    case 1: return ramp(r, a1, a2);
    default: {
        const double h = u < a2 ? 0.0 : u - a2;
        return odd(r, h, past(u, a2, neg) ? 1.0 : 0.0);
    }
    }
}

inline KernelValue pwl2(std::size_t i, double r, const Pwl2Hinges& hg)
{
    if (i == 1) return ramp(r, hg.beta1, hg.beta2);
    const double u = std::abs(r);
    const bool neg = r < 0.0;
    const double b1 = hg.beta1;
    const double h = u < b1 ? u / b1 : 1.0;
    return odd(r, h, past(u, b1, neg) ? 0.0 : 1.0 / b1);
}

inline KernelValue exponential(std::size_t i, double r, double width)
{
    if (i == 0) return {r, 1.0};
    const double q = r * r / (width * width);
    const double e = std::exp(-0.5 * q);
    return {r * e, e * (1.0 - q)};
}

} // namespace detail

/// A family of kernels with noise-dependent nonlinear parameters. The three
/// built-in families can be extended with user kernels via `with_extra`.
class KernelFamily {
public:
    static KernelFamily piecewise_linear1() { return KernelFamily(KernelKind::PiecewiseLinear1, "pwl1"); }
    static KernelFamily piecewise_linear2() { return KernelFamily(KernelKind::PiecewiseLinear2, "pwl2"); }
    static KernelFamily exponential(ExpWidth rule = ExpWidth::SqrtSixC)
    {
        KernelFamily f(KernelKind::Exponential, rule == ExpWidth::SqrtSixC ? "exp" : "exp-wide");
        f.exp_width_ = rule;
        return f;
    }
    static KernelFamily custom(std::string name, std::vector<CustomKernel> kernels)
    {
        KernelFamily f(KernelKind::Custom, std::move(name));
        f.extras_ = std::move(kernels);
        return f;
    }

    /// Parses "pwl1", "pwl2", "exp" or "exp-wide".
    static KernelFamily from_name(const std::string& name)
    {
        if (name == "pwl1") return piecewise_linear1();
        if (name == "pwl2") return piecewise_linear2();
        if (name == "exp") return exponential();
        if (name == "exp-wide") return exponential(ExpWidth::SixSqrtC);
        throw ParameterError("unknown kernel family '" + name + "'");
    }

    KernelFamily with_extra(CustomKernel kernel, std::string suffix = "+custom") const
    {
        KernelFamily f = *this;
        f.extras_.push_back(std::move(kernel));
        f.name_ += suffix;
        return f;
    }

    KernelKind kind() const noexcept { return kind_; }
    ExpWidth exp_width() const noexcept { return exp_width_; }
    const std::string& name() const noexcept { return name_; }
    std::size_t builtin_size() const noexcept
    {
        switch (kind_) {
        case KernelKind::PiecewiseLinear1: return 3;
        case KernelKind::PiecewiseLinear2: return 2;
        case KernelKind::Exponential: return 2;
        case KernelKind::Custom: return 0;
        }
        return 0;
    }
    std::size_t size() const noexcept { return builtin_size() + extras_.size(); }

    /// True when some weight vector makes the denoiser the identity map.
    /// PWL1 has f1 + 2 f2 + f3 = r and EXP has f1 = r; PWL2 saturates.
    bool spans_identity() const noexcept
    {
        return kind_ == KernelKind::PiecewiseLinear1 || kind_ == KernelKind::Exponential;
    }

    /// Kernel evaluation with hinges resolved for one noise level, so that
    /// per-element evaluation does no square roots.
    class Bound {
    public:
        Bound(const KernelFamily& family, double c)
            : family_(&family), c_(c), pwl1_(pwl1_hinges(c)), pwl2_(pwl2_hinges(c)),
              width_(exp_kernel_width(c, family.exp_width_))
        {
        }

        KernelValue operator()(std::size_t i, double r) const
        {
            const std::size_t nb = family_->builtin_size();
            if (i >= nb) return family_->extras_[i - nb](r, c_);
            switch (family_->kind_) {
            case KernelKind::PiecewiseLinear1: return detail::pwl1(i, r, pwl1_);
            case KernelKind::PiecewiseLinear2: return detail::pwl2(i, r, pwl2_);
            case KernelKind::Exponential: return detail::exponential(i, r, width_);
            case KernelKind::Custom: break;
            }
            return {};
        }

        std::size_t size() const noexcept { return family_->size(); }

    private:
        const KernelFamily* family_;
        double c_;
        Pwl1Hinges pwl1_;
        Pwl2Hinges pwl2_;
        double width_;
    };

    Bound bind(double c) const { return Bound(*this, c); }

private:
    KernelFamily(KernelKind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

    KernelKind kind_;
    std::string name_;
    ExpWidth exp_width_ = ExpWidth::SqrtSixC;
    std::vector<CustomKernel> extras_;
};

/// Value and a.e. derivative of kernel `i` of `family` at noise level c.
inline KernelValue kernel_eval(const KernelFamily& family, std::size_t i, double r, double c)
{
    if (i >= family.size()) throw ParameterError("kernel_eval: kernel index out of range");
    if (!(c > 0.0)) throw DomainError("kernel_eval: noise variance must be positive");
    return family.bind(c)(i, r);
}

/// A concrete denoiser: a kernel family at noise level c with linear weights.
struct DenoiserSpec {
    KernelFamily family = KernelFamily::piecewise_linear1();
    double c = 1.0;
    std::vector<double> weights;
    /// Set when the Gram matrix needed a ridge term (or was identically zero).
    bool regularized = false;

    KernelValue evaluate(double r) const
    {
        const auto k = family.bind(c);
        KernelValue out;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const auto v = k(i, r);
            out.value += weights[i] * v.value;
            out.derivative += weights[i] * v.derivative;
        }
        return out;
    }
};

inline void check_spec(const DenoiserSpec& spec)
{
    if (spec.weights.size() != spec.family.size()) throw ParameterError("denoiser weights do not match family size");
    for (double w : spec.weights) {
        if (!std::isfinite(w)) throw ParameterError("denoiser weights must be finite");
    }
}

inline DenoisedVector apply_denoiser(const DenoiserSpec& spec, const VectorRef& r)
{
    check_spec(spec);
    const auto kernels = spec.family.bind(spec.c);
    const std::size_t k = spec.weights.size();
    DenoisedVector out{Vector(r.size()), 0.0};
    double dsum = 0.0;
    for (Eigen::Index n = 0; n < r.size(); ++n) {
        double v = 0.0, d = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const auto kv = kernels(i, r[n]);
            v += spec.weights[i] * kv.value;
            d += spec.weights[i] * kv.derivative;
        }
        out.x_hat[n] = v;
        dsum += d;
    }
    out.mean_derivative = r.size() ? dsum / static_cast<double>(r.size()) : 0.0;
    return out;
}

/// SURE from a denoiser's output: c + <(f - r)^2> + 2c(<f'> - 1).
inline double sure_from_output(const VectorRef& r, const DenoisedVector& out, double c)
{
    return c + mean_squared_error(out.x_hat, r) + 2.0 * c * (out.mean_derivative - 1.0);
}

/// Stein's unbiased estimate of the per-entry MSE of `spec` applied to r,
/// where r = x + sqrt(c) z.
inline double sure_value(const VectorRef& r, double c, const DenoiserSpec& spec)
{
    if (!(c > 0.0)) throw DomainError("sure_value: noise variance must be positive");
    return sure_from_output(r, apply_denoiser(spec, r), c);
}

/// Weights minimizing SURE: sum_j a_j <f_i f_j> = <r f_i> - c <f_i'>.
/// A ridge of 1e-9 trace/k is added when the Gram matrix condition number
/// exceeds 1e12.
inline DenoiserSpec optimize_weights(const VectorRef& r, double c, const KernelFamily& family)
{
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("optimize_weights: noise variance must be positive");
    const std::size_t k = family.size();
    if (k == 0) throw ParameterError("optimize_weights: empty kernel family");
    if (static_cast<std::size_t>(r.size()) < k) throw ParameterError("optimize_weights: fewer samples than kernels");

    const auto kernels = family.bind(c);
    const auto ki = static_cast<Eigen::Index>(k);
    Matrix gram = Matrix::Zero(ki, ki);
    Vector cross = Vector::Zero(ki);
    Vector slope = Vector::Zero(ki);
    std::vector<double> values(k);
    for (Eigen::Index n = 0; n < r.size(); ++n) {
        const double rn = r[n];
        for (std::size_t i = 0; i < k; ++i) {
            const auto kv = kernels(i, rn);
            values[i] = kv.value;
            cross[static_cast<Eigen::Index>(i)] += rn * kv.value;
            slope[static_cast<Eigen::Index>(i)] += kv.derivative;
        }
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j <= i; ++j) gram(i, j) += values[i] * values[j];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(r.size());
    for (Eigen::Index i = 0; i < ki; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            gram(i, j) *= inv_n;
            gram(j, i) = gram(i, j);
        }
    }
    const Vector rhs = cross * inv_n - c * (slope * inv_n);

    DenoiserSpec spec;
    spec.family = family;
    spec.c = c;
    spec.weights.assign(k, 0.0);

    const double trace = gram.trace();
    if (!(trace > 0.0) || !std::isfinite(trace)) {
        spec.regularized = true;
        return spec;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    if (!(lmin > 0.0) || lmax / lmin > 1e12) {
        gram.diagonal().array() += 1e-9 * trace / static_cast<double>(k);
        spec.regularized = true;
    }
    const Vector a = gram.ldlt().solve(rhs);
    for (std::size_t i = 0; i < k; ++i) spec.weights[i] = a[static_cast<Eigen::Index>(i)];
    return spec;
}

/// sign(r)(|r| - t)_+ elementwise; <f'> is the fraction of |r_i| > t.
inline DenoisedVector soft_threshold(const VectorRef& r, double threshold)
{
    if (!(threshold > 0.0)) throw ParameterError("soft_threshold: threshold must be positive");
    DenoisedVector out{Vector(r.size()), 0.0};
    Eigen::Index active = 0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double u = std::abs(r[i]) - threshold;
        if (u > 0.0) {
            out.x_hat[i] = r[i] < 0.0 ? -u : u;
            ++active;
        } else {
            out.x_hat[i] = 0.0;
        }
    }
    out.mean_derivative = r.size() ? static_cast<double>(active) / static_cast<double>(r.size()) : 0.0;
    return out;
}

} // namespace psamp
