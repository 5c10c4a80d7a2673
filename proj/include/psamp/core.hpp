#pragma once

// Shared building blocks: error types, seeding, Gaussian helpers and
// deterministic reductions used by every psamp module.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace psamp {

inline constexpr const char* kVersion = "0.1.0";

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid prior, kernel index, policy parameter and similar caller mistakes.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of the operation (e.g. c <= 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inconsistent experiment or operator configuration.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Quadrature non-convergence, non-finite state evolution and the like.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The requested denoiser is not available for the given prior.
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Signal with zero energy where an SNR has to be calibrated against it.
class DegenerateSignalError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

using Seed = std::uint64_t;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent child seed from a parent seed and a stream path.
/// Same inputs always give the same seed; different paths give unrelated ones.
inline constexpr Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t s = splitmix64(parent);
    for (auto p : path) {
        s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    }
    return s;
}

inline std::mt19937_64 make_engine(Seed seed)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return std::mt19937_64(seq);
}

inline Vector gaussian_vector(Eigen::Index n, Seed seed, double stddev = 1.0)
{
    auto eng = make_engine(seed);
    std::normal_distribution<double> dist(0.0, stddev);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(eng);
    return v;
}

/// Output of an elementwise denoiser: the estimate and <f'>, the mean
/// derivative that feeds the Onsager correction.
struct DenoisedVector {
    Vector x_hat;
    double mean_derivative = 0.0;
};

// ---------------------------------------------------------------------------
// Scalar helpers
// ---------------------------------------------------------------------------

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934; // 1/sqrt(2 pi)

inline double normal_pdf(double x, double variance)
{
    return kInvSqrt2Pi / std::sqrt(variance) * std::exp(-0.5 * x * x / variance);
}

inline double std_normal_cdf(double t)
{
    return 0.5 * std::erfc(-t / std::numbers::sqrt2);
}

/// Scaled complementary error function exp(x^2) erfc(x), for x >= 0.
inline double erfcx(double x)
{
    if (x < 25.0) return std::exp(x * x) * std::erfc(x);
    // Continued fraction, converges quickly for large x.
    double f = x;
    for (int k = 40; k >= 1; --k) f = x + 0.5 * k / f;
    return 1.0 / (std::sqrt(std::numbers::pi) * f);
}

/// Logistic function 1/(1+exp(-u)) without overflow.
inline double logistic(double u)
{
    if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

/// Fixed-order mean, so results are bitwise reproducible.
inline double mean(const VectorRef& v)
{
    if (v.size() == 0) return 0.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += v[i];
    return s / static_cast<double>(v.size());
}

inline double mean_square(const VectorRef& v)
{
    if (v.size() == 0) return 0.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += v[i] * v[i];
    return s / static_cast<double>(v.size());
}

inline double mean_squared_error(const VectorRef& a, const VectorRef& b)
{
    if (a.size() != b.size()) throw ParameterError("mean_squared_error: length mismatch");
    if (a.size() == 0) return 0.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

} // namespace psamp
