#pragma once

// Gaussian measurement ensemble with unit-norm columns, the noisy forward
// model calibrated to a measurement-domain SNR, and the signal-domain SNR.

#include "psamp/core.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace psamp {

class SensingOperator {
public:
    /// Wraps an explicit matrix. Every column must have unit l2 norm.
    static SensingOperator from_matrix(Matrix phi, std::optional<Seed> seed = std::nullopt)
    {
        if (phi.rows() < 1 || phi.cols() < 1) throw ConfigurationError("sensing operator must be non-empty");
        for (Eigen::Index j = 0; j < phi.cols(); ++j) {
            if (std::abs(phi.col(j).norm() - 1.0) > 1e-12)
                throw ConfigurationError("sensing operator columns must have unit norm");
        }
        return SensingOperator(std::move(phi), seed);
    }

    const Matrix& matrix() const noexcept { return phi_; }
    Eigen::Index rows() const noexcept { return phi_.rows(); }
    Eigen::Index cols() const noexcept { return phi_.cols(); }
    /// gamma = m / n
    double sampling_ratio() const noexcept { return static_cast<double>(rows()) / static_cast<double>(cols()); }
    std::optional<Seed> seed() const noexcept { return seed_; }

    Vector apply(const VectorRef& x) const
    {
        if (x.size() != cols()) throw ParameterError("apply: signal length does not match operator");
        return phi_ * x;
    }

    Vector apply_transpose(const VectorRef& z) const
    {
        if (z.size() != rows()) throw ParameterError("apply_transpose: residual length does not match operator");
        return phi_.transpose() * z;
    }

private:
    SensingOperator(Matrix phi, std::optional<Seed> seed) : phi_(std::move(phi)), seed_(seed) {}

    Matrix phi_;
    std::optional<Seed> seed_;
};

/// i.i.d. N(0, 1/m) entries, then every column rescaled to unit norm.
/// The matrix is a pure function of (m, n, seed).
inline SensingOperator gaussian_operator(Eigen::Index m, Eigen::Index n, Seed seed)
{
    if (m < 1 || n < 1) throw ConfigurationError("gaussian_operator: dimensions must be positive");
    if (m > n) throw ConfigurationError("gaussian_operator: m > n is outside the compressed sensing regime");
    auto eng = make_engine(seed);
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
    Matrix phi(m, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) phi(i, j) = dist(eng);
        phi.col(j) /= phi.col(j).norm();
    }
    return SensingOperator::from_matrix(std::move(phi), seed);
}

struct Measurement {
    Vector y;
    double noise_variance = 0.0;
    std::optional<double> snr_y_db; // nullopt for noiseless measurements
    std::optional<Vector> x_true;
};

/// y = Phi x + w with w ~ N(0, s2 I), s2 = ||Phi x||^2 / (m 10^(snr/10)).
/// Passing std::nullopt for the SNR gives a noiseless measurement.
inline Measurement measure(const SensingOperator& op, const VectorRef& x, std::optional<double> snr_y_db, Seed seed)
{
    Measurement out;
    out.y = op.apply(x);
    out.snr_y_db = snr_y_db;
    out.x_true = Vector(x);
    if (!snr_y_db) return out;

    if (!std::isfinite(*snr_y_db)) throw ParameterError("measure: SNR must be finite (use nullopt for noiseless)");
    const double signal_power = out.y.squaredNorm();
    if (!(signal_power > 0.0)) throw DegenerateSignalError("measure: cannot calibrate noise against a zero signal");
    const double m = static_cast<double>(op.rows());
    out.noise_variance = signal_power / (m * std::pow(10.0, *snr_y_db / 10.0));
    out.y += gaussian_vector(op.rows(), seed, std::sqrt(out.noise_variance));
    return out;
}

/// 10 log10(||x||^2 / ||x - x_hat||^2); +inf for exact recovery.
inline double snr_x(const VectorRef& x_true, const VectorRef& x_hat)
{
    if (x_true.size() != x_hat.size()) throw ParameterError("snr_x: length mismatch");
    const double signal = x_true.squaredNorm();
    if (!(signal > 0.0)) throw DomainError("snr_x: reference signal is all zero");
    const double err = (x_true - x_hat).squaredNorm();
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(signal / err);
}

} // namespace psamp
