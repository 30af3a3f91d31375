#pragma once

#include <cstddef>
#include <optional>

#include "streamopt/streams.hpp"
#include "streamopt/types.hpp"

namespace streamopt {

/// Supplies the averaged mini-batch gradient n_t^-1 sum_i grad f_{t,i}(theta)
/// and, where a closed form exists, the population objective and optimum.
class LossModel {
public:
    virtual ~LossModel() = default;

    virtual std::size_t dimension() const = 0;

    /// Throws GradientError when theta leaves the admissible region.
    virtual Vec gradient(const StreamBatch& batch, const Vec& theta) const = 0;

    virtual std::optional<double> objective(const Vec& /*theta*/) const { return std::nullopt; }
    virtual std::optional<Vec> optimum() const { return std::nullopt; }
};

struct ArchParams {
    double alpha0 = 1.0;
    double alpha1 = 0.0;
};

/// Conditional variances at or below this value are rejected.
inline constexpr double kArchVarianceFloor = 1e-12;

// Squared AR(1) loss (X_s - theta X_{s-1})^2, averaged over the batch.
double ar1_gradient(const StreamBatch& batch, double theta);

/// F(theta) = s2 (theta* - theta)^2 / (1 - theta*^2) + s2; throws ConfigError
/// when |theta*| >= 1.
double ar1_objective(double theta, double theta_star, double sigma_eps2);

/// Least-squares AR(1) fit to an MA(1) process: phi / (1 + phi^2).
double ma1_pseudo_optimum(double phi_star);

/// E[(X_s - theta X_{s-1})^2] under X_s = e_s + phi e_{s-1}.
double ma1_objective(double theta, double phi_star, double sigma_eps2);

/// Batch average of the ARCH(1) quasi-likelihood score
///   (1, e_{s-1}^2) (s2(theta) - e_s^2) / (2 s2(theta)^2),
/// where the observations are the e_s and the lags e_{s-1}.
Eigen::Vector2d arch_qml_gradient(const StreamBatch& batch, const ArchParams& params);

/// AR(1)-ARCH(1): squared-loss AR gradient in the first coordinate and the QML
/// score of the residuals X_s - theta X_{s-1} in the other two. Residuals and
/// their lags are recomputed from `theta` (needs `lagged2`).
Eigen::Vector3d ar_arch_gradient(const StreamBatch& batch, double theta, const ArchParams& params);

/// Batch average of (theta - X_i)/||theta - X_i||; coincident points add zero.
Vec geometric_median_gradient(const StreamBatch& batch, const Vec& theta);

struct WeiszfeldResult {
    Vec median;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Fixed-point iteration for the geometric median of the rows of `points`.
WeiszfeldResult weiszfeld(const RowMatrix& points, double tol = 1e-10, std::size_t max_iter = 10000);


class Ar1Model final : public LossModel {
public:
    Ar1Model(double theta_star, double sigma_eps2 = 1.0);

    std::size_t dimension() const override { return 1; }
    Vec gradient(const StreamBatch& batch, const Vec& theta) const override;
    std::optional<double> objective(const Vec& theta) const override;
    std::optional<Vec> optimum() const override;

private:
    double theta_star_;
    double sigma_eps2_;
};

/// AR(1) least squares fitted to data from an MA(1) process.
class Ma1MisspecifiedModel final : public LossModel {
public:
    Ma1MisspecifiedModel(double phi_star, double sigma_eps2 = 1.0);

    std::size_t dimension() const override { return 1; }
    Vec gradient(const StreamBatch& batch, const Vec& theta) const override;
    std::optional<double> objective(const Vec& theta) const override;
    std::optional<Vec> optimum() const override;

private:
    double phi_star_;
    double sigma_eps2_;
};

/// theta = (alpha0, alpha1). With `freeze_alpha0` the first coordinate of the
/// gradient is zeroed so alpha0 stays at its initial value.
class ArchModel final : public LossModel {
public:
    explicit ArchModel(ArchParams truth, bool freeze_alpha0 = false);

    std::size_t dimension() const override { return 2; }
    Vec gradient(const StreamBatch& batch, const Vec& theta) const override;
    std::optional<Vec> optimum() const override;

private:
    ArchParams truth_;
    bool freeze_alpha0_;
};

/// theta = (ar, alpha0, alpha1).
class ArArchModel final : public LossModel {
public:
    ArArchModel(double theta_star, ArchParams truth, bool freeze_alpha0 = false);

    std::size_t dimension() const override { return 3; }
    Vec gradient(const StreamBatch& batch, const Vec& theta) const override;
    std::optional<Vec> optimum() const override;

private:
    double theta_star_;
    ArchParams truth_;
    bool freeze_alpha0_;
};

class GeometricMedianModel final : public LossModel {
public:
    explicit GeometricMedianModel(std::size_t dimension, std::optional<Vec> median = std::nullopt);

    std::size_t dimension() const override { return dimension_; }
    Vec gradient(const StreamBatch& batch, const Vec& theta) const override;
    std::optional<Vec> optimum() const override { return median_; }

private:
    std::size_t dimension_;
    std::optional<Vec> median_;
};

}  // namespace streamopt
