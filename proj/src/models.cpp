#include "streamopt/models.hpp"

#include <cmath>
#include <sstream>

namespace streamopt {

namespace {

void check_theta(const Vec& theta, std::size_t dimension)
{
    if (static_cast<std::size_t>(theta.size()) != dimension) {
        std::ostringstream err;
        err << "parameter has dimension " << theta.size() << ", model expects " << dimension;
        throw std::invalid_argument(err.str());
    }
}

// QML score accumulated over (residual, lagged residual) pairs.
template <typename ResidualAt>
Eigen::Vector2d qml_score(std::size_t n, const ArchParams& params, ResidualAt residual_at)
{
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const auto [eps, eps_prev] = residual_at(i);
        const double prev2 = eps_prev * eps_prev;
        const double s2 = params.alpha0 + params.alpha1 * prev2;
        if (!(s2 > kArchVarianceFloor)) {
            std::ostringstream err;
            err << "conditional variance " << s2 << " at (alpha0=" << params.alpha0
                << ", alpha1=" << params.alpha1 << ") is below the admissible floor";
            throw GradientError(err.str());
        }
        const double w = (s2 - eps * eps) / (2.0 * s2 * s2);
        g(0) += w;
        g(1) += w * prev2;
    }
    return g / static_cast<double>(n);
}

}  // namespace

double ar1_gradient(const StreamBatch& batch, double theta)
{
    const auto x = batch.values.col(0);
    const auto lag = batch.lagged.col(0);
    const double sum = (lag.array() * (x.array() - theta * lag.array())).sum();
    return -2.0 * sum / static_cast<double>(batch.size());
}

double ar1_objective(double theta, double theta_star, double sigma_eps2)
{
    if (!(std::abs(theta_star) < 1.0)) {
        throw ConfigError("ar1_objective requires |theta_star| < 1");
    }
    const double d = theta_star - theta;
    return sigma_eps2 * d * d / (1.0 - theta_star * theta_star) + sigma_eps2;
}

double ma1_pseudo_optimum(double phi_star)
{
    return phi_star / (1.0 + phi_star * phi_star);
}

double ma1_objective(double theta, double phi_star, double sigma_eps2)
{
    const double d = phi_star - theta;
    return sigma_eps2 * (1.0 + d * d + theta * theta * phi_star * phi_star);
}

Eigen::Vector2d arch_qml_gradient(const StreamBatch& batch, const ArchParams& params)
{
    const auto eps = batch.values.col(0);
    const auto prev = batch.lagged.col(0);
    return qml_score(batch.size(), params, [&](std::size_t i) {
        const auto k = static_cast<Eigen::Index>(i);
        return std::pair{eps(k), prev(k)};
    });
}

Eigen::Vector3d ar_arch_gradient(const StreamBatch& batch, double theta, const ArchParams& params)
{
    if (batch.lagged2.rows() != batch.values.rows()) {
        throw std::invalid_argument("ar_arch_gradient needs two-step lagged context");
    }
    const auto x = batch.values.col(0);
    const auto lag = batch.lagged.col(0);
    const auto lag2 = batch.lagged2.col(0);
    const Eigen::Vector2d qml = qml_score(batch.size(), params, [&](std::size_t i) {
        const auto k = static_cast<Eigen::Index>(i);
        return std::pair{x(k) - theta * lag(k), lag(k) - theta * lag2(k)};
    });
    return {ar1_gradient(batch, theta), qml(0), qml(1)};
}

Vec geometric_median_gradient(const StreamBatch& batch, const Vec& theta)
{
    Vec g = Vec::Zero(theta.size());
    for (Eigen::Index i = 0; i < batch.values.rows(); ++i) {
        const Vec diff = theta - batch.values.row(i).transpose();
        const double norm = diff.norm();
        if (norm > 0.0) {
            g += diff / norm;
        }
    }
    return g / static_cast<double>(batch.size());
}


Ar1Model::Ar1Model(double theta_star, double sigma_eps2) : theta_star_(theta_star), sigma_eps2_(sigma_eps2)
{
    if (!(std::abs(theta_star) < 1.0)) {
        throw ConfigError("ar1 requires |theta_star| < 1");
    }
}

Vec Ar1Model::gradient(const StreamBatch& batch, const Vec& theta) const
{
    check_theta(theta, 1);
    return Vec::Constant(1, ar1_gradient(batch, theta(0)));
}

std::optional<double> Ar1Model::objective(const Vec& theta) const
{
    return ar1_objective(theta(0), theta_star_, sigma_eps2_);
}

std::optional<Vec> Ar1Model::optimum() const
{
    return Vec::Constant(1, theta_star_);
}

Ma1MisspecifiedModel::Ma1MisspecifiedModel(double phi_star, double sigma_eps2)
    : phi_star_(phi_star), sigma_eps2_(sigma_eps2)
{
}

Vec Ma1MisspecifiedModel::gradient(const StreamBatch& batch, const Vec& theta) const
{
    check_theta(theta, 1);
    return Vec::Constant(1, ar1_gradient(batch, theta(0)));
}

std::optional<double> Ma1MisspecifiedModel::objective(const Vec& theta) const
{
    return ma1_objective(theta(0), phi_star_, sigma_eps2_);
}

std::optional<Vec> Ma1MisspecifiedModel::optimum() const
{
    return Vec::Constant(1, ma1_pseudo_optimum(phi_star_));
}

ArchModel::ArchModel(ArchParams truth, bool freeze_alpha0) : truth_(truth), freeze_alpha0_(freeze_alpha0) {}

Vec ArchModel::gradient(const StreamBatch& batch, const Vec& theta) const
{
    check_theta(theta, 2);
    Vec g = arch_qml_gradient(batch, {theta(0), theta(1)});
    if (freeze_alpha0_) {
        g(0) = 0.0;
    }
    return g;
}

std::optional<Vec> ArchModel::optimum() const
{
    return Eigen::Vector2d(truth_.alpha0, truth_.alpha1);
}

ArArchModel::ArArchModel(double theta_star, ArchParams truth, bool freeze_alpha0)
    : theta_star_(theta_star), truth_(truth), freeze_alpha0_(freeze_alpha0)
{
}

Vec ArArchModel::gradient(const StreamBatch& batch, const Vec& theta) const
{
    check_theta(theta, 3);
    Vec g = ar_arch_gradient(batch, theta(0), {theta(1), theta(2)});
    if (freeze_alpha0_) {
        g(1) = 0.0;
    }
    return g;
}

std::optional<Vec> ArArchModel::optimum() const
{
    return Eigen::Vector3d(theta_star_, truth_.alpha0, truth_.alpha1);
}

GeometricMedianModel::GeometricMedianModel(std::size_t dimension, std::optional<Vec> median)
    : dimension_(dimension), median_(std::move(median))
{
}

Vec GeometricMedianModel::gradient(const StreamBatch& batch, const Vec& theta) const
{
    check_theta(theta, dimension_);
    return geometric_median_gradient(batch, theta);
}

}  // namespace streamopt
