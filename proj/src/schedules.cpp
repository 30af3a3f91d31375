#include "streamopt/schedules.hpp"

#include <cmath>
#include <sstream>

#include "streamopt/types.hpp"

namespace streamopt {

namespace {

// Relative slack below which c_rho * t^rho is treated as already integral.
constexpr double kCeilGuard = 1e-12;

}  // namespace

void ScheduleParams::validate() const
{
    std::ostringstream err;
    if (!(c_gamma > 0.0) || !std::isfinite(c_gamma)) {
        err << "schedule.c_gamma must be positive (got " << c_gamma << ")";
    } else if (c_rho < 1) {
        err << "schedule.c_rho must be >= 1";
    } else if (!(rho >= 0.0 && rho < 1.0)) {
        err << "schedule.rho must lie in [0,1) (got " << rho << ")";
    } else if (!(beta >= 0.0 && beta <= 1.0)) {
        err << "schedule.beta must lie in [0,1] (got " << beta << ")";
    } else if (!std::isfinite(alpha)) {
        err << "schedule.alpha must be finite";
    }
    if (!err.str().empty()) {
        throw ConfigError(err.str());
    }
}

bool ScheduleParams::theory_window() const
{
    const double gap = alpha - rho * beta;
    return gap > 0.5 && gap < 1.0;
}

void UncertaintyParams::validate() const
{
    if (!(nu > 0.0)) {
        throw ConfigError("uncertainty.nu must be positive");
    }
    if (!(sigma >= 0.0 && sigma <= 0.5)) {
        throw ConfigError("uncertainty.sigma must lie in [0,1/2]");
    }
    if (!(c_sigma >= 0.0)) {
        throw ConfigError("uncertainty.c_sigma must be nonnegative");
    }
}

std::uint64_t batch_size(const ScheduleParams& params, std::uint64_t t)
{
    if (params.rho == 0.0 || t <= 1) {
        return params.c_rho;
    }
    const double raw = batch_size_real(params, static_cast<double>(t));
    const auto n = static_cast<std::uint64_t>(std::ceil(raw * (1.0 - kCeilGuard)));
    return n < params.c_rho ? params.c_rho : n;
}

double batch_size_real(const ScheduleParams& params, double t)
{
    return static_cast<double>(params.c_rho) * std::pow(t, params.rho);
}

std::uint64_t cumulative_count(const ScheduleParams& params, std::uint64_t t)
{
    if (params.rho == 0.0) {
        return params.c_rho * t;
    }
    std::uint64_t total = 0;
    for (std::uint64_t i = 1; i <= t; ++i) {
        total += batch_size(params, i);
    }
    return total;
}

double learning_rate(const ScheduleParams& params, std::uint64_t t, double n_t)
{
    return params.c_gamma * std::pow(n_t, params.beta) *
           std::pow(static_cast<double>(t), -params.alpha);
}

double dependence_decay(const UncertaintyParams& u, double n_t)
{
    return std::pow(n_t, -u.nu);
}

double noise_decay(const UncertaintyParams& u, double n_t)
{
    return u.c_sigma * std::pow(n_t, -u.sigma);
}

}  // namespace streamopt
