#pragma once

#include <cstdint>

namespace streamopt {

/// Learning-rate and batch-growth hyperparameters.
///
///   n_t     = ceil(c_rho * t^rho)
///   gamma_t = c_gamma * n_t^beta * t^-alpha
///
/// Any values pass the optimizer; `theory_window()` reports whether the
/// schedule satisfies alpha - rho*beta in (1/2, 1), the hypothesis under which
/// the convergence bounds hold.
struct ScheduleParams {
    double c_gamma = 1.0;
    double alpha = 2.0 / 3.0;
    double beta = 0.0;
    std::uint64_t c_rho = 1;
    double rho = 0.0;

    /// Throws ConfigError when c_gamma <= 0, c_rho < 1, rho outside [0,1)
    /// or beta outside [0,1].
    void validate() const;

    bool theory_window() const;
};

/// Exponents of the dependence and noise decay sequences.
struct UncertaintyParams {
    double nu = 1.0;
    double sigma = 0.5;
    double c_sigma = 1.0;

    void validate() const;
};

std::uint64_t batch_size(const ScheduleParams& params, std::uint64_t t);

/// Real-valued batch size c_rho * t^rho, used inside bound formulas.
double batch_size_real(const ScheduleParams& params, double t);

/// N_t = n_1 + ... + n_t, with N_0 = 0.
std::uint64_t cumulative_count(const ScheduleParams& params, std::uint64_t t);

double learning_rate(const ScheduleParams& params, std::uint64_t t, double n_t);

/// nu_t = n_t^-nu
double dependence_decay(const UncertaintyParams& u, double n_t);

/// sigma_t = c_sigma * n_t^-sigma
double noise_decay(const UncertaintyParams& u, double n_t);

}  // namespace streamopt
