#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "streamopt/schedules.hpp"

namespace streamopt {

struct BoundParams {
    double mu = 1.0;       // quasi-strong convexity
    double d_nu = 0.0;     // dependence constant
    double b_nu = 0.0;     // bias constant
    double c_kappa = 1.0;  // expected smoothness
    double delta0 = 1.0;   // initial squared error
    UncertaintyParams uncertainty;
    ScheduleParams schedule;
    // Lipschitz constants of the gradient; only used by objective_gap_bound.
    std::optional<double> c_grad;
    std::optional<double> c_grad_prime;

    /// Throws ConfigError for negative constants, mu <= 0 or c_kappa <= 0.
    void validate() const;
};

struct CurvePoint {
    std::uint64_t n = 0;
    double value = 0.0;
};

struct ErrorCurve {
    std::vector<CurvePoint> points;
};

/// psi_x(t): t^(1-x)/(1-x) for x < 1, 1 + log t for x = 1, x/(x-1) for x > 1.
double psi(double x, double t);

/// psi_x(t^(1/(1+y))).
double psi_y(double x, double y, double t);

/// mu - [rho == 0] * 2 D_nu C_rho^-nu. Callers check the sign.
double mu_nu(const BoundParams& p);

/// delta_t = [1 - (mu - 2 D_nu nu_t) gamma_t + 2 C_kappa^2 gamma_t^2] delta_{t-1}
///           + (B_nu^2/mu) nu_t^2 gamma_t + 2 sigma_t^2 gamma_t^2
/// for t = 1..horizon, with real-valued n_t = C_rho t^rho inside gamma, nu
/// and sigma. Point t is placed at the integer N_t of the generated stream.
ErrorCurve delta_recursion(const BoundParams& p, std::uint64_t horizon);

struct Envelope {
    ErrorCurve exact;  // indexed by t
    ErrorCurve bound;
    double c_omega = 1.0;
};

/// Iterates omega_t = [1 - 2 lambda a_t + eta_t a_t] omega_{t-1} + b_t a_t with
/// equality and evaluates the envelope tau_t + max_{t/2<=i<=t} b_i / lambda.
/// Sequences are indexed from t = 1. Throws ConfigError when lambda <= 0, a
/// sequence is negative, a_t or eta_t increases, the lengths differ, no
/// C_omega makes lambda a_t <= 1 from t_omega on within the horizon, or the
/// iterated omega_t turns negative.
Envelope proposition_envelope(double lambda, const std::vector<double>& a, const std::vector<double>& eta,
                              const std::vector<double>& b, double omega0);

struct TheoremTerms {
    double total = 0.0;
    double init_term = 0.0;
    double bias_term = 0.0;
    double noise_term = 0.0;
};

/// Upper bound on E||theta_t - theta*||^2 at N_t = N:
///   pi(N) + 2^((2+6 rho nu)/(1+rho)) B^2 / (mu mu_nu C_rho^(2nu/(1+rho)) N^(2 rho nu/(1+rho)))
///         + 2^((7+6 rho sigma)/(1+rho)) C_sigma^2 C_gamma
///           / (mu_nu C_rho^((2sigma-beta-alpha)/(1+rho)) N^((rho(2sigma-beta)+alpha)/(1+rho))).
/// Harmonic sums inside pi use exact partial sums while the largest feasible
/// t is at most kExactSumLimit, the psi bounds beyond.
/// Throws ConfigError when alpha - rho beta is outside (1/2,1) or mu_nu <= 0.
TheoremTerms theorem_bound(const BoundParams& p, std::uint64_t n);

inline constexpr std::uint64_t kExactSumLimit = 10000;

/// C_delta = max{1, 2 C_kappa^2, (mu_nu/2)^2, 2 [rho != 0] D_nu}.
double c_delta(const BoundParams& p);

/// C_grad * theorem_bound(p, n).total / 2. Throws ConfigError without c_grad.
double objective_gap_bound(const BoundParams& p, std::uint64_t n);

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t used = 0;
};

/// Least squares of log(value) on log(N) over points whose log N lies in the
/// last `tail_fraction` of the curve's log-N span. Nonpositive values are
/// skipped; fewer than five remaining points throw Error.
DecayFit fit_decay_exponent(const ErrorCurve& curve, double tail_fraction = 0.5);

struct DriftCheck {
    double mc_estimate = 0.0;
    double std_error = 0.0;
    // 4(th-th*)^2 (1-th*^2n)^2 s2 (s2 + 1/(1-th*^2)) / ((1-th*^2)^4 n^2)
    double closed_form = 0.0;
    // 8(th-th*)^2 (1-th*^2n)^2 s2^2 / ((1-th*^2)^4 n^2), using Var(X^2) under the stationary law
    double exact_form = 0.0;
};

/// Monte-Carlo estimate of E[|E[grad f_t | F_{t-1}] - grad F|^2] for the
/// well-specified AR(1) squared loss: X_{N_{t-1}} is drawn from the gaussian
/// stationary law and the conditional expectation is evaluated analytically.
/// Draws come in fixed chunks with seeds derived from `seed`.
DriftCheck verify_ar1_drift(double theta, double theta_star, double sigma_eps2, std::uint64_t n,
                            std::uint64_t mc_reps, std::uint64_t seed = 0);

}  // namespace streamopt
