#include "streamopt/theory.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "streamopt/rng.hpp"
#include "streamopt/types.hpp"

namespace streamopt {

namespace {

// sum_{i=1}^{m} i^-x
double harmonic(double x, std::uint64_t m)
{
    double s = 0.0;
    for (std::uint64_t i = m; i >= 1; --i) {
        s += std::pow(static_cast<double>(i), -x);
    }
    return s;
}

// sum_{i=1}^{t} i^-x with t <= u^(1/(1+y)); exact when that range is small.
double harmonic_bound(double x, double y, double u)
{
    const double root = std::pow(u, 1.0 / (1.0 + y));
    if (root <= static_cast<double>(kExactSumLimit)) {
        return harmonic(x, static_cast<std::uint64_t>(std::floor(root)));
    }
    return psi_y(x, y, u);
}

// Sum of a convergent series i^-x (x > 1), truncated the same way.
double convergent_bound(double x, double y, double u)
{
    const double root = std::pow(u, 1.0 / (1.0 + y));
    if (root <= static_cast<double>(kExactSumLimit)) {
        return harmonic(x, static_cast<std::uint64_t>(std::floor(root)));
    }
    return x / (x - 1.0);
}

void check_theorem_hypotheses(const BoundParams& p)
{
    p.validate();
    const auto& s = p.schedule;
    if (!s.theory_window()) {
        std::ostringstream err;
        err << "theorem_bound requires alpha - rho*beta in (1/2, 1); got " << s.alpha - s.rho * s.beta;
        throw ConfigError(err.str());
    }
    const double m = mu_nu(p);
    if (!(m > 0.0)) {
        std::ostringstream err;
        err << "theorem_bound requires mu_nu = mu - [rho=0] 2 D_nu C_rho^-nu > 0; got " << m;
        throw ConfigError(err.str());
    }
}

void check_sequence(const std::vector<double>& v, const char* name, bool nonincreasing)
{
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
            throw ConfigError(std::string("sequence ") + name + " must be finite and nonnegative");
        }
        if (nonincreasing && i > 0 && v[i] > v[i - 1]) {
            throw ConfigError(std::string("sequence ") + name + " must be nonincreasing");
        }
    }
}

}  // namespace

void BoundParams::validate() const
{
    if (!(mu > 0.0)) {
        throw ConfigError("bound parameter mu must be positive");
    }
    if (!(c_kappa > 0.0)) {
        throw ConfigError("bound parameter c_kappa must be positive");
    }
    if (!(d_nu >= 0.0) || !(b_nu >= 0.0) || !(delta0 >= 0.0)) {
        throw ConfigError("bound parameters d_nu, b_nu and delta0 must be nonnegative");
    }
    uncertainty.validate();
    schedule.validate();
}

double psi(double x, double t)
{
    if (x < 1.0) {
        return std::pow(t, 1.0 - x) / (1.0 - x);
    }
    if (x == 1.0) {
        return 1.0 + std::log(t);
    }
    return x / (x - 1.0);
}

double psi_y(double x, double y, double t)
{
    return psi(x, std::pow(t, 1.0 / (1.0 + y)));
}

double mu_nu(const BoundParams& p)
{
    if (p.schedule.rho != 0.0) {
        return p.mu;
    }
    return p.mu - 2.0 * p.d_nu * std::pow(static_cast<double>(p.schedule.c_rho), -p.uncertainty.nu);
}

double c_delta(const BoundParams& p)
{
    const double m = mu_nu(p);
    const double dep = p.schedule.rho != 0.0 ? 2.0 * p.d_nu : 0.0;
    return std::max({1.0, 2.0 * p.c_kappa * p.c_kappa, 0.25 * m * m, dep});
}

ErrorCurve delta_recursion(const BoundParams& p, std::uint64_t horizon)
{
    p.validate();
    if (horizon == 0) {
        throw ConfigError("delta_recursion requires horizon >= 1");
    }
    ErrorCurve curve;
    curve.points.reserve(horizon);
    const double ck2 = p.c_kappa * p.c_kappa;
    const double b2 = p.b_nu * p.b_nu;
    double delta = p.delta0;
    std::uint64_t n_cum = 0;
    for (std::uint64_t t = 1; t <= horizon; ++t) {
        const double n = batch_size_real(p.schedule, static_cast<double>(t));
        const double gamma = learning_rate(p.schedule, t, n);
        const double nu = dependence_decay(p.uncertainty, n);
        const double sigma = noise_decay(p.uncertainty, n);
        delta = (1.0 - (p.mu - 2.0 * p.d_nu * nu) * gamma + 2.0 * ck2 * gamma * gamma) * delta +
                b2 / p.mu * nu * nu * gamma + 2.0 * sigma * sigma * gamma * gamma;
        n_cum += batch_size(p.schedule, t);
        curve.points.push_back({n_cum, delta});
    }
    return curve;
}

Envelope proposition_envelope(double lambda, const std::vector<double>& a, const std::vector<double>& eta,
                              const std::vector<double>& b, double omega0)
{
    if (!(lambda > 0.0)) {
        throw ConfigError("proposition_envelope requires lambda > 0");
    }
    if (!(omega0 >= 0.0)) {
        throw ConfigError("proposition_envelope requires omega0 >= 0");
    }
    if (a.size() != eta.size() || a.size() != b.size() || a.empty()) {
        throw ConfigError("proposition_envelope sequences must be nonempty and of equal length");
    }
    check_sequence(a, "alpha", true);
    check_sequence(eta, "eta", true);
    check_sequence(b, "beta", false);
    const std::size_t horizon = a.size();

    // C_omega: smallest integer >= 1 with lambda a_t <= 1 from t_omega on.
    // Since a is nonincreasing this only needs t_omega >= t_a, the first t
    // with lambda a_t <= 1.
    std::size_t t_a = 0;
    while (t_a < horizon && lambda * a[t_a] > 1.0) {
        ++t_a;
    }
    if (t_a == horizon) {
        throw ConfigError("proposition_envelope: lambda * alpha_t never drops to 1 within the horizon");
    }
    double c_omega = 1.0;
    if (t_a > 0) {
        const double eta_before = eta[t_a - 1];
        if (!(eta_before > 0.0)) {
            throw ConfigError("proposition_envelope: no C_omega satisfies the step-size condition");
        }
        c_omega = std::max(1.0, std::floor(lambda / eta_before) + 1.0);
    }

    Envelope env;
    env.c_omega = c_omega;
    env.exact.points.reserve(horizon);
    env.bound.points.reserve(horizon);

    std::vector<double> sum_a(horizon + 1, 0.0);
    std::vector<double> sum_ea(horizon + 1, 0.0);
    std::vector<double> sum_ba(horizon + 1, 0.0);
    std::vector<double> max_b(horizon + 1, 0.0);
    for (std::size_t i = 1; i <= horizon; ++i) {
        sum_a[i] = sum_a[i - 1] + a[i - 1];
        sum_ea[i] = sum_ea[i - 1] + eta[i - 1] * a[i - 1];
        sum_ba[i] = sum_ba[i - 1] + b[i - 1] * a[i - 1];
        max_b[i] = std::max(max_b[i - 1], b[i - 1]);
    }

    double omega = omega0;
    std::deque<std::size_t> window;  // indices into b, values decreasing
    std::size_t pushed = 0;
    for (std::size_t t = 1; t <= horizon; ++t) {
        omega = (1.0 - 2.0 * lambda * a[t - 1] + eta[t - 1] * a[t - 1]) * omega + b[t - 1] * a[t - 1];
        if (omega < 0.0) {
            throw ConfigError("proposition_envelope: recursion leaves the non-negative range at t = " +
                              std::to_string(t));
        }
        env.exact.points.push_back({t, omega});

        const std::size_t half = (t + 1) / 2;  // ceil(t/2)
        while (pushed < t) {
            while (!window.empty() && b[window.back()] <= b[pushed]) {
                window.pop_back();
            }
            window.push_back(pushed++);
        }
        while (window.front() + 1 < half) {
            window.pop_front();
        }
        const double tail = sum_a[t] - sum_a[half - 1];
        const double head_noise = sum_ba[half - 1];
        const double tau = std::exp(c_omega * sum_ea[t] - lambda * tail) * (omega0 + max_b[t] / lambda) +
                           std::exp(-lambda * tail) * head_noise;
        env.bound.points.push_back({t, tau + b[window.front()] / lambda});
    }
    return env;
}

TheoremTerms theorem_bound(const BoundParams& p, std::uint64_t n)
{
    check_theorem_hypotheses(p);
    if (n == 0) {
        throw ConfigError("theorem_bound requires N >= 1");
    }
    const auto& s = p.schedule;
    const auto& u = p.uncertainty;
    const double a = s.alpha;
    const double b = s.beta;
    const double r = s.rho;
    const double cg = s.c_gamma;
    const double cr = static_cast<double>(s.c_rho);
    const double nu = u.nu;
    const double sg = u.sigma;
    const double cs2 = u.c_sigma * u.c_sigma;
    const double b2 = p.b_nu * p.b_nu;
    const double big_n = static_cast<double>(n);
    const double m = mu_nu(p);
    const double cd = c_delta(p);

    TheoremTerms out;
    out.bias_term = std::pow(2.0, (2.0 + 6.0 * r * nu) / (1.0 + r)) * b2 /
                    (p.mu * m * std::pow(cr, 2.0 * nu / (1.0 + r)) * std::pow(big_n, 2.0 * r * nu / (1.0 + r)));
    out.noise_term = std::pow(2.0, (7.0 + 6.0 * r * sg) / (1.0 + r)) * cs2 * cg /
                     (m * std::pow(cr, (2.0 * sg - b - a) / (1.0 + r)) *
                      std::pow(big_n, (r * (2.0 * sg - b) + a) / (1.0 + r)));

    const double lead = -m * cg * std::pow(big_n, (1.0 + r * b - a) / (1.0 + r)) /
                        (std::pow(2.0, (3.0 + r * (2.0 + b) - a) / (1.0 + r)) *
                         std::pow(cr, (1.0 - b - a) / (1.0 + r)));
    double dependence = 0.0;
    if (r != 0.0) {
        dependence = 2.0 * cd * p.d_nu * cg * std::pow(cr, b - nu) *
                     harmonic_bound(a - r * (b - nu), r, 2.0 * big_n / cr);
    }
    const double smooth = 2.0 * cd * p.c_kappa * p.c_kappa * cg * cg * std::pow(cr, 2.0 * b) *
                          convergent_bound(2.0 * (a - r * b), r, 2.0 * big_n / cr);
    const double start = p.delta0 + 2.0 * b2 / (p.mu * m * std::pow(cr, 2.0 * nu)) +
                         4.0 * cs2 * cg * std::pow(cr, b - 2.0 * sg) / m;
    const double head_bias = b2 * cg * std::pow(cr, b - 2.0 * nu) / p.mu *
                             harmonic_bound(a - r * (b - 2.0 * nu), r, big_n / cr);
    const double head_noise = 2.0 * cs2 * cg * cg * std::pow(cr, 2.0 * b - 2.0 * sg) *
                              convergent_bound(2.0 * (a - r * (b - sg)), r, big_n / cr);
    out.init_term = std::exp(lead + dependence + smooth) * start + std::exp(lead) * (head_bias + head_noise);
    out.total = out.init_term + out.bias_term + out.noise_term;
    return out;
}

double objective_gap_bound(const BoundParams& p, std::uint64_t n)
{
    if (!p.c_grad) {
        throw ConfigError("objective_gap_bound requires c_grad");
    }
    return *p.c_grad * theorem_bound(p, n).total / 2.0;
}

DecayFit fit_decay_exponent(const ErrorCurve& curve, double tail_fraction)
{
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
        throw ConfigError("tail_fraction must lie in (0, 1]");
    }
    if (curve.points.empty()) {
        throw Error("fit_decay_exponent: empty curve");
    }
    double lo = std::log(static_cast<double>(curve.points.front().n));
    double hi = lo;
    for (const auto& pt : curve.points) {
        const double x = std::log(static_cast<double>(pt.n));
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double cut = hi - tail_fraction * (hi - lo);
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& pt : curve.points) {
        const double x = std::log(static_cast<double>(pt.n));
        if (x >= cut - 1e-12 && pt.value > 0.0 && std::isfinite(pt.value)) {
            xs.push_back(x);
            ys.push_back(std::log(pt.value));
        }
    }
    if (xs.size() < 5) {
        std::ostringstream err;
        err << "fit_decay_exponent: only " << xs.size() << " usable points in the tail window";
        throw Error(err.str());
    }
    const auto k = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw Error("fit_decay_exponent: tail window spans a single N");
    }
    DecayFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.used = xs.size();
    return fit;
}

DriftCheck verify_ar1_drift(double theta, double theta_star, double sigma_eps2, std::uint64_t n,
                            std::uint64_t mc_reps, std::uint64_t seed)
{
    if (!(std::abs(theta_star) < 1.0)) {
        throw ConfigError("verify_ar1_drift requires |theta_star| < 1");
    }
    if (!(sigma_eps2 > 0.0)) {
        throw ConfigError("verify_ar1_drift requires sigma_eps2 > 0");
    }
    if (n == 0) {
        throw ConfigError("verify_ar1_drift requires n >= 1");
    }
    if (mc_reps < 10000) {
        throw ConfigError("verify_ar1_drift requires at least 10^4 Monte-Carlo draws");
    }
    const double q = 1.0 - theta_star * theta_star;
    const double var_x = sigma_eps2 / q;
    const double geo = 1.0 - std::pow(theta_star, 2.0 * static_cast<double>(n));
    const double nd = static_cast<double>(n);
    const double d2 = (theta - theta_star) * (theta - theta_star);
    // E[grad f_t | F_{t-1}] - grad F = scale * (X_{N_{t-1}}^2 - var_x).
    const double scale = 2.0 * (theta - theta_star) * geo / (nd * q);

    constexpr std::uint64_t chunk = 1 << 16;
    long double sum = 0.0L;
    long double sum_sq = 0.0L;
    const double sd_x = std::sqrt(var_x);
    for (std::uint64_t start = 0, c = 0; start < mc_reps; start += chunk, ++c) {
        Rng rng(derive_seed(seed, c));
        std::normal_distribution<double> normal;
        const std::uint64_t stop = std::min(mc_reps, start + chunk);
        for (std::uint64_t i = start; i < stop; ++i) {
            const double x = sd_x * normal(rng);
            const double diff = scale * (x * x - var_x);
            const double v = diff * diff;
            sum += v;
            sum_sq += static_cast<long double>(v) * v;
        }
    }
    const auto reps = static_cast<long double>(mc_reps);
    const long double mean = sum / reps;
    const long double var = std::max(0.0L, (sum_sq - reps * mean * mean) / (reps - 1.0L));

    DriftCheck out;
    out.mc_estimate = static_cast<double>(mean);
    out.std_error = static_cast<double>(std::sqrt(var / reps));
    const double denom = q * q * q * q * nd * nd;
    out.closed_form = 4.0 * d2 * geo * geo * sigma_eps2 * (sigma_eps2 + 1.0 / q) / denom;
    out.exact_form = 8.0 * d2 * geo * geo * sigma_eps2 * sigma_eps2 / denom;
    return out;
}

}  // namespace streamopt
