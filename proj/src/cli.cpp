#include "streamopt/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "streamopt/config.hpp"
#include "streamopt/harness.hpp"
#include "streamopt/optim.hpp"
#include "streamopt/theory.hpp"

namespace streamopt {

namespace {

std::string g17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct RunOptions {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> reps;
    std::optional<std::uint64_t> horizon;
    std::string out;
    std::string json;
};

void add_run_options(CLI::App* cmd, RunOptions& o)
{
    cmd->add_option("--config", o.config, "experiment JSON file");
    cmd->add_option("--preset", o.preset, "built-in experiment (ar1-default, ma1-default, arch1-default, ar1-arch1-default, median-default)");
    cmd->add_option("--seed", o.seed, "override the seed base");
    cmd->add_option("--reps", o.reps, "override the number of replications");
    cmd->add_option("--horizon", o.horizon, "override the observation budget");
    cmd->add_option("--out", o.out, "result CSV path");
    cmd->add_option("--json", o.json, "result JSON path");
}

ExperimentConfig resolve_experiment(const RunOptions& o)
{
    ExperimentConfig cfg;
    if (!o.config.empty() && !o.preset.empty()) {
        throw ConfigError("give either --config or --preset, not both");
    }
    if (!o.preset.empty()) {
        auto preset = experiment_preset(o.preset);
        if (!preset) {
            throw ConfigError("--preset: unknown preset '" + o.preset + "'");
        }
        cfg = std::move(*preset);
    } else if (!o.config.empty()) {
        cfg = load_experiment(o.config);
    } else {
        throw ConfigError("one of --config or --preset is required");
    }
    if (o.seed) {
        cfg.seed = *o.seed;
    }
    if (o.reps) {
        cfg.replications = *o.reps;
    }
    if (o.horizon) {
        cfg.horizon = *o.horizon;
    }
    if (!o.out.empty()) {
        cfg.output.csv = o.out;
    }
    if (!o.json.empty()) {
        cfg.output.json = o.json;
    }
    cfg.validate();
    return cfg;
}

int finish_run(const ResultTable& table, const ExperimentConfig& cfg, std::ostream& out, std::ostream& err)
{
    write_outputs(table, cfg);
    if (!cfg.output.csv) {
        write_result_csv(out, table);
    }
    for (const auto& v : table.variants) {
        err << v.label << ": reps_used=" << v.reps_used << " diverged=" << v.diverged;
        if (v.slope_last) {
            err << " slope_last=" << v.slope_last->slope;
        }
        if (v.slope_avg) {
            err << " slope_avg=" << v.slope_avg->slope;
        }
        err << '\n';
    }
    if (table.all_diverged()) {
        err << "every replication diverged\n";
        return kExitAllDiverged;
    }
    return kExitOk;
}

struct SimulateOptions {
    std::string kind = "ar1";
    double theta_star = 0.0;
    double phi_star = 0.0;
    double alpha0 = 1.0;
    double alpha1 = 0.0;
    std::string innovation = "gaussian";
    double df = std::numeric_limits<double>::infinity();
    double hurst = 0.5;
    std::size_t dimension = 1;
    std::size_t length = 0;
    std::uint64_t seed = 0;
    std::string out;
};

int simulate(const SimulateOptions& o, std::ostream& out)
{
    GeneratorSpec spec;
    if (o.kind == "ar1") {
        spec.kind = GeneratorKind::ar1;
    } else if (o.kind == "ma1") {
        spec.kind = GeneratorKind::ma1;
    } else if (o.kind == "arch1") {
        spec.kind = GeneratorKind::arch1;
    } else if (o.kind == "ar1_arch1") {
        spec.kind = GeneratorKind::ar1_arch1;
    } else if (o.kind == "gaussian_iid") {
        spec.kind = GeneratorKind::gaussian_iid;
    } else {
        throw ConfigError("--kind: unknown generator '" + o.kind + "'");
    }
    if (o.innovation == "gaussian") {
        spec.innovation = InnovationSpec::gaussian();
    } else if (o.innovation == "student_t") {
        spec.innovation = InnovationSpec::student_t(o.df);
    } else if (o.innovation == "fgn_student_t") {
        spec.innovation = InnovationSpec::fgn_student_t(o.hurst, o.df);
    } else {
        throw ConfigError("--innovation: unknown innovation '" + o.innovation + "'");
    }
    if (o.length == 0) {
        throw ConfigError("--length must be at least 1");
    }
    spec.theta_star = o.theta_star;
    spec.phi_star = o.phi_star;
    spec.alpha0 = o.alpha0;
    spec.alpha1 = o.alpha1;
    spec.dimension = o.dimension;
    spec.seed = o.seed;
    const Series series = generate_series(spec, o.length);
    if (o.out.empty()) {
        write_series_csv(out, series);
    } else {
        std::ofstream file(o.out);
        if (!file) {
            throw ConfigError("--out: cannot write " + o.out);
        }
        write_series_csv(file, series);
    }
    return series.diverged ? kExitAllDiverged : kExitOk;
}

struct BoundOptions {
    std::string preset;
    std::string config;
    std::optional<std::uint64_t> horizon;
    std::uint64_t target_n = 1000000;
    std::size_t points = 200;
    std::string out;
};

int bound(const BoundOptions& o, std::ostream& out, std::ostream& err)
{
    BoundParams p;
    if (!o.preset.empty() && !o.config.empty()) {
        throw ConfigError("give either --config or --preset, not both");
    }
    if (!o.preset.empty()) {
        auto preset = bound_preset(o.preset);
        if (!preset) {
            throw ConfigError("--preset: unknown preset '" + o.preset + "'");
        }
        p = *preset;
    } else if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) {
            throw ConfigError("--config: cannot open " + o.config);
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("--config: invalid JSON (" + std::string(e.what()) + ")");
        }
        p = parse_bound_params(j);
    } else {
        throw ConfigError("one of --config or --preset is required");
    }

    std::uint64_t horizon = 0;
    if (o.horizon) {
        horizon = *o.horizon;
    } else {
        std::uint64_t n = 0;
        while (n < o.target_n && horizon < 100000000) {
            n += batch_size(p.schedule, ++horizon);
        }
    }
    if (horizon == 0) {
        throw ConfigError("--horizon must be at least 1");
    }
    const ErrorCurve delta = delta_recursion(p, horizon);
    const auto grid = log_grid(1, horizon, o.points);

    std::ofstream file;
    std::ostream* sink = &out;
    if (!o.out.empty()) {
        file.open(o.out);
        if (!file) {
            throw ConfigError("--out: cannot write " + o.out);
        }
        sink = &file;
    }
    *sink << "t,N,delta,total,init_term,bias_term,noise_term\n";
    ErrorCurve noise;
    for (const std::uint64_t t : grid) {
        const CurvePoint& d = delta.points[t - 1];
        const TheoremTerms terms = theorem_bound(p, d.n);
        *sink << t << ',' << d.n << ',' << g17(d.value) << ',' << g17(terms.total) << ',' << g17(terms.init_term)
              << ',' << g17(terms.bias_term) << ',' << g17(terms.noise_term) << '\n';
        noise.points.push_back({d.n, terms.noise_term});
    }
    const auto& s = p.schedule;
    const double analytic = -(s.rho * (2.0 * p.uncertainty.sigma - s.beta) + s.alpha) / (1.0 + s.rho);
    if (p.uncertainty.c_sigma > 0.0) {
        const DecayFit fit = fit_decay_exponent(noise, 0.5);
        err << "noise slope fitted=" << fit.slope << " analytic=" << analytic << '\n';
    }
    return kExitOk;
}

struct VerifyOptions {
    double theta = 0.2;
    double theta_star = 0.5;
    double sigma2 = 1.0;
    std::uint64_t n = 8;
    std::uint64_t reps = 1000000;
    std::uint64_t seed = 0;
};

int verify(const VerifyOptions& o, std::ostream& out)
{
    const DriftCheck c = verify_ar1_drift(o.theta, o.theta_star, o.sigma2, o.n, o.reps, o.seed);
    auto z = [&](double ref) { return c.std_error > 0.0 ? (c.mc_estimate - ref) / c.std_error : 0.0; };
    out << "mc_estimate,std_error,closed_form,exact_form,z_closed,z_exact\n";
    out << g17(c.mc_estimate) << ',' << g17(c.std_error) << ',' << g17(c.closed_form) << ',' << g17(c.exact_form)
        << ',' << g17(z(c.closed_form)) << ',' << g17(z(c.exact_form)) << '\n';
    return kExitOk;
}

int slopes(const std::string& path, double tail, std::ostream& out)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("--csv: cannot open " + path);
    }
    const CsvCurves curves = read_result_csv(in);
    out << "label,slope_last,r2_last,slope_avg,r2_avg\n";
    auto cell = [&](const ErrorCurve& c) {
        try {
            const DecayFit f = fit_decay_exponent(c, tail);
            return g17(f.slope) + ',' + g17(f.r2);
        } catch (const Error&) {
            return std::string(",");
        }
    };
    for (std::size_t i = 0; i < curves.labels.size(); ++i) {
        out << curves.labels[i] << ',' << cell(curves.last[i]) << ',' << cell(curves.avg[i]) << '\n';
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Streaming stochastic gradient experiments and bound evaluators", "streamopt"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "write a generated series as CSV");
    sim_cmd->add_option("--kind", sim.kind, "ar1, ma1, arch1, ar1_arch1 or gaussian_iid");
    sim_cmd->add_option("--theta-star", sim.theta_star);
    sim_cmd->add_option("--phi-star", sim.phi_star);
    sim_cmd->add_option("--alpha0", sim.alpha0);
    sim_cmd->add_option("--alpha1", sim.alpha1);
    sim_cmd->add_option("--innovation", sim.innovation, "gaussian, student_t or fgn_student_t");
    sim_cmd->add_option("--df", sim.df);
    sim_cmd->add_option("--hurst", sim.hurst);
    sim_cmd->add_option("--dimension", sim.dimension);
    sim_cmd->add_option("--length", sim.length)->required();
    sim_cmd->add_option("--seed", sim.seed);
    sim_cmd->add_option("--out", sim.out);

    RunOptions run_opts;
    auto* run_cmd = app.add_subcommand("run", "run a replicated experiment");
    add_run_options(run_cmd, run_opts);

    RunOptions median_opts;
    auto* median_cmd = app.add_subcommand("median", "run a geometric-median experiment");
    add_run_options(median_cmd, median_opts);

    BoundOptions bound_opts;
    auto* bound_cmd = app.add_subcommand("bound", "evaluate the error recursion and the explicit bound");
    bound_cmd->add_option("--preset", bound_opts.preset, "thm1-default");
    bound_cmd->add_option("--config", bound_opts.config, "bound parameter JSON file");
    bound_cmd->add_option("--horizon", bound_opts.horizon, "number of batches");
    bound_cmd->add_option("--target-n", bound_opts.target_n, "observation count to reach when --horizon is absent");
    bound_cmd->add_option("--points", bound_opts.points, "grid size");
    bound_cmd->add_option("--out", bound_opts.out);

    VerifyOptions verify_opts;
    auto* verify_cmd = app.add_subcommand("verify", "Monte-Carlo check of the AR(1) conditional gradient drift");
    verify_cmd->add_option("--theta", verify_opts.theta);
    verify_cmd->add_option("--theta-star", verify_opts.theta_star);
    verify_cmd->add_option("--sigma2", verify_opts.sigma2);
    verify_cmd->add_option("--n", verify_opts.n);
    verify_cmd->add_option("--reps", verify_opts.reps);
    verify_cmd->add_option("--seed", verify_opts.seed);

    std::string slopes_csv;
    double slopes_tail = 0.5;
    auto* slopes_cmd = app.add_subcommand("slopes", "fit log-log decay exponents to a result CSV");
    slopes_cmd->add_option("--csv", slopes_csv)->required();
    slopes_cmd->add_option("--tail", slopes_tail, "fraction of the log-N span to fit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (sim_cmd->parsed()) {
            return simulate(sim, out);
        }
        if (run_cmd->parsed()) {
            const ExperimentConfig cfg = resolve_experiment(run_opts);
            return finish_run(run_experiment(cfg), cfg, out, err);
        }
        if (median_cmd->parsed()) {
            const ExperimentConfig cfg = resolve_experiment(median_opts);
            return finish_run(run_median_experiment(cfg), cfg, out, err);
        }
        if (bound_cmd->parsed()) {
            return bound(bound_opts, out, err);
        }
        if (verify_cmd->parsed()) {
            return verify(verify_opts, out);
        }
        if (slopes_cmd->parsed()) {
            return slopes(slopes_csv, slopes_tail, out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    err << app.help();
    return kExitConfig;
}

}  // namespace streamopt
