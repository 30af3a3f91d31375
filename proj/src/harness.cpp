#include "streamopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "streamopt/optim.hpp"
#include "streamopt/rng.hpp"

namespace streamopt {

namespace {

double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec perturb(const Vec& center, double radius, Rng& rng)
{
    Vec out = center;
    if (radius > 0.0) {
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            out(i) += uniform(rng, -radius, radius);
        }
    }
    return out;
}

class SyntheticProblem final : public Problem {
public:
    explicit SyntheticProblem(ModelConfig m) : m_(std::move(m)) {}

    Replicate draw(std::uint64_t seed, std::uint64_t length) const override
    {
        Rng rng(seed);
        Replicate rep;
        GeneratorSpec spec;
        spec.innovation = m_.innovation;
        switch (m_.kind) {
        case ModelKind::ar1: {
            const double ts = m_.theta_star.value_or(uniform(rng, m_.theta_star_range[0], m_.theta_star_range[1]));
            spec.kind = GeneratorKind::ar1;
            spec.theta_star = ts;
            rep.model = std::make_unique<Ar1Model>(ts);
            rep.theta_star = Vec::Constant(1, ts);
            rep.theta0 = perturb(rep.theta_star, m_.init_radius, rng);
            break;
        }
        case ModelKind::ma1: {
            const double phi = m_.phi_star.value_or(std::normal_distribution<double>()(rng));
            spec.kind = GeneratorKind::ma1;
            spec.phi_star = phi;
            rep.model = std::make_unique<Ma1MisspecifiedModel>(phi);
            rep.theta_star = Vec::Constant(1, ma1_pseudo_optimum(phi));
            rep.theta0 = perturb(rep.theta_star, m_.init_radius, rng);
            break;
        }
        case ModelKind::arch1: {
            const double a1 = m_.alpha1.value_or(uniform(rng, m_.alpha1_range[0], m_.alpha1_range[1]));
            spec.kind = GeneratorKind::arch1;
            spec.alpha0 = m_.alpha0;
            spec.alpha1 = a1;
            rep.model = std::make_unique<ArchModel>(ArchParams{m_.alpha0, a1}, m_.freeze_alpha0);
            rep.theta_star = Eigen::Vector2d(m_.alpha0, a1);
            const double a1_init = std::max(0.0, perturb(Vec::Constant(1, a1), m_.init_radius, rng)(0));
            rep.theta0 = Eigen::Vector2d(m_.alpha0_init, a1_init);
            break;
        }
        case ModelKind::ar1_arch1: {
            const double ts = m_.theta_star.value_or(uniform(rng, m_.theta_star_range[0], m_.theta_star_range[1]));
            const double a1 = m_.alpha1.value_or(uniform(rng, m_.alpha1_range[0], m_.alpha1_range[1]));
            spec.kind = GeneratorKind::ar1_arch1;
            spec.theta_star = ts;
            spec.alpha0 = m_.alpha0;
            spec.alpha1 = a1;
            rep.model = std::make_unique<ArArchModel>(ts, ArchParams{m_.alpha0, a1}, m_.freeze_alpha0);
            rep.theta_star = Eigen::Vector3d(ts, m_.alpha0, a1);
            const Vec start = perturb(Eigen::Vector2d(ts, a1), m_.init_radius, rng);
            rep.theta0 = Eigen::Vector3d(start(0), m_.alpha0_init, std::max(0.0, start(1)));
            break;
        }
        case ModelKind::median: {
            const auto d = static_cast<Eigen::Index>(m_.dimension);
            const double r = m_.center_range.value_or(static_cast<double>(m_.dimension));
            Vec center(d);
            for (Eigen::Index i = 0; i < d; ++i) {
                center(i) = uniform(rng, -r, r);
            }
            spec.kind = GeneratorKind::gaussian_iid;
            spec.dimension = m_.dimension;
            spec.center = center;
            spec.innovation = InnovationSpec::gaussian();
            spec.seed = rng();
            auto series = std::make_shared<Series>(generate_series(spec, length));
            rep.theta_star = weiszfeld(series->data.bottomRows(static_cast<Eigen::Index>(length)), 1e-10).median;
            rep.model = std::make_unique<GeometricMedianModel>(m_.dimension, rep.theta_star);
            rep.theta0 = perturb(rep.theta_star, m_.init_radius, rng);
            rep.series = std::move(series);
            return rep;
        }
        }
        spec.seed = rng();
        rep.series = std::make_shared<Series>(generate_series(spec, length));
        return rep;
    }

private:
    ModelConfig m_;
};

class CsvMedianProblem final : public Problem {
public:
    explicit CsvMedianProblem(const ModelConfig& m) : m_(m)
    {
        const auto& src = *m.csv;
        TimeSeriesTable table = ingest_csv(src.path, src.timestamp_column, src.value_columns);
        RowMatrix values = src.deseasonalize ? deseasonalize(table.values, table.timestamps) : table.values;
        if (values.rows() <= static_cast<Eigen::Index>(kPresample)) {
            throw ConfigError("model.csv: too few usable rows");
        }
        series_ = std::make_shared<Series>(series_from_matrix(values));
        median_ = weiszfeld(series_->data.bottomRows(static_cast<Eigen::Index>(series_->length())), 1e-10).median;
    }

    Replicate draw(std::uint64_t seed, std::uint64_t /*length*/) const override
    {
        Rng rng(seed);
        Replicate rep;
        rep.series = series_;
        rep.theta_star = median_;
        rep.model = std::make_unique<GeometricMedianModel>(m_.dimension, median_);
        rep.theta0 = perturb(median_, m_.init_radius, rng);
        return rep;
    }

    std::uint64_t max_length() const override { return series_->length(); }

private:
    ModelConfig m_;
    std::shared_ptr<const Series> series_;
    Vec median_;
};

struct RepOutcome {
    bool diverged = false;
    std::vector<double> err_last;
    std::vector<double> err_avg;
    double seconds = 0.0;
};

std::string format_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

nlohmann::json fit_json(const std::optional<DecayFit>& fit)
{
    if (!fit) {
        return nullptr;
    }
    return {{"slope", fit->slope}, {"intercept", fit->intercept}, {"r2", fit->r2}, {"points", fit->used}};
}

std::optional<DecayFit> try_fit(const ErrorCurve& curve)
{
    try {
        return fit_decay_exponent(curve, 0.5);
    } catch (const Error&) {
        return std::nullopt;
    }
}

ErrorCurve make_curve(const std::vector<std::uint64_t>& grid, const std::vector<double>& values)
{
    ErrorCurve curve;
    for (std::size_t i = 0; i < values.size() && i < grid.size(); ++i) {
        curve.points.push_back({grid[i], values[i]});
    }
    return curve;
}

}  // namespace

std::unique_ptr<Problem> make_problem(const ModelConfig& model)
{
    if (model.kind == ModelKind::median && model.csv) {
        return std::make_unique<CsvMedianProblem>(model);
    }
    return std::make_unique<SyntheticProblem>(model);
}

bool ResultTable::all_diverged() const
{
    return std::all_of(variants.begin(), variants.end(), [](const VariantResult& v) { return v.reps_used == 0; });
}

ErrorCurve ResultTable::curve_last(std::size_t variant) const
{
    return make_curve(grid, variants.at(variant).mean_err_last);
}

ErrorCurve ResultTable::curve_avg(std::size_t variant) const
{
    return make_curve(grid, variants.at(variant).mean_err_avg);
}

std::size_t worker_count(std::size_t tasks)
{
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("STREAMOPT_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) {
            n = static_cast<std::size_t>(cap);
        }
    }
    return std::max<std::size_t>(1, std::min(n, tasks));
}

ResultTable run_experiment(const ExperimentConfig& config)
{
    config.validate();
    const auto problem = make_problem(config.model);
    return run_experiment(config, *problem);
}

ResultTable run_experiment(const ExperimentConfig& config, const Problem& problem)
{
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    const auto variants = config.resolved_variants();
    const std::uint64_t horizon = std::min(config.horizon, problem.max_length());
    std::uint64_t first = 1;
    for (const auto& v : variants) {
        first = std::max(first, batch_size(v.schedule, 1));
    }
    if (horizon < first) {
        throw ConfigError("horizon: data shorter than the first batch");
    }

    ResultTable table;
    table.grid = log_grid(first, horizon, config.grid_points);
    table.replications = config.replications;
    table.seed = config.seed;

    const std::size_t reps = config.replications;
    std::vector<std::vector<RepOutcome>> outcomes(reps);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        for (std::size_t r = next++; r < reps; r = next++) {
            try {
                const Replicate rep = problem.draw(derive_seed(config.seed, r), horizon);
                auto& out = outcomes[r];
                out.resize(variants.size());
                for (std::size_t k = 0; k < variants.size(); ++k) {
                    const auto t0 = std::chrono::steady_clock::now();
                    Batcher batcher(*rep.series, variants[k].schedule);
                    const Trajectory traj = run(*rep.model, batcher, variants[k].schedule, config.model.projection,
                                                rep.theta0, UINT64_MAX, table.grid);
                    RepOutcome& o = out[k];
                    o.diverged = traj.final_state.diverged || rep.series->diverged;
                    if (!o.diverged) {
                        o.err_last.reserve(traj.snapshots.size());
                        o.err_avg.reserve(traj.snapshots.size());
                        for (const auto& s : traj.snapshots) {
                            o.err_last.push_back((s.theta - rep.theta_star).squaredNorm());
                            o.err_avg.push_back((s.theta_bar - rep.theta_star).squaredNorm());
                        }
                    }
                    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = reps;
            }
        }
    };

    table.threads = worker_count(reps);
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < table.threads; ++i) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    // Reduce in replication order so the means do not depend on scheduling.
    const std::size_t g = table.grid.size();
    for (std::size_t k = 0; k < variants.size(); ++k) {
        VariantResult vr;
        vr.label = variants[k].label;
        vr.schedule = variants[k].schedule;
        std::vector<double> sum_last(g, 0.0);
        std::vector<double> sum_avg(g, 0.0);
        for (std::size_t r = 0; r < reps; ++r) {
            const RepOutcome& o = outcomes[r][k];
            vr.wall_seconds += o.seconds;
            if (config.keep_replicates) {
                vr.rep_err_last.push_back(o.err_last);
                vr.rep_err_avg.push_back(o.err_avg);
            }
            if (o.diverged) {
                ++vr.diverged;
                continue;
            }
            ++vr.reps_used;
            for (std::size_t i = 0; i < g; ++i) {
                sum_last[i] += o.err_last[i];
                sum_avg[i] += o.err_avg[i];
            }
        }
        if (vr.reps_used > 0) {
            const auto used = static_cast<double>(vr.reps_used);
            for (std::size_t i = 0; i < g; ++i) {
                vr.mean_err_last.push_back(sum_last[i] / used);
                vr.mean_err_avg.push_back(sum_avg[i] / used);
            }
            vr.slope_last = try_fit(make_curve(table.grid, vr.mean_err_last));
            vr.slope_avg = try_fit(make_curve(table.grid, vr.mean_err_avg));
        }
        table.variants.push_back(std::move(vr));
    }
    table.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return table;
}

ResultTable run_median_experiment(const ExperimentConfig& config)
{
    if (config.model.kind != ModelKind::median) {
        throw ConfigError("model.kind: the median experiment needs kind 'median'");
    }
    return run_experiment(config);
}

void write_result_csv(std::ostream& out, const ResultTable& table)
{
    out << "variant,label,N,mean_err_last,mean_err_avg,reps_used,diverged\n";
    for (std::size_t k = 0; k < table.variants.size(); ++k) {
        const auto& v = table.variants[k];
        for (std::size_t i = 0; i < table.grid.size(); ++i) {
            out << k << ',' << v.label << ',' << table.grid[i] << ',';
            if (v.reps_used > 0) {
                out << format_double(v.mean_err_last[i]) << ',' << format_double(v.mean_err_avg[i]);
            } else {
                out << ',';
            }
            out << ',' << v.reps_used << ',' << v.diverged << '\n';
        }
    }
}

nlohmann::json result_json(const ResultTable& table, const ExperimentConfig& config)
{
    nlohmann::json j;
    j["model"] = to_string(config.model.kind);
    j["horizon"] = config.horizon;
    j["replications"] = table.replications;
    j["seed"] = table.seed;
    j["grid"] = table.grid;
    j["threads"] = table.threads;
    j["wall_seconds"] = table.wall_seconds;
    auto& vs = j["variants"] = nlohmann::json::array();
    for (const auto& v : table.variants) {
        vs.push_back({{"label", v.label},
                      {"schedule", to_json(v.schedule)},
                      {"mean_err_last", v.mean_err_last},
                      {"mean_err_avg", v.mean_err_avg},
                      {"reps_used", v.reps_used},
                      {"diverged", v.diverged},
                      {"slope_last", fit_json(v.slope_last)},
                      {"slope_avg", fit_json(v.slope_avg)},
                      {"wall_seconds", v.wall_seconds}});
    }
    return j;
}

void write_outputs(const ResultTable& table, const ExperimentConfig& config)
{
    auto open = [](const std::filesystem::path& p) {
        if (p.has_parent_path()) {
            std::filesystem::create_directories(p.parent_path());
        }
        std::ofstream out(p);
        if (!out) {
            throw ConfigError("output: cannot write " + p.string());
        }
        return out;
    };
    if (config.output.csv) {
        auto out = open(*config.output.csv);
        write_result_csv(out, table);
    }
    if (config.output.json) {
        auto out = open(*config.output.json);
        out << result_json(table, config).dump(2) << '\n';
    }
}

CsvCurves read_result_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("variant,label,N,", 0) != 0) {
        throw ConfigError("slopes: not a result CSV (unexpected header)");
    }
    CsvCurves curves;
    std::map<std::size_t, std::size_t> slot;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        if (cells.size() != 7) {
            throw ConfigError("slopes: line " + std::to_string(line_no) + " does not have 7 fields");
        }
        try {
            const std::size_t variant = std::stoul(cells[0]);
            auto [it, inserted] = slot.emplace(variant, curves.labels.size());
            if (inserted) {
                curves.labels.push_back(cells[1]);
                curves.last.emplace_back();
                curves.avg.emplace_back();
            }
            const std::uint64_t n = std::stoull(cells[2]);
            if (!cells[3].empty()) {
                curves.last[it->second].points.push_back({n, std::stod(cells[3])});
            }
            if (!cells[4].empty()) {
                curves.avg[it->second].points.push_back({n, std::stod(cells[4])});
            }
        } catch (const std::logic_error&) {
            throw ConfigError("slopes: line " + std::to_string(line_no) + " is malformed");
        }
    }
    return curves;
}

}  // namespace streamopt
