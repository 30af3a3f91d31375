#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "streamopt/cli.hpp"
#include "streamopt/harness.hpp"

using namespace streamopt;

namespace {

class ZeroGradient final : public LossModel {
public:
    std::size_t dimension() const override { return 2; }
    Vec gradient(const StreamBatch&, const Vec&) const override { return Vec::Zero(2); }
};

class ZeroProblem final : public Problem {
public:
    Replicate draw(std::uint64_t, std::uint64_t length) const override
    {
        Replicate r;
        r.model = std::make_unique<ZeroGradient>();
        r.series = std::make_shared<Series>(
            series_from_matrix(RowMatrix::Zero(static_cast<Eigen::Index>(length + kPresample), 2)));
        r.theta_star = Eigen::Vector2d(1.0, 2.0);
        r.theta0 = Eigen::Vector2d(4.0, -2.0);
        return r;
    }
};

ExperimentConfig small_ar1(std::uint64_t reps = 12)
{
    ExperimentConfig cfg;
    cfg.model.kind = ModelKind::ar1;
    cfg.horizon = 5000;
    cfg.replications = reps;
    cfg.seed = 42;
    ScheduleParams a;
    a.c_rho = 8;
    a.rho = 0.5;
    ScheduleParams b;
    b.c_rho = 1;
    b.c_gamma = 0.1;
    cfg.variants = {{"grow", a}, {"unit", b}};
    return cfg;
}

std::string csv_of(const ResultTable& t)
{
    std::ostringstream out;
    write_result_csv(out, t);
    return out.str();
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "streamopt");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_path(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("streamopt_harness_" + name);
}

void write_file(const std::filesystem::path& p, const std::string& body)
{
    std::ofstream(p) << body;
}

class ThreadsEnv {
public:
    explicit ThreadsEnv(const char* value)
    {
        if (const char* old = std::getenv("STREAMOPT_THREADS")) {
            saved_ = old;
        }
        setenv("STREAMOPT_THREADS", value, 1);
    }
    ~ThreadsEnv()
    {
        if (saved_) {
            setenv("STREAMOPT_THREADS", saved_->c_str(), 1);
        } else {
            unsetenv("STREAMOPT_THREADS");
        }
    }

private:
    std::optional<std::string> saved_;
};

}  // namespace

TEST(RunExperiment, ZeroGradientGivesConstantCurve)
{
    ExperimentConfig cfg;
    cfg.replications = 1;
    cfg.horizon = 1000;
    cfg.model.kind = ModelKind::median;
    cfg.model.dimension = 2;
    const auto table = run_experiment(cfg, ZeroProblem());
    ASSERT_EQ(table.variants.size(), 1u);
    const double expected = (Eigen::Vector2d(4.0, -2.0) - Eigen::Vector2d(1.0, 2.0)).squaredNorm();
    for (std::size_t i = 0; i < table.grid.size(); ++i) {
        EXPECT_DOUBLE_EQ(table.variants[0].mean_err_last[i], expected);
        EXPECT_DOUBLE_EQ(table.variants[0].mean_err_avg[i], expected);
    }
}

TEST(RunExperiment, MeanMatchesReplicates)
{
    auto cfg = small_ar1();
    cfg.keep_replicates = true;
    const auto table = run_experiment(cfg);
    for (const auto& v : table.variants) {
        ASSERT_EQ(v.rep_err_last.size(), cfg.replications);
        for (std::size_t i = 0; i < table.grid.size(); ++i) {
            double last = 0.0;
            double avg = 0.0;
            std::size_t used = 0;
            for (std::size_t r = 0; r < v.rep_err_last.size(); ++r) {
                if (v.rep_err_last[r].empty()) {
                    continue;
                }
                last += v.rep_err_last[r][i];
                avg += v.rep_err_avg[r][i];
                ++used;
            }
            ASSERT_EQ(used, v.reps_used);
            EXPECT_NEAR(v.mean_err_last[i], last / static_cast<double>(used), 1e-12 * std::abs(v.mean_err_last[i]));
            EXPECT_NEAR(v.mean_err_avg[i], avg / static_cast<double>(used), 1e-12 * std::abs(v.mean_err_avg[i]));
        }
    }
}

TEST(RunExperiment, SharedGridAndDecreasingError)
{
    auto cfg = small_ar1(20);
    const auto table = run_experiment(cfg);
    EXPECT_EQ(table.grid.front(), 8u);
    EXPECT_EQ(table.grid.back(), 5000u);
    for (const auto& v : table.variants) {
        EXPECT_EQ(v.mean_err_last.size(), table.grid.size());
        EXPECT_LT(v.mean_err_last.back(), v.mean_err_last.front());
        EXPECT_EQ(v.diverged, 0u);
    }
}

TEST(RunExperiment, CsvIndependentOfWorkerCount)
{
    const auto cfg = small_ar1(9);
    std::string one;
    std::string four;
    {
        ThreadsEnv env("1");
        EXPECT_EQ(worker_count(9), 1u);
        one = csv_of(run_experiment(cfg));
    }
    {
        ThreadsEnv env("4");
        EXPECT_EQ(worker_count(9), 4u);
        EXPECT_EQ(worker_count(2), 2u);
        four = csv_of(run_experiment(cfg));
    }
    EXPECT_EQ(one, four);
}

TEST(RunExperiment, AllDivergedLeavesEmptyMeans)
{
    auto cfg = small_ar1(3);
    for (auto& v : cfg.variants) {
        v.schedule.c_gamma = 1e9;
    }
    const auto table = run_experiment(cfg);
    EXPECT_TRUE(table.all_diverged());
    for (const auto& v : table.variants) {
        EXPECT_EQ(v.diverged, 3u);
        EXPECT_TRUE(v.mean_err_last.empty());
    }
    const std::string csv = csv_of(table);
    EXPECT_NE(csv.find(",,,0,3\n"), std::string::npos);
}

TEST(RunExperiment, MedianRequiresMedianKind)
{
    EXPECT_THROW(run_median_experiment(small_ar1()), ConfigError);
}

TEST(RunExperiment, SyntheticMedianApproachesWeiszfeld)
{
    ExperimentConfig cfg;
    cfg.model.kind = ModelKind::median;
    cfg.model.dimension = 2;
    cfg.replications = 1;
    cfg.horizon = 400000;
    cfg.seed = 5;
    cfg.schedule.c_rho = 64;
    cfg.schedule.rho = 0.5;
    cfg.schedule.beta = 1.0 / 3.0;
    cfg.model.step_sqrt_dim = true;
    const auto table = run_median_experiment(cfg);
    EXPECT_LT(table.variants[0].mean_err_avg.back(), 1e-4);
}

TEST(ResultCsv, RoundTrip)
{
    const auto table = run_experiment(small_ar1(4));
    std::istringstream in(csv_of(table));
    const auto curves = read_result_csv(in);
    ASSERT_EQ(curves.labels, (std::vector<std::string>{"grow", "unit"}));
    for (std::size_t k = 0; k < 2; ++k) {
        ASSERT_EQ(curves.last[k].points.size(), table.grid.size());
        for (std::size_t i = 0; i < table.grid.size(); ++i) {
            EXPECT_EQ(curves.last[k].points[i].n, table.grid[i]);
            EXPECT_EQ(curves.last[k].points[i].value, table.variants[k].mean_err_last[i]);
            EXPECT_EQ(curves.avg[k].points[i].value, table.variants[k].mean_err_avg[i]);
        }
    }
}

TEST(Config, ParsesAndRejectsWithFieldNames)
{
    const auto j = nlohmann::json::parse(R"({
        "model": {"kind": "ar1", "theta_star": 0.3},
        "schedule": {"c_rho": 64, "rho": 0.5},
        "horizon": 20000,
        "replications": 7,
        "seed": 9,
        "variants": [{"label": "a"}, {"label": "b", "schedule": {"c_rho": 1, "rho": 0}}]
    })");
    const auto cfg = parse_experiment(j);
    EXPECT_EQ(*cfg.model.theta_star, 0.3);
    EXPECT_EQ(cfg.replications, 7u);
    ASSERT_EQ(cfg.variants.size(), 2u);
    EXPECT_EQ(cfg.variants[0].schedule.c_rho, 64u);
    EXPECT_EQ(cfg.variants[1].schedule.c_rho, 1u);

    auto expect_field = [](const std::string& text, const std::string& field) {
        try {
            parse_experiment(nlohmann::json::parse(text)).validate();
            ADD_FAILURE() << "accepted: " << text;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
        }
    };
    expect_field(R"({"model": {"kind": "ar1"}, "schedule": {"rho": 1.5}})", "schedule");
    expect_field(R"({"model": {"kind": "ar1"}, "schedule": {"c_rho": "lots"}})", "schedule.c_rho");
    expect_field(R"({"model": {"kind": "ar1"}, "replications": 0})", "replications");
    expect_field(R"({"model": {"kind": "garch"}})", "model.kind");
    expect_field(R"({"model": {"thetastar": 0.1}})", "thetastar");
    expect_field(R"({"model": {"kind": "ar1"}, "variants": [{"label": "x"}, {"label": "x"}]})", "label");
}

TEST(Config, PresetsExist)
{
    for (const char* name : {"ar1-default", "ma1-default", "arch1-default", "ar1-arch1-default", "median-default"}) {
        const auto p = experiment_preset(name);
        ASSERT_TRUE(p) << name;
        EXPECT_NO_THROW(p->validate());
        EXPECT_EQ(p->resolved_variants().size(), 3u);
    }
    EXPECT_FALSE(experiment_preset("nope"));
    const auto b = bound_preset("thm1-default");
    ASSERT_TRUE(b);
    EXPECT_NO_THROW(theorem_bound(*b, 1000));
}

TEST(Cli, RunWritesCsvAndExitsZero)
{
    const auto cfg_path = temp_path("ar1.json");
    const auto out_path = temp_path("out/ar1.csv");
    std::filesystem::remove_all(out_path.parent_path());
    write_file(cfg_path, R"({"model": {"kind": "ar1"}, "schedule": {"c_rho": 8, "rho": 0.5}, "horizon": 3000})");
    const auto r = cli({"run", "--config", cfg_path.string(), "--reps", "10", "--out", out_path.string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    std::ifstream in(out_path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "variant,label,N,mean_err_last,mean_err_avg,reps_used,diverged");
    std::string row;
    std::getline(in, row);
    EXPECT_NE(row.find(",10,0"), std::string::npos) << row;
}

TEST(Cli, ConfigErrorsExitTwo)
{
    const auto cfg_path = temp_path("bad.json");
    write_file(cfg_path, R"({"model": {"kind": "ar1"}, "horizon": -5})");
    auto r = cli({"run", "--config", cfg_path.string()});
    EXPECT_EQ(r.code, kExitConfig);
    EXPECT_NE(r.err.find("horizon"), std::string::npos) << r.err;

    write_file(cfg_path, R"({"model": {"kind": "ar1", "init_radius": "big"}})");
    r = cli({"run", "--config", cfg_path.string()});
    EXPECT_EQ(r.code, kExitConfig);
    EXPECT_NE(r.err.find("model.init_radius"), std::string::npos) << r.err;

    write_file(cfg_path, "{not json");
    EXPECT_EQ(cli({"run", "--config", cfg_path.string()}).code, kExitConfig);
    EXPECT_EQ(cli({"run", "--config", "/nonexistent.json"}).code, kExitConfig);
    EXPECT_EQ(cli({"frobnicate"}).code, kExitConfig);
    EXPECT_EQ(cli({"run", "--bogus"}).code, kExitConfig);
    EXPECT_EQ(cli({}).code, kExitConfig);
    EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, AllDivergedExitsThree)
{
    const auto cfg_path = temp_path("diverge.json");
    write_file(cfg_path, R"({"model": {"kind": "ar1"}, "schedule": {"c_gamma": 1e9}, "horizon": 200})");
    const auto r = cli({"run", "--config", cfg_path.string(), "--reps", "2"});
    EXPECT_EQ(r.code, kExitAllDiverged) << r.err;
}

TEST(Cli, BoundSlopeMatchesAnalytic)
{
    const auto r = cli({"bound", "--preset", "thm1-default"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto pos = r.err.find("noise slope fitted=");
    ASSERT_NE(pos, std::string::npos) << r.err;
    double fitted = 0.0;
    double analytic = 0.0;
    std::sscanf(r.err.c_str() + pos, "noise slope fitted=%lf analytic=%lf", &fitted, &analytic);
    EXPECT_NEAR(fitted, analytic, 1e-3);
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "t,N,delta,total,init_term,bias_term,noise_term");
}

TEST(Cli, SimulateVerifyAndSlopes)
{
    auto r = cli({"simulate", "--kind", "ar1", "--theta-star", "0.5", "--length", "5"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);

    r = cli({"verify", "--reps", "20000"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("mc_estimate"), std::string::npos);

    const auto csv = temp_path("slopes.csv");
    {
        std::ofstream f(csv);
        write_result_csv(f, run_experiment(small_ar1(4)));
    }
    r = cli({"slopes", "--csv", csv.string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("grow"), std::string::npos);
}
