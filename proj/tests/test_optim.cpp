#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "streamopt/optim.hpp"

using namespace streamopt;

namespace {

class ConstantGradient final : public LossModel {
public:
    explicit ConstantGradient(Vec g) : g_(std::move(g)) {}
    std::size_t dimension() const override { return static_cast<std::size_t>(g_.size()); }
    Vec gradient(const StreamBatch&, const Vec&) const override { return g_; }

private:
    Vec g_;
};

class FailsAtBatch final : public LossModel {
public:
    explicit FailsAtBatch(std::uint64_t t) : t_(t) {}
    std::size_t dimension() const override { return 1; }
    Vec gradient(const StreamBatch& b, const Vec&) const override
    {
        if (b.index == t_) {
            throw GradientError("boom");
        }
        return Vec::Ones(1);
    }

private:
    std::uint64_t t_;
};

StreamBatch batch_of(std::uint64_t index, std::size_t n, std::size_t dim = 1)
{
    StreamBatch b;
    b.index = index;
    b.values = RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    b.lagged = b.values;
    b.lagged2 = b.values;
    return b;
}

Series zeros(std::size_t length, std::size_t dim = 1)
{
    return series_from_matrix(RowMatrix::Zero(static_cast<Eigen::Index>(length + kPresample),
                                              static_cast<Eigen::Index>(dim)));
}

}  // namespace

TEST(SsgStep, HandExample)
{
    StreamBatch b = batch_of(1, 1);
    b.values(0, 0) = 1.0;
    b.lagged(0, 0) = 2.0;
    Ar1Model model(0.5);
    ScheduleParams s;
    auto state = OptimizerState::start(Vec::Zero(1));
    ssg_step(state, b, model, s, ProjectionSpec::none());
    // gradient -2*2*(1 - 0) = -4, gamma_1 = 1
    EXPECT_DOUBLE_EQ(state.theta(0), 4.0);
    EXPECT_DOUBLE_EQ(state.theta_bar(0), 0.0);
    EXPECT_EQ(state.t, 1u);
    EXPECT_EQ(state.n_cum, 1u);
}

TEST(SsgStep, ZeroGradientKeepsIterate)
{
    ConstantGradient model(Vec::Zero(3));
    ScheduleParams s;
    s.c_rho = 4;
    s.rho = 0.5;
    const Vec theta0 = Eigen::Vector3d(1.0, -2.0, 3.0);
    auto state = OptimizerState::start(theta0);
    for (std::uint64_t t = 1; t <= 50; ++t) {
        ssg_step(state, batch_of(t, batch_size(s, t), 3), model, s, ProjectionSpec::none());
        EXPECT_EQ(state.theta, theta0);
        EXPECT_LT((state.theta_bar - theta0).norm(), 1e-14);
    }
}

TEST(SsgStep, AverageIsBatchWeightedMeanOfPreUpdateIterates)
{
    ConstantGradient model(Eigen::Vector2d(1.0, -0.5));
    ScheduleParams s;
    s.c_rho = 3;
    s.rho = 0.4;
    s.c_gamma = 0.7;
    auto state = OptimizerState::start(Eigen::Vector2d(2.0, 1.0));
    std::vector<Vec> iterates{state.theta};
    std::vector<double> weights;
    for (std::uint64_t t = 1; t <= 200; ++t) {
        const auto n = batch_size(s, t);
        weights.push_back(static_cast<double>(n));
        ssg_step(state, batch_of(t, n), model, s, ProjectionSpec::none());
        iterates.push_back(state.theta);

        Vec offline = Vec::Zero(2);
        double total = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            offline += weights[i] * iterates[i];
            total += weights[i];
        }
        offline /= total;
        ASSERT_LT((state.theta_bar - offline).norm(), 1e-10 * (1.0 + offline.norm()));
    }
}

TEST(SsgStep, ConstantBatchesGiveArithmeticMean)
{
    ConstantGradient model(Vec::Ones(1));
    ScheduleParams s;
    s.c_rho = 5;
    auto state = OptimizerState::start(Vec::Zero(1));
    double sum = 0.0;
    for (std::uint64_t t = 1; t <= 30; ++t) {
        sum += state.theta(0);
        ssg_step(state, batch_of(t, 5), model, s, ProjectionSpec::none());
        EXPECT_NEAR(state.theta_bar(0), sum / static_cast<double>(t), 1e-12);
    }
}

TEST(SsgStep, GradientErrorFreezesState)
{
    FailsAtBatch model(3);
    ScheduleParams s;
    auto state = OptimizerState::start(Vec::Zero(1));
    for (std::uint64_t t = 1; t <= 2; ++t) {
        ssg_step(state, batch_of(t, 1), model, s, ProjectionSpec::none());
    }
    const auto before = state;
    ssg_step(state, batch_of(3, 1), model, s, ProjectionSpec::none());
    EXPECT_TRUE(state.diverged);
    EXPECT_EQ(state.t, 2u);
    EXPECT_EQ(state.theta, before.theta);
    EXPECT_EQ(state.theta_bar, before.theta_bar);
    EXPECT_EQ(state.n_cum, before.n_cum);
    ssg_step(state, batch_of(4, 1), model, s, ProjectionSpec::none());
    EXPECT_EQ(state.t, 2u);
}

TEST(SsgStep, OverflowMarksDivergence)
{
    ConstantGradient huge(Vec::Constant(1, 1e13));
    ScheduleParams s;
    auto state = OptimizerState::start(Vec::Zero(1));
    ssg_step(state, batch_of(1, 1), huge, s, ProjectionSpec::none());
    EXPECT_TRUE(state.diverged);
    EXPECT_EQ(state.t, 0u);
    EXPECT_EQ(state.theta(0), 0.0);

    ConstantGradient nan(Vec::Constant(1, NAN));
    auto state2 = OptimizerState::start(Vec::Zero(1));
    ssg_step(state2, batch_of(1, 1), nan, s, ProjectionSpec::none());
    EXPECT_TRUE(state2.diverged);
}

TEST(SsgStep, RejectsMisalignedBatch)
{
    ConstantGradient model(Vec::Zero(1));
    ScheduleParams s;
    s.c_rho = 2;
    auto state = OptimizerState::start(Vec::Zero(1));
    EXPECT_THROW(ssg_step(state, batch_of(2, 2), model, s, ProjectionSpec::none()), std::invalid_argument);
    EXPECT_THROW(ssg_step(state, batch_of(1, 3), model, s, ProjectionSpec::none()), std::invalid_argument);
}

TEST(SsgStep, ProjectionKeepsIterateFeasible)
{
    ConstantGradient model(Eigen::Vector2d(-10.0, 0.0));
    ScheduleParams s;
    const auto ball = ProjectionSpec::ball(Eigen::Vector2d(0.0, 0.0), 1.5);
    auto state = OptimizerState::start(Vec::Zero(2));
    for (std::uint64_t t = 1; t <= 10; ++t) {
        ssg_step(state, batch_of(t, 1, 2), model, s, ball);
        EXPECT_LE(state.theta.norm(), 1.5 + 1e-12);
    }
    EXPECT_NEAR(state.theta(0), 1.5, 1e-12);
}

TEST(Projection, BallAndBoxProperties)
{
    std::mt19937_64 gen(1);
    std::normal_distribution<double> z(0.0, 3.0);
    const auto ball = ProjectionSpec::ball(Eigen::Vector3d(1.0, 0.0, -1.0), 2.0);
    const auto box = ProjectionSpec::box(Eigen::Vector3d(-1.0, 0.0, -2.0), Eigen::Vector3d(1.0, 0.5, 2.0));
    for (int k = 0; k < 200; ++k) {
        const Vec a = Eigen::Vector3d(z(gen), z(gen), z(gen));
        const Vec b = Eigen::Vector3d(z(gen), z(gen), z(gen));
        for (const auto* spec : {&ball, &box}) {
            const Vec pa = project(a, *spec);
            const Vec pb = project(b, *spec);
            EXPECT_LT((project(pa, *spec) - pa).norm(), 1e-12);
            EXPECT_LE((pa - pb).norm(), (a - b).norm() + 1e-12);
            // Obtuse-angle characterization of the Euclidean projection.
            EXPECT_LE((a - pa).dot(pb - pa), 1e-9);
        }
        EXPECT_LE((project(a, ball) - ball.center).norm(), 2.0 + 1e-12);
        EXPECT_TRUE((project(a, box).array() >= box.lower.array()).all());
        EXPECT_TRUE((project(a, box).array() <= box.upper.array()).all());
    }
    EXPECT_EQ(project(Eigen::Vector2d(7.0, 8.0), ProjectionSpec::none()), Eigen::Vector2d(7.0, 8.0));
}

TEST(Projection, Validation)
{
    EXPECT_THROW(ProjectionSpec::ball(Vec::Zero(2), 0.0), ConfigError);
    EXPECT_THROW(ProjectionSpec::box(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 1.0)), ConfigError);
    EXPECT_THROW(ProjectionSpec::ball(Vec::Zero(2), 1.0).validate(3), ConfigError);
}

TEST(LogGrid, Shape)
{
    const auto g = log_grid(64, 1000000, 200);
    EXPECT_EQ(g.front(), 64u);
    EXPECT_EQ(g.back(), 1000000u);
    EXPECT_LE(g.size(), 200u);
    EXPECT_GE(g.size(), 190u);
    for (std::size_t i = 1; i < g.size(); ++i) {
        EXPECT_GT(g[i], g[i - 1]);
    }
    const auto small = log_grid(1, 10, 200);
    EXPECT_EQ(small.size(), 10u);
    EXPECT_EQ(log_grid(5, 5).size(), 1u);
    EXPECT_THROW(log_grid(0, 5), std::invalid_argument);
}

TEST(Run, GridSnapshotsHoldLatestStateBelowGridPoint)
{
    ConstantGradient model(Vec::Ones(1));
    ScheduleParams s;
    s.c_rho = 2;
    const Series x = zeros(10);
    Batcher batcher(x, s);
    const std::vector<std::uint64_t> grid{1, 2, 3, 4, 5, 100};
    const auto traj = run(model, batcher, s, ProjectionSpec::none(), Vec::Zero(1), 1000, grid);
    ASSERT_EQ(traj.snapshots.size(), grid.size());
    const std::vector<std::uint64_t> expected_t{0, 1, 1, 2, 2, 5};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_EQ(traj.snapshots[i].grid_n, grid[i]);
        EXPECT_EQ(traj.snapshots[i].t, expected_t[i]) << "grid " << grid[i];
        EXPECT_LE(traj.snapshots[i].n_cum, grid[i]);
    }
    EXPECT_EQ(traj.final_state.t, 5u);
    // theta_t = -sum gamma_i with gamma_i = i^(-2/3)
    double expect = 0.0;
    for (int i = 1; i <= 5; ++i) {
        expect -= std::pow(i, -2.0 / 3.0);
    }
    EXPECT_NEAR(traj.final_state.theta(0), expect, 1e-12);
}

TEST(Run, StopsAtMaxBatchesAndIsDeterministic)
{
    GeneratorSpec g;
    g.theta_star = 0.5;
    g.seed = 3;
    const Series x = generate_series(g, 5000);
    Ar1Model model(0.5);
    ScheduleParams s;
    s.c_rho = 4;
    s.rho = 0.3;
    s.c_gamma = 0.2;
    const auto grid = log_grid(4, 5000, 50);
    Batcher b1(x, s);
    Batcher b2(x, s);
    const auto t1 = run(model, b1, s, ProjectionSpec::none(), Vec::Zero(1), 1000000, grid);
    const auto t2 = run(model, b2, s, ProjectionSpec::none(), Vec::Zero(1), 1000000, grid);
    ASSERT_EQ(t1.snapshots.size(), t2.snapshots.size());
    for (std::size_t i = 0; i < t1.snapshots.size(); ++i) {
        EXPECT_EQ(t1.snapshots[i].theta, t2.snapshots[i].theta);
        EXPECT_EQ(t1.snapshots[i].theta_bar, t2.snapshots[i].theta_bar);
    }
    EXPECT_NEAR(t1.final_state.theta_bar(0), 0.5, 0.1);

    Batcher b3(x, s);
    const auto t3 = run(model, b3, s, ProjectionSpec::none(), Vec::Zero(1), 7, grid);
    EXPECT_EQ(t3.final_state.t, 7u);

    Batcher b4(x, s);
    EXPECT_THROW(run(model, b4, s, ProjectionSpec::ball(Vec::Zero(2), 1.0), Vec::Zero(1), 7, grid), ConfigError);
}

TEST(Projection, ListedValuesAndSafety)
{
    EXPECT_EQ(project(Eigen::Vector2d(2.0, 0.0), ProjectionSpec::ball(Vec::Zero(2), 1.0)), Eigen::Vector2d(1.0, 0.0));
    EXPECT_EQ(project(Eigen::Vector2d(0.3, 0.1), ProjectionSpec::ball(Vec::Zero(2), 1.0)), Eigen::Vector2d(0.3, 0.1));
    const auto unit_box = ProjectionSpec::box(Vec::Zero(2), Vec::Ones(2));
    EXPECT_EQ(project(Eigen::Vector2d(-1.0, 0.5), unit_box), Eigen::Vector2d(0.0, 0.5));

    std::mt19937_64 gen(2);
    std::normal_distribution<double> z(0.0, 4.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto ball = ProjectionSpec::ball(Eigen::Vector2d(1.0, 1.0), 2.0);
    for (int k = 0; k < 500; ++k) {
        const Vec theta = Eigen::Vector2d(z(gen), z(gen));
        const Vec in_box = Eigen::Vector2d(u(gen), u(gen));
        const Vec in_ball = project(Eigen::Vector2d(z(gen), z(gen)), ball);
        EXPECT_LE((project(theta, unit_box) - in_box).norm(), (theta - in_box).norm() + 1e-12);
        EXPECT_LE((project(theta, ball) - in_ball).norm(), (theta - in_ball).norm() + 1e-12);
    }
}

TEST(SsgStep, UnitBatchesReproducePlainSgd)
{
    GeneratorSpec g;
    g.theta_star = -0.4;
    g.seed = 5;
    const Series x = generate_series(g, 300);
    Ar1Model model(-0.4);
    ScheduleParams s;
    s.c_gamma = 0.3;
    Batcher batcher(x, s);
    auto state = OptimizerState::start(Vec::Constant(1, 0.9));
    double theta = 0.9;
    for (std::int64_t t = 1; t <= 300; ++t) {
        const double xs = x.at(t)(0);
        const double xl = x.at(t - 1)(0);
        theta -= 0.3 * std::pow(static_cast<double>(t), -2.0 / 3.0) * (-2.0 * xl * (xs - theta * xl));
        ssg_step(state, *batcher.next(), model, s, ProjectionSpec::none());
        ASSERT_NEAR(state.theta(0), theta, 1e-12);
    }
}

TEST(Run, HorizonOneIsOneStep)
{
    ConstantGradient model(Vec::Constant(1, 2.0));
    ScheduleParams s;
    const Series x = zeros(5);
    Batcher batcher(x, s);
    const auto traj = run(model, batcher, s, ProjectionSpec::none(), Vec::Zero(1), 1, {1});
    EXPECT_EQ(traj.final_state.t, 1u);
    EXPECT_DOUBLE_EQ(traj.final_state.theta(0), -2.0);
    ASSERT_EQ(traj.snapshots.size(), 1u);
    EXPECT_EQ(traj.snapshots[0].t, 1u);
}
