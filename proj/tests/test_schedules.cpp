#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "streamopt/schedules.hpp"
#include "streamopt/types.hpp"

using namespace streamopt;

namespace {

ScheduleParams sched(std::uint64_t c_rho, double rho, double c_gamma = 1.0, double alpha = 2.0 / 3.0,
                     double beta = 0.0)
{
    ScheduleParams s;
    s.c_gamma = c_gamma;
    s.alpha = alpha;
    s.beta = beta;
    s.c_rho = c_rho;
    s.rho = rho;
    return s;
}

}  // namespace

TEST(BatchSize, ConstantSchedule)
{
    EXPECT_EQ(batch_size(sched(1, 0.0), 5), 1u);
    EXPECT_EQ(batch_size(sched(7, 0.0), 1000), 7u);
}

TEST(BatchSize, ExactIntegerArgumentDoesNotRoundUp)
{
    EXPECT_EQ(batch_size(sched(64, 0.5), 4), 128u);
    EXPECT_EQ(batch_size(sched(64, 0.5), 9), 192u);
    EXPECT_EQ(batch_size(sched(3, 0.5), 16), 12u);
}

TEST(BatchSize, FractionalPowerMatchesLongDoubleCeil)
{
    const long double ref = std::ceil(2.0L * std::pow(10.0L, 0.3L));
    EXPECT_EQ(batch_size(sched(2, 0.3), 10), static_cast<std::uint64_t>(ref));
    EXPECT_EQ(batch_size(sched(2, 0.3), 10), 4u);
}

TEST(BatchSize, NondecreasingAndAtLeastCRho)
{
    for (double rho : {0.1, 0.33, 0.5, 0.9}) {
        const auto s = sched(5, rho);
        std::uint64_t prev = 0;
        for (std::uint64_t t = 1; t <= 5000; ++t) {
            const auto n = batch_size(s, t);
            EXPECT_GE(n, 5u);
            EXPECT_GE(n, prev);
            prev = n;
        }
        EXPECT_GT(prev, 5u);
    }
}

TEST(CumulativeCount, Examples)
{
    EXPECT_EQ(cumulative_count(sched(2, 0.0), 3), 6u);
    EXPECT_EQ(cumulative_count(sched(64, 0.5), 0), 0u);
    EXPECT_EQ(cumulative_count(sched(64, 0.5), 2), 155u);
}

TEST(CumulativeCount, RecursionAndTimeSandwich)
{
    for (const auto& s : {sched(1, 0.0), sched(64, 0.5), sched(3, 0.8), sched(10, 0.25)}) {
        std::uint64_t total = 0;
        for (std::uint64_t t = 1; t <= 3000; ++t) {
            total += batch_size(s, t);
            ASSERT_EQ(cumulative_count(s, t), total);
            const double n = static_cast<double>(total);
            const double cr = static_cast<double>(s.c_rho);
            const double e = 1.0 / (1.0 + s.rho);
            EXPECT_LE(std::pow(n / (2.0 * cr), e), static_cast<double>(t) * (1.0 + 1e-12));
            EXPECT_GE(std::pow(2.0 * n / cr, e), static_cast<double>(t) * (1.0 - 1e-12));
        }
    }
}

TEST(LearningRate, Examples)
{
    EXPECT_NEAR(learning_rate(sched(1, 0.0), 8, 3.0), 0.25, 1e-15);
    EXPECT_NEAR(learning_rate(sched(64, 0.0, 1.0, 2.0 / 3.0, 1.0 / 3.0), 1, 64.0), 4.0, 1e-12);
    EXPECT_DOUBLE_EQ(learning_rate(sched(1, 0.0, 6.0), 1, 1.0), 6.0);
}

TEST(LearningRate, DecreasingInsideTheoryWindow)
{
    const auto s = sched(64, 0.5, 1.0, 2.0 / 3.0, 1.0 / 6.0);
    ASSERT_TRUE(s.theory_window());
    double prev = INFINITY;
    for (std::uint64_t t = 1; t <= 2000; ++t) {
        const double g = learning_rate(s, t, batch_size_real(s, static_cast<double>(t)));
        EXPECT_LT(g, prev);
        prev = g;
    }
}

TEST(LearningRate, RobbinsMonroPartialSums)
{
    const auto s = sched(64, 0.5, 1.0, 2.0 / 3.0, 1.0 / 6.0);
    ASSERT_TRUE(s.theory_window());
    double sum = 0.0;
    double sum_sq = 0.0;
    std::vector<double> sums;
    std::vector<double> sq_sums;
    for (std::uint64_t t = 1; t <= 1000000; ++t) {
        const double g = learning_rate(s, t, batch_size_real(s, static_cast<double>(t)));
        sum += g;
        sum_sq += g * g;
        if (t == 10000 || t == 100000 || t == 1000000) {
            sums.push_back(sum);
            sq_sums.push_back(sum_sq);
        }
    }
    // Decade increments of sum gamma grow; those of sum gamma^2 shrink.
    EXPECT_GT(sums[2] - sums[1], sums[1] - sums[0]);
    EXPECT_LT(sq_sums[2] - sq_sums[1], sq_sums[1] - sq_sums[0]);
}

TEST(Decay, DependenceAndNoise)
{
    UncertaintyParams u;
    u.nu = 1.0;
    EXPECT_DOUBLE_EQ(dependence_decay(u, 4.0), 0.25);
    u.nu = 0.5;
    EXPECT_DOUBLE_EQ(dependence_decay(u, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(dependence_decay(u, 16.0), 0.25);

    u.c_sigma = 1.0;
    u.sigma = 0.5;
    EXPECT_DOUBLE_EQ(noise_decay(u, 4.0), 0.5);
    u.c_sigma = 0.0;
    EXPECT_DOUBLE_EQ(noise_decay(u, 123.0), 0.0);
    u.c_sigma = 2.0;
    u.sigma = 0.0;
    EXPECT_DOUBLE_EQ(noise_decay(u, 100.0), 2.0);
}

TEST(Validation, RejectsBadParameters)
{
    EXPECT_THROW(sched(1, 0.0, 0.0).validate(), ConfigError);
    EXPECT_THROW(sched(0, 0.0).validate(), ConfigError);
    EXPECT_THROW(sched(1, 1.0).validate(), ConfigError);
    EXPECT_THROW(sched(1, 0.0, 1.0, 0.6, 1.5).validate(), ConfigError);
    EXPECT_NO_THROW(sched(64, 0.5, 1.0, 2.0, 0.0).validate());
    EXPECT_FALSE(sched(64, 0.5, 1.0, 2.0, 0.0).theory_window());

    UncertaintyParams u;
    u.sigma = 0.6;
    EXPECT_THROW(u.validate(), ConfigError);
    u.sigma = 0.5;
    u.nu = 0.0;
    EXPECT_THROW(u.validate(), ConfigError);
}
