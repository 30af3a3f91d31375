#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streamopt/models.hpp"
#include "streamopt/schedules.hpp"
#include "streamopt/streams.hpp"

namespace streamopt {

/// Iterates with a norm above this are treated as diverged.
inline constexpr double kDivergenceNorm = 1e12;

struct OptimizerState {
    std::uint64_t t = 0;
    Vec theta;
    Vec theta_bar;  // batch-weighted mean of theta_0 .. theta_{t-1}
    std::uint64_t n_cum = 0;
    bool diverged = false;
    std::string divergence_reason;

    /// theta_bar starts at zero; it equals theta_0 after the first step.
    static OptimizerState start(const Vec& theta0);
};

struct ProjectionSpec {
    enum class Kind { none, ball, box };

    Kind kind = Kind::none;
    Vec center;
    double radius = 0.0;
    Vec lower;
    Vec upper;

    static ProjectionSpec none() { return {}; }
    static ProjectionSpec ball(Vec center, double radius);
    static ProjectionSpec box(Vec lower, Vec upper);

    /// Throws ConfigError for radius <= 0, lower > upper, or a dimension
    /// mismatch with `dimension` (when nonzero).
    void validate(std::size_t dimension = 0) const;
};

/// Euclidean projection onto the set described by `spec`.
Vec project(const Vec& theta, const ProjectionSpec& spec);

/// One streaming step. The average absorbs the pre-update iterate first,
///   theta_bar_t = (N_{t-1}/N_t) theta_bar_{t-1} + (n_t/N_t) theta_{t-1},
/// then theta_t = P(theta_{t-1} - gamma_t * grad). A gradient error, a
/// non-finite iterate or one beyond kDivergenceNorm sets `diverged` and leaves
/// the rest of the state untouched; later calls return immediately.
///
/// Throws std::invalid_argument if the batch does not carry index t+1 and
/// batch_size(schedule, t+1) observations.
void ssg_step(OptimizerState& state, const StreamBatch& batch, const LossModel& model,
              const ScheduleParams& schedule, const ProjectionSpec& projection);

struct Snapshot {
    std::uint64_t grid_n = 0;  // grid point this snapshot stands for
    std::uint64_t t = 0;
    std::uint64_t n_cum = 0;
    Vec theta;
    Vec theta_bar;
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
    OptimizerState final_state;
};

/// About `points` distinct integers log-spaced over [first, last], both
/// endpoints included.
std::vector<std::uint64_t> log_grid(std::uint64_t first, std::uint64_t last, std::size_t points = 200);

/// Runs at most `max_batches` steps, or until the batcher runs dry. Grid point
/// g records the state after the last batch with N_t <= g.
Trajectory run(const LossModel& model, Batcher& batcher, const ScheduleParams& schedule,
               const ProjectionSpec& projection, const Vec& theta0, std::uint64_t max_batches,
               const std::vector<std::uint64_t>& grid);

}  // namespace streamopt
