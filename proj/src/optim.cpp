#include "streamopt/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace streamopt {

OptimizerState OptimizerState::start(const Vec& theta0)
{
    OptimizerState state;
    state.theta = theta0;
    state.theta_bar = Vec::Zero(theta0.size());
    return state;
}

ProjectionSpec ProjectionSpec::ball(Vec center, double radius)
{
    ProjectionSpec spec;
    spec.kind = Kind::ball;
    spec.center = std::move(center);
    spec.radius = radius;
    spec.validate();
    return spec;
}

ProjectionSpec ProjectionSpec::box(Vec lower, Vec upper)
{
    ProjectionSpec spec;
    spec.kind = Kind::box;
    spec.lower = std::move(lower);
    spec.upper = std::move(upper);
    spec.validate();
    return spec;
}

void ProjectionSpec::validate(std::size_t dimension) const
{
    const auto dim = static_cast<Eigen::Index>(dimension);
    switch (kind) {
    case Kind::none:
        return;
    case Kind::ball:
        if (!(radius > 0.0) || !std::isfinite(radius)) {
            throw ConfigError("projection ball radius must be positive and finite");
        }
        if (dimension != 0 && center.size() != dim) {
            throw ConfigError("projection ball center has the wrong dimension");
        }
        return;
    case Kind::box:
        if (lower.size() != upper.size()) {
            throw ConfigError("projection box bounds differ in dimension");
        }
        if (dimension != 0 && lower.size() != dim) {
            throw ConfigError("projection box has the wrong dimension");
        }
        if ((lower.array() > upper.array()).any()) {
            throw ConfigError("projection box requires lower <= upper");
        }
        return;
    }
}

Vec project(const Vec& theta, const ProjectionSpec& spec)
{
    switch (spec.kind) {
    case ProjectionSpec::Kind::none:
        return theta;
    case ProjectionSpec::Kind::ball: {
        const Vec diff = theta - spec.center;
        const double norm = diff.norm();
        if (norm <= spec.radius) {
            return theta;
        }
        return spec.center + diff * (spec.radius / norm);
    }
    case ProjectionSpec::Kind::box:
        return theta.cwiseMax(spec.lower).cwiseMin(spec.upper);
    }
    return theta;
}

void ssg_step(OptimizerState& state, const StreamBatch& batch, const LossModel& model,
              const ScheduleParams& schedule, const ProjectionSpec& projection)
{
    if (state.diverged) {
        return;
    }
    const std::uint64_t t = state.t + 1;
    const std::uint64_t n = batch.size();
    if (batch.index != t || n != batch_size(schedule, t)) {
        std::ostringstream err;
        err << "ssg_step expected batch " << t << " of size " << batch_size(schedule, t) << ", got batch "
            << batch.index << " of size " << n;
        throw std::invalid_argument(err.str());
    }
    const std::uint64_t n_cum = state.n_cum + n;

    Vec grad;
    try {
        grad = model.gradient(batch, state.theta);
    } catch (const GradientError& e) {
        state.diverged = true;
        state.divergence_reason = e.what();
        return;
    }
    const double gamma = learning_rate(schedule, t, static_cast<double>(n));
    Vec theta = project(state.theta - gamma * grad, projection);
    if (!theta.allFinite() || theta.norm() > kDivergenceNorm) {
        state.diverged = true;
        state.divergence_reason = "iterate left the finite range at batch " + std::to_string(t);
        return;
    }

    const double keep = static_cast<double>(state.n_cum) / static_cast<double>(n_cum);
    const double weight = static_cast<double>(n) / static_cast<double>(n_cum);
    state.theta_bar = keep * state.theta_bar + weight * state.theta;
    state.theta = std::move(theta);
    state.t = t;
    state.n_cum = n_cum;
}

std::vector<std::uint64_t> log_grid(std::uint64_t first, std::uint64_t last, std::size_t points)
{
    if (first == 0 || last < first) {
        throw std::invalid_argument("log_grid requires 1 <= first <= last");
    }
    std::vector<std::uint64_t> grid;
    if (points < 2 || first == last) {
        grid.push_back(first);
        if (last != first) {
            grid.push_back(last);
        }
        return grid;
    }
    const double lo = std::log(static_cast<double>(first));
    const double hi = std::log(static_cast<double>(last));
    for (std::size_t i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        auto g = static_cast<std::uint64_t>(std::llround(std::exp(x)));
        g = std::clamp(g, first, last);
        if (grid.empty() || g > grid.back()) {
            grid.push_back(g);
        }
    }
    if (grid.back() != last) {
        grid.push_back(last);
    }
    return grid;
}

Trajectory run(const LossModel& model, Batcher& batcher, const ScheduleParams& schedule,
               const ProjectionSpec& projection, const Vec& theta0, std::uint64_t max_batches,
               const std::vector<std::uint64_t>& grid)
{
    projection.validate(model.dimension());
    Trajectory traj;
    traj.snapshots.reserve(grid.size());
    OptimizerState state = OptimizerState::start(theta0);
    std::size_t next_grid = 0;
    auto record_below = [&](std::uint64_t limit) {
        while (next_grid < grid.size() && grid[next_grid] < limit) {
            traj.snapshots.push_back({grid[next_grid], state.t, state.n_cum, state.theta, state.theta_bar});
            ++next_grid;
        }
    };
    while (state.t < max_batches) {
        auto batch = batcher.next();
        if (!batch) {
            break;
        }
        record_below(state.n_cum + batch->size());
        ssg_step(state, *batch, model, schedule, projection);
        if (state.diverged) {
            break;
        }
    }
    record_below(std::numeric_limits<std::uint64_t>::max());
    traj.final_state = std::move(state);
    return traj;
}

}  // namespace streamopt
