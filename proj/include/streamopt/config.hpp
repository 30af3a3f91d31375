#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamopt/optim.hpp"
#include "streamopt/schedules.hpp"
#include "streamopt/streams.hpp"
#include "streamopt/theory.hpp"

namespace streamopt {

enum class ModelKind { ar1, ma1, arch1, ar1_arch1, median };

struct CsvSource {
    std::filesystem::path path;
    std::string timestamp_column;
    std::vector<std::string> value_columns;
    bool deseasonalize = true;
};

/// Which data and loss an experiment uses and how truth and start points are
/// drawn per replication. Unset optionals are drawn at random.
struct ModelConfig {
    ModelKind kind = ModelKind::ar1;
    InnovationSpec innovation;

    std::optional<double> theta_star;
    std::array<double, 2> theta_star_range{-0.9, 0.9};
    std::optional<double> phi_star;  // standard normal when unset

    double alpha0 = 1.0;
    std::optional<double> alpha1;
    std::array<double, 2> alpha1_range{0.1, 0.7};
    double alpha0_init = 0.5;
    bool freeze_alpha0 = false;

    // theta_0 = theta* + U(-init_radius, init_radius) per coordinate
    double init_radius = 1.0;
    ProjectionSpec projection;

    // Geometric median
    std::size_t dimension = 2;
    std::optional<double> center_range;  // defaults to the dimension
    std::optional<CsvSource> csv;
    bool step_sqrt_dim = false;  // c_gamma = sqrt(d)

    std::size_t parameter_dimension() const;
};

struct Variant {
    std::string label;
    ScheduleParams schedule;
};

struct OutputPaths {
    std::optional<std::filesystem::path> csv;
    std::optional<std::filesystem::path> json;
};

struct ExperimentConfig {
    ModelConfig model;
    ScheduleParams schedule;
    std::uint64_t horizon = 100000;
    std::uint64_t replications = 100;
    std::uint64_t seed = 0;
    std::vector<Variant> variants;  // empty means one variant using `schedule`
    OutputPaths output;
    std::size_t grid_points = 200;
    bool keep_replicates = false;  // retain per-replication curves in the result

    /// The variants to run, with the default one filled in.
    std::vector<Variant> resolved_variants() const;

    void validate() const;
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_experiment(const nlohmann::json& j);
ExperimentConfig load_experiment(const std::filesystem::path& path);

ScheduleParams parse_schedule(const nlohmann::json& j, ScheduleParams base = {}, const std::string& where = "schedule");
BoundParams parse_bound_params(const nlohmann::json& j);

nlohmann::json to_json(const ScheduleParams& s);
nlohmann::json to_json(const BoundParams& p);

std::string to_string(ModelKind kind);

/// Named experiment and bound presets shipped with the tool.
std::optional<ExperimentConfig> experiment_preset(const std::string& name);
std::optional<BoundParams> bound_preset(const std::string& name);

}  // namespace streamopt
