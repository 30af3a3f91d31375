#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamopt/config.hpp"
#include "streamopt/models.hpp"
#include "streamopt/theory.hpp"

namespace streamopt {

/// Everything one replication needs: the loss, its data, the truth and the
/// starting point.
struct Replicate {
    std::unique_ptr<LossModel> model;
    std::shared_ptr<const Series> series;
    Vec theta_star;
    Vec theta0;
};

/// Produces replication `index` from its derived seed.
class Problem {
public:
    virtual ~Problem() = default;
    virtual Replicate draw(std::uint64_t seed, std::uint64_t length) const = 0;
    virtual std::uint64_t max_length() const { return UINT64_MAX; }
};

/// Synthetic problems for every ModelKind; median data may come from CSV.
std::unique_ptr<Problem> make_problem(const ModelConfig& model);

struct VariantResult {
    std::string label;
    ScheduleParams schedule;
    // Means over replications that did not diverge; empty if all did.
    std::vector<double> mean_err_last;
    std::vector<double> mean_err_avg;
    std::uint64_t reps_used = 0;
    std::uint64_t diverged = 0;
    std::optional<DecayFit> slope_last;
    std::optional<DecayFit> slope_avg;
    double wall_seconds = 0.0;
    // Per replication (index order) when keep_replicates is set; diverged
    // replications hold empty vectors.
    std::vector<std::vector<double>> rep_err_last;
    std::vector<std::vector<double>> rep_err_avg;
};

struct ResultTable {
    std::vector<std::uint64_t> grid;
    std::vector<VariantResult> variants;
    std::uint64_t replications = 0;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    double wall_seconds = 0.0;

    bool all_diverged() const;
    ErrorCurve curve_last(std::size_t variant) const;
    ErrorCurve curve_avg(std::size_t variant) const;
};

/// Worker count: STREAMOPT_THREADS when set, hardware concurrency otherwise,
/// never more than the number of tasks.
std::size_t worker_count(std::size_t tasks);

ResultTable run_experiment(const ExperimentConfig& config);
ResultTable run_experiment(const ExperimentConfig& config, const Problem& problem);

/// run_experiment for the median model; throws ConfigError for other kinds.
ResultTable run_median_experiment(const ExperimentConfig& config);

/// `variant,label,N,mean_err_last,mean_err_avg,reps_used,diverged`, doubles
/// printed with 17 significant digits.
void write_result_csv(std::ostream& out, const ResultTable& table);
nlohmann::json result_json(const ResultTable& table, const ExperimentConfig& config);

/// Writes the CSV and JSON outputs named in the config, if any.
void write_outputs(const ResultTable& table, const ExperimentConfig& config);

struct CsvCurves {
    std::vector<std::string> labels;
    std::vector<ErrorCurve> last;
    std::vector<ErrorCurve> avg;
};

/// Reads a result CSV back into per-variant curves (empty cells skipped).
CsvCurves read_result_csv(std::istream& in);

}  // namespace streamopt
