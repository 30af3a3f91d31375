#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "streamopt/rng.hpp"
#include "streamopt/schedules.hpp"
#include "streamopt/types.hpp"

namespace streamopt {

// Fractional Gaussian noise

/// Autocovariance of unit-variance fGn at lag k:
/// r(k) = (|k+1|^2H - 2|k|^2H + |k-1|^2H) / 2.
double fgn_autocovariance(double hurst, std::int64_t lag);

/// Exact fGn sample via Cholesky factorization of the Toeplitz covariance.
/// Quadratic memory; intended for short paths and as a reference.
std::vector<double> fgn_cholesky(double hurst, std::size_t length, Rng& rng);

/// Exact fGn sample via circulant embedding (Davies-Harte).
std::vector<double> fgn_circulant(double hurst, std::size_t length, Rng& rng);

/// Paths up to this length use `fgn_cholesky`, longer ones `fgn_circulant`.
inline constexpr std::size_t kFgnCholeskyMaxLength = 1024;

std::vector<double> fgn_increments(double hurst, std::size_t length, std::uint64_t seed);
std::vector<double> fgn_increments(double hurst, std::size_t length, Rng& rng);

// Generators

enum class GeneratorKind { ar1, ma1, arch1, ar1_arch1, gaussian_iid };

struct InnovationSpec {
    enum class Kind { gaussian, student_t, fgn_student_t };

    Kind kind = Kind::gaussian;
    // Degrees of freedom of the Student-t factor; infinity means gaussian.
    double df = std::numeric_limits<double>::infinity();
    double hurst = 0.5;

    static InnovationSpec gaussian() { return {}; }
    static InnovationSpec student_t(double df) { return {Kind::student_t, df, 0.5}; }
    static InnovationSpec fgn_student_t(double hurst, double df)
    {
        return {Kind::fgn_student_t, df, hurst};
    }
};

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::ar1;
    double theta_star = 0.0;  // AR coefficient
    double phi_star = 0.0;    // MA coefficient
    double alpha0 = 1.0;      // ARCH intercept
    double alpha1 = 0.0;      // ARCH feedback
    InnovationSpec innovation;
    std::size_t dimension = 1;
    std::optional<Vec> center;  // gaussian_iid mean; zero when absent
    std::uint64_t seed = 0;

    void validate() const;
};

/// Burn-in length for AR recursions whose stationary law has no closed form.
inline constexpr std::size_t kBurnIn = 1000;

/// Number of pre-sample rows every generated series carries (X_{-1}, X_0).
inline constexpr std::size_t kPresample = 2;

/// A generated or ingested series. Rows of `data` are observations; the first
/// `presample` rows are the pre-sample context X_{1-presample} .. X_0 and the
/// remaining `length()` rows are X_1 .. X_L.
struct Series {
    RowMatrix data;
    std::size_t presample = kPresample;
    // Innovation row-aligned with `data` (AR, MA and ARCH kinds only).
    std::optional<Vec> innovations;
    // Set when the recursion overflowed; `data` then stops at the last finite row.
    bool diverged = false;

    std::size_t length() const { return static_cast<std::size_t>(data.rows()) - presample; }
    std::size_t dimension() const { return static_cast<std::size_t>(data.cols()); }

    /// Observation X_s for s in [1 - presample, length()].
    auto at(std::int64_t s) const { return data.row(static_cast<Eigen::Index>(s) + static_cast<Eigen::Index>(presample) - 1); }
};

/// Unit-variance innovation draws for the generator's innovation family.
/// Student-t draws are rescaled by sqrt((df-2)/df); the fGn family returns
/// sqrt(|G_s(H)|) * z_s with z_s unit-variance Student-t.
std::vector<double> generate_innovations(const InnovationSpec& innovation, std::size_t length, Rng& rng);
std::vector<double> generate_innovations(const GeneratorSpec& spec, std::size_t length);

Series generate_series(const GeneratorSpec& spec, std::size_t length, std::uint64_t seed);
inline Series generate_series(const GeneratorSpec& spec, std::size_t length)
{
    return generate_series(spec, length, spec.seed);
}

/// Wraps a plain matrix as a series; the first `kPresample` rows become the
/// pre-sample context.
Series series_from_matrix(const RowMatrix& rows);

/// Writes `index,value0,value1,...` rows for X_1 .. X_L.
void write_series_csv(std::ostream& out, const Series& series);

// Batching

/// One time-varying mini-batch: observations N_{t-1}+1 .. N_t together with
/// their one- and two-step lags.
struct StreamBatch {
    std::uint64_t index = 0;
    RowMatrix values;
    RowMatrix lagged;   // X_{s-1}
    RowMatrix lagged2;  // X_{s-2}
    std::optional<Vec> lagged_innovation;  // epsilon_{s-1}, when the source carries it

    std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t dimension() const { return static_cast<std::size_t>(values.cols()); }
};

/// Cuts a series into consecutive batches of size batch_size(schedule, t).
/// Iteration ends after the last batch that fits entirely in the series.
class Batcher {
public:
    Batcher(const Series& series, const ScheduleParams& schedule);

    std::optional<StreamBatch> next();

    std::uint64_t batches_emitted() const { return t_; }
    std::uint64_t observations_consumed() const { return consumed_; }

private:
    const Series* series_;
    ScheduleParams schedule_;
    std::uint64_t t_ = 0;
    std::uint64_t consumed_ = 0;
};

// Real data

struct CivilTime {
    int year = 0;
    int month = 0;
    int day = 0;
    int hour = 0;
    int minute = 0;
    int second = 0;
};

/// Parses "YYYY-MM-DD HH:MM:SS"; returns nullopt on malformed input.
std::optional<CivilTime> parse_timestamp(const std::string& text);

struct TimeSeriesTable {
    std::vector<CivilTime> timestamps;
    RowMatrix values;
    std::size_t dropped_rows = 0;
    std::vector<std::string> warnings;
};

/// Reads a headed CSV, keeping rows whose timestamp parses and whose selected
/// cells are all numeric. Throws ConfigError for an empty selection, unknown
/// columns or zero usable rows.
TimeSeriesTable ingest_csv(const std::filesystem::path& path, const std::string& timestamp_column,
                           const std::vector<std::string>& value_columns);

/// Removes calendar-year means, then calendar-month means of the year-centred
/// residuals, column by column.
RowMatrix deseasonalize(const RowMatrix& values, const std::vector<CivilTime>& timestamps);

}  // namespace streamopt
