#include "streamopt/streams.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace streamopt {

namespace {

// Magnitude beyond which a generated value is treated as an overflow.
constexpr double kOverflow = 1e150;

bool is_student(const InnovationSpec& innovation)
{
    return std::isfinite(innovation.df);
}

class UnitNoise {
public:
    explicit UnitNoise(double df) : df_(df)
    {
        if (std::isfinite(df_)) {
            student_ = std::student_t_distribution<double>(df_);
            scale_ = std::sqrt((df_ - 2.0) / df_);
        }
    }

    double operator()(Rng& rng)
    {
        if (!std::isfinite(df_)) {
            return normal_(rng);
        }
        return scale_ * student_(rng);
    }

private:
    double df_;
    double scale_ = 1.0;
    std::normal_distribution<double> normal_;
    std::student_t_distribution<double> student_;
};

// Trims `data` after the first non-finite or overflowing row.
bool truncate_on_overflow(RowMatrix& data, std::optional<Vec>& innovations, std::size_t presample)
{
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        const double v = data.row(r).cwiseAbs().maxCoeff();
        if (!std::isfinite(v) || v > kOverflow) {
            const Eigen::Index keep = std::max<Eigen::Index>(r, static_cast<Eigen::Index>(presample));
            RowMatrix head = data.topRows(std::min(keep, data.rows()));
            if (head.rows() < static_cast<Eigen::Index>(presample)) {
                head = RowMatrix::Zero(static_cast<Eigen::Index>(presample), data.cols());
            }
            data = std::move(head);
            if (innovations) {
                Vec inno = innovations->head(std::min(data.rows(), innovations->size()));
                innovations = std::move(inno);
            }
            return true;
        }
    }
    return false;
}

Series generate_ar1(const GeneratorSpec& spec, std::size_t length, Rng& rng)
{
    const auto rows = static_cast<Eigen::Index>(length + kPresample);
    Series series;
    series.data.resize(rows, 1);
    Vec inno(rows);
    const double theta = spec.theta_star;

    if (spec.innovation.kind == InnovationSpec::Kind::gaussian) {
        // Exact stationary start: X_{-1} ~ N(0, 1/(1-theta^2)).
        std::normal_distribution<double> normal;
        const auto eps = generate_innovations(spec.innovation, length + kPresample - 1, rng);
        double x = normal(rng) / std::sqrt(1.0 - theta * theta);
        series.data(0, 0) = x;
        inno(0) = 0.0;
        for (Eigen::Index r = 1; r < rows; ++r) {
            x = theta * x + eps[static_cast<std::size_t>(r - 1)];
            series.data(r, 0) = x;
            inno(r) = eps[static_cast<std::size_t>(r - 1)];
        }
    } else {
        const auto eps = generate_innovations(spec.innovation, kBurnIn + length + kPresample, rng);
        double x = 0.0;
        for (std::size_t i = 0; i < kBurnIn; ++i) {
            x = theta * x + eps[i];
        }
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double e = eps[kBurnIn + static_cast<std::size_t>(r)];
            x = theta * x + e;
            series.data(r, 0) = x;
            inno(r) = e;
        }
    }
    series.innovations = std::move(inno);
    return series;
}

Series generate_ma1(const GeneratorSpec& spec, std::size_t length, Rng& rng)
{
    const auto rows = static_cast<Eigen::Index>(length + kPresample);
    const auto eps = generate_innovations(spec.innovation, length + kPresample + 1, rng);
    Series series;
    series.data.resize(rows, 1);
    Vec inno(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double e = eps[static_cast<std::size_t>(r) + 1];
        series.data(r, 0) = e + spec.phi_star * eps[static_cast<std::size_t>(r)];
        inno(r) = e;
    }
    series.innovations = std::move(inno);
    return series;
}

Series generate_arch1(const GeneratorSpec& spec, std::size_t length, Rng& rng)
{
    const auto rows = static_cast<Eigen::Index>(length + kPresample);
    const auto z = generate_innovations(spec.innovation, length + kPresample, rng);
    Series series;
    series.data.resize(rows, 1);
    const double root_alpha0 = std::sqrt(spec.alpha0);
    // Pre-sample rows carry eps = sqrt(alpha0) * z without feedback.
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(kPresample); ++r) {
        series.data(r, 0) = root_alpha0 * z[static_cast<std::size_t>(r)];
    }
    for (Eigen::Index r = static_cast<Eigen::Index>(kPresample); r < rows; ++r) {
        const double prev = series.data(r - 1, 0);
        const double var = spec.alpha0 + spec.alpha1 * prev * prev;
        series.data(r, 0) = std::sqrt(var) * z[static_cast<std::size_t>(r)];
    }
    series.innovations = Vec(series.data.col(0));
    return series;
}

Series generate_ar1_arch1(const GeneratorSpec& spec, std::size_t length, Rng& rng)
{
    const auto rows = static_cast<Eigen::Index>(length + kPresample);
    const auto z = generate_innovations(spec.innovation, kBurnIn + length + kPresample, rng);
    Series series;
    series.data.resize(rows, 1);
    Vec inno(rows);
    double eps = 0.0;
    double x = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        eps = std::sqrt(spec.alpha0 + spec.alpha1 * eps * eps) * z[i];
        x = spec.theta_star * x + eps;
        if (i >= kBurnIn) {
            const auto r = static_cast<Eigen::Index>(i - kBurnIn);
            series.data(r, 0) = x;
            inno(r) = eps;
        }
    }
    series.innovations = std::move(inno);
    return series;
}

Series generate_gaussian_iid(const GeneratorSpec& spec, std::size_t length, Rng& rng)
{
    const auto rows = static_cast<Eigen::Index>(length + kPresample);
    const auto d = static_cast<Eigen::Index>(spec.dimension);
    Series series;
    series.data.resize(rows, d);
    std::normal_distribution<double> normal;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index j = 0; j < d; ++j) {
            series.data(r, j) = normal(rng);
        }
    }
    if (spec.center) {
        series.data.rowwise() += spec.center->transpose();
    }
    return series;
}

}  // namespace

void GeneratorSpec::validate() const
{
    std::ostringstream err;
    switch (kind) {
    case GeneratorKind::ar1:
        if (!(std::abs(theta_star) < 1.0)) {
            err << "ar1 requires |theta_star| < 1 (got " << theta_star << ")";
        }
        break;
    case GeneratorKind::arch1:
    case GeneratorKind::ar1_arch1:
        if (!(alpha0 > 0.0)) {
            err << "arch requires alpha0 > 0 (got " << alpha0 << ")";
        } else if (!(alpha1 >= 0.0)) {
            err << "arch requires alpha1 >= 0 (got " << alpha1 << ")";
        }
        break;
    case GeneratorKind::gaussian_iid:
        if (dimension == 0) {
            err << "gaussian_iid requires dimension >= 1";
        } else if (center && static_cast<std::size_t>(center->size()) != dimension) {
            err << "gaussian_iid center has dimension " << center->size() << ", expected " << dimension;
        }
        break;
    case GeneratorKind::ma1:
        break;
    }
    if (err.str().empty() && is_student(innovation) && !(innovation.df > 4.0)) {
        err << "student-t innovations require df > 4 (got " << innovation.df << ")";
    }
    if (err.str().empty() && innovation.kind == InnovationSpec::Kind::fgn_student_t &&
        !(innovation.hurst > 0.0 && innovation.hurst < 1.0)) {
        err << "hurst index must lie in (0,1) (got " << innovation.hurst << ")";
    }
    if (!err.str().empty()) {
        throw ConfigError(err.str());
    }
}

std::vector<double> generate_innovations(const InnovationSpec& innovation, std::size_t length, Rng& rng)
{
    std::vector<double> out(length);
    if (length == 0) {
        return out;
    }
    switch (innovation.kind) {
    case InnovationSpec::Kind::gaussian: {
        std::normal_distribution<double> normal;
        for (auto& v : out) {
            v = normal(rng);
        }
        break;
    }
    case InnovationSpec::Kind::student_t: {
        UnitNoise noise(innovation.df);
        for (auto& v : out) {
            v = noise(rng);
        }
        break;
    }
    case InnovationSpec::Kind::fgn_student_t: {
        const auto g = fgn_increments(innovation.hurst, length, rng);
        UnitNoise noise(innovation.df);
        for (std::size_t i = 0; i < length; ++i) {
            out[i] = std::sqrt(std::abs(g[i])) * noise(rng);
        }
        break;
    }
    }
    return out;
}

std::vector<double> generate_innovations(const GeneratorSpec& spec, std::size_t length)
{
    spec.validate();
    Rng rng(spec.seed);
    return generate_innovations(spec.innovation, length, rng);
}

Series generate_series(const GeneratorSpec& spec, std::size_t length, std::uint64_t seed)
{
    spec.validate();
    Rng rng(seed);
    Series series;
    switch (spec.kind) {
    case GeneratorKind::ar1:
        series = generate_ar1(spec, length, rng);
        break;
    case GeneratorKind::ma1:
        series = generate_ma1(spec, length, rng);
        break;
    case GeneratorKind::arch1:
        series = generate_arch1(spec, length, rng);
        break;
    case GeneratorKind::ar1_arch1:
        series = generate_ar1_arch1(spec, length, rng);
        break;
    case GeneratorKind::gaussian_iid:
        series = generate_gaussian_iid(spec, length, rng);
        break;
    }
    series.diverged = truncate_on_overflow(series.data, series.innovations, series.presample);
    return series;
}

Series series_from_matrix(const RowMatrix& rows)
{
    if (rows.rows() < static_cast<Eigen::Index>(kPresample)) {
        throw ConfigError("a series needs at least two rows of pre-sample context");
    }
    Series series;
    series.data = rows;
    return series;
}

void write_series_csv(std::ostream& out, const Series& series)
{
    out << "index";
    for (std::size_t j = 0; j < series.dimension(); ++j) {
        out << ",value" << j;
    }
    out << '\n';
    const auto old_precision = out.precision(17);
    for (std::size_t s = 1; s <= series.length(); ++s) {
        out << s;
        const auto row = series.at(static_cast<std::int64_t>(s));
        for (Eigen::Index j = 0; j < row.size(); ++j) {
            out << ',' << row(j);
        }
        out << '\n';
    }
    out.precision(old_precision);
}

Batcher::Batcher(const Series& series, const ScheduleParams& schedule)
    : series_(&series), schedule_(schedule)
{
    schedule_.validate();
    if (series.presample < 2) {
        throw ConfigError("batcher requires two pre-sample rows");
    }
}

std::optional<StreamBatch> Batcher::next()
{
    const std::uint64_t n = batch_size(schedule_, t_ + 1);
    if (consumed_ + n > series_->length()) {
        return std::nullopt;
    }
    ++t_;
    const auto first = static_cast<Eigen::Index>(series_->presample + consumed_);
    const auto rows = static_cast<Eigen::Index>(n);
    StreamBatch batch;
    batch.index = t_;
    batch.values = series_->data.middleRows(first, rows);
    batch.lagged = series_->data.middleRows(first - 1, rows);
    batch.lagged2 = series_->data.middleRows(first - 2, rows);
    if (series_->innovations && series_->innovations->size() >= first - 1 + rows) {
        batch.lagged_innovation = series_->innovations->segment(first - 1, rows);
    }
    consumed_ += n;
    return batch;
}

}  // namespace streamopt
