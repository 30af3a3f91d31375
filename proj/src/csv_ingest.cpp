#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "streamopt/streams.hpp"

namespace streamopt {

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            cells.push_back(std::move(cell));
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& text)
{
    const std::string t = trim(text);
    if (t.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

std::optional<CivilTime> parse_timestamp(const std::string& text)
{
    const std::string t = trim(text);
    CivilTime ct;
    char tail = 0;
    const int read = std::sscanf(t.c_str(), "%4d-%2d-%2d %2d:%2d:%2d%c", &ct.year, &ct.month, &ct.day,
                                 &ct.hour, &ct.minute, &ct.second, &tail);
    if (read != 6 || t.size() != 19) {
        return std::nullopt;
    }
    if (ct.month < 1 || ct.month > 12 || ct.day < 1 || ct.day > 31 || ct.hour > 23 || ct.minute > 59 ||
        ct.second > 60 || ct.hour < 0 || ct.minute < 0 || ct.second < 0) {
        return std::nullopt;
    }
    return ct;
}

TimeSeriesTable ingest_csv(const std::filesystem::path& path, const std::string& timestamp_column,
                           const std::vector<std::string>& value_columns)
{
    if (value_columns.empty()) {
        throw ConfigError("ingest_csv: no value columns selected");
    }
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("ingest_csv: cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("ingest_csv: " + path.string() + " is empty");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const auto header = split_csv_line(line);
    auto column_index = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) {
                return i;
            }
        }
        throw ConfigError("ingest_csv: column '" + name + "' not found in " + path.string());
    };
    const std::size_t ts_index = column_index(timestamp_column);
    std::vector<std::size_t> value_index;
    for (const auto& name : value_columns) {
        value_index.push_back(column_index(name));
    }

    TimeSeriesTable table;
    std::vector<double> flat;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_csv_line(line);
        auto drop = [&](const std::string& why) {
            ++table.dropped_rows;
            table.warnings.push_back("line " + std::to_string(line_no) + ": " + why);
        };
        if (ts_index >= cells.size()) {
            drop("missing timestamp");
            continue;
        }
        const auto ts = parse_timestamp(cells[ts_index]);
        if (!ts) {
            drop("unparseable timestamp '" + cells[ts_index] + "'");
            continue;
        }
        std::vector<double> row;
        row.reserve(value_index.size());
        bool ok = true;
        for (std::size_t k = 0; k < value_index.size(); ++k) {
            const std::size_t c = value_index[k];
            const auto v = c < cells.size() ? parse_number(cells[c]) : std::nullopt;
            if (!v) {
                drop("missing or non-numeric value in column '" + value_columns[k] + "'");
                ok = false;
                break;
            }
            row.push_back(*v);
        }
        if (!ok) {
            continue;
        }
        table.timestamps.push_back(*ts);
        flat.insert(flat.end(), row.begin(), row.end());
    }
    if (table.timestamps.empty()) {
        throw ConfigError("ingest_csv: no usable rows in " + path.string());
    }
    const auto rows = static_cast<Eigen::Index>(table.timestamps.size());
    const auto cols = static_cast<Eigen::Index>(value_columns.size());
    table.values = Eigen::Map<const RowMatrix>(flat.data(), rows, cols);
    return table;
}

RowMatrix deseasonalize(const RowMatrix& values, const std::vector<CivilTime>& timestamps)
{
    if (static_cast<std::size_t>(values.rows()) != timestamps.size()) {
        throw ConfigError("deseasonalize: timestamps and rows differ in length");
    }
    RowMatrix out = values;
    auto subtract_group_means = [&out](const std::vector<int>& group) {
        std::map<int, std::pair<Eigen::RowVectorXd, std::size_t>> sums;
        for (Eigen::Index r = 0; r < out.rows(); ++r) {
            auto& entry = sums[group[static_cast<std::size_t>(r)]];
            if (entry.second == 0) {
                entry.first = Eigen::RowVectorXd::Zero(out.cols());
            }
            entry.first += out.row(r);
            ++entry.second;
        }
        for (Eigen::Index r = 0; r < out.rows(); ++r) {
            const auto& entry = sums[group[static_cast<std::size_t>(r)]];
            out.row(r) -= entry.first / static_cast<double>(entry.second);
        }
    };
    std::vector<int> year(timestamps.size());
    std::vector<int> month(timestamps.size());
    for (std::size_t i = 0; i < timestamps.size(); ++i) {
        year[i] = timestamps[i].year;
        month[i] = timestamps[i].month;
    }
    subtract_group_means(year);
    subtract_group_means(month);
    return out;
}

}  // namespace streamopt
