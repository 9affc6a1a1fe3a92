#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "symkernel/error.hpp"

namespace symkernel {

using Cell = std::variant<std::string, double, std::int64_t>;

/// A CSV table with a fixed column order.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

/// 17 significant digits, enough for any double to read back exactly.
/// Infinities print as inf / -inf; NaN is refused.
inline std::string format_real(double x)
{
    if (std::isnan(x))
        throw ComputationError("refusing to write NaN");
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, x, std::chars_format::general, 17);
    return std::string(buffer, result.ptr);
}

namespace detail {

inline std::string csv_field(const std::string& text)
{
    if (text.find_first_of(",\"\n") == std::string::npos)
        return text;
    std::string quoted = "\"";
    for (const char c : text) {
        if (c == '"')
            quoted += '"';
        quoted += c;
    }
    return quoted + '"';
}

inline std::string cell_text(const Cell& cell)
{
    if (const auto* s = std::get_if<std::string>(&cell))
        return csv_field(*s);
    if (const auto* i = std::get_if<std::int64_t>(&cell))
        return std::to_string(*i);
    return format_real(std::get<double>(cell));
}

} // namespace detail

/// Render the whole table first so a NaN anywhere leaves the destination untouched.
inline std::string render_csv(const Table& table)
{
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        out += (i ? "," : "") + detail::csv_field(table.columns[i]);
    out += '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw ComputationError("row has " + std::to_string(row.size()) + " cells, schema has " +
                                   std::to_string(table.columns.size()));
        for (std::size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + detail::cell_text(row[i]);
        out += '\n';
    }
    return out;
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file)
        throw ComputationError("cannot open " + path + " for writing");
    file << text;
    file.close();
    if (!file)
        throw ComputationError("write to " + path + " failed");
}

inline void emit_csv(const Table& table, const std::string& path) { write_text(path, render_csv(table)); }

struct RatioSummary {
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    double geometric_mean = std::numeric_limits<double>::quiet_NaN();
    std::size_t count = 0;

    double spread() const { return max / min; }
};

/// min, max and geometric mean of positive ratios.
inline RatioSummary summarize_ratios(const std::vector<double>& ratios)
{
    RatioSummary summary;
    if (ratios.empty())
        return summary;
    double log_sum = 0.0;
    summary.min = std::numeric_limits<double>::infinity();
    summary.max = -std::numeric_limits<double>::infinity();
    for (const double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r))
            throw ComputationError("ratio summary needs finite positive ratios");
        summary.min = std::min(summary.min, r);
        summary.max = std::max(summary.max, r);
        log_sum += std::log(r);
    }
    summary.count = ratios.size();
    summary.geometric_mean = std::exp(log_sum / static_cast<double>(ratios.size()));
    return summary;
}

inline std::string render_json(const nlohmann::ordered_json& value) { return value.dump(2) + "\n"; }

} // namespace symkernel
