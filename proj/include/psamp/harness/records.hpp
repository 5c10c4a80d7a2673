#pragma once

// Result records, the CSV schema and the JSON sidecar.

#include "psamp/core.hpp"
#include "psamp/harness/config.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace psamp::harness {

inline constexpr int kSchemaVersion = 1;

/// Column order of the CSV output. The trailing `n` is the signal length.
inline const std::vector<std::string>& csv_columns()
{
    static const std::vector<std::string> cols{"experiment", "prior",        "policy",     "gamma",
                                               "c",          "snr_y_db",     "seed",       "metric_name",
                                               "metric_value", "iterations", "wall_ms",    "mode",
                                               "n"};
    return cols;
}

struct ResultRecord {
    std::string experiment;
    std::string prior;
    std::string policy;
    std::optional<double> gamma;
    std::optional<double> c;
    std::optional<double> snr_y_db;
    Seed seed = 0;
    std::string metric_name;
    double metric_value = 0.0;
    int iterations = 0;
    double wall_ms = 0.0;
    std::string mode; // matrix, se or denoise
    Eigen::Index n = 0;

    friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

/// Equality on every field except the wall-clock time.
inline bool same_outcome(const ResultRecord& a, const ResultRecord& b)
{
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    return a.experiment == b.experiment && a.prior == b.prior && a.policy == b.policy && a.gamma == b.gamma &&
           a.c == b.c && a.snr_y_db == b.snr_y_db && a.seed == b.seed && a.metric_name == b.metric_name &&
           same(a.metric_value, b.metric_value) && a.iterations == b.iterations && a.mode == b.mode && a.n == b.n;
}

namespace detail {

/// Shortest text that parses back to the same double.
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline double parse_double(const std::string& s, const std::string& column)
{
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || std::isspace(static_cast<unsigned char>(s.front())))
        throw ConfigurationError("column '" + column + "': not a number: '" + s + "'");
    return v;
}

inline std::optional<double> parse_optional(const std::string& s, const std::string& column)
{
    if (s.empty()) return std::nullopt;
    return parse_double(s, column);
}

/// Fields never contain commas or quotes, so a plain split suffices.
inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string sanitize(std::string s)
{
    for (char& ch : s) {
        if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
    }
    return s;
}

} // namespace detail

inline void write_csv_header(std::ostream& out)
{
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
}

inline void write_csv_row(std::ostream& out, const ResultRecord& r)
{
    using detail::format_double;
    using detail::format_optional;
    out << detail::sanitize(r.experiment) << ',' << detail::sanitize(r.prior) << ',' << detail::sanitize(r.policy)
        << ',' << format_optional(r.gamma) << ',' << format_optional(r.c) << ',' << format_optional(r.snr_y_db) << ','
        << r.seed << ',' << detail::sanitize(r.metric_name) << ',' << format_double(r.metric_value) << ','
        << r.iterations << ',' << format_double(r.wall_ms) << ',' << detail::sanitize(r.mode) << ',' << r.n << '\n';
}

inline void write_csv(std::ostream& out, const std::vector<ResultRecord>& records)
{
    write_csv_header(out);
    for (const auto& r : records) write_csv_row(out, r);
}

/// Reads a CSV written by write_csv. Columns are located by header name, so
/// extra columns are ignored; a missing column is a ConfigurationError
/// naming it.
inline std::vector<ResultRecord> read_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw ConfigurationError("CSV is empty");
    const auto header = detail::split_csv_line(line);
    std::map<std::string, std::size_t> at;
    for (std::size_t i = 0; i < header.size(); ++i) at[header[i]] = i;
    for (const auto& col : csv_columns()) {
        if (!at.count(col)) throw ConfigurationError("CSV is missing column '" + col + "'");
    }
    std::vector<ResultRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw ConfigurationError(fmt::format("CSV line {}: expected {} fields, found {}", lineno, header.size(),
                                                 cells.size()));
        auto cell = [&](const char* col) -> const std::string& { return cells[at.at(col)]; };
        ResultRecord r;
        r.experiment = cell("experiment");
        r.prior = cell("prior");
        r.policy = cell("policy");
        r.gamma = detail::parse_optional(cell("gamma"), "gamma");
        r.c = detail::parse_optional(cell("c"), "c");
        r.snr_y_db = detail::parse_optional(cell("snr_y_db"), "snr_y_db");
        try {
            r.seed = std::stoull(cell("seed"));
            r.iterations = std::stoi(cell("iterations"));
            r.n = std::stoll(cell("n"));
        } catch (const std::exception&) {
            throw ConfigurationError(fmt::format("CSV line {}: malformed integer field", lineno));
        }
        r.metric_name = cell("metric_name");
        r.metric_value = detail::parse_double(cell("metric_value"), "metric_value");
        r.wall_ms = detail::parse_double(cell("wall_ms"), "wall_ms");
        r.mode = cell("mode");
        out.push_back(std::move(r));
    }
    return out;
}

/// A per-seed failure kept out of the numeric columns.
struct RunError {
    std::string policy;
    std::optional<double> gamma;
    Seed seed = 0;
    std::string message;
};

inline json sidecar_json(const ExperimentConfig& cfg, const std::string& csv_file, const std::vector<json>& denoisers,
                         const std::vector<RunError>& errors)
{
    json errs = json::array();
    for (const auto& e : errors) {
        errs.push_back({{"policy", e.policy},
                        {"gamma", e.gamma ? json(*e.gamma) : json(nullptr)},
                        {"seed", e.seed},
                        {"message", e.message}});
    }
    return {{"schema_version", kSchemaVersion},
            {"library_version", kVersion},
            {"config", config_to_json(cfg)},
            {"config_hash", fmt::format("{:016x}", config_hash(cfg))},
            {"csv", csv_file},
            {"columns", csv_columns()},
            {"denoisers", denoisers},
            {"errors", errs}};
}

/// Sidecar path for a CSV path: results.csv -> results.json.
inline std::filesystem::path sidecar_path(const std::filesystem::path& csv)
{
    auto p = csv;
    p.replace_extension(".json");
    return p;
}

} // namespace psamp::harness
