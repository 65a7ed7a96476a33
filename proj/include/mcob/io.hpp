#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mcob/error.hpp"
#include "mcob/grid1d.hpp"
#include "mcob/obstacle_core.hpp"

namespace mcob::io {

/// Shortest decimal that parses back to the same double.
inline std::string format(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error(ErrorKind::Inconsistency, "number formatting failed");
    return std::string(buf, end);
}

inline double parse(std::string_view s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) reject("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) reject("cannot write " + path.string());
    return out;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        cells.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    auto out = open_out(path);
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (const auto& r : rows) {
        if (r.size() != header.size()) reject("row width does not match header in " + path.string());
        for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format(r[j]);
        out << '\n';
    }
}

inline Table read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) reject("cannot read " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) reject("empty file: " + path.string());
    t.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            reject(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                   " columns");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse(c));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline void write_field_csv(const std::filesystem::path& path, const Field1D& u) {
    std::vector<std::vector<double>> rows;
    rows.reserve(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) rows.push_back({u.grid().x(i), u[i]});
    write_csv(path, {"x", "u"}, rows);
}

/// Reads an x,u table on a uniform grid.
inline Field1D read_field_csv(const std::filesystem::path& path, double positivity_threshold = 0.0) {
    const Table t = read_csv(path);
    if (t.header != std::vector<std::string>{"x", "u"}) reject(path.string() + ": header must be x,u");
    if (t.rows.size() < 2) reject(path.string() + ": a field needs at least two nodes");
    const Grid grid(t.rows.front()[0], t.rows.back()[0], t.rows.size() - 1);
    std::vector<double> v;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (std::abs(t.rows[i][0] - grid.x(i)) > 1e-9 * std::max(1.0, grid.length()))
            reject(path.string() + ": nodes are not uniformly spaced");
        v.push_back(t.rows[i][1]);
    }
    return Field1D(grid, std::move(v), positivity_threshold);
}

inline nlohmann::json field_to_json(const Field1D& u) {
    return {{"x_min", u.grid().x_min()}, {"x_max", u.grid().x_max()},
            {"values", std::vector<double>(u.values().begin(), u.values().end())}};
}

/// {"x_min": a, "x_max": b, "values": [...]}
inline Field1D field_from_json(const nlohmann::json& j, double positivity_threshold = 0.0) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "x_min" && it.key() != "x_max" && it.key() != "values") reject("unknown field key: " + it.key());
    const auto values = j.at("values").get<std::vector<double>>();
    if (values.size() < 2) reject("a field needs at least two nodes");
    return Field1D(Grid(j.at("x_min").get<double>(), j.at("x_max").get<double>(), values.size() - 1), values,
                   positivity_threshold);
}

inline const std::vector<std::string>& trace_header() {
    static const std::vector<std::string> h{"t", "p", "s", "lambda", "support_measure", "mass"};
    return h;
}

inline void write_trace_csv(const std::filesystem::path& path, const FreeBoundaryTrace& trace) {
    std::vector<std::vector<double>> rows;
    rows.reserve(trace.rows.size());
    for (const auto& r : trace.rows) rows.push_back({r.t, r.p, r.s, r.lambda, r.support_measure, r.mass});
    write_csv(path, trace_header(), rows);
}

inline FreeBoundaryTrace read_trace_csv(const std::filesystem::path& path) {
    const Table t = read_csv(path);
    if (t.header != trace_header()) reject(path.string() + ": unexpected trace header");
    FreeBoundaryTrace tr;
    for (const auto& r : t.rows) tr.rows.push_back({r[0], r[1], r[2], r[3], r[4], r[5]});
    return tr;
}

inline std::string snapshot_name(double t) { return "u_" + format(t) + ".csv"; }

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) reject("cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        reject(path.string() + ": " + e.what());
    }
}

}  // namespace mcob::io
