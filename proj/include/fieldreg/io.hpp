#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "fieldreg/conditional.hpp"
#include "fieldreg/error.hpp"
#include "fieldreg/grid.hpp"

namespace fieldreg::io {

// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double v) { return fmt::format("{:.17g}", v); }

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        auto cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
        out.push_back(cell);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view cell, std::size_t line_no) {
    double v = 0.0;
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw InvalidArgument("line " + std::to_string(line_no) + ": '" + std::string(cell) +
                              "' is not a finite number");
    }
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline Table parse_table(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Table t;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_commas(line);
        if (t.header.empty()) {
            for (auto c : cells) t.header.emplace_back(c);
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw InvalidArgument("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(t.header.size()) + " columns");
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (auto c : cells) row.push_back(parse_double(c, line_no));
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw InvalidArgument("CSV has no header");
    return t;
}

inline int coordinate_columns(const Table& t, const std::string& last) {
    const auto& h = t.header;
    if (h.size() == 2 && h[0] == "x1" && h[1] == last) return 1;
    if (h.size() == 3 && h[0] == "x1" && h[1] == "x2" && h[2] == last) return 2;
    throw InvalidArgument("CSV header must be 'x1[,x2]," + last + "'");
}

} // namespace detail

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
    return ss.str();
}

// Header `x1[,x2],value`, one row per node in lexicographic order.
inline std::string scalar_field_to_csv(const ScalarField& field) {
    const Grid& g = field.grid();
    std::string out = g.dim() == 1 ? "x1,value\n" : "x1,x2,value\n";
    for (std::size_t j = 0; j < field.size(); ++j) {
        const auto x = g.point(j);
        for (int a = 0; a < g.dim(); ++a) {
            out += format_double(x[a]);
            out += ',';
        }
        out += format_double(field[j]);
        out += '\n';
    }
    return out;
}

inline ScalarField scalar_field_from_csv(const std::string& text) {
    const auto t = detail::parse_table(text);
    const int dim = detail::coordinate_columns(t, "value");
    const std::size_t rows = t.rows.size();
    std::size_t n = rows;
    if (dim == 2) {
        n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(rows))));
        if (n * n != rows) throw InvalidArgument("2D field CSV must have n^2 rows");
    }
    const Grid grid = build_grid(dim, n);
    std::vector<double> values(rows);
    for (std::size_t j = 0; j < rows; ++j) {
        const auto x = grid.point(j);
        for (int a = 0; a < dim; ++a) {
            if (std::abs(t.rows[j][a] - x[a]) > 1e-9) {
                throw InvalidArgument("field CSV row " + std::to_string(j + 1) +
                                      " is not on the uniform grid in lexicographic order");
            }
        }
        values[j] = t.rows[j][dim];
    }
    return ScalarField(grid, std::move(values));
}

// Header `x1[,x2],y`.
inline std::string dataset_to_csv(const Dataset& data) {
    std::string out = data.dim == 1 ? "x1,y\n" : "x1,x2,y\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (int a = 0; a < data.dim; ++a) {
            out += format_double(data.x[i][a]);
            out += ',';
        }
        out += format_double(data.y[i]);
        out += '\n';
    }
    return out;
}

inline Dataset dataset_from_csv(const std::string& text) {
    const auto t = detail::parse_table(text);
    Dataset data;
    data.dim = detail::coordinate_columns(t, "y");
    for (const auto& row : t.rows) {
        Point x{0.0, 0.0};
        for (int a = 0; a < data.dim; ++a) x[a] = row[a];
        data.x.push_back(x);
        data.y.push_back(row[data.dim]);
    }
    data.validate();
    return data;
}

/**
 * Files staged in memory and published together: each is written to a
 * temporary sibling and renamed only once every write has succeeded.
 */
class OutputBundle {
public:
    void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }

    const std::vector<std::pair<std::string, std::string>>& files() const noexcept { return files_; }

    void commit(const std::filesystem::path& dir) const {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

        std::vector<fs::path> temps;
        auto discard = [&] {
            for (const auto& p : temps) fs::remove(p, ec);
        };
        for (const auto& [name, content] : files_) {
            const fs::path tmp = dir / (name + ".tmp");
            temps.push_back(tmp);
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << content;
            out.close();
            if (!out) {
                discard();
                throw IoError("cannot write '" + tmp.string() + "'");
            }
        }
        for (std::size_t i = 0; i < files_.size(); ++i) {
            fs::rename(temps[i], dir / files_[i].first, ec);
            if (ec) {
                for (std::size_t k = 0; k < i; ++k) fs::remove(dir / files_[k].first, ec);
                discard();
                throw IoError("cannot publish '" + files_[i].first + "'");
            }
        }
    }

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

} // namespace fieldreg::io
