#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <ocmt/dataset.hpp>

namespace ocmt {

/// A dataset together with the column names it was read from.
struct LabeledDataset
{
    TimeSeriesDataset data;
    std::string target_name;
    std::vector<std::string> x_names;
    /// Names of the non-intercept conditioning columns, in Z order.
    std::vector<std::string> z_names;
    bool intercept = false;
    std::optional<std::string> timestamp_name;
};

/// In-memory CSV table: header plus numeric cells, row-major.
struct CsvTable
{
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::optional<std::size_t> find(std::string_view name) const
    {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == name) return j;
        }
        return std::nullopt;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view cell)
{
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
    return v;
}

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace detail

/// Parses a comma-separated, header-first, all-numeric table.
inline CsvTable parse_csv(std::istream& in)
{
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_commas(line);
        if (table.header.empty()) {
            for (auto c : cells) {
                if (c.empty()) throw ParseError("csv: empty column name in header", line_no, 0);
                table.header.emplace_back(c);
            }
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ParseError("csv: row " + std::to_string(line_no) + " has " +
                                 std::to_string(cells.size()) + " cells, header has " +
                                 std::to_string(table.header.size()),
                             line_no, 0);
        }
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const auto v = detail::parse_double(cells[j]);
            if (!v) {
                throw ParseError("csv: non-numeric cell '" + std::string(cells[j]) + "' at row " +
                                     std::to_string(line_no) + ", column " +
                                     std::to_string(j + 1) + " (" + table.header[j] + ")",
                                 line_no, j + 1);
            }
            row[j] = *v;
        }
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw ParseError("csv: missing header row");
    return table;
}

inline CsvTable read_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError("csv: cannot open '" + path + "'");
    return parse_csv(in);
}

/**
 * Builds a dataset from a parsed table. y is target_col; Z is the unit column
 * (iff intercept) followed by conditioning_cols; X is every remaining column
 * in file order. timestamp_col, when given, is read as an opaque integer and
 * excluded from X.
 */
inline LabeledDataset dataset_from_table(const CsvTable& table, const std::string& target_col,
                                         const std::vector<std::string>& conditioning_cols,
                                         bool intercept,
                                         const std::optional<std::string>& timestamp_col = std::nullopt)
{
    auto require = [&](const std::string& name) {
        const auto j = table.find(name);
        if (!j) throw ParseError("csv: missing column '" + name + "'");
        return *j;
    };
    const std::size_t target = require(target_col);
    std::vector<std::size_t> zcols;
    for (const auto& c : conditioning_cols) zcols.push_back(require(c));
    std::optional<std::size_t> tcol;
    if (timestamp_col) tcol = require(*timestamp_col);

    std::vector<std::size_t> xcols;
    std::vector<std::string> xnames;
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        const bool used = j == target || (tcol && j == *tcol) ||
                          std::find(zcols.begin(), zcols.end(), j) != zcols.end();
        if (!used) {
            xcols.push_back(j);
            xnames.push_back(table.header[j]);
        }
    }

    const auto t = static_cast<Index>(table.rows.size());
    const Index m = static_cast<Index>(zcols.size()) + (intercept ? 1 : 0);
    if (t <= m + 1) {
        throw DimensionError("csv: " + std::to_string(t) + " rows is too few for " +
                             std::to_string(m) + " conditioning columns");
    }
    VectorXd y(t);
    MatrixXd x(t, static_cast<Index>(xcols.size()));
    MatrixXd z(t, m);
    std::optional<std::vector<std::int64_t>> stamps;
    if (tcol) stamps.emplace(static_cast<std::size_t>(t));
    for (Index r = 0; r < t; ++r) {
        const auto& row = table.rows[static_cast<std::size_t>(r)];
        y(r) = row[target];
        Index k = 0;
        if (intercept) z(r, k++) = 1.0;
        for (std::size_t c : zcols) z(r, k++) = row[c];
        for (std::size_t c = 0; c < xcols.size(); ++c) x(r, static_cast<Index>(c)) = row[xcols[c]];
        if (tcol) {
            const double v = row[*tcol];
            if (v != std::floor(v)) {
                throw ParseError("csv: non-integer timestamp at row " + std::to_string(r + 2),
                                 static_cast<std::size_t>(r + 2), *tcol + 1);
            }
            (*stamps)[static_cast<std::size_t>(r)] = static_cast<std::int64_t>(v);
        }
    }
    return LabeledDataset{TimeSeriesDataset(std::move(y), std::move(x), std::move(z), std::move(stamps)),
                          target_col,
                          std::move(xnames),
                          conditioning_cols,
                          intercept,
                          timestamp_col};
}

inline LabeledDataset load_csv(const std::string& path, const std::string& target_col,
                               const std::vector<std::string>& conditioning_cols, bool intercept,
                               const std::optional<std::string>& timestamp_col = std::nullopt)
{
    return dataset_from_table(read_csv_file(path), target_col, conditioning_cols, intercept,
                              timestamp_col);
}

/// Writes [timestamp,] target, conditioning columns (minus the unit column),
/// then X, with shortest round-trip number formatting.
inline void write_csv(std::ostream& out, const LabeledDataset& ds)
{
    const auto& d = ds.data;
    const Index zoff = ds.intercept ? 1 : 0;
    if (static_cast<Index>(ds.z_names.size()) + zoff != d.m() ||
        static_cast<Index>(ds.x_names.size()) != d.N()) {
        throw DimensionError("write_csv: names do not match dataset shape");
    }
    const bool stamps = ds.timestamp_name && d.timestamps();
    std::string sep;
    if (stamps) {
        out << *ds.timestamp_name;
        sep = ",";
    }
    out << sep << ds.target_name;
    for (const auto& n : ds.z_names) out << ',' << n;
    for (const auto& n : ds.x_names) out << ',' << n;
    out << '\n';
    for (Index r = 0; r < d.T(); ++r) {
        if (stamps) out << (*d.timestamps())[static_cast<std::size_t>(r)] << ',';
        out << detail::format_double(d.y()(r));
        for (Index j = zoff; j < d.m(); ++j) out << ',' << detail::format_double(d.Z()(r, j));
        for (Index j = 0; j < d.N(); ++j) out << ',' << detail::format_double(d.X()(r, j));
        out << '\n';
    }
}

inline void save_csv(const std::string& path, const LabeledDataset& ds)
{
    std::ofstream out(path);
    if (!out) throw ParseError("csv: cannot write '" + path + "'");
    write_csv(out, ds);
}

} // namespace ocmt
