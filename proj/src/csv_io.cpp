#include "cpinfer/csv_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>

#include "cpinfer/errors.hpp"

namespace cpinfer {

namespace {

std::vector<std::string> split_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\"");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\"");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = t.data();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

FeatureTable load_csv(const std::string& path, int min_rows) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError(path + " is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);

    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty() && (line.find(',') == std::string::npos)) continue;
        rows.push_back(split_line(line));
    }
    for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].size() != header.size())
            throw InputError("row " + std::to_string(r + 1) + " (line " + std::to_string(r + 2) + ") has " + std::to_string(rows[r].size()) +
                             " cells; the header has " + std::to_string(header.size()));

    bool has_date = false;
    if (header.size() > 1) {
        const std::string h = lower(header[0]);
        has_date = h == "date" || h == "day";
        for (const auto& row : rows)
            if (!trim(row[0]).empty() && !parse_double(row[0])) has_date = true;
    }
    const std::size_t first_col = has_date ? 1 : 0;
    const int q = static_cast<int>(header.size() - first_col);
    const int n = static_cast<int>(rows.size());
    if (q < 1) throw InputError(path + " has no feature columns");
    if (n < min_rows) throw InputError(path + " has " + std::to_string(n) + " data rows; at least " + std::to_string(min_rows) + " are required");

    RowMatrix values(q, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < q; ++i) {
            const auto& cell = rows[j][first_col + i];
            const auto v = parse_double(cell);
            const std::string where = "row " + std::to_string(j + 1) + " (line " + std::to_string(j + 2) + "), column " +
                                      std::to_string(first_col + i + 1) + " '" + header[first_col + i] + "'";
            if (!v) throw InputError((trim(cell).empty() ? "missing value at " : "non-numeric value '" + cell + "' at ") + where);
            if (!std::isfinite(*v)) throw InputError("non-finite value at " + where);
            values(i, j) = *v;
        }

    FeatureTable t;
    t.values = FeatureMatrix(std::move(values));
    t.features.assign(header.begin() + static_cast<std::ptrdiff_t>(first_col), header.end());
    if (has_date) {
        t.date_header = header[0];
        for (const auto& row : rows) t.dates.push_back(trim(row[0]));
    }
    return t;
}

void save_csv(const std::string& path, const FeatureTable& table) {
    const auto& y = table.values;
    if (static_cast<int>(table.features.size()) != y.q()) throw InputError("feature names do not match the matrix");
    const bool has_date = !table.dates.empty();
    if (has_date && static_cast<int>(table.dates.size()) != y.n()) throw InputError("date column does not match the matrix");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    if (has_date) out << (table.date_header.empty() ? "date" : table.date_header) << ',';
    for (int i = 0; i < y.q(); ++i) out << (i ? "," : "") << table.features[i];
    out << '\n';
    char buf[64];
    for (int j = 0; j < y.n(); ++j) {
        if (has_date) out << table.dates[j] << ',';
        for (int i = 0; i < y.q(); ++i) {
            const auto res = std::to_chars(buf, buf + sizeof buf, y(i, j));
            out << (i ? "," : "") << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
    }
    if (!out) throw InputError("failed writing " + path);
}

Standardization standardize(const FeatureMatrix& y, int baseline_end) {
    if (baseline_end < 2 || baseline_end > y.n())
        throw InputError("baseline_end=" + std::to_string(baseline_end) + " must lie in [2, " + std::to_string(y.n()) + "]");
    Standardization s;
    s.baseline_end = baseline_end;
    RowMatrix out = y.values();
    for (int i = 0; i < y.q(); ++i) {
        double mean = 0.0;
        for (int j = 0; j < baseline_end; ++j) mean += y(i, j);
        mean /= baseline_end;
        double ss = 0.0;
        for (int j = 0; j < baseline_end; ++j) ss += (y(i, j) - mean) * (y(i, j) - mean);
        const double sd = std::sqrt(ss / (baseline_end - 1));
        if (!(sd > 0.0)) throw InputError("feature " + std::to_string(i + 1) + " has zero variance over days 1.." + std::to_string(baseline_end));
        out.row(i) /= sd;
        s.scales.push_back(sd);
    }
    s.values = FeatureMatrix(std::move(out));
    return s;
}

}  // namespace cpinfer
