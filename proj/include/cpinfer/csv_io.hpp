#pragma once

#include <string>
#include <vector>

#include "cpinfer/feature_matrix.hpp"

namespace cpinfer {

/// Wide table: one row per day, one column per feature.
struct FeatureTable {
    FeatureMatrix values{1, 2};           // q x n after transposing
    std::vector<std::string> features;    // column names, length q
    std::vector<std::string> dates;       // empty unless a date column was found
    std::string date_header;
};

/// Reads a wide CSV with a header row. The first column is taken as a date
/// column when its header is "date" or "day" (any case) or any of its cells is
/// not a number. Every other cell must be numeric; errors name the row and column.
/// Throws InputError when there are fewer than min_rows data rows.
FeatureTable load_csv(const std::string& path, int min_rows = 2);

/// Writes the table in the same wide layout; doubles use the shortest
/// round-trip form, so load_csv(save_csv(t)) reproduces t exactly.
void save_csv(const std::string& path, const FeatureTable& table);

struct Standardization {
    FeatureMatrix values{1, 2};
    std::vector<double> scales;  // per-feature sample standard deviation over the baseline
    int baseline_end = 0;        // days 1..baseline_end were used
};

/// Divides each row by its sample standard deviation over days 1..baseline_end.
Standardization standardize(const FeatureMatrix& y, int baseline_end);

}  // namespace cpinfer
