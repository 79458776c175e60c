#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpinfer/competitors.hpp"
#include "cpinfer/csv_io.hpp"
#include "cpinfer/lrt_scan.hpp"
#include "cpinfer/pvalue.hpp"
#include "cpinfer/rng.hpp"

namespace cpinfer {

inline const std::vector<std::string>& all_detect_methods() {
    static const std::vector<std::string> methods{"lrt-empirical", "lrt-firstorder", "lrt-asymptotic", "lrt-montecarlo", "hotelling", "mcusum"};
    return methods;
}

struct DetectOptions {
    ScanWindow window{};
    std::vector<std::string> methods = all_detect_methods();
    PValueBudgets budgets{};
    std::uint64_t competitor_replicates = 10000;  // null replicates for the competitor p-values
    McusumConfig mcusum{};
    std::optional<int> baseline_end;  // default n - m1
    bool whole_series_scale = false;  // standardize over all n days
    SeedSpec seed{};
};

struct MethodPValue {
    std::string method;
    std::optional<double> p_value;  // empty when the method is unavailable
    double std_error = 0.0;
    double statistic = 0.0;
    std::uint64_t replicates = 0;
    std::string note;
};

struct FeatureShift {
    std::string feature;
    double pre_mean = 0.0;   // raw scale, days 1..khat
    double post_mean = 0.0;  // raw scale, days khat+1..n
    double scale = 1.0;
};

struct DetectionReport {
    std::string source;
    int n = 0;
    int q = 0;
    ScanWindow window{};
    int baseline_end = 0;
    ScanResult scan;
    std::string khat_date;  // when the input had a date column
    std::vector<MethodPValue> pvalues;
    std::vector<FeatureShift> features;
    SeedSpec seed{};
    PValueBudgets budgets{};
    std::uint64_t competitor_replicates = 0;
    McusumConfig mcusum{};
};

/// standardize -> scan -> p-values for every requested method.
DetectionReport detect(const FeatureTable& table, const DetectOptions& options, const std::string& source = "");

/// Loads `path` (requiring at least m1 + 2 rows) and runs detect on it.
DetectionReport detect_file(const std::string& path, const DetectOptions& options);

/// JSON text with a fixed key order.
std::string to_json(const DetectionReport& report);

}  // namespace cpinfer
