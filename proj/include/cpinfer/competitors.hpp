#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cpinfer/feature_matrix.hpp"
#include "cpinfer/lrt_scan.hpp"
#include "cpinfer/rng.hpp"

namespace cpinfer {

struct McusumConfig {
    double kappa = 2.0;     // shrinkage threshold
    double a_target = 0.0;  // drift target subtracted each day
    bool two_sided = true;
    void validate() const;
};

/// per_day is indexed like ScanResult::z: offset d = 1.. ascending, and the
/// value for offset d belongs to day n - d + 1, the first post-change day of k = n - d.
struct CompetitorResult {
    double statistic = 0.0;
    std::vector<double> per_day;
    std::optional<double> threshold;
    bool reject = false;
};

enum class CompetitorMethod { hotelling, mcusum };

const char* to_string(CompetitorMethod method);

/// Rows centered by their means. Each row sums to exactly zero.
FeatureMatrix residuals_h0(const FeatureMatrix& y);

/// Sum over features of the squared residual on each window day.
CompetitorResult hotelling_scan(const FeatureMatrix& y, const ScanWindow& w);

/// Day-by-day state s_ij (rows = features, columns = days 1..n) of the
/// one-sided recursion on the given residuals.
RowMatrix mcusum_path(const FeatureMatrix& residuals, const McusumConfig& cfg);

CompetitorResult mcusum_scan(const FeatureMatrix& y, const ScanWindow& w, const McusumConfig& cfg);

CompetitorResult competitor_scan(CompetitorMethod method, const FeatureMatrix& y, const ScanWindow& w, const McusumConfig& cfg);

/// Empirical (1 - alpha) quantile of the null statistic over B replicates of
/// gen_null (replicate b on seed.with_stream(b)). Reject when statistic > threshold.
/// Requires B * alpha >= 50.
double calibrate_threshold(CompetitorMethod method, int q, int n, const ScanWindow& w, const McusumConfig& cfg, double alpha,
                           std::uint64_t replicates, SeedSpec seed, int workers = 1);

/// Fraction of B null replicates whose statistic is >= `observed`.
double competitor_pvalue(CompetitorMethod method, double observed, int q, int n, const ScanWindow& w, const McusumConfig& cfg,
                         std::uint64_t replicates, SeedSpec seed, int workers = 1);

/// Order-statistic index used by calibrate_threshold for a sorted sample of size B.
std::size_t quantile_index(std::uint64_t replicates, double alpha);

}  // namespace cpinfer
