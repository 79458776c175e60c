#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cpinfer/competitors.hpp"
#include "cpinfer/lrt_scan.hpp"
#include "cpinfer/rng.hpp"

namespace cpinfer {

/// Plain comma-separated table with a fixed header.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    [[nodiscard]] std::string str() const;
};

using Manifest = std::vector<std::pair<std::string, std::string>>;

struct ExperimentOutput {
    CsvTable table;
    Manifest manifest;
};

/// Shortest round-trip decimal form; independent of locale.
std::string format_number(double x);

/// Writes the table to `path` and the manifest (key=value lines) to `path + ".manifest"`.
void write_experiment(const ExperimentOutput& out, const std::string& path);

/// m1 = round(sqrt(n)), m0 = round(sqrt(n) / 2).
ScanWindow sqrt_window(int n);

struct Table1Cell {
    int q = 5;
    int n = 30;
    ScanWindow window{};
};

struct Table1Config {
    std::vector<Table1Cell> cells;             // empty means the full grid
    std::uint64_t replicates = 10000;          // null data sets per cell
    std::uint64_t cov_replicates = 10000;      // B for the empirical Sigma
    double alpha = 0.05;
    double tol = 1e-4;
    SeedSpec seed{20190101, 0};
    int workers = 1;
};

/// {5, 10, 50} x {30, 100, 365, 1000} x {(0, 6), sqrt window}.
std::vector<Table1Cell> table1_grid();

/// Type I error per cell for the asymptotic formula (m0 clamped to 1), the
/// first-order Sigma and the empirical Sigma.
ExperimentOutput run_table1(const Table1Config& cfg);

struct Fig1Config {
    int q = 5;
    int n = 100;
    std::vector<double> p_targets{0.05, 0.001};
    std::vector<int> m1_values{3, 6};
    std::vector<std::uint64_t> b_values{50, 100, 200, 500, 1000, 2000, 5000, 10000, 20000, 50000};
    std::uint64_t repetitions = 1000;
    std::uint64_t reference_replicates = 1000000;  // B for the oracle Sigma
    std::uint64_t ca_samples = 2000000;            // draws for estimate_ca
    double band = 0.05;                            // |estimate - p| < band * p
    double relative_tol = 0.001;                   // integration tol as a fraction of p
    SeedSpec seed{20190102, 0};
    int workers = 1;
};

/// Accuracy, mean and variance of p_hat and p_tilde per (p, m1, B), with the
/// variance predicted from c_a (p_hat) or the binomial law (p_tilde).
ExperimentOutput run_fig1(const Fig1Config& cfg);

struct Fig2Config {
    int n = 100;
    std::vector<int> q_values{10, 20};
    std::vector<double> kappas{2.0, 3.0};
    std::vector<int> change_offsets{1, 2, 3, 4, 5, 6};  // k = n - offset
    double delta = 0.5;
    double a_target = 0.0;
    double alpha = 0.05;
    ScanWindow window{0, 6};
    std::uint64_t replicates = 1000;
    std::uint64_t calibration_replicates = 10000;
    std::uint64_t cov_replicates = 10000;
    double tol = 1e-4;
    SeedSpec seed{20190103, 0};
    int workers = 1;
};

/// Power of the LRT (empirical Sigma), Hotelling scan and two-sided MCUSUM per
/// kappa, every method calibrated to the same alpha; all methods see the same data.
ExperimentOutput run_fig2(const Fig2Config& cfg);

}  // namespace cpinfer
