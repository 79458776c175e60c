#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "cpinfer/lrt_scan.hpp"
#include "cpinfer/rng.hpp"

namespace cpinfer {

enum class CovSource { first_order, empirical, imported, supplied };

const char* to_string(CovSource source);

/// Correlation matrix of the transformed scan vector Z*, rows and columns
/// ordered by offset ascending (the ScanResult ordering).
struct CovarianceModel {
    Eigen::MatrixXd sigma;
    CovSource source = CovSource::supplied;
    std::uint64_t replicates = 0;  // B, empirical only
    SeedSpec seed{};               // empirical only
    ScanWindow window{};
    int n = 0;
    int q = 0;
    bool repaired = false;  // eigenvalue clipping was applied

    [[nodiscard]] int m_star() const { return static_cast<int>(sigma.rows()); }

    /// Square, symmetric, unit diagonal, entries in [-1, 1]. Throws DomainError.
    void validate() const;

    /// Wraps an arbitrary correlation matrix (used by tests and imports).
    static CovarianceModel from_matrix(Eigen::MatrixXd sigma);
};

/// First-order approximation: cor between offsets d1 < d2 is d1 / d2,
/// i.e. (n - j2) / (n - j1) for change points j1 < j2.
CovarianceModel sigma_first_order(int n, const ScanWindow& w);

/// Running first and second moments of Z* vectors.
class MomentAccumulator {
public:
    explicit MomentAccumulator(int m);
    void add(const Eigen::VectorXd& z);
    /// Adds another accumulator; merging in a fixed order keeps results reproducible.
    void merge(const MomentAccumulator& other);
    [[nodiscard]] std::uint64_t count() const { return count_; }
    /// Sample correlation matrix, symmetrized with a unit diagonal (not repaired).
    [[nodiscard]] Eigen::MatrixXd correlation() const;

private:
    Eigen::VectorXd sum_;
    Eigen::MatrixXd cross_;  // lower triangle only
    std::uint64_t count_ = 0;
};

/// Sample correlation of B simulated null Z* vectors, PSD-repaired.
/// Replicate b uses seed.with_stream(b). Requires B >= m* + 1.
CovarianceModel sigma_empirical(int q, int n, const ScanWindow& w, std::uint64_t replicates, SeedSpec seed, int workers = 1);

/// Clips eigenvalues below `floor` and rescales to a unit diagonal.
/// Returns true if the matrix was modified.
bool repair_psd(Eigen::MatrixXd& sigma, double floor = 1e-10);

/// Covariance CSV: a header row of offsets followed by the matrix rows.
void save_covariance_csv(const std::string& path, const CovarianceModel& cov);

/// Reads a covariance CSV whose offsets must match `w` for series length n.
CovarianceModel load_covariance_csv(const std::string& path, int n, int q, const ScanWindow& w);

}  // namespace cpinfer
