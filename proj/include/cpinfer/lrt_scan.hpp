#pragma once

#include <span>
#include <vector>

#include "cpinfer/feature_matrix.hpp"
#include "cpinfer/rng.hpp"

namespace cpinfer {

/// Candidate change points k with offset d = n - k in [max(m0, 1), m1].
/// k = n is excluded: the post-change segment would be empty.
struct ScanWindow {
    int m0 = 0;
    int m1 = 6;

    [[nodiscard]] int first_offset() const { return m0 < 1 ? 1 : m0; }
    [[nodiscard]] int m_star() const { return m1 - first_offset() + 1; }
    /// Offsets in scan order (ascending, most recent change point first).
    [[nodiscard]] std::vector<int> offsets() const;

    /// Throws DomainError unless 0 <= m0 < m1 <= n - 1.
    void validate(int n) const;

    friend bool operator==(const ScanWindow&, const ScanWindow&) = default;
};

struct ScanResult {
    std::vector<double> z;       // Z_k, indexed by offset ascending
    std::vector<double> z_star;  // Phi^{-1}(F_q(Z_k))
    double q_stat = 0.0;
    double q_star = 0.0;
    int khat = 0;  // arg-max change point (1-based day index); ties go to the largest k
    int m_star = 0;
    int first_offset = 1;
    int n = 0;
    int q = 0;

    [[nodiscard]] int offset_at(std::size_t index) const { return first_offset + static_cast<int>(index); }
};

/// Per-feature likelihood-ratio statistic for a change after day k.
double u_stat(std::span<const double> y, int k);

/// Sum over features of u_stat squared.
double z_stat(const FeatureMatrix& y, int k);

/// Scan over the window; see ScanResult for the ordering contract.
ScanResult scan(const FeatureMatrix& y, const ScanWindow& w);

/// Builds a ScanResult (including Z*) from Z values ordered by offset.
ScanResult finish_scan(std::vector<double> z, int q, int n, const ScanWindow& w);

/// Draws null-hypothesis scan vectors from sufficient statistics: per feature,
/// the sum of the first n - m1 days (one N(0, n - m1) draw) and the last m1
/// days. The Z_k have exactly the distribution they have under gen_null, at a
/// cost of q * (m1 + 1) normals instead of q * n.
class NullScanSampler {
public:
    NullScanSampler(int q, int n, ScanWindow w);

    /// Z_k over the window for the replicate keyed by `seed`.
    std::span<const double> draw_z(SeedSpec seed);

    /// Writes Z*_k for the replicate keyed by `seed` into out (size m_star).
    void draw_z_star(SeedSpec seed, std::span<double> out);

    [[nodiscard]] int q() const { return q_; }
    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] const ScanWindow& window() const { return w_; }

private:
    int q_;
    int n_;
    ScanWindow w_;
    std::vector<double> tail_;
    std::vector<double> z_;
};

}  // namespace cpinfer
