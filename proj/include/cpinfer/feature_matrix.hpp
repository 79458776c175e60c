#pragma once

#include <span>

#include <Eigen/Dense>

namespace cpinfer {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// q x n matrix of daily features: row i is feature i, column j is day j.
/// Invariants: q >= 1, n >= 2, every entry finite.
class FeatureMatrix {
public:
    FeatureMatrix(int q, int n);  // zero-filled
    explicit FeatureMatrix(RowMatrix values);

    [[nodiscard]] int q() const { return static_cast<int>(values_.rows()); }
    [[nodiscard]] int n() const { return static_cast<int>(values_.cols()); }

    [[nodiscard]] double operator()(int i, int j) const { return values_(i, j); }
    double& operator()(int i, int j) { return values_(i, j); }

    [[nodiscard]] std::span<const double> row(int i) const {
        return {values_.data() + static_cast<std::ptrdiff_t>(i) * values_.cols(), static_cast<std::size_t>(values_.cols())};
    }

    [[nodiscard]] const RowMatrix& values() const { return values_; }

    friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) { return a.values_ == b.values_; }

private:
    RowMatrix values_;
};

}  // namespace cpinfer
