#include "cpinfer/model_sim.hpp"

#include <cmath>
#include <string>

#include "cpinfer/errors.hpp"

namespace cpinfer {

namespace {
RowMatrix checked_zero(int q, int n) {
    if (q < 1 || n < 2) throw DomainError("feature matrix needs q >= 1 and n >= 2");
    return RowMatrix::Zero(q, n);
}
}  // namespace

FeatureMatrix::FeatureMatrix(int q, int n) : values_(checked_zero(q, n)) {}

FeatureMatrix::FeatureMatrix(RowMatrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 2) throw DomainError("feature matrix needs q >= 1 and n >= 2");
    if (!values_.allFinite()) throw DomainError("feature matrix entries must be finite");
}

void AlternativeSpec::validate(int q, int n) const {
    if (k < 1 || k > n - 1) throw DomainError("change point k=" + std::to_string(k) + " outside [1, n-1]");
    if (static_cast<int>(deltas.size()) != q) throw DomainError("deltas must have one entry per feature");
    if (!mus.empty() && static_cast<int>(mus.size()) != q) throw DomainError("mus must be empty or have one entry per feature");
}

FeatureMatrix gen_null(int q, int n, SeedSpec seed) {
    FeatureMatrix y(q, n);
    Stream rng(seed);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < n; ++j) y(i, j) = rng.normal();
    return y;
}

FeatureMatrix gen_alt(int q, int n, const AlternativeSpec& alt, SeedSpec seed) {
    alt.validate(q, n);
    FeatureMatrix y = gen_null(q, n, seed);
    for (int i = 0; i < q; ++i) {
        const double mu = alt.mus.empty() ? 0.0 : alt.mus[i];
        for (int j = 0; j < n; ++j) y(i, j) += mu + (j + 1 > alt.k ? alt.deltas[i] : 0.0);
    }
    return y;
}

}  // namespace cpinfer
