#pragma once

#include <vector>

#include "cpinfer/feature_matrix.hpp"
#include "cpinfer/rng.hpp"

namespace cpinfer {

/// Mean shift of delta_i in every feature strictly after day k (1-based).
struct AlternativeSpec {
    int k = 1;
    std::vector<double> deltas;
    std::vector<double> mus;  // empty means all zero

    void validate(int q, int n) const;
};

/// i.i.d. standard normal q x n matrix; a pure function of (q, n, seed).
FeatureMatrix gen_null(int q, int n, SeedSpec seed);

/// mu_i + delta_i * [j > k] + the gen_null draw under the same seed.
FeatureMatrix gen_alt(int q, int n, const AlternativeSpec& alt, SeedSpec seed);

}  // namespace cpinfer
