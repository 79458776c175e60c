#pragma once

#include <cstdint>

#include "cpinfer/null_cov.hpp"
#include "cpinfer/rng.hpp"

namespace cpinfer {

struct OrthantOptions {
    int randomizations = 12;
    std::uint64_t min_points = 1u << 9;   // per randomization, first pass
    std::uint64_t max_points = 1u << 17;  // per randomization, budget
};

/// Pr(every component of N(0, Sigma) is below a_crit).
struct OrthantResult {
    double value = 0.0;
    double complement = 1.0;  // 1 - value, accumulated without cancellation
    double std_error = 0.0;   // randomized-QMC standard error of both fields
    std::uint64_t points_used = 0;
    bool converged = true;    // std_error <= tol within the point budget
};

inline constexpr int kMaxOrthantDimension = 64;
inline constexpr double kDefaultTol = 1e-4;

/// Separation-of-variables integration on the unit cube with Genz-Bretz
/// variable prioritization, evaluated on randomly shifted Richtmyer lattices.
/// Deterministic for a given seed. Throws DomainError for invalid or non-PSD
/// covariance, tol outside (0, 0.01], or m* > 64.
OrthantResult mvn_orthant(const CovarianceModel& cov, double a_crit, double tol, SeedSpec seed,
                          const OrthantOptions& options = {});

/// pr(Q >= b_sq) under the N(0, Sigma) model for Z*.
double pvalue_from_sigma(const CovarianceModel& cov, double b_sq, int q, double tol, SeedSpec seed);

/// Z*-scale threshold a with 1 - f(Sigma) = alpha (common random numbers
/// across the root search keep the target monotone).
double critical_a(const CovarianceModel& cov, double alpha, double tol, SeedSpec seed);

/// b_sq with pvalue_from_sigma(b_sq) = alpha to within 2 tol.
double critical_value(const CovarianceModel& cov, double alpha, int q, double tol, SeedSpec seed);

}  // namespace cpinfer
