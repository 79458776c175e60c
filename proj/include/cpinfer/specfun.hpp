#pragma once

// Scalar special functions: standard normal CDF/quantile and the chi-square
// distribution. All functions are pure and reentrant.

namespace cpinfer {

/// Standard normal CDF. Saturates to 0/1 in the extreme tails.
double norm_cdf(double x);

/// Upper tail 1 - norm_cdf(x), computed without cancellation.
double norm_sf(double x);

/// Standard normal density.
double norm_pdf(double x);

/// Inverse of norm_cdf on (0, 1). Throws DomainError for p outside (0, 1).
double norm_quantile(double p);

/// log Gamma(q / 2) for a positive integer q, computed exactly by recurrence.
double log_gamma_half(int q);

/// Chi-square CDF with q degrees of freedom; 0 for z <= 0.
double chisq_cdf(double z, int q);

/// Chi-square survival function 1 - chisq_cdf(z, q).
double chisq_sf(double z, int q);

/// Smallest z with chisq_sf(z, q) <= tail, for tail in (0, 1).
double chisq_quantile_upper(double tail, int q);

/// Probability-integral transform Phi^{-1}(F_q(z)) used for the Z* scale.
/// Uses the survival function in the upper half so large z keep precision;
/// maps z <= 0 to -infinity and an underflowed tail to +infinity.
double chisq_to_normal(double z, int q);

/// Inverse of chisq_to_normal: the z with chisq_to_normal(z, q) == x.
double normal_to_chisq(double x, int q);

}  // namespace cpinfer
