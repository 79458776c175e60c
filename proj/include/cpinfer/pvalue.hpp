#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cpinfer/feature_matrix.hpp"
#include "cpinfer/lrt_scan.hpp"
#include "cpinfer/mvn_tail.hpp"
#include "cpinfer/null_cov.hpp"

namespace cpinfer {

/// Large-b approximation 2^{-q/2} Gamma(q/2)^{-1} ln(m1/m0) b^q exp(-b^2/2),
/// capped at 1. Requires 1 <= m0 <= m1; m0 = 0 is a DomainError.
double asymp_pvalue(double b_sq, int q, int m0, int m1);

/// Fraction of B null scans with Q >= q_obs (replicate b on seed.with_stream(b)).
double mc_pvalue(double q_obs, int q, int n, const ScanWindow& w, std::uint64_t replicates, SeedSpec seed, int workers = 1);

/// Leading coefficient of var(p_hat) ~ c_a p^2 / B for p_hat = 1 - f(Sigma_hat).
struct CaEstimate {
    /// Delta-method coefficient using the full asymptotic covariance of the
    /// sample correlations (every pair of off-diagonal entries).
    double c_a = 0.0;
    /// The variant with only (i,j)-(j,k) cross terms, coefficient Sigma_ik + Sigma_ij Sigma_jk.
    double c_a_chain = 0.0;
    /// Diagonal terms only: sum_{i<j} (Sigma^{-1}_ij - h_ij)^2 (1 - Sigma_ij^2)^2.
    double c_a_diagonal = 0.0;
    double std_error = 0.0;  // batch-means standard error of c_a
    Eigen::MatrixXd h;       // conditional means h_ij(a), symmetric
    std::uint64_t samples_used = 0;  // conditional hits
    std::uint64_t draws = 0;
};

/// Conditional Monte Carlo estimate of h_ij(a) = E[(Sigma^{-1}y)_i (Sigma^{-1}y)_j | max_j y_j > a]
/// and the c_a variants assembled from it. Throws DomainError with fewer than 200 hits.
CaEstimate estimate_ca(const CovarianceModel& cov, double a_crit, std::uint64_t n_samples, SeedSpec seed);

/// Normal-theory asymptotic covariance (times B) between sample correlations
/// r_ij and r_kl of a population with correlation matrix rho.
double correlation_covariance(const Eigen::MatrixXd& rho, int i, int j, int k, int l);

/// 0.5 * tr(Sigma^{-1} E_ij Sigma^{-1} Sigma) for the symmetric single-pair
/// derivative E_ij (ones at (i,j) and (j,i)); equals (Sigma^{-1})_ij.
double pair_derivative_trace(const Eigen::MatrixXd& sigma, int i, int j);

enum class CovMode { empirical, first_order };

const char* to_string(CovMode mode);

struct PValueBudgets {
    std::uint64_t cov_replicates = 10000;  // B for the empirical Sigma
    std::uint64_t mc_replicates = 10000;   // B for p_tilde
    double tol = kDefaultTol;              // orthant integration tolerance
    int workers = 1;
};

struct PValueReport {
    ScanResult scan;
    CovarianceModel cov;
    std::optional<double> p_asymp;  // only when m0 >= 1
    double p_hat = 1.0;
    double p_hat_std_error = 0.0;
    double p_tilde = 1.0;
    std::uint64_t p_tilde_replicates = 0;
    std::vector<std::pair<std::string, std::string>> method_details;
};

/// scan -> Sigma (per mode) -> the three p-value estimates.
PValueReport full_report(const FeatureMatrix& y, const ScanWindow& w, CovMode mode, const PValueBudgets& budgets, SeedSpec seed);

}  // namespace cpinfer
