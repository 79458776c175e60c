#include "cpinfer/pvalue.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "cpinfer/errors.hpp"
#include "cpinfer/parallel.hpp"
#include "cpinfer/specfun.hpp"

namespace cpinfer {

double asymp_pvalue(double b_sq, int q, int m0, int m1) {
    if (q < 1) throw DomainError("asymp_pvalue requires q >= 1");
    if (m0 < 1) throw DomainError("asymp_pvalue requires m0 >= 1 (ln(m1/m0) is undefined at m0 = 0)");
    if (m1 < m0) throw DomainError("asymp_pvalue requires m0 <= m1");
    if (std::isnan(b_sq) || b_sq < 0.0) throw DomainError("asymp_pvalue requires b_sq >= 0");
    if (m1 == m0 || b_sq == 0.0) return 0.0;
    if (std::isinf(b_sq)) return 0.0;
    const double log_p = -0.5 * q * std::numbers::ln2 - log_gamma_half(q) +
                         std::log(std::log(static_cast<double>(m1) / m0)) + 0.5 * q * std::log(b_sq) - 0.5 * b_sq;
    return std::min(1.0, std::exp(log_p));
}

namespace {

constexpr std::uint64_t kChunk = 1024;

}  // namespace

double mc_pvalue(double q_obs, int q, int n, const ScanWindow& w, std::uint64_t replicates, SeedSpec seed, int workers) {
    if (replicates < 1) throw DomainError("mc_pvalue requires B >= 1");
    if (std::isnan(q_obs)) throw DomainError("observed statistic is NaN");
    if (q_obs <= 0.0) return 1.0;
    if (std::isinf(q_obs)) return 0.0;
    const std::uint64_t chunks = (replicates + kChunk - 1) / kChunk;
    std::vector<std::uint64_t> counts(chunks, 0);
    parallel_for(chunks, workers, [&](std::size_t c) {
        NullScanSampler sampler(q, n, w);
        const std::uint64_t begin = c * kChunk;
        const std::uint64_t end = std::min(replicates, begin + kChunk);
        std::uint64_t hits = 0;
        for (std::uint64_t b = begin; b < end; ++b) {
            const auto z = sampler.draw_z(seed.with_stream(b));
            double best = 0.0;
            for (double v : z) best = std::max(best, v);
            if (best >= q_obs) ++hits;
        }
        counts[c] = hits;
    });
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    return static_cast<double>(total) / static_cast<double>(replicates);
}

double correlation_covariance(const Eigen::MatrixXd& r, int i, int j, int k, int l) {
    return 0.5 * r(i, j) * r(k, l) * (r(i, k) * r(i, k) + r(i, l) * r(i, l) + r(j, k) * r(j, k) + r(j, l) * r(j, l)) +
           r(i, k) * r(j, l) + r(i, l) * r(j, k) - r(i, j) * (r(i, k) * r(i, l) + r(j, k) * r(j, l)) -
           r(k, l) * (r(i, k) * r(j, k) + r(i, l) * r(j, l));
}

double pair_derivative_trace(const Eigen::MatrixXd& sigma, int i, int j) {
    const auto m = sigma.rows();
    if (i < 0 || j < 0 || i >= m || j >= m || i == j) throw DomainError("pair_derivative_trace needs distinct indices in range");
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(m, m);
    e(i, j) = e(j, i) = 1.0;
    const Eigen::MatrixXd inv = sigma.inverse();
    return 0.5 * (inv * e * inv * sigma).trace();
}

namespace {

struct CaParts {
    double full = 0.0;
    double chain = 0.0;
    double diagonal = 0.0;
};

CaParts assemble_ca(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& inv, const Eigen::MatrixXd& h) {
    const int m = static_cast<int>(sigma.rows());
    const Eigen::MatrixXd d = inv - h;
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) pairs.emplace_back(i, j);

    CaParts out;
    for (const auto& [i, j] : pairs) {
        const double s = 1.0 - sigma(i, j) * sigma(i, j);
        out.diagonal += d(i, j) * d(i, j) * s * s;
    }
    double triple = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            for (int k = j + 1; k < m; ++k) triple += d(i, j) * d(j, k) * (sigma(i, k) + sigma(i, j) * sigma(j, k));
    out.chain = out.diagonal + 2.0 * triple;

    for (std::size_t a = 0; a < pairs.size(); ++a)
        for (std::size_t b = 0; b < pairs.size(); ++b) {
            const auto [i, j] = pairs[a];
            const auto [k, l] = pairs[b];
            out.full += d(i, j) * d(k, l) * correlation_covariance(sigma, i, j, k, l);
        }
    return out;
}

constexpr int kBatches = 10;
constexpr std::uint64_t kMinHits = 200;

}  // namespace

CaEstimate estimate_ca(const CovarianceModel& cov, double a_crit, std::uint64_t n_samples, SeedSpec seed) {
    cov.validate();
    if (std::isnan(a_crit)) throw DomainError("a_crit is NaN");
    const int m = cov.m_star();
    CaEstimate est;
    est.h = Eigen::MatrixXd::Zero(m, m);
    if (m == 1) return est;

    const Eigen::MatrixXd& sigma = cov.sigma;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    if (eig.eigenvalues().minCoeff() <= 1e-12) throw DomainError("estimate_ca needs a positive definite covariance");
    const Eigen::MatrixXd root = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal();
    const Eigen::MatrixXd inv = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();

    // Batch b holds draws with index = b (mod kBatches); each batch gives its own h.
    std::vector<Eigen::MatrixXd> batch_sum(kBatches, Eigen::MatrixXd::Zero(m, m));
    std::vector<std::uint64_t> batch_hits(kBatches, 0);
    Eigen::VectorXd z(m);
    Eigen::VectorXd y(m);
    Eigen::VectorXd wv(m);
    Stream rng(seed);
    for (std::uint64_t s = 0; s < n_samples; ++s) {
        for (int c = 0; c < m; ++c) z[c] = rng.normal();
        y.noalias() = root * z;
        if (!(y.maxCoeff() > a_crit)) continue;
        wv.noalias() = inv * y;
        const auto b = static_cast<std::size_t>(s % kBatches);
        batch_sum[b].selfadjointView<Eigen::Lower>().rankUpdate(wv);
        ++batch_hits[b];
    }
    std::uint64_t hits = 0;
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(m, m);
    for (int b = 0; b < kBatches; ++b) {
        hits += batch_hits[b];
        total += batch_sum[b];
    }
    if (hits < kMinHits)
        throw DomainError("estimate_ca saw only " + std::to_string(hits) + " conditional hits in " + std::to_string(n_samples) +
                          " draws; increase n_samples");

    est.h = Eigen::MatrixXd(total.selfadjointView<Eigen::Lower>()) / static_cast<double>(hits);
    const CaParts parts = assemble_ca(sigma, inv, est.h);
    est.c_a = parts.full;
    est.c_a_chain = parts.chain;
    est.c_a_diagonal = parts.diagonal;
    est.samples_used = hits;
    est.draws = n_samples;

    std::vector<double> per_batch;
    for (int b = 0; b < kBatches; ++b) {
        if (batch_hits[b] == 0) continue;
        const Eigen::MatrixXd hb = Eigen::MatrixXd(batch_sum[b].selfadjointView<Eigen::Lower>()) / static_cast<double>(batch_hits[b]);
        per_batch.push_back(assemble_ca(sigma, inv, hb).full);
    }
    if (per_batch.size() > 1) {
        double mean = 0.0;
        for (double v : per_batch) mean += v;
        mean /= static_cast<double>(per_batch.size());
        double ss = 0.0;
        for (double v : per_batch) ss += (v - mean) * (v - mean);
        est.std_error = std::sqrt(ss / (per_batch.size() - 1.0) / static_cast<double>(per_batch.size()));
    }
    return est;
}

const char* to_string(CovMode mode) { return mode == CovMode::empirical ? "empirical" : "first_order"; }

PValueReport full_report(const FeatureMatrix& y, const ScanWindow& w, CovMode mode, const PValueBudgets& budgets, SeedSpec seed) {
    PValueReport report;
    report.scan = scan(y, w);
    const int q = y.q();
    const int n = y.n();
    report.cov = mode == CovMode::empirical ? sigma_empirical(q, n, w, budgets.cov_replicates, seed.fork(1), budgets.workers)
                                            : sigma_first_order(n, w);

    const double b_sq = report.scan.q_stat;
    if (b_sq <= 0.0 || report.cov.m_star() == 1) {
        report.p_hat = pvalue_from_sigma(report.cov, b_sq, q, budgets.tol, seed.fork(3));
    } else {
        const auto orthant = mvn_orthant(report.cov, chisq_to_normal(b_sq, q), budgets.tol, seed.fork(3));
        report.p_hat = orthant.complement;
        report.p_hat_std_error = orthant.std_error;
        report.method_details.emplace_back("integration_points", std::to_string(orthant.points_used));
        report.method_details.emplace_back("integration_converged", orthant.converged ? "true" : "false");
    }
    report.p_tilde = mc_pvalue(b_sq, q, n, w, budgets.mc_replicates, seed.fork(2), budgets.workers);
    report.p_tilde_replicates = budgets.mc_replicates;
    if (w.m0 >= 1) report.p_asymp = asymp_pvalue(b_sq, q, w.m0, w.m1);

    report.method_details.emplace_back("cov_source", to_string(report.cov.source));
    if (mode == CovMode::empirical) {
        report.method_details.emplace_back("cov_replicates", std::to_string(report.cov.replicates));
        report.method_details.emplace_back("cov_repaired", report.cov.repaired ? "true" : "false");
    }
    if (!report.p_asymp) report.method_details.emplace_back("p_asymp", "unavailable for m0 = 0");
    return report;
}

}  // namespace cpinfer
