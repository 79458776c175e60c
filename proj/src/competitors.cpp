#include "cpinfer/competitors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cpinfer/errors.hpp"
#include "cpinfer/model_sim.hpp"
#include "cpinfer/parallel.hpp"

namespace cpinfer {

void McusumConfig::validate() const {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("MCUSUM kappa must be positive");
    if (!(a_target >= 0.0) || !std::isfinite(a_target)) throw DomainError("MCUSUM target must be nonnegative");
}

const char* to_string(CompetitorMethod method) { return method == CompetitorMethod::hotelling ? "hotelling" : "mcusum"; }

FeatureMatrix residuals_h0(const FeatureMatrix& y) {
    RowMatrix out = y.values();
    const int n = y.n();
    for (int i = 0; i < y.q(); ++i) {
        double total = 0.0;
        for (int j = 0; j < n; ++j) total += out(i, j);
        const double mean = total / n;
        double head = 0.0;
        for (int j = 0; j + 1 < n; ++j) {
            out(i, j) -= mean;
            head += out(i, j);
        }
        // Closing the row with the negated partial sum makes it sum to zero exactly.
        out(i, n - 1) = -head;
    }
    return FeatureMatrix(std::move(out));
}

CompetitorResult hotelling_scan(const FeatureMatrix& y, const ScanWindow& w) {
    const int n = y.n();
    w.validate(n);
    const FeatureMatrix e = residuals_h0(y);
    CompetitorResult r;
    for (int d : w.offsets()) {
        const int col = n - d;  // 0-based column of day n - d + 1
        double s = 0.0;
        for (int i = 0; i < y.q(); ++i) s += e(i, col) * e(i, col);
        r.per_day.push_back(s);
    }
    r.statistic = *std::max_element(r.per_day.begin(), r.per_day.end());
    return r;
}

RowMatrix mcusum_path(const FeatureMatrix& residuals, const McusumConfig& cfg) {
    cfg.validate();
    const int q = residuals.q();
    const int n = residuals.n();
    RowMatrix path = RowMatrix::Zero(q, n);
    std::vector<double> state(static_cast<std::size_t>(q), 0.0);
    std::vector<double> step(static_cast<std::size_t>(q));
    for (int j = 0; j < n; ++j) {
        double norm_sq = 0.0;
        for (int i = 0; i < q; ++i) {
            step[i] = state[i] + residuals(i, j) - cfg.a_target;
            norm_sq += step[i] * step[i];
        }
        const double c = std::sqrt(norm_sq);
        if (c <= cfg.kappa) {
            std::fill(state.begin(), state.end(), 0.0);
        } else {
            const double shrink = 1.0 - cfg.kappa / c;
            for (int i = 0; i < q; ++i) state[i] = step[i] * shrink;
        }
        for (int i = 0; i < q; ++i) path(i, j) = state[i];
    }
    return path;
}

namespace {

std::vector<double> window_norms(const RowMatrix& path, const ScanWindow& w) {
    const auto n = static_cast<int>(path.cols());
    std::vector<double> out;
    for (int d : w.offsets()) out.push_back(path.col(n - d).squaredNorm());
    return out;
}

}  // namespace

CompetitorResult mcusum_scan(const FeatureMatrix& y, const ScanWindow& w, const McusumConfig& cfg) {
    w.validate(y.n());
    cfg.validate();
    const FeatureMatrix e = residuals_h0(y);
    CompetitorResult r;
    r.per_day = window_norms(mcusum_path(e, cfg), w);
    if (cfg.two_sided) {
        const FeatureMatrix negated(RowMatrix(-e.values()));
        const auto other = window_norms(mcusum_path(negated, cfg), w);
        for (std::size_t t = 0; t < other.size(); ++t) r.per_day[t] = std::max(r.per_day[t], other[t]);
    }
    r.statistic = *std::max_element(r.per_day.begin(), r.per_day.end());
    return r;
}

CompetitorResult competitor_scan(CompetitorMethod method, const FeatureMatrix& y, const ScanWindow& w, const McusumConfig& cfg) {
    return method == CompetitorMethod::hotelling ? hotelling_scan(y, w) : mcusum_scan(y, w, cfg);
}

std::size_t quantile_index(std::uint64_t replicates, double alpha) {
    const double rank = std::ceil((1.0 - alpha) * static_cast<double>(replicates) - 1e-9);
    return rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
}

double calibrate_threshold(CompetitorMethod method, int q, int n, const ScanWindow& w, const McusumConfig& cfg, double alpha,
                           std::uint64_t replicates, SeedSpec seed, int workers) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    if (static_cast<double>(replicates) * alpha < 50.0)
        throw DomainError("calibration needs B * alpha >= 50 (B=" + std::to_string(replicates) + ")");
    w.validate(n);
    if (method == CompetitorMethod::mcusum) cfg.validate();
    std::vector<double> stats(replicates);
    parallel_for(replicates, workers, [&](std::size_t b) {
        stats[b] = competitor_scan(method, gen_null(q, n, seed.with_stream(b)), w, cfg).statistic;
    });
    const std::size_t idx = quantile_index(replicates, alpha);
    std::nth_element(stats.begin(), stats.begin() + static_cast<std::ptrdiff_t>(idx), stats.end());
    return stats[idx];
}

double competitor_pvalue(CompetitorMethod method, double observed, int q, int n, const ScanWindow& w, const McusumConfig& cfg,
                         std::uint64_t replicates, SeedSpec seed, int workers) {
    if (replicates < 1) throw DomainError("competitor p-value needs B >= 1");
    w.validate(n);
    if (method == CompetitorMethod::mcusum) cfg.validate();
    std::vector<char> hit(replicates, 0);
    parallel_for(replicates, workers, [&](std::size_t b) {
        hit[b] = competitor_scan(method, gen_null(q, n, seed.with_stream(b)), w, cfg).statistic >= observed;
    });
    std::uint64_t count = 0;
    for (char h : hit) count += h ? 1 : 0;
    return static_cast<double>(count) / static_cast<double>(replicates);
}

}  // namespace cpinfer
