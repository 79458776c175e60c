#include "cpinfer/lrt_scan.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cpinfer/errors.hpp"
#include "cpinfer/specfun.hpp"

namespace cpinfer {

std::vector<int> ScanWindow::offsets() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(m_star() > 0 ? m_star() : 0));
    for (int d = first_offset(); d <= m1; ++d) out.push_back(d);
    return out;
}

void ScanWindow::validate(int n) const {
    if (m0 < 0 || m1 <= m0) throw DomainError("scan window needs 0 <= m0 < m1");
    if (m1 >= n)
        throw DomainError("scan window m1=" + std::to_string(m1) + " must be below the series length n=" + std::to_string(n));
}

namespace {

// U for a change after day k = n - d, from the sum of the last d values and
// the series total (both taken relative to a common shift).
inline double u_from_sums(double tail_sum, double total, int n, int d) {
    const double k = n - d;
    return (tail_sum - total * d / n) / std::sqrt(k * d / n);
}

}  // namespace

double u_stat(std::span<const double> y, int k) {
    const int n = static_cast<int>(y.size());
    if (k < 1 || k > n - 1) throw DomainError("u_stat requires 1 <= k <= n-1");
    // Shifting by y[0] leaves U unchanged and makes constant series exactly zero.
    const double shift = y[0];
    double total = 0.0;
    double tail = 0.0;
    for (int j = 0; j < n; ++j) {
        const double v = y[j] - shift;
        total += v;
        if (j >= k) tail += v;
    }
    return u_from_sums(tail, total, n, n - k);
}

double z_stat(const FeatureMatrix& y, int k) {
    double z = 0.0;
    for (int i = 0; i < y.q(); ++i) {
        const double u = u_stat(y.row(i), k);
        z += u * u;
    }
    return z;
}

ScanResult finish_scan(std::vector<double> z, int q, int n, const ScanWindow& w) {
    ScanResult r;
    r.q = q;
    r.n = n;
    r.first_offset = w.first_offset();
    r.m_star = static_cast<int>(z.size());
    r.z_star.resize(z.size());
    std::size_t best = 0;
    for (std::size_t idx = 0; idx < z.size(); ++idx) {
        r.z_star[idx] = chisq_to_normal(z[idx], q);
        // Strict comparison keeps the smallest offset, i.e. the most recent k.
        if (z[idx] > z[best]) best = idx;
    }
    r.q_stat = z[best];
    r.q_star = r.z_star[best];
    r.khat = n - r.offset_at(best);
    r.z = std::move(z);
    return r;
}

ScanResult scan(const FeatureMatrix& y, const ScanWindow& w) {
    const int n = y.n();
    w.validate(n);
    const int m_star = w.m_star();
    const int d0 = w.first_offset();
    std::vector<double> z(static_cast<std::size_t>(m_star), 0.0);
    for (int i = 0; i < y.q(); ++i) {
        const auto row = y.row(i);
        const double shift = row[0];
        double total = 0.0;
        for (double v : row) total += v - shift;
        double tail = 0.0;
        for (int d = 1; d <= w.m1; ++d) {
            tail += row[n - d] - shift;
            if (d < d0) continue;
            const double u = u_from_sums(tail, total, n, d);
            z[d - d0] += u * u;
        }
    }
    return finish_scan(std::move(z), y.q(), n, w);
}

NullScanSampler::NullScanSampler(int q, int n, ScanWindow w) : q_(q), n_(n), w_(w) {
    if (q < 1) throw DomainError("null sampler needs q >= 1");
    w_.validate(n);
    tail_.resize(static_cast<std::size_t>(w_.m1));
    z_.resize(static_cast<std::size_t>(w_.m_star()));
}

std::span<const double> NullScanSampler::draw_z(SeedSpec seed) {
    Stream rng(seed);
    const int m1 = w_.m1;
    const int d0 = w_.first_offset();
    const double head_sd = std::sqrt(static_cast<double>(n_ - m1));
    std::fill(z_.begin(), z_.end(), 0.0);
    for (int i = 0; i < q_; ++i) {
        double total = head_sd * rng.normal();
        for (int t = 0; t < m1; ++t) {
            tail_[t] = rng.normal();  // day n - m1 + 1 + t
            total += tail_[t];
        }
        double tail = 0.0;
        for (int d = 1; d <= m1; ++d) {
            tail += tail_[m1 - d];
            if (d < d0) continue;
            const double u = u_from_sums(tail, total, n_, d);
            z_[d - d0] += u * u;
        }
    }
    return z_;
}

void NullScanSampler::draw_z_star(SeedSpec seed, std::span<double> out) {
    const auto z = draw_z(seed);
    for (std::size_t idx = 0; idx < z.size(); ++idx) out[idx] = chisq_to_normal(z[idx], q_);
}

}  // namespace cpinfer
