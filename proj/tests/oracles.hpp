#pragma once

// Reference implementations that share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace oracle {

inline double phi_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<>(), x); }
inline double phi_pdf(double x) { return boost::math::pdf(boost::math::normal_distribution<>(), x); }
inline double phi_inv(double p) { return boost::math::quantile(boost::math::normal_distribution<>(), p); }
inline double chi2_cdf(double z, int q) { return boost::math::cdf(boost::math::chi_squared_distribution<>(q), z); }
inline double chi2_sf(double z, int q) {
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<>(q), z));
}
inline double binom_pmf(int n, double p, int k) { return boost::math::pdf(boost::math::binomial_distribution<>(n, p), k); }

/// Composite Simpson rule on [lo, hi] with `panels` (even) intervals.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int panels) {
    const double h = (hi - lo) / panels;
    double s = f(lo) + f(hi);
    for (int i = 1; i < panels; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// pr(X <= a, Y <= a) for a standard bivariate normal with correlation rho, |rho| < 1.
inline double bivariate_orthant(double rho, double a) {
    const double s = std::sqrt(1.0 - rho * rho);
    return simpson([&](double x) { return phi_pdf(x) * phi_cdf((a - rho * x) / s); }, -12.0, a, 20000);
}

struct McEstimate {
    double value;
    double std_error;
};

/// Plain Monte Carlo pr(max_i Y_i < a) for Y ~ N(0, sigma), Cholesky sampling.
inline McEstimate mc_orthant(const Eigen::MatrixXd& sigma, double a, std::uint64_t draws, std::uint64_t seed) {
    const auto m = sigma.rows();
    const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXd z(m);
    std::uint64_t inside = 0;
    for (std::uint64_t d = 0; d < draws; ++d) {
        for (Eigen::Index i = 0; i < m; ++i) z[i] = nd(gen);
        if ((l * z).maxCoeff() < a) ++inside;
    }
    const double p = static_cast<double>(inside) / static_cast<double>(draws);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(draws))};
}

/// Direct evaluation of the per-feature statistic from means.
inline double u_direct(const std::vector<double>& y, int k) {
    const int n = static_cast<int>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double tail = 0.0;
    for (int j = k; j < n; ++j) tail += y[j];
    return (tail - mean * (n - k)) / std::sqrt(static_cast<double>(k) * (n - k) / n);
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, f - i / n, (i + 1) / n - f});
    }
    return d;
}

inline double sample_mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double sample_var(const std::vector<double>& xs) {
    const double m = sample_mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

inline double sample_cor(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = sample_mean(a), mb = sample_mean(b);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
