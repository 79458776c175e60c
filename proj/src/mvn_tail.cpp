#include "cpinfer/mvn_tail.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "cpinfer/errors.hpp"
#include "cpinfer/specfun.hpp"

namespace cpinfer {

namespace {

constexpr double kDegenerate = 1e-10;

// Rational approximation of the normal quantile (relative error ~1e-9) without
// the refinement step of norm_quantile; ample for the integrand.
double quantile_kernel(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    if (p < p_low || p > 1.0 - p_low) {
        const double tail = p < 0.5 ? p : 1.0 - p;
        const double r = std::sqrt(-2.0 * std::log(tail));
        const double x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
                         ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
        return p < 0.5 ? x : -x;
    }
    const double r0 = p - 0.5;
    const double r = r0 * r0;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * r0 /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

const std::array<double, kMaxOrthantDimension>& lattice_generators() {
    static const auto generators = [] {
        std::array<double, kMaxOrthantDimension> g{};
        int found = 0;
        for (int candidate = 2; found < kMaxOrthantDimension; ++candidate) {
            bool prime = true;
            for (int d = 2; d * d <= candidate; ++d)
                if (candidate % d == 0) {
                    prime = false;
                    break;
                }
            if (prime) g[found++] = std::sqrt(static_cast<double>(candidate));
        }
        return g;
    }();
    return generators;
}

// Drops components that are exact duplicates (correlation one) of an earlier one.
Eigen::MatrixXd collapse_duplicates(const Eigen::MatrixXd& sigma) {
    const auto m = sigma.rows();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m; ++i) {
        bool duplicate = false;
        for (Eigen::Index k : keep)
            if (sigma(i, k) >= 1.0 - 1e-12) {
                duplicate = true;
                break;
            }
        if (!duplicate) keep.push_back(i);
    }
    if (static_cast<Eigen::Index>(keep.size()) == m) return sigma;
    Eigen::MatrixXd out(keep.size(), keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a)
        for (std::size_t b = 0; b < keep.size(); ++b) out(a, b) = sigma(keep[a], keep[b]);
    return out;
}

// Lower-triangular factor with variables ordered so that the most restrictive
// conditional limits are integrated first (Genz & Bretz prioritization).
// With first_exceeds, variable 0 stays first and is taken as truncated below at a.
Eigen::MatrixXd prioritized_cholesky(Eigen::MatrixXd s, double a, bool first_exceeds = false) {
    const auto m = s.rows();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> expected(static_cast<std::size_t>(m), 0.0);
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index best = i;
        double best_prob = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = (first_exceeds && i == 0) ? m : i; j < m; ++j) {
            double mean = 0.0;
            double var = s(j, j);
            for (Eigen::Index k = 0; k < i; ++k) {
                mean += l(j, k) * expected[k];
                var -= l(j, k) * l(j, k);
            }
            const double prob = var > kDegenerate ? norm_cdf((a - mean) / std::sqrt(var)) : (mean < a ? 1.0 : 0.0);
            if (prob < best_prob) {
                best_prob = prob;
                best = j;
            }
        }
        if (best != i) {
            s.row(i).swap(s.row(best));
            s.col(i).swap(s.col(best));
            l.row(i).swap(l.row(best));
        }
        double var = s(i, i);
        double mean = 0.0;
        for (Eigen::Index k = 0; k < i; ++k) {
            var -= l(i, k) * l(i, k);
            mean += l(i, k) * expected[k];
        }
        if (var <= kDegenerate) {
            l(i, i) = 0.0;
            expected[i] = 0.0;
            continue;
        }
        l(i, i) = std::sqrt(var);
        for (Eigen::Index r = i + 1; r < m; ++r) {
            double v = s(r, i);
            for (Eigen::Index k = 0; k < i; ++k) v -= l(r, k) * l(i, k);
            l(r, i) = v / l(i, i);
        }
        const double c = (a - mean) / l(i, i);
        if (first_exceeds && i == 0) {
            // Mean of the standardized variable truncated below at its limit.
            const double mass = norm_sf(c);
            expected[i] = mass > 1e-300 ? norm_pdf(c) / mass : c;
            continue;
        }
        // Mean of the standardized variable truncated above at its limit.
        const double mass = norm_cdf(c);
        expected[i] = mass > 1e-300 ? -norm_pdf(c) / mass : c;
    }
    return l;
}

struct Sample {
    double value;
    double complement;
};

class OrthantIntegrand {
public:
    OrthantIntegrand(Eigen::MatrixXd l, double a) : l_(std::move(l)), a_(a), y_(static_cast<std::size_t>(l_.rows()), 0.0) {}

    [[nodiscard]] int dimension() const { return static_cast<int>(l_.rows()) - 1; }

    Sample operator()(const double* w) {
        const auto m = l_.rows();
        double f = 1.0;
        double comp = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            double t = 0.0;
            for (Eigen::Index k = 0; k < i; ++k) t += l_(i, k) * y_[k];
            double e;
            double ebar;
            const double diag = l_(i, i);
            double x = 0.0;
            if (diag > 0.0) {
                x = (a_ - t) / diag;
                // One erfc per coordinate; the smaller tail keeps full precision.
                if (x >= 0.0) {
                    ebar = norm_sf(x);
                    e = 1.0 - ebar;
                } else {
                    e = norm_cdf(x);
                    ebar = 1.0 - e;
                }
            } else {
                e = t < a_ ? 1.0 : 0.0;
                ebar = 1.0 - e;
            }
            comp += f * ebar;
            f *= e;
            if (f <= 0.0) return {0.0, 1.0};
            if (i + 1 < m) {
                if (diag > 0.0) {
                    double u = w[i] * e;
                    u = std::clamp(u, 1e-300, 1.0 - 0x1.0p-53);
                    y_[i] = quantile_kernel(u);
                } else {
                    y_[i] = 0.0;
                }
            }
        }
        return {f, comp};
    }

private:
    Eigen::MatrixXd l_;
    double a_;
    std::vector<double> y_;
};

// pr(max > a) = sum_i pr(Y_i > a, Y_j <= a for j < i). Term i conditions on
// Y_i > a first, which keeps every term a smooth function on the cube even when
// the union probability is small.
class TailIntegrand {
public:
    TailIntegrand(const Eigen::MatrixXd& sigma, double a) : a_(a), tail_(norm_sf(a)) {
        const auto m = sigma.rows();
        for (Eigen::Index i = 1; i < m; ++i) {
            Eigen::MatrixXd sub(i + 1, i + 1);
            std::vector<Eigen::Index> idx{i};
            for (Eigen::Index j = 0; j < i; ++j) idx.push_back(j);
            for (Eigen::Index r = 0; r <= i; ++r)
                for (Eigen::Index c = 0; c <= i; ++c) sub(r, c) = sigma(idx[r], idx[c]);
            terms_.push_back(prioritized_cholesky(std::move(sub), a, true));
        }
        y_.resize(static_cast<std::size_t>(m), 0.0);
    }

    [[nodiscard]] int dimension() const { return terms_.empty() ? 0 : static_cast<int>(terms_.back().rows()) - 1; }

    double operator()(const double* w) {
        double total = tail_;
        for (const auto& l : terms_) total += term(l, w);
        return total;
    }

private:
    double term(const Eigen::MatrixXd& l, const double* w) {
        const auto k = l.rows();
        // Upper-tail draw for the leading variable: pr(Y > y0) = w0 * pr(Y > a).
        y_[0] = -quantile_kernel(std::clamp(w[0] * tail_, 1e-300, 0.5));
        double f = tail_;
        for (Eigen::Index r = 1; r < k; ++r) {
            double t = 0.0;
            for (Eigen::Index c = 0; c < r; ++c) t += l(r, c) * y_[c];
            const double diag = l(r, r);
            double e;
            if (diag > 0.0) {
                const double x = (a_ - t) / diag;
                e = norm_cdf(x);
            } else {
                e = t < a_ ? 1.0 : 0.0;
            }
            f *= e;
            if (f <= 0.0) return 0.0;
            if (r + 1 < k) y_[r] = diag > 0.0 ? quantile_kernel(std::clamp(w[r] * e, 1e-300, 1.0 - 0x1.0p-53)) : 0.0;
        }
        return f;
    }

    double a_;
    double tail_;
    std::vector<Eigen::MatrixXd> terms_;
    std::vector<double> y_;
};

double frac(double x) { return x - std::floor(x); }

// Randomly shifted Richtmyer lattices with the baker's transform; points are
// added in doubling passes until the randomization standard error meets tol.
template <class Eval>
OrthantResult integrate_lattice(int dim, double tol, SeedSpec seed, const OrthantOptions& options, Eval&& eval) {
    const int reps = std::max(options.randomizations, 2);
    const auto& gen = lattice_generators();

    std::vector<std::vector<double>> shifts(static_cast<std::size_t>(reps), std::vector<double>(static_cast<std::size_t>(dim)));
    for (int r = 0; r < reps; ++r) {
        Stream rng(seed.with_stream(static_cast<std::uint64_t>(r)));
        for (int d = 0; d < dim; ++d) shifts[r][d] = rng.uniform();
    }

    std::vector<double> sum_value(static_cast<std::size_t>(reps), 0.0);
    std::vector<double> sum_comp(static_cast<std::size_t>(reps), 0.0);
    std::vector<double> w(static_cast<std::size_t>(std::max(dim, 1)), 0.5);
    std::uint64_t done = 0;
    std::uint64_t target = std::max<std::uint64_t>(options.min_points, 1);
    OrthantResult result;
    while (true) {
        // Richtmyer points k * sqrt(prime) are extensible: keep the earlier ones.
        for (int r = 0; r < reps; ++r) {
            for (std::uint64_t k = done + 1; k <= target; ++k) {
                const double kk = static_cast<double>(k);
                for (int d = 0; d < dim; ++d) {
                    const double x = frac(kk * gen[d] + shifts[r][d]);
                    w[d] = 1.0 - std::fabs(2.0 * x - 1.0);  // baker's transform
                }
                const Sample s = eval(w.data());
                sum_value[r] += s.value;
                sum_comp[r] += s.complement;
            }
        }
        done = target;
        double mean_value = 0.0;
        double mean_comp = 0.0;
        for (int r = 0; r < reps; ++r) {
            mean_value += sum_value[r] / done;
            mean_comp += sum_comp[r] / done;
        }
        mean_value /= reps;
        mean_comp /= reps;
        double ss = 0.0;
        for (int r = 0; r < reps; ++r) {
            const double dev = sum_comp[r] / done - mean_comp;
            ss += dev * dev;
        }
        const double se = std::sqrt(ss / (reps - 1.0) / reps);
        result.value = std::clamp(mean_value, 0.0, 1.0);
        result.complement = std::clamp(mean_comp, 0.0, 1.0);
        result.std_error = se;
        result.points_used = done * static_cast<std::uint64_t>(reps);
        result.converged = se <= tol;
        if (result.converged || target >= options.max_points) break;
        target = std::min(target * 2, options.max_points);
    }
    return result;
}

void check_psd(const Eigen::MatrixXd& sigma) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8) throw DomainError("covariance is not positive semidefinite");
}

}  // namespace

OrthantResult mvn_orthant(const CovarianceModel& cov, double a_crit, double tol, SeedSpec seed, const OrthantOptions& options) {
    cov.validate();
    if (!(tol > 0.0 && tol <= 0.01)) throw DomainError("integration tolerance must lie in (0, 0.01]");
    if (cov.m_star() > kMaxOrthantDimension)
        throw DomainError("orthant dimension " + std::to_string(cov.m_star()) + " exceeds " + std::to_string(kMaxOrthantDimension));
    if (std::isnan(a_crit)) throw DomainError("orthant limit is NaN");
    check_psd(cov.sigma);

    if (a_crit == std::numeric_limits<double>::infinity()) return {1.0, 0.0, 0.0, 0, true};
    if (a_crit == -std::numeric_limits<double>::infinity()) return {0.0, 1.0, 0.0, 0, true};

    const Eigen::MatrixXd sigma = collapse_duplicates(cov.sigma);
    if (sigma.rows() == 1) return {norm_cdf(a_crit), norm_sf(a_crit), 0.0, 1, true};

    if (a_crit >= 0.0) {
        TailIntegrand tail(sigma, a_crit);
        return integrate_lattice(tail.dimension(), tol, seed, options, [&](const double* w) {
            const double c = tail(w);
            return Sample{1.0 - c, c};
        });
    }
    OrthantIntegrand integrand(prioritized_cholesky(sigma, a_crit), a_crit);
    return integrate_lattice(integrand.dimension(), tol, seed, options, integrand);
}

double pvalue_from_sigma(const CovarianceModel& cov, double b_sq, int q, double tol, SeedSpec seed) {
    if (!(b_sq >= 0.0)) throw DomainError("b_sq must be nonnegative");
    if (b_sq == 0.0) return 1.0;
    if (cov.m_star() == 1) return chisq_sf(b_sq, q);
    return mvn_orthant(cov, chisq_to_normal(b_sq, q), tol, seed).complement;
}

double critical_a(const CovarianceModel& cov, double alpha, double tol, SeedSpec seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    const int m = cov.m_star();
    if (m == 1) return -norm_quantile(alpha);

    auto excess = [&](double a) { return mvn_orthant(cov, a, tol, seed).complement - alpha; };
    // pr(max > a) lies between the single-coordinate tail and the Bonferroni bound.
    double lo = -norm_quantile(alpha);
    double hi = -norm_quantile(alpha / m);
    double f_lo = excess(lo);
    double f_hi = excess(hi);
    for (int widen = 0; widen < 8 && f_lo < 0.0; ++widen) f_lo = excess(lo -= 0.25);
    for (int widen = 0; widen < 8 && f_hi > 0.0; ++widen) f_hi = excess(hi += 0.25);
    if (f_lo < 0.0 || f_hi > 0.0)
        throw NumericalError("critical value bracket failed: p(" + std::to_string(lo) + ")-alpha=" + std::to_string(f_lo) +
                             ", p(" + std::to_string(hi) + ")-alpha=" + std::to_string(f_hi));
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;

    std::uintmax_t iterations = 60;
    const auto stop = [&](double x, double y) { return std::fabs(x - y) < 1e-10; };
    const auto root = boost::math::tools::toms748_solve(excess, lo, hi, f_lo, f_hi, stop, iterations);
    return 0.5 * (root.first + root.second);
}

double critical_value(const CovarianceModel& cov, double alpha, int q, double tol, SeedSpec seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (cov.m_star() == 1) return chisq_quantile_upper(alpha, q);
    return normal_to_chisq(critical_a(cov, alpha, tol, seed), q);
}

}  // namespace cpinfer
