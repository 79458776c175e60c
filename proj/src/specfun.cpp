#include "cpinfer/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cpinfer/errors.hpp"

namespace cpinfer {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 10000;

// Series for P(s, x); converges quickly for x < s + 1.
double gamma_p_series(double s, double x, double log_gamma_s) {
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < kMaxIter; ++n) {
        term *= x / (s + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps) break;
    }
    return sum * std::exp(-x + s * std::log(x) - log_gamma_s);
}

// Modified Lentz continued fraction for Q(s, x); used for x >= s + 1.
double gamma_q_fraction(double s, double x, double log_gamma_s) {
    double b = x + 1.0 - s;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) break;
    }
    return std::exp(-x + s * std::log(x) - log_gamma_s) * h;
}

struct GammaPair {
    double lower;
    double upper;
};

GammaPair incomplete_gamma(double s, double x, double log_gamma_s) {
    if (x <= 0.0) return {0.0, 1.0};
    if (x < s + 1.0) {
        const double p = gamma_p_series(s, x, log_gamma_s);
        return {p, 1.0 - p};
    }
    const double q = gamma_q_fraction(s, x, log_gamma_s);
    return {1.0 - q, q};
}

void check_dof(int q) {
    if (q < 1) throw DomainError("chi-square degrees of freedom must be >= 1");
}

double chisq_log_pdf(double z, int q, double log_gamma_s) {
    const double s = 0.5 * q;
    return (s - 1.0) * std::log(z) - 0.5 * z - s * std::numbers::ln2 - log_gamma_s;
}

// Solves F(z) = prob (upper == false) or 1 - F(z) = prob (upper == true) by a
// safeguarded Newton iteration on the log of the targeted tail.
double chisq_inverse(double prob, int q, bool upper) {
    check_dof(q);
    if (!(prob > 0.0 && prob < 1.0)) throw DomainError("chi-square quantile needs a probability in (0, 1)");
    const double lgs = log_gamma_half(q);
    const double s = 0.5 * q;
    const double target = std::log(prob);
    auto tail_log = [&](double z) {
        const auto g = incomplete_gamma(s, 0.5 * z, lgs);
        return std::log(upper ? g.upper : g.lower);
    };

    // Wilson-Hilferty starting point.
    const double xn = upper ? -norm_quantile(prob) : norm_quantile(prob);
    const double k = 2.0 / (9.0 * q);
    double z = q * std::pow(std::max(1.0 - k + xn * std::sqrt(k), 0.05), 3.0);

    double lo = 0.0;
    double hi = std::max(2.0 * z, 1.0);
    // tail_log is decreasing in z for the upper tail, increasing for the lower.
    auto above = [&](double v) { return upper ? v > target : v < target; };
    while (above(tail_log(hi))) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw NumericalError("chi-square quantile bracket failed");
    }
    if (!(z > lo && z < hi)) z = 0.5 * (lo + hi);

    for (int it = 0; it < 200; ++it) {
        const double f = tail_log(z) - target;
        if (above(f + target)) lo = z; else hi = z;
        // d/dz log tail = +/- pdf / tail
        const auto g = incomplete_gamma(s, 0.5 * z, lgs);
        const double t = upper ? g.upper : g.lower;
        const double dlog = (upper ? -1.0 : 1.0) * std::exp(chisq_log_pdf(z, q, lgs)) / t;
        double next = z - f / dlog;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        if (std::fabs(next - z) <= 1e-15 * std::max(1.0, z)) return next;
        z = next;
        if (hi - lo <= 1e-15 * std::max(1.0, z)) break;
    }
    return z;
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

double norm_sf(double x) { return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2); }

double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("norm_quantile requires 0 < p < 1");
    // 1 - p is exact for p >= 0.5, so the lower-tail kernel serves both halves.
    if (p > 0.5) return -norm_quantile(1.0 - p);

    // Acklam's rational approximation (relative error ~1.2e-9) ...
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double r = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
            ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
    } else {
        const double r0 = p - 0.5;
        const double r = r0 * r0;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * r0 /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }

    // ... refined by one Halley step against norm_cdf.
    const double density = norm_pdf(x);
    if (density > 0.0) {
        const double u = (norm_cdf(x) - p) / density;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double log_gamma_half(int q) {
    if (q < 1) throw DomainError("log_gamma_half requires q >= 1");
    double acc = 0.0;
    if (q % 2 == 0) {
        for (int i = 2; i < q / 2; ++i) acc += std::log(static_cast<double>(i));
        return acc;
    }
    acc = 0.5 * std::log(std::numbers::pi);
    for (int i = 0; i < q / 2; ++i) acc += std::log(i + 0.5);
    return acc;
}

double chisq_cdf(double z, int q) {
    check_dof(q);
    if (std::isnan(z)) throw DomainError("chisq_cdf argument is NaN");
    if (z <= 0.0) return 0.0;
    if (std::isinf(z)) return 1.0;
    return incomplete_gamma(0.5 * q, 0.5 * z, log_gamma_half(q)).lower;
}

double chisq_sf(double z, int q) {
    check_dof(q);
    if (std::isnan(z)) throw DomainError("chisq_sf argument is NaN");
    if (z <= 0.0) return 1.0;
    if (std::isinf(z)) return 0.0;
    return incomplete_gamma(0.5 * q, 0.5 * z, log_gamma_half(q)).upper;
}

double chisq_quantile_upper(double tail, int q) { return chisq_inverse(tail, q, true); }

double chisq_to_normal(double z, int q) {
    check_dof(q);
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (z <= 0.0) return -inf;
    if (std::isinf(z)) return inf;
    const auto g = incomplete_gamma(0.5 * q, 0.5 * z, log_gamma_half(q));
    if (g.lower < 0.5) return g.lower > 0.0 ? norm_quantile(g.lower) : -inf;
    return g.upper > 0.0 ? -norm_quantile(g.upper) : inf;
}

double normal_to_chisq(double x, int q) {
    check_dof(q);
    if (std::isnan(x)) throw DomainError("normal_to_chisq argument is NaN");
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    if (x == std::numeric_limits<double>::infinity()) return std::numeric_limits<double>::infinity();
    if (x <= 0.0) {
        const double p = norm_cdf(x);
        if (p <= 0.0) return 0.0;
        return chisq_inverse(p, q, false);
    }
    const double tail = norm_sf(x);
    if (tail <= 0.0) return std::numeric_limits<double>::infinity();
    return chisq_inverse(tail, q, true);
}

}  // namespace cpinfer
