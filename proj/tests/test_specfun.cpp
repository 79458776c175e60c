#include "doctest.h"
#include "oracles.hpp"

#include <cmath>

#include "cpinfer/errors.hpp"
#include "cpinfer/specfun.hpp"

using namespace cpinfer;

TEST_CASE("norm_cdf reference values") {
    CHECK(norm_cdf(0.0) == 0.5);
    CHECK(norm_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-7));
    CHECK(std::fabs(norm_cdf(-0.7) - (1.0 - norm_cdf(0.7))) < 1e-15);
    for (double x = -8.0; x <= 8.0; x += 0.173) CHECK(std::fabs(norm_cdf(x) - oracle::phi_cdf(x)) < 1e-12);
    CHECK(norm_cdf(-40.0) >= 0.0);
    CHECK(norm_cdf(40.0) == 1.0);
}

TEST_CASE("norm_cdf is strictly increasing on a grid") {
    double prev = norm_cdf(-7.0);
    for (double x = -6.99; x <= 7.0; x += 0.01) {
        const double v = norm_cdf(x);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("norm_quantile inverts norm_cdf") {
    CHECK(norm_quantile(0.5) == 0.0);
    CHECK(norm_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(std::fabs(norm_quantile(norm_cdf(-2.3)) + 2.3) < 1e-9);
    for (double p : {1e-300, 1e-100, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.97575, 0.999, 1.0 - 1e-12}) {
        const double x = norm_quantile(p);
        CHECK(std::fabs(norm_cdf(x) - p) <= 1e-12);
        CHECK(std::fabs(x - oracle::phi_inv(p)) < 1e-9 * std::max(1.0, std::fabs(x)));
    }
    double prev = norm_quantile(1e-6);
    for (double p = 2e-6; p < 1.0; p += 0.0137) {
        CHECK(norm_quantile(p) > prev);
        prev = norm_quantile(p);
    }
}

TEST_CASE("norm_quantile rejects endpoints") {
    CHECK_THROWS_AS(norm_quantile(0.0), DomainError);
    CHECK_THROWS_AS(norm_quantile(1.0), DomainError);
    CHECK_THROWS_AS(norm_quantile(-0.1), DomainError);
    CHECK_THROWS_AS(norm_quantile(1.5), DomainError);
}

TEST_CASE("chisq_cdf examples and closed forms") {
    CHECK(chisq_cdf(0.0, 5) == 0.0);
    CHECK(chisq_cdf(-1.0, 5) == 0.0);
    CHECK(chisq_cdf(3.841459, 1) == doctest::Approx(0.95).epsilon(1e-7));
    CHECK(chisq_cdf(1.3862944, 2) == doctest::Approx(0.5).epsilon(1e-7));
    for (double z = 0.05; z <= 40.0; z += 0.37) {
        CHECK(std::fabs(chisq_cdf(z, 1) - (2.0 * oracle::phi_cdf(std::sqrt(z)) - 1.0)) < 1e-10);
        CHECK(std::fabs(chisq_cdf(z, 2) - (1.0 - std::exp(-z / 2.0))) < 1e-12);
    }
    CHECK_THROWS_AS(chisq_cdf(1.0, 0), DomainError);
}

TEST_CASE("chisq_cdf matches an independent implementation for q up to 50") {
    for (int q = 1; q <= 50; ++q)
        for (double z : {0.01, 0.5, 1.0, 3.0, 10.0, 30.0, 60.0, 100.0, 200.0}) {
            CHECK(std::fabs(chisq_cdf(z, q) - oracle::chi2_cdf(z, q)) < 1e-12);
            const double sf = oracle::chi2_sf(z, q);
            if (sf > 1e-300) CHECK(std::fabs(chisq_sf(z, q) - sf) <= 1e-10 * sf);
        }
}

TEST_CASE("chisq_cdf is monotone in z and in q") {
    for (int q = 1; q <= 50; ++q) {
        double prev = 0.0;
        for (double z = 0.1; z < 120.0; z += 0.5) {
            const double v = chisq_cdf(z, q);
            CHECK(v >= prev);
            prev = v;
            if (q > 1) CHECK(v <= chisq_cdf(z, q - 1));
        }
    }
}

TEST_CASE("chi-square to normal transform") {
    CHECK(chisq_to_normal(0.0, 5) == -INFINITY);
    for (int q : {1, 5, 50})
        for (double z : {0.3, 2.0, 7.5, 25.0, 90.0}) {
            const double x = chisq_to_normal(z, q);
            const double expected = oracle::chi2_cdf(z, q) < 0.5 ? oracle::phi_inv(oracle::chi2_cdf(z, q)) : -oracle::phi_inv(oracle::chi2_sf(z, q));
            CHECK(x == doctest::Approx(expected).epsilon(1e-9));
            CHECK(normal_to_chisq(x, q) == doctest::Approx(z).epsilon(1e-10));
        }
    CHECK(chisq_quantile_upper(0.05, 1) == doctest::Approx(3.841458820694124).epsilon(1e-12));
    CHECK(chisq_quantile_upper(1e-10, 5) == doctest::Approx(boost::math::quantile(boost::math::complement(boost::math::chi_squared_distribution<>(5), 1e-10))).epsilon(1e-10));
}

TEST_CASE("log_gamma_half matches lgamma") {
    for (int q = 1; q <= 60; ++q) CHECK(log_gamma_half(q) == doctest::Approx(std::lgamma(q / 2.0)).epsilon(1e-13));
}
