#include "doctest.h"
#include "oracles.hpp"

#include "cpinfer/errors.hpp"
#include "cpinfer/model_sim.hpp"
#include "cpinfer/rng.hpp"

using namespace cpinfer;

TEST_CASE("gen_null is a pure function of the seed") {
    const SeedSpec s{42, 7};
    CHECK(gen_null(2, 10, s) == gen_null(2, 10, s));
    CHECK_FALSE(gen_null(2, 10, s) == gen_null(2, 10, s.with_stream(8)));
    CHECK_FALSE(gen_null(2, 10, s) == gen_null(2, 10, {43, 7}));
}

TEST_CASE("gen_null rows have mean 0 and variance 1") {
    const int n = 100000;
    const auto y = gen_null(5, n, {3, 0});
    for (int i = 0; i < 5; ++i) {
        const auto row = y.row(i);
        const std::vector<double> v(row.begin(), row.end());
        CHECK(std::fabs(oracle::sample_mean(v)) < 0.02);
        CHECK(std::fabs(oracle::sample_var(v) - 1.0) < 0.02);
    }
}

TEST_CASE("gen_null marginal distribution is standard normal") {
    const auto y = gen_null(1, 100000, {5, 1});
    const auto row = y.row(0);
    CHECK(oracle::ks_statistic({row.begin(), row.end()}, oracle::phi_cdf) < 0.01);
}

TEST_CASE("gen_alt places the shift strictly after day k") {
    const SeedSpec s{11, 2};
    const auto base = gen_null(1, 4, s);
    const auto alt = gen_alt(1, 4, {2, {10.0}, {}}, s);
    CHECK(alt(0, 0) - base(0, 0) == 0.0);
    CHECK(alt(0, 1) - base(0, 1) == 0.0);
    CHECK(alt(0, 2) - base(0, 2) == doctest::Approx(10.0));
    CHECK(alt(0, 3) - base(0, 3) == doctest::Approx(10.0));
}

TEST_CASE("gen_alt with zero deltas equals gen_null") {
    const SeedSpec s{12, 0};
    CHECK(gen_alt(3, 20, {5, {0.0, 0.0, 0.0}, {}}, s) == gen_null(3, 20, s));
}

TEST_CASE("gen_alt adds baseline means") {
    const SeedSpec s{12, 3};
    const auto base = gen_null(2, 6, s);
    const auto alt = gen_alt(2, 6, {3, {1.0, -2.0}, {5.0, 0.5}}, s);
    CHECK(alt(0, 0) == doctest::Approx(base(0, 0) + 5.0));
    CHECK(alt(1, 5) == doctest::Approx(base(1, 5) + 0.5 - 2.0));
}

TEST_CASE("gen_alt segment means reflect the shift") {
    const int n = 50000, k = 25000;
    const auto y = gen_alt(3, n, {k, {0.5, 0.5, 0.5}, {}}, {9, 0});
    for (int i = 0; i < 3; ++i) {
        double pre = 0.0, post = 0.0;
        for (int j = 0; j < k; ++j) pre += y(i, j);
        for (int j = k; j < n; ++j) post += y(i, j);
        CHECK(std::fabs(post / (n - k) - (pre / k + 0.5)) < 0.03);
    }
}

TEST_CASE("gen_alt validates its specification") {
    CHECK_THROWS_AS(gen_alt(1, 4, {0, {1.0}, {}}, {}), DomainError);
    CHECK_THROWS_AS(gen_alt(1, 4, {4, {1.0}, {}}, {}), DomainError);
    CHECK_THROWS_AS(gen_alt(2, 4, {2, {1.0}, {}}, {}), DomainError);
    CHECK_THROWS_AS(gen_null(0, 4, {}), DomainError);
    CHECK_THROWS_AS(gen_null(1, 1, {}), DomainError);
}

TEST_CASE("streams with different ids are uncorrelated") {
    Stream a(SeedSpec{77, 0}), b(SeedSpec{77, 1});
    std::vector<double> xs, ys;
    for (int i = 0; i < 100000; ++i) {
        xs.push_back(a.normal());
        ys.push_back(b.normal());
    }
    CHECK(std::fabs(oracle::sample_cor(xs, ys)) < 0.02);
}

TEST_CASE("fork gives distinct reproducible masters") {
    const SeedSpec s{5, 0};
    CHECK(s.fork(1) == s.fork(1));
    CHECK_FALSE(s.fork(1) == s.fork(2));
    CHECK(s.fork(1).stream_id == 0);
    Stream u(s);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}
