#include "doctest.h"
#include "oracles.hpp"

#include <map>

#include "cpinfer/errors.hpp"
#include "cpinfer/lrt_scan.hpp"
#include "cpinfer/model_sim.hpp"
#include "cpinfer/specfun.hpp"

using namespace cpinfer;

TEST_CASE("u_stat examples") {
    const std::vector<double> c(9, 3.7);
    for (int k = 1; k <= 8; ++k) CHECK(u_stat(c, k) == 0.0);
    const std::vector<double> y{0, 0, 0, 2};
    CHECK(u_stat(y, 2) == doctest::Approx(1.0).epsilon(1e-14));
    const std::vector<double> neg{0, 0, 0, -2};
    CHECK(u_stat(neg, 3) == -u_stat(y, 3));
    CHECK_THROWS_AS(u_stat(y, 0), DomainError);
    CHECK_THROWS_AS(u_stat(y, 4), DomainError);
}

TEST_CASE("u_stat agrees with the direct formula") {
    const auto y = gen_null(1, 37, {4, 4});
    const std::vector<double> row(y.row(0).begin(), y.row(0).end());
    for (int k = 1; k < 37; ++k) CHECK(u_stat(row, k) == doctest::Approx(oracle::u_direct(row, k)).epsilon(1e-12));
}

TEST_CASE("z_stat sums squared u_stat") {
    const auto y = gen_null(1, 12, {1, 1});
    CHECK(z_stat(y, 5) == doctest::Approx(std::pow(u_stat(y.row(0), 5), 2)));
    CHECK(z_stat(FeatureMatrix(3, 12), 4) == 0.0);
    const auto y3 = gen_null(3, 12, {1, 2});
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) sum += std::pow(u_stat(y3.row(i), 7), 2);
    CHECK(z_stat(y3, 7) == doctest::Approx(sum));
}

TEST_CASE("scan window offsets") {
    ScanWindow w{0, 6};
    CHECK(w.first_offset() == 1);
    CHECK(w.m_star() == 6);
    CHECK(w.offsets() == std::vector<int>{1, 2, 3, 4, 5, 6});
    ScanWindow v{3, 5};
    CHECK(v.m_star() == 3);
    CHECK_THROWS_AS(ScanWindow({0, 6}).validate(6), DomainError);
    CHECK_NOTHROW(ScanWindow({0, 6}).validate(7));
    CHECK_THROWS_AS(ScanWindow({4, 4}).validate(20), DomainError);
}

TEST_CASE("scan of a constant matrix") {
    RowMatrix c = RowMatrix::Constant(4, 20, 2.5);
    const auto r = scan(FeatureMatrix(c), {0, 6});
    CHECK(r.q_stat == 0.0);
    for (double z : r.z) CHECK(z == 0.0);
    CHECK(r.khat == 19);  // ties go to the most recent change point
}

TEST_CASE("scan agrees with z_stat and the transform") {
    const auto y = gen_null(5, 40, {8, 0});
    const ScanWindow w{2, 9};
    const auto r = scan(y, w);
    CHECK(r.m_star == 8);
    for (int idx = 0; idx < r.m_star; ++idx) {
        const int k = 40 - r.offset_at(idx);
        CHECK(r.z[idx] == doctest::Approx(z_stat(y, k)).epsilon(1e-12));
        CHECK(r.z_star[idx] == doctest::Approx(norm_quantile(chisq_cdf(r.z[idx], 5))).epsilon(1e-9));
        CHECK(r.z[idx] >= 0.0);
    }
    CHECK(r.q_stat == *std::max_element(r.z.begin(), r.z.end()));
    CHECK(r.q_star == doctest::Approx(norm_quantile(chisq_cdf(r.q_stat, 5))).epsilon(1e-9));
    CHECK(z_stat(y, r.khat) == doctest::Approx(r.q_stat));
    CHECK_THROWS_AS(scan(y, {0, 40}), DomainError);
}

TEST_CASE("z_star arg-max equals z arg-max") {
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto r = scan(gen_null(3, 25, {s, 9}), {0, 6});
        const auto iz = std::max_element(r.z.begin(), r.z.end()) - r.z.begin();
        const auto is = std::max_element(r.z_star.begin(), r.z_star.end()) - r.z_star.begin();
        CHECK(iz == is);
    }
}

TEST_CASE("scan is location invariant") {
    const auto y = gen_null(3, 30, {2, 2});
    RowMatrix shifted = y.values();
    shifted.row(0).array() += 1.0;
    shifted.row(1).array() -= 3.25;
    shifted.row(2).array() += 0.5;
    const auto a = scan(y, {0, 6});
    const auto b = scan(FeatureMatrix(shifted), {0, 6});
    for (int i = 0; i < a.m_star; ++i) CHECK(a.z[i] == doctest::Approx(b.z[i]).epsilon(1e-12));
    CHECK(a.khat == b.khat);
}

TEST_CASE("rejection via Q and via Q* agree") {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto r = scan(gen_null(5, 30, {s, 3}), {0, 6});
        for (double b_sq : {5.0, 10.0, 14.0, 20.0}) {
            const bool by_q = r.q_stat >= b_sq;
            const bool by_star = r.q_star >= norm_quantile(chisq_cdf(b_sq, 5));
            CHECK(by_q == by_star);
        }
    }
}

TEST_CASE("planted change is located") {
    std::map<int, int> counts;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto y = gen_alt(10, 100, {95, std::vector<double>(10, 0.5), {}}, {s, 21});
        ++counts[scan(y, {0, 6}).khat];
    }
    const auto mode = std::max_element(counts.begin(), counts.end(), [](auto a, auto b) { return a.second < b.second; });
    CHECK(mode->first == 95);
}

TEST_CASE("null sampler matches the full-data scan in distribution") {
    const int q = 4, n = 50;
    const ScanWindow w{0, 5};
    const int reps = 20000;
    NullScanSampler sampler(q, n, w);
    std::vector<std::vector<double>> fast(5), full(5);
    for (int r = 0; r < reps; ++r) {
        const auto z = sampler.draw_z({17, static_cast<std::uint64_t>(r)});
        const auto s = scan(gen_null(q, n, {18, static_cast<std::uint64_t>(r)}), w);
        for (int i = 0; i < 5; ++i) {
            fast[i].push_back(z[i]);
            full[i].push_back(s.z[i]);
        }
    }
    for (int i = 0; i < 5; ++i) {
        CHECK(oracle::sample_mean(fast[i]) == doctest::Approx(q).epsilon(0.03));
        CHECK(oracle::ks_statistic(fast[i], [&](double z) { return oracle::chi2_cdf(z, q); }) < 0.015);
    }
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j) CHECK(std::fabs(oracle::sample_cor(fast[i], fast[j]) - oracle::sample_cor(full[i], full[j])) < 0.04);
}
