#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cpinfer/errors.hpp"
#include "cpinfer/experiments.hpp"

using namespace cpinfer;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string manifest_value(const Manifest& m, const std::string& key) {
    for (const auto& [k, v] : m)
        if (k == key) return v;
    return {};
}

}  // namespace

TEST_CASE("sqrt window rounding") {
    CHECK(sqrt_window(1000) == ScanWindow{16, 32});
    CHECK(sqrt_window(30) == ScanWindow{3, 5});
    CHECK(sqrt_window(100) == ScanWindow{5, 10});
    CHECK(sqrt_window(365) == ScanWindow{10, 19});
    CHECK(table1_grid().size() == 24);
}

TEST_CASE("number formatting round-trips") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 12345678.9, -0.0}) CHECK(std::stod(format_number(x)) == x);
    CHECK(format_number(0.05) == "0.05");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(INFINITY) == "inf");
}

TEST_CASE("table1 small run") {
    Table1Config cfg;
    cfg.cells = {{5, 30, {0, 6}}};
    cfg.replicates = 400;
    cfg.cov_replicates = 2000;
    const auto out = run_table1(cfg);
    CHECK(out.table.header.front() == "q");
    CHECK(out.table.rows.size() == 4);
    for (const auto& row : out.table.rows) {
        CHECK(row.size() == out.table.header.size());
        const double est = std::stod(row[5]);
        CHECK(est >= 0.0);
        CHECK(est <= 1.0);
    }
    CHECK(manifest_value(out.manifest, "master_seed") == "20190101");
    CHECK_FALSE(manifest_value(out.manifest, "asymptotic_m0_clamp").empty());

    cfg.workers = 3;
    CHECK(run_table1(cfg).table.str() == out.table.str());

    cfg.cells = {{5, 30, {0, 30}}};
    CHECK_THROWS_AS(run_table1(cfg), DomainError);
}

TEST_CASE("fig1 small run") {
    Fig1Config cfg;
    cfg.p_targets = {0.001};
    cfg.m1_values = {3};
    cfg.b_values = {100};
    cfg.repetitions = 20;
    cfg.reference_replicates = 20000;
    cfg.ca_samples = 400000;
    const auto out = run_fig1(cfg);
    bool saw_tilde = false;
    const auto& h = out.table.header;
    const auto col = [&](const char* name) { return static_cast<std::size_t>(std::find(h.begin(), h.end(), name) - h.begin()); };
    for (const auto& row : out.table.rows) {
        if (row[col("method")] == "p_tilde") {
            saw_tilde = true;
            // B * 1.05e-3 < 1, so p_tilde is never inside the band.
            CHECK(std::stod(row[col("estimate")]) == 0.0);
        }
    }
    CHECK(saw_tilde);
    cfg.workers = 2;
    CHECK(run_fig1(cfg).table.str() == out.table.str());
}

TEST_CASE("fig2 small run") {
    Fig2Config cfg;
    cfg.q_values = {10};
    cfg.kappas = {2.0};
    cfg.change_offsets = {1, 6};
    cfg.replicates = 50;
    cfg.calibration_replicates = 1000;
    cfg.cov_replicates = 1000;
    const auto out = run_fig2(cfg);
    CHECK(out.table.rows.size() == 2 * 3);
    cfg.workers = 2;
    CHECK(run_fig2(cfg).table.str() == out.table.str());
}

TEST_CASE("experiment files") {
    ExperimentOutput out;
    out.table.header = {"a", "b"};
    out.table.rows = {{"1", "x"}, {"2.5", "y"}};
    out.manifest = {{"seed", "4"}};
    const auto path = (std::filesystem::temp_directory_path() / "cpinfer_exp_test.csv").string();
    write_experiment(out, path);
    CHECK(slurp(path) == "a,b\n1,x\n2.5,y\n");
    CHECK(slurp(path + ".manifest") == "seed=4\n");
    std::filesystem::remove(path);
    std::filesystem::remove(path + ".manifest");
}
