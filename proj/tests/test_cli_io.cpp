#include "doctest.h"
#include "oracles.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cpinfer/csv_io.hpp"
#include "cpinfer/detect.hpp"
#include "cpinfer/errors.hpp"
#include "cpinfer/model_sim.hpp"

using namespace cpinfer;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) { return (fs::temp_directory_path() / ("cpinfer_test_" + name)).string(); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FeatureTable table_from(const FeatureMatrix& y, bool dates) {
    FeatureTable t;
    t.values = y;
    for (int i = 0; i < y.q(); ++i) t.features.push_back("f" + std::to_string(i + 1));
    if (dates) {
        t.date_header = "date";
        for (int j = 0; j < y.n(); ++j) t.dates.push_back("2020-01-" + std::to_string(j + 1));
    }
    return t;
}

DetectOptions quick_options(std::vector<std::string> methods) {
    DetectOptions o;
    o.window = {0, 6};
    o.methods = std::move(methods);
    o.budgets.cov_replicates = 2000;
    o.budgets.mc_replicates = 2000;
    o.competitor_replicates = 2000;
    o.seed = {3, 0};
    return o;
}

}  // namespace

TEST_CASE("wide CSV with a date column") {
    const auto y = gen_null(7, 39, {1, 1});
    const auto path = temp_path("wide.csv");
    save_csv(path, table_from(y, true));
    const auto t = load_csv(path);
    CHECK(t.values.q() == 7);
    CHECK(t.values.n() == 39);
    CHECK(t.values == y);
    CHECK(t.dates.size() == 39);
    CHECK(t.dates[3] == "2020-01-4");
    CHECK(t.features[6] == "f7");
    fs::remove(path);
}

TEST_CASE("CSV without a date column round-trips") {
    const auto y = gen_null(3, 10, {2, 2});
    const auto path = temp_path("nodate.csv");
    save_csv(path, table_from(y, false));
    const auto t = load_csv(path);
    CHECK(t.dates.empty());
    CHECK(t.values == y);
    fs::remove(path);
}

TEST_CASE("CSV errors name the row and column") {
    const auto path = temp_path("bad.csv");
    write_text(path, "day,a,b\n1,0.5,1\n2,,3\n3,1,2\n");
    try {
        load_csv(path);
        FAIL("expected an InputError");
    } catch (const InputError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("column") != std::string::npos);
    }
    write_text(path, "day,a,b\n1,0.5,1\n2,x,3\n");
    CHECK_THROWS_AS(load_csv(path), InputError);
    write_text(path, "a,b\n1,2\n");
    CHECK_THROWS_AS(load_csv(path), InputError);
    write_text(path, "a,b\n1,2\n3\n");
    CHECK_THROWS_AS(load_csv(path), InputError);
    CHECK_THROWS_AS(load_csv(temp_path("missing.csv")), InputError);
    fs::remove(path);
}

TEST_CASE("standardization uses the baseline sample deviation") {
    RowMatrix m(2, 6);
    m << 1, 2, 3, 4, 50, 60,  //
        2, 2, 2, 4, 7, 1;
    const auto st = standardize(FeatureMatrix(m), 4);
    CHECK(st.scales[0] == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(st.values(0, 4) == doctest::Approx(50.0 / std::sqrt(5.0 / 3.0)));
    CHECK(st.baseline_end == 4);
    CHECK_THROWS_AS(standardize(FeatureMatrix(m), 3), InputError);  // feature 2 is constant over 1..3
    CHECK_THROWS_AS(standardize(FeatureMatrix(m), 7), InputError);
    CHECK_THROWS_AS(standardize(FeatureMatrix(m), 1), InputError);
}

TEST_CASE("detect finds a planted change") {
    const int n = 39;
    const auto y = gen_alt(7, n, {n - 2, std::vector<double>(7, 3.0), {}}, {4, 4});
    const auto rep = detect(table_from(y, true), quick_options(all_detect_methods()), "planted");
    CHECK(rep.scan.khat == n - 2);
    CHECK(rep.khat_date == "2020-01-37");
    CHECK(rep.pvalues.size() == 6);
    for (const auto& p : rep.pvalues) {
        if (p.method == "lrt-asymptotic") {
            CHECK_FALSE(p.p_value.has_value());
            CHECK(p.note == "requires m0 >= 1");
        } else if (p.method.rfind("lrt", 0) == 0) {
            REQUIRE(p.p_value.has_value());
            CHECK(*p.p_value < 0.001);
        }
    }
    for (const auto& f : rep.features) CHECK(f.post_mean > f.pre_mean);

    const auto j = nlohmann::ordered_json::parse(to_json(rep));
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"source", "n", "q", "window", "scan", "pvalues", "features", "standardization", "settings"});
    CHECK(j["scan"]["khat"] == n - 2);
    CHECK(j["pvalues"]["lrt-asymptotic"]["p_value"].is_null());
    CHECK(j["pvalues"]["lrt-empirical"]["p_value"].get<double>() < 0.001);
}

TEST_CASE("detect p-values ignore positive affine rescaling of features") {
    const auto y = gen_alt(4, 40, {37, {1, 1, 1, 1}, {}}, {5, 5});
    RowMatrix s = y.values();
    s.row(0) = s.row(0).array() * 7.0 + 3.0;
    s.row(2) = s.row(2).array() * 0.01 - 100.0;
    const auto o = quick_options({"lrt-empirical", "lrt-firstorder", "hotelling"});
    const auto a = detect(table_from(y, false), o);
    const auto b = detect(table_from(FeatureMatrix(s), false), o);
    CHECK(a.scan.khat == b.scan.khat);
    CHECK(a.scan.q_stat == doctest::Approx(b.scan.q_stat).epsilon(1e-10));
    for (std::size_t i = 0; i < a.pvalues.size(); ++i) CHECK(*a.pvalues[i].p_value == doctest::Approx(*b.pvalues[i].p_value).epsilon(1e-6));
}

TEST_CASE("detect on null data rejects at roughly the nominal rate") {
    int small = 0;
    auto o = quick_options({"lrt-empirical"});
    o.budgets.mc_replicates = 100;
    for (std::uint64_t r = 0; r < 200; ++r) {
        o.seed = {100 + r, 0};
        const auto rep = detect(table_from(gen_null(7, 39, {6, r}), false), o);
        if (*rep.pvalues[0].p_value < 0.05) ++small;
    }
    CHECK(small >= 2);
    CHECK(small <= 18);
}

TEST_CASE("detect rejects bad options") {
    const auto t = table_from(gen_null(2, 20, {1, 0}), false);
    CHECK_THROWS_AS(detect(t, quick_options({"nonsense"})), InputError);
    auto o = quick_options({"lrt-firstorder"});
    o.window = {0, 20};
    CHECK_THROWS_AS(detect(t, o), DomainError);
}

#ifdef CPINFER_CLI_PATH
namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CPINFER_CLI_PATH) + " " + args + " >" + temp_path("cli.out") + " 2>" + temp_path("cli.err");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("CLI exit codes and outputs") {
    const auto data = temp_path("cli_data.csv");
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("") == 2);
    CHECK(run_cli("detect " + temp_path("does_not_exist.csv")) == 2);
    CHECK(run_cli("simulate --q 3 --n 30 --k 27 --delta 2 --seed 5 --out " + data) == 0);
    CHECK(run_cli("detect " + data + " --m1 40") == 2);
    CHECK(run_cli("detect " + data + " --methods bogus") == 2);
    CHECK(run_cli("detect " + data + " --reps 1000 --methods lrt-empirical,hotelling") == 0);
    const auto j = nlohmann::json::parse(read_text(temp_path("cli.out")));
    CHECK(j["q"] == 3);
    CHECK(j["n"] == 30);
    CHECK(j["pvalues"].size() == 2);
    CHECK(run_cli("calibrate --method hotelling --q 3 --n 30 --reps 2000") == 0);
    CHECK(read_text(temp_path("cli.out")).find("threshold=") != std::string::npos);
    CHECK(run_cli("calibrate --method hotelling --q 3 --n 30 --reps 100") == 2);
    CHECK(run_cli("table1 --cells 5,30 --reps 100 --cov-reps 500") == 0);
    CHECK(read_text(temp_path("cli.out")).rfind("q,n,m0,m1,method", 0) == 0);
    fs::remove(data);
}
#endif
