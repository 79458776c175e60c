#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cpinfer/competitors.hpp"
#include "cpinfer/csv_io.hpp"
#include "cpinfer/detect.hpp"
#include "cpinfer/errors.hpp"
#include "cpinfer/experiments.hpp"
#include "cpinfer/model_sim.hpp"
#include "cpinfer/mvn_tail.hpp"
#include "cpinfer/null_cov.hpp"

using namespace cpinfer;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Common {
    int m0 = 0;
    int m1 = 6;
    std::uint64_t seed = 1;
    std::uint64_t reps = 0;  // 0 keeps the subcommand default
    double alpha = 0.05;
    std::string cov = "empirical";
    double kappa = 2.0;
    double target = 0.0;
    std::string out;
    int threads = 1;
};

void add_common(CLI::App* app, Common& c, bool window = true) {
    if (window) {
        app->add_option("--m0", c.m0, "smallest offset from the end of the series (0 means 1)")->capture_default_str();
        app->add_option("--m1", c.m1, "largest offset from the end of the series")->capture_default_str();
    }
    app->add_option("--seed", c.seed, "master seed")->capture_default_str();
    app->add_option("--reps", c.reps, "replicate budget (subcommand specific)");
    app->add_option("--alpha", c.alpha, "significance level")->capture_default_str();
    app->add_option("--cov", c.cov, "covariance estimate")->check(CLI::IsMember({"empirical", "firstorder"}))->capture_default_str();
    app->add_option("--kappa", c.kappa, "MCUSUM shrinkage threshold")->capture_default_str();
    app->add_option("--target", c.target, "MCUSUM drift target")->capture_default_str();
    app->add_option("--out", c.out, "output path (stdout when empty)");
    app->add_option("--threads", c.threads, "worker threads")->capture_default_str();
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path);
    f << text;
}

void emit_experiment(const ExperimentOutput& out, const std::string& path) {
    if (path.empty()) {
        std::cout << out.table.str();
        for (const auto& [k, v] : out.manifest) std::cerr << k << '=' << v << '\n';
        return;
    }
    write_experiment(out, path);
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::istringstream is(item);
        T v{};
        if (!(is >> v)) throw InputError("cannot parse list item '" + item + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<Table1Cell> parse_cells(const std::string& text) {
    if (text == "full") return table1_grid();
    if (text == "desk")
        return {{5, 30, {0, 6}}, {5, 100, {0, 6}}, {10, 30, {0, 6}}, {10, 100, {0, 6}}, {5, 1000, sqrt_window(1000)}};
    std::vector<Table1Cell> cells;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto parts = parse_list<int>(item);
        if (parts.size() == 2)
            cells.push_back({parts[0], parts[1], sqrt_window(parts[1])});
        else if (parts.size() == 4)
            cells.push_back({parts[0], parts[1], {parts[2], parts[3]}});
        else
            throw InputError("cell '" + item + "' must be q,n (sqrt window) or q,n,m0,m1");
    }
    return cells;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multivariate change point detection with non-asymptotic p-values"};
    app.require_subcommand(1);

    Common det_c;
    std::string input;
    std::string methods;
    int baseline_end = 0;
    bool whole_series = false;
    double tol = kDefaultTol;
    auto* det = app.add_subcommand("detect", "scan a wide CSV (one row per day) for a recent change point");
    add_common(det, det_c);
    det->add_option("input", input, "CSV file")->required();
    det->add_option("--methods", methods, "comma list of lrt-empirical,lrt-firstorder,lrt-asymptotic,lrt-montecarlo,hotelling,mcusum");
    det->add_option("--baseline-end", baseline_end, "last day of the standardization baseline (default n - m1)");
    det->add_flag("--whole-series", whole_series, "standardize over every day");
    det->add_option("--tol", tol, "integration tolerance")->capture_default_str();

    Common sim_c;
    int sim_q = 5, sim_n = 100, sim_k = 0;
    double sim_delta = 0.0;
    auto* sim = app.add_subcommand("simulate", "write a simulated feature matrix as CSV");
    add_common(sim, sim_c, false);
    sim->add_option("--q", sim_q, "features")->capture_default_str();
    sim->add_option("--n", sim_n, "days")->capture_default_str();
    sim->add_option("--k", sim_k, "change after day k (0 for none)")->capture_default_str();
    sim->add_option("--delta", sim_delta, "mean shift in every feature")->capture_default_str();

    Common t1_c;
    std::string cells = "desk";
    std::uint64_t cov_reps = 10000;
    auto* t1 = app.add_subcommand("table1", "type I error of the three p-value methods");
    add_common(t1, t1_c, false);
    t1->add_option("--cells", cells, "full, desk, or q,n[,m0,m1];...")->capture_default_str();
    t1->add_option("--cov-reps", cov_reps, "replicates for the empirical Sigma")->capture_default_str();

    Common f1_c;
    std::string p_values = "0.05,0.001", m1_values = "3,6", b_values;
    std::uint64_t ref_reps = 1000000;
    int f1_q = 5, f1_n = 100;
    auto* f1 = app.add_subcommand("fig1", "accuracy of p_hat and p_tilde against B");
    add_common(f1, f1_c, false);
    f1->add_option("--p-values", p_values)->capture_default_str();
    f1->add_option("--m1-values", m1_values)->capture_default_str();
    f1->add_option("--b-values", b_values, "comma list (default 50..50000)");
    f1->add_option("--ref-reps", ref_reps, "replicates for the reference Sigma")->capture_default_str();
    f1->add_option("--q", f1_q)->capture_default_str();
    f1->add_option("--n", f1_n)->capture_default_str();

    Common f2_c;
    std::string q_values = "10,20", kappas = "2,3";
    double f2_delta = 0.5;
    std::uint64_t calib_reps = 10000;
    auto* f2 = app.add_subcommand("fig2", "power of the LRT, Hotelling scan and MCUSUM");
    add_common(f2, f2_c);
    f2->add_option("--q-values", q_values)->capture_default_str();
    f2->add_option("--kappas", kappas, "overrides --kappa with a list")->capture_default_str();
    f2->add_option("--delta", f2_delta)->capture_default_str();
    f2->add_option("--calib-reps", calib_reps, "null replicates for thresholds")->capture_default_str();

    Common cal_c;
    std::string cal_method = "lrt";
    int cal_q = 5, cal_n = 100;
    auto* cal = app.add_subcommand("calibrate", "level-alpha threshold for one method");
    add_common(cal, cal_c);
    cal->add_option("--method", cal_method)->check(CLI::IsMember({"lrt", "hotelling", "mcusum"}))->capture_default_str();
    cal->add_option("--q", cal_q)->capture_default_str();
    cal->add_option("--n", cal_n)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (det->parsed()) {
            DetectOptions o;
            o.window = {det_c.m0, det_c.m1};
            if (!methods.empty()) o.methods = parse_list<std::string>(methods);
            if (det->count("--cov")) {
                const std::string keep = det_c.cov == "empirical" ? "lrt-empirical" : "lrt-firstorder";
                std::erase_if(o.methods, [&](const std::string& m) { return (m == "lrt-empirical" || m == "lrt-firstorder") && m != keep; });
                if (std::find(o.methods.begin(), o.methods.end(), keep) == o.methods.end()) o.methods.insert(o.methods.begin(), keep);
            }
            if (det_c.reps) o.budgets.cov_replicates = o.budgets.mc_replicates = o.competitor_replicates = det_c.reps;
            o.budgets.tol = tol;
            o.budgets.workers = det_c.threads;
            o.mcusum = {det_c.kappa, det_c.target, true};
            if (baseline_end) o.baseline_end = baseline_end;
            o.whole_series_scale = whole_series;
            o.seed = {det_c.seed, 0};
            emit(to_json(detect_file(input, o)), det_c.out);
        } else if (sim->parsed()) {
            FeatureTable t;
            const SeedSpec seed{sim_c.seed, 0};
            t.values = sim_k > 0 ? gen_alt(sim_q, sim_n, {sim_k, std::vector<double>(static_cast<std::size_t>(sim_q), sim_delta), {}}, seed)
                                 : gen_null(sim_q, sim_n, seed);
            for (int i = 1; i <= sim_q; ++i) t.features.push_back("f" + std::to_string(i));
            t.date_header = "day";
            for (int j = 1; j <= sim_n; ++j) t.dates.push_back(std::to_string(j));
            if (sim_c.out.empty()) throw InputError("simulate needs --out");
            save_csv(sim_c.out, t);
        } else if (t1->parsed()) {
            Table1Config c;
            c.cells = parse_cells(cells);
            if (t1_c.reps) c.replicates = t1_c.reps;
            c.cov_replicates = cov_reps;
            c.alpha = t1_c.alpha;
            c.seed = {t1_c.seed, 0};
            c.workers = t1_c.threads;
            emit_experiment(run_table1(c), t1_c.out);
        } else if (f1->parsed()) {
            Fig1Config c;
            c.q = f1_q;
            c.n = f1_n;
            c.p_targets = parse_list<double>(p_values);
            c.m1_values = parse_list<int>(m1_values);
            if (!b_values.empty()) c.b_values = parse_list<std::uint64_t>(b_values);
            if (f1_c.reps) c.repetitions = f1_c.reps;
            c.reference_replicates = ref_reps;
            c.seed = {f1_c.seed, 0};
            c.workers = f1_c.threads;
            emit_experiment(run_fig1(c), f1_c.out);
        } else if (f2->parsed()) {
            Fig2Config c;
            c.q_values = parse_list<int>(q_values);
            c.kappas = f2->count("--kappa") && !f2->count("--kappas") ? std::vector<double>{f2_c.kappa} : parse_list<double>(kappas);
            c.a_target = f2_c.target;
            c.alpha = f2_c.alpha;
            c.delta = f2_delta;
            c.window = {f2_c.m0, f2_c.m1};
            if (f2_c.reps) c.replicates = f2_c.reps;
            c.calibration_replicates = calib_reps;
            c.seed = {f2_c.seed, 0};
            c.workers = f2_c.threads;
            emit_experiment(run_fig2(c), f2_c.out);
        } else if (cal->parsed()) {
            const ScanWindow w{cal_c.m0, cal_c.m1};
            const SeedSpec seed{cal_c.seed, 0};
            const std::uint64_t reps = cal_c.reps ? cal_c.reps : 10000;
            std::ostringstream s;
            s << "method=" << cal_method << "\nq=" << cal_q << "\nn=" << cal_n << "\nm0=" << w.m0 << "\nm1=" << w.m1 << "\nalpha="
              << format_number(cal_c.alpha) << "\nseed=" << cal_c.seed << '\n';
            if (cal_method == "lrt") {
                const auto cov = cal_c.cov == "empirical" ? sigma_empirical(cal_q, cal_n, w, reps, seed.fork(1), cal_c.threads)
                                                          : sigma_first_order(cal_n, w);
                const double a = critical_a(cov, cal_c.alpha, kDefaultTol, seed.fork(3));
                s << "cov=" << cal_c.cov << "\nthreshold_z_star=" << format_number(a)
                  << "\nthreshold_q=" << format_number(critical_value(cov, cal_c.alpha, cal_q, kDefaultTol, seed.fork(3))) << '\n';
            } else {
                const auto kind = cal_method == "hotelling" ? CompetitorMethod::hotelling : CompetitorMethod::mcusum;
                const McusumConfig m{cal_c.kappa, cal_c.target, true};
                s << "replicates=" << reps << "\nthreshold=" << format_number(calibrate_threshold(kind, cal_q, cal_n, w, m, cal_c.alpha, reps, seed, cal_c.threads))
                  << '\n';
            }
            emit(s.str(), cal_c.out);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return 0;
}
