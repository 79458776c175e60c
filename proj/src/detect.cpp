#include "cpinfer/detect.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

#include "cpinfer/errors.hpp"
#include "cpinfer/mvn_tail.hpp"
#include "cpinfer/null_cov.hpp"
#include "cpinfer/specfun.hpp"

namespace cpinfer {

namespace {

MethodPValue lrt_sigma(const std::string& name, const CovarianceModel& cov, const ScanResult& s, double tol, SeedSpec seed) {
    MethodPValue r{name, std::nullopt, 0.0, s.q_stat, cov.replicates, ""};
    if (s.q_stat <= 0.0 || cov.m_star() == 1) {
        r.p_value = pvalue_from_sigma(cov, s.q_stat, s.q, tol, seed);
        return r;
    }
    const auto orthant = mvn_orthant(cov, chisq_to_normal(s.q_stat, s.q), tol, seed);
    r.p_value = orthant.complement;
    r.std_error = orthant.std_error;
    if (!orthant.converged) r.note = "integration did not reach the tolerance";
    return r;
}

}  // namespace

DetectionReport detect(const FeatureTable& table, const DetectOptions& options, const std::string& source) {
    const auto& raw = table.values;
    const auto& w = options.window;
    const int n = raw.n();
    const int q = raw.q();
    w.validate(n);
    const std::set<std::string> known(all_detect_methods().begin(), all_detect_methods().end());
    for (const auto& m : options.methods)
        if (!known.count(m)) throw InputError("unknown method '" + m + "'");

    DetectionReport rep;
    rep.source = source;
    rep.n = n;
    rep.q = q;
    rep.window = w;
    rep.seed = options.seed;
    rep.budgets = options.budgets;
    rep.competitor_replicates = options.competitor_replicates;
    rep.mcusum = options.mcusum;
    rep.baseline_end = options.whole_series_scale ? n : options.baseline_end.value_or(n - w.m1);
    const auto st = standardize(raw, rep.baseline_end);
    rep.scan = scan(st.values, w);
    if (!table.dates.empty()) rep.khat_date = table.dates[static_cast<std::size_t>(rep.scan.khat - 1)];

    const auto& b = options.budgets;
    const SeedSpec seed = options.seed;
    for (const auto& m : options.methods) {
        if (m == "lrt-empirical") {
            const auto cov = sigma_empirical(q, n, w, b.cov_replicates, seed.fork(1), b.workers);
            rep.pvalues.push_back(lrt_sigma(m, cov, rep.scan, b.tol, seed.fork(3)));
        } else if (m == "lrt-firstorder") {
            rep.pvalues.push_back(lrt_sigma(m, sigma_first_order(n, w), rep.scan, b.tol, seed.fork(4)));
        } else if (m == "lrt-asymptotic") {
            MethodPValue r{m, std::nullopt, 0.0, rep.scan.q_stat, 0, ""};
            if (w.m0 >= 1)
                r.p_value = asymp_pvalue(rep.scan.q_stat, q, w.m0, w.m1);
            else
                r.note = "requires m0 >= 1";
            rep.pvalues.push_back(r);
        } else if (m == "lrt-montecarlo") {
            const double p = mc_pvalue(rep.scan.q_stat, q, n, w, b.mc_replicates, seed.fork(2), b.workers);
            rep.pvalues.push_back({m, p, std::sqrt(p * (1.0 - p) / static_cast<double>(b.mc_replicates)), rep.scan.q_stat, b.mc_replicates, ""});
        } else {
            const auto kind = m == "hotelling" ? CompetitorMethod::hotelling : CompetitorMethod::mcusum;
            const double stat = competitor_scan(kind, st.values, w, options.mcusum).statistic;
            const double p = competitor_pvalue(kind, stat, q, n, w, options.mcusum, options.competitor_replicates,
                                               seed.fork(kind == CompetitorMethod::hotelling ? 5 : 6), b.workers);
            rep.pvalues.push_back({m, p, std::sqrt(p * (1.0 - p) / static_cast<double>(options.competitor_replicates)), stat,
                                   options.competitor_replicates, ""});
        }
    }

    const int khat = rep.scan.khat;
    for (int i = 0; i < q; ++i) {
        FeatureShift f;
        f.feature = i < static_cast<int>(table.features.size()) ? table.features[i] : "feature" + std::to_string(i + 1);
        for (int j = 0; j < khat; ++j) f.pre_mean += raw(i, j);
        for (int j = khat; j < n; ++j) f.post_mean += raw(i, j);
        f.pre_mean /= khat;
        f.post_mean /= (n - khat);
        f.scale = st.scales[i];
        rep.features.push_back(f);
    }
    return rep;
}

DetectionReport detect_file(const std::string& path, const DetectOptions& options) {
    const auto table = load_csv(path, options.window.m1 + 2);
    return detect(table, options, path);
}

std::string to_json(const DetectionReport& r) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["source"] = r.source;
    j["n"] = r.n;
    j["q"] = r.q;
    j["window"] = {{"m0", r.window.m0}, {"m1", r.window.m1}, {"offsets", r.window.offsets()}};
    ordered_json scan_j;
    scan_j["q_stat"] = r.scan.q_stat;
    scan_j["q_star"] = r.scan.q_star;
    scan_j["khat"] = r.scan.khat;
    scan_j["days_before_end"] = r.n - r.scan.khat;
    if (!r.khat_date.empty()) scan_j["khat_date"] = r.khat_date;
    scan_j["z"] = r.scan.z;
    j["scan"] = scan_j;
    ordered_json pv = ordered_json::object();
    for (const auto& m : r.pvalues) {
        ordered_json e;
        e["p_value"] = m.p_value ? ordered_json(*m.p_value) : ordered_json(nullptr);
        e["std_error"] = m.std_error;
        e["statistic"] = m.statistic;
        e["replicates"] = m.replicates;
        if (!m.note.empty()) e["note"] = m.note;
        pv[m.method] = e;
    }
    j["pvalues"] = pv;
    ordered_json feats = ordered_json::array();
    for (const auto& f : r.features)
        feats.push_back({{"feature", f.feature}, {"pre_mean", f.pre_mean}, {"post_mean", f.post_mean}, {"scale", f.scale}});
    j["features"] = feats;
    j["standardization"] = {{"baseline_end", r.baseline_end}, {"statistic", "sample standard deviation over days 1..baseline_end"}};
    j["settings"] = {{"seed", r.seed.master_seed},
                     {"cov_replicates", r.budgets.cov_replicates},
                     {"mc_replicates", r.budgets.mc_replicates},
                     {"competitor_replicates", r.competitor_replicates},
                     {"integration_tol", r.budgets.tol},
                     {"mcusum_kappa", r.mcusum.kappa},
                     {"mcusum_target", r.mcusum.a_target},
                     {"mcusum_two_sided", r.mcusum.two_sided}};
    return j.dump(2) + "\n";
}

}  // namespace cpinfer
