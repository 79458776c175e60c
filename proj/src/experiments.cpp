#include "cpinfer/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cpinfer/errors.hpp"
#include "cpinfer/model_sim.hpp"
#include "cpinfer/mvn_tail.hpp"
#include "cpinfer/null_cov.hpp"
#include "cpinfer/parallel.hpp"
#include "cpinfer/pvalue.hpp"
#include "cpinfer/specfun.hpp"

namespace cpinfer {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

std::string CsvTable::str() const {
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) out << (c ? "," : "") << cells[c];
        out << '\n';
    };
    line(header);
    for (const auto& row : rows) line(row);
    return out.str();
}

void write_experiment(const ExperimentOutput& out, const std::string& path) {
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw InputError("cannot write " + path);
        f << out.table.str();
        if (!f) throw InputError("failed writing " + path);
    }
    std::ofstream m(path + ".manifest", std::ios::binary);
    if (!m) throw InputError("cannot write " + path + ".manifest");
    for (const auto& [key, value] : out.manifest) m << key << '=' << value << '\n';
}

ScanWindow sqrt_window(int n) {
    const double r = std::sqrt(static_cast<double>(n));
    return {static_cast<int>(std::lround(r / 2.0)), static_cast<int>(std::lround(r))};
}

namespace {

constexpr std::uint64_t kChunk = 1024;

std::string seed_text(SeedSpec s) { return std::to_string(s.master_seed); }

double binomial_se(double rate, std::uint64_t count) { return std::sqrt(rate * (1.0 - rate) / static_cast<double>(count)); }

// Q statistics of `count` null replicates, replicate r on seed.with_stream(r).
std::vector<double> null_q_values(int q, int n, const ScanWindow& w, std::uint64_t count, SeedSpec seed, int workers) {
    std::vector<double> out(count);
    const std::uint64_t chunks = (count + kChunk - 1) / kChunk;
    parallel_for(chunks, workers, [&](std::size_t c) {
        NullScanSampler sampler(q, n, w);
        const std::uint64_t end = std::min(count, (c + 1) * kChunk);
        for (std::uint64_t r = c * kChunk; r < end; ++r) {
            const auto z = sampler.draw_z(seed.with_stream(r));
            out[r] = *std::max_element(z.begin(), z.end());
        }
    });
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ";" : "") + items[i];
    return s;
}

template <class T>
std::string join_numbers(const std::vector<T>& xs) {
    std::vector<std::string> items;
    for (const auto& x : xs) {
        if constexpr (std::is_floating_point_v<T>)
            items.push_back(format_number(x));
        else
            items.push_back(std::to_string(x));
    }
    return join(items);
}

}  // namespace

std::vector<Table1Cell> table1_grid() {
    std::vector<Table1Cell> cells;
    for (int q : {5, 10, 50})
        for (int n : {30, 100, 365, 1000}) {
            cells.push_back({q, n, ScanWindow{0, 6}});
            cells.push_back({q, n, sqrt_window(n)});
        }
    return cells;
}

ExperimentOutput run_table1(const Table1Config& cfg) {
    if (cfg.replicates < 1) throw DomainError("replicates must be >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    const auto cells = cfg.cells.empty() ? table1_grid() : cfg.cells;
    for (const auto& c : cells) {
        if (c.q < 1) throw DomainError("table1 cell needs q >= 1");
        c.window.validate(c.n);
    }

    ExperimentOutput out;
    out.table.header = {"q", "n", "m0", "m1", "method", "estimate", "std_error", "replicates", "threshold", "cov_replicates", "master_seed", "cell_seed"};
    const double alpha = cfg.alpha;
    const auto reps = cfg.replicates;

    for (const auto& cell : cells) {
        const auto& w = cell.window;
        const std::uint64_t label = ((static_cast<std::uint64_t>(cell.q) * 10000 + cell.n) * 1000 + w.m0) * 1000 + w.m1;
        const SeedSpec cell_seed = cfg.seed.fork(label);

        const auto cov_emp = sigma_empirical(cell.q, cell.n, w, cfg.cov_replicates, cell_seed.fork(1), cfg.workers);
        const auto cov_fo = sigma_first_order(cell.n, w);
        const double a_emp = critical_a(cov_emp, alpha, cfg.tol, cell_seed.fork(3));
        const double a_fo = critical_a(cov_fo, alpha, cfg.tol, cell_seed.fork(4));
        auto qs = null_q_values(cell.q, cell.n, w, reps, cell_seed.fork(2), cfg.workers);

        const int m0_used = std::max(w.m0, 1);
        std::uint64_t rej_emp = 0, rej_fo = 0, rej_asym = 0;
        for (double qv : qs) {
            const double qstar = chisq_to_normal(qv, cell.q);
            if (qstar > a_emp) ++rej_emp;
            if (qstar > a_fo) ++rej_fo;
            if (asymp_pvalue(qv, cell.q, m0_used, w.m1) < alpha) ++rej_asym;
        }

        // Asymptotic formula evaluated at the simulated level-alpha critical value of Q.
        std::sort(qs.begin(), qs.end());
        const auto at_rank = [&](double rank) {
            const auto idx = static_cast<std::size_t>(std::clamp(rank, 0.0, static_cast<double>(reps - 1)));
            return qs[idx];
        };
        const std::size_t crit_idx = quantile_index(reps, alpha);
        const double b_sq = qs[crit_idx];
        const double spread = std::sqrt(static_cast<double>(reps) * alpha * (1.0 - alpha));
        const double p_lo_rank = asymp_pvalue(at_rank(std::floor(crit_idx - spread)), cell.q, m0_used, w.m1);
        const double p_hi_rank = asymp_pvalue(at_rank(std::ceil(crit_idx + spread)), cell.q, m0_used, w.m1);
        const double asym = asymp_pvalue(b_sq, cell.q, m0_used, w.m1);

        const auto row = [&](const std::string& method, double est, double se, double threshold) {
            out.table.rows.push_back({std::to_string(cell.q), std::to_string(cell.n), std::to_string(w.m0), std::to_string(w.m1), method,
                                      format_number(est), format_number(se), std::to_string(reps), format_number(threshold),
                                      std::to_string(cfg.cov_replicates), seed_text(cfg.seed), std::to_string(cell_seed.master_seed)});
        };
        const double n_reps = static_cast<double>(reps);
        row("asymptotic", asym, 0.5 * std::fabs(p_lo_rank - p_hi_rank), b_sq);
        row("asymptotic_rejection", rej_asym / n_reps, binomial_se(rej_asym / n_reps, reps), b_sq);
        row("first_order", rej_fo / n_reps, binomial_se(rej_fo / n_reps, reps), a_fo);
        row("empirical", rej_emp / n_reps, binomial_se(rej_emp / n_reps, reps), a_emp);
    }

    out.manifest = {
        {"experiment", "table1"},
        {"master_seed", seed_text(cfg.seed)},
        {"replicates", std::to_string(reps)},
        {"cov_replicates", std::to_string(cfg.cov_replicates)},
        {"alpha", format_number(alpha)},
        {"integration_tol", format_number(cfg.tol)},
        {"sqrt_window_rounding", "m1=round(sqrt(n)),m0=round(sqrt(n)/2)"},
        {"asymptotic_m0_clamp", "m0=max(m0,1)"},
        {"asymptotic_estimate", "asymptotic p-value at the simulated (1-alpha) quantile of Q"},
        {"asymptotic_rejection", "fraction with asymptotic p-value < alpha"},
        {"sigma_rejection", "Q* > a_crit with 1-f(Sigma,a_crit)=alpha"},
        {"candidate_offsets", "max(m0,1)..m1"},
        {"null_sampler", "sufficient statistics (head sum + last m1 days)"},
    };
    return out;
}

ExperimentOutput run_fig1(const Fig1Config& cfg) {
    if (cfg.repetitions < 2) throw DomainError("fig1 needs at least two repetitions");
    for (double p : cfg.p_targets)
        if (!(p > 0.0 && p < 1.0)) throw DomainError("fig1 p targets must lie in (0, 1)");
    ExperimentOutput out;
    out.table.header = {"q", "n", "m0", "m1", "p", "a_crit", "B", "method", "estimate", "std_error", "mean", "variance",
                        "predicted_variance", "predicted_variance_chain", "predicted_variance_diagonal", "replicates", "master_seed"};
    const std::size_t np = cfg.p_targets.size();
    const auto tol_for = [&](double p) { return std::clamp(p * cfg.relative_tol, 1e-12, 0.01); };

    for (int m1 : cfg.m1_values) {
        const ScanWindow w{0, m1};
        w.validate(cfg.n);
        const int m = w.m_star();
        const SeedSpec ref_seed = cfg.seed.fork(1000 + static_cast<std::uint64_t>(m1));
        const auto ref = sigma_empirical(cfg.q, cfg.n, w, cfg.reference_replicates, ref_seed.fork(1), cfg.workers);
        std::vector<double> a_crit(np);
        std::vector<CaEstimate> ca(np);
        for (std::size_t pi = 0; pi < np; ++pi) {
            a_crit[pi] = critical_a(ref, cfg.p_targets[pi], tol_for(cfg.p_targets[pi]), ref_seed.fork(3));
            ca[pi] = estimate_ca(ref, a_crit[pi], cfg.ca_samples, ref_seed.fork(10 + pi));
        }

        // Shared by every repetition so integration error does not add to var(p_hat).
        const SeedSpec integration_seed = ref_seed.fork(4);
        for (std::uint64_t b_count : cfg.b_values) {
            if (b_count < static_cast<std::uint64_t>(m) + 1) throw DomainError("fig1 B values must exceed m*");
            const SeedSpec cell_seed = cfg.seed.fork(static_cast<std::uint64_t>(m1) * 1000000000ULL + b_count);
            const auto reps = cfg.repetitions;
            std::vector<double> p_hat(reps * np);
            std::vector<double> p_tilde(reps * np);
            parallel_for(reps, cfg.workers, [&](std::size_t r) {
                const SeedSpec rep_seed = cell_seed.fork(r);
                NullScanSampler sampler(cfg.q, cfg.n, w);
                MomentAccumulator acc(m);
                Eigen::VectorXd zs(m);
                std::vector<std::uint64_t> exceed(np, 0);
                // One batch of B null draws feeds both estimators.
                for (std::uint64_t b = 0; b < b_count; ++b) {
                    sampler.draw_z_star(rep_seed.with_stream(b), {zs.data(), static_cast<std::size_t>(m)});
                    acc.add(zs);
                    const double top = zs.maxCoeff();
                    for (std::size_t pi = 0; pi < np; ++pi)
                        if (top >= a_crit[pi]) ++exceed[pi];
                }
                CovarianceModel est;
                est.sigma = acc.correlation();
                est.repaired = repair_psd(est.sigma);
                est.source = CovSource::empirical;
                for (std::size_t pi = 0; pi < np; ++pi) {
                    p_tilde[r * np + pi] = static_cast<double>(exceed[pi]) / static_cast<double>(b_count);
                    p_hat[r * np + pi] = mvn_orthant(est, a_crit[pi], tol_for(cfg.p_targets[pi]), integration_seed).complement;
                }
            });

            for (std::size_t pi = 0; pi < np; ++pi) {
                const double p = cfg.p_targets[pi];
                const auto summarize = [&](const std::vector<double>& v, const std::string& method, double pred, double pred_chain,
                                           double pred_diag) {
                    double hits = 0.0, sum = 0.0;
                    for (std::uint64_t r = 0; r < reps; ++r) {
                        const double x = v[r * np + pi];
                        sum += x;
                        if (std::fabs(x - p) < cfg.band * p) hits += 1.0;
                    }
                    const double mean = sum / static_cast<double>(reps);
                    double ss = 0.0;
                    for (std::uint64_t r = 0; r < reps; ++r) ss += (v[r * np + pi] - mean) * (v[r * np + pi] - mean);
                    const double acc_rate = hits / static_cast<double>(reps);
                    const auto opt = [](double x) { return std::isnan(x) ? std::string() : format_number(x); };
                    out.table.rows.push_back({std::to_string(cfg.q), std::to_string(cfg.n), std::to_string(w.m0), std::to_string(m1),
                                              format_number(p), format_number(a_crit[pi]), std::to_string(b_count), method,
                                              format_number(acc_rate), format_number(binomial_se(acc_rate, reps)), format_number(mean),
                                              format_number(ss / static_cast<double>(reps - 1)), opt(pred), opt(pred_chain), opt(pred_diag),
                                              std::to_string(reps), seed_text(cfg.seed)});
                };
                const double scale = p * p / static_cast<double>(b_count);
                summarize(p_hat, "p_hat", ca[pi].c_a * scale, ca[pi].c_a_chain * scale, ca[pi].c_a_diagonal * scale);
                summarize(p_tilde, "p_tilde", p * (1.0 - p) / static_cast<double>(b_count), std::nan(""), std::nan(""));
            }
        }
    }

    out.manifest = {
        {"experiment", "fig1"},
        {"master_seed", seed_text(cfg.seed)},
        {"q", std::to_string(cfg.q)},
        {"n", std::to_string(cfg.n)},
        {"m0", "0"},
        {"m1_values", join_numbers(cfg.m1_values)},
        {"p_targets", join_numbers(cfg.p_targets)},
        {"b_values", join_numbers(cfg.b_values)},
        {"b_grid_source", "default log-spaced grid"},
        {"repetitions", std::to_string(cfg.repetitions)},
        {"reference_replicates", std::to_string(cfg.reference_replicates)},
        {"ca_samples", std::to_string(cfg.ca_samples)},
        {"accuracy_band", "|estimate-p| < " + format_number(cfg.band) + "*p"},
        {"integration_tol", format_number(cfg.relative_tol) + "*p"},
        {"integration_seed", "one lattice seed per m1, shared by all repetitions"},
        {"shared_draws", "p_hat and p_tilde use the same B null draws"},
        {"predicted_variance", "p_hat: c_a p^2/B (full correlation covariance); p_tilde: p(1-p)/B"},
    };
    return out;
}

ExperimentOutput run_fig2(const Fig2Config& cfg) {
    if (cfg.replicates < 1) throw DomainError("replicates must be >= 1");
    cfg.window.validate(cfg.n);
    for (int d : cfg.change_offsets)
        if (d < 1 || d >= cfg.n) throw DomainError("change offsets must lie in [1, n-1]");
    const auto reps = cfg.replicates;
    ExperimentOutput out;
    out.table.header = {"q", "n", "m0", "m1", "k", "method", "kappa", "a_target", "estimate", "std_error", "threshold", "replicates", "master_seed"};

    for (int q : cfg.q_values) {
        const SeedSpec q_seed = cfg.seed.fork(static_cast<std::uint64_t>(q));
        const auto cov = sigma_empirical(q, cfg.n, cfg.window, cfg.cov_replicates, q_seed.fork(1), cfg.workers);
        const double a_lrt = critical_a(cov, cfg.alpha, cfg.tol, q_seed.fork(3));

        struct Method {
            std::string name;
            CompetitorMethod kind;
            McusumConfig mcusum;
            double threshold = 0.0;
        };
        std::vector<Method> methods;
        methods.push_back({"hotelling", CompetitorMethod::hotelling, {}, 0.0});
        for (double kappa : cfg.kappas) methods.push_back({"mcusum", CompetitorMethod::mcusum, {kappa, cfg.a_target, true}, 0.0});
        for (std::size_t mi = 0; mi < methods.size(); ++mi)
            methods[mi].threshold = calibrate_threshold(methods[mi].kind, q, cfg.n, cfg.window, methods[mi].mcusum, cfg.alpha,
                                                        cfg.calibration_replicates, q_seed.fork(100 + mi), cfg.workers);

        for (int d : cfg.change_offsets) {
            const int k = cfg.n - d;
            const SeedSpec data_seed = q_seed.fork(10000 + static_cast<std::uint64_t>(d));
            const AlternativeSpec alt{k, std::vector<double>(static_cast<std::size_t>(q), cfg.delta), {}};
            const std::size_t width = methods.size() + 1;
            std::vector<char> reject(reps * width, 0);
            parallel_for(reps, cfg.workers, [&](std::size_t r) {
                const FeatureMatrix y = gen_alt(q, cfg.n, alt, data_seed.with_stream(r));
                reject[r * width] = scan(y, cfg.window).q_star > a_lrt;
                for (std::size_t mi = 0; mi < methods.size(); ++mi)
                    reject[r * width + 1 + mi] = competitor_scan(methods[mi].kind, y, cfg.window, methods[mi].mcusum).statistic > methods[mi].threshold;
            });
            const auto rate = [&](std::size_t col) {
                std::uint64_t c = 0;
                for (std::uint64_t r = 0; r < reps; ++r) c += reject[r * width + col] ? 1 : 0;
                return static_cast<double>(c) / static_cast<double>(reps);
            };
            const auto row = [&](const std::string& name, const std::string& kappa, double power, double threshold) {
                out.table.rows.push_back({std::to_string(q), std::to_string(cfg.n), std::to_string(cfg.window.m0), std::to_string(cfg.window.m1),
                                          std::to_string(k), name, kappa, format_number(cfg.a_target), format_number(power),
                                          format_number(binomial_se(power, reps)), format_number(threshold), std::to_string(reps),
                                          seed_text(cfg.seed)});
            };
            row("lrt_empirical", "", rate(0), a_lrt);
            for (std::size_t mi = 0; mi < methods.size(); ++mi)
                row(methods[mi].name, methods[mi].kind == CompetitorMethod::mcusum ? format_number(methods[mi].mcusum.kappa) : "",
                    rate(mi + 1), methods[mi].threshold);
        }
    }

    out.manifest = {
        {"experiment", "fig2"},
        {"master_seed", seed_text(cfg.seed)},
        {"n", std::to_string(cfg.n)},
        {"q_values", join_numbers(cfg.q_values)},
        {"kappas", join_numbers(cfg.kappas)},
        {"change_offsets", join_numbers(cfg.change_offsets)},
        {"delta", format_number(cfg.delta)},
        {"mcusum_target", format_number(cfg.a_target)},
        {"mcusum_sides", "two-sided (max of both signs per day)"},
        {"mcusum_norm", "C_j from the prior-day state"},
        {"alpha", format_number(cfg.alpha)},
        {"window", std::to_string(cfg.window.m0) + "," + std::to_string(cfg.window.m1)},
        {"competitor_days", "first post-change day of each candidate k in the window"},
        {"replicates", std::to_string(reps)},
        {"calibration_replicates", std::to_string(cfg.calibration_replicates)},
        {"calibration_rule", "threshold = order statistic ceil((1-alpha)B) of null statistics; reject if statistic > threshold"},
        {"cov_replicates", std::to_string(cfg.cov_replicates)},
        {"integration_tol", format_number(cfg.tol)},
    };
    return out;
}

}  // namespace cpinfer
