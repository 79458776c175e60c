#include "cpinfer/null_cov.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "cpinfer/errors.hpp"
#include "cpinfer/parallel.hpp"

namespace cpinfer {

const char* to_string(CovSource source) {
    switch (source) {
        case CovSource::first_order: return "first_order";
        case CovSource::empirical: return "empirical";
        case CovSource::imported: return "imported";
        case CovSource::supplied: return "supplied";
    }
    return "unknown";
}

void CovarianceModel::validate() const {
    const auto m = sigma.rows();
    if (m < 1 || sigma.cols() != m) throw DomainError("covariance must be a non-empty square matrix");
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::fabs(sigma(i, i) - 1.0) > 1e-12) throw DomainError("covariance must have a unit diagonal");
        for (Eigen::Index j = 0; j < i; ++j) {
            if (!std::isfinite(sigma(i, j)) || std::fabs(sigma(i, j) - sigma(j, i)) > 1e-12)
                throw DomainError("covariance must be symmetric");
            if (std::fabs(sigma(i, j)) > 1.0 + 1e-12) throw DomainError("correlation entries must lie in [-1, 1]");
        }
    }
}

CovarianceModel CovarianceModel::from_matrix(Eigen::MatrixXd sigma) {
    CovarianceModel cov;
    cov.sigma = std::move(sigma);
    cov.source = CovSource::supplied;
    cov.validate();
    return cov;
}

CovarianceModel sigma_first_order(int n, const ScanWindow& w) {
    w.validate(n);
    const auto offsets = w.offsets();
    const auto m = static_cast<Eigen::Index>(offsets.size());
    CovarianceModel cov;
    cov.sigma.resize(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) {
            const double lo = std::min(offsets[a], offsets[b]);
            const double hi = std::max(offsets[a], offsets[b]);
            cov.sigma(a, b) = lo / hi;
        }
    cov.source = CovSource::first_order;
    cov.window = w;
    cov.n = n;
    return cov;
}

bool repair_psd(Eigen::MatrixXd& sigma, double floor) {
    bool changed = false;
    for (int pass = 0; pass < 20; ++pass) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
        Eigen::VectorXd values = eig.eigenvalues();
        if (values.minCoeff() >= floor) break;
        changed = true;
        // Clip slightly above the floor so the rescaling below keeps us there.
        values = values.cwiseMax(floor * 1.5);
        Eigen::MatrixXd rebuilt = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
        const Eigen::VectorXd scale = rebuilt.diagonal().cwiseSqrt().cwiseInverse();
        sigma = scale.asDiagonal() * rebuilt * scale.asDiagonal();
        sigma = 0.5 * (sigma + sigma.transpose()).eval();
        sigma.diagonal().setOnes();
    }
    return changed;
}

MomentAccumulator::MomentAccumulator(int m) : sum_(Eigen::VectorXd::Zero(m)), cross_(Eigen::MatrixXd::Zero(m, m)) {}

void MomentAccumulator::add(const Eigen::VectorXd& z) {
    sum_ += z;
    cross_.selfadjointView<Eigen::Lower>().rankUpdate(z);
    ++count_;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
    sum_ += other.sum_;
    cross_ += other.cross_;
    count_ += other.count_;
}

Eigen::MatrixXd MomentAccumulator::correlation() const {
    if (count_ < 2) throw DomainError("correlation needs at least two samples");
    const double count = static_cast<double>(count_);
    const Eigen::VectorXd mean = sum_ / count;
    const Eigen::MatrixXd cross = cross_.selfadjointView<Eigen::Lower>();
    const Eigen::MatrixXd covariance = (cross - count * mean * mean.transpose()) / (count - 1.0);
    const Eigen::VectorXd inv_sd = covariance.diagonal().cwiseSqrt().cwiseInverse();
    if (!inv_sd.allFinite()) throw NumericalError("a Z* coordinate has zero sample variance");
    Eigen::MatrixXd r = inv_sd.asDiagonal() * covariance * inv_sd.asDiagonal();
    r = 0.5 * (r + r.transpose()).eval();
    r.diagonal().setOnes();
    return r;
}

namespace {

constexpr std::uint64_t kChunk = 1024;

}  // namespace

CovarianceModel sigma_empirical(int q, int n, const ScanWindow& w, std::uint64_t replicates, SeedSpec seed, int workers) {
    w.validate(n);
    const int m = w.m_star();
    if (replicates < static_cast<std::uint64_t>(m) + 1)
        throw DomainError("empirical covariance needs B >= m* + 1 = " + std::to_string(m + 1));

    // Fixed-size chunks reduced in order: the result does not depend on `workers`.
    const std::uint64_t chunks = (replicates + kChunk - 1) / kChunk;
    std::vector<MomentAccumulator> parts(chunks, MomentAccumulator(m));
    parallel_for(chunks, workers, [&](std::size_t c) {
        NullScanSampler sampler(q, n, w);
        Eigen::VectorXd zs(m);
        const std::uint64_t begin = c * kChunk;
        const std::uint64_t end = std::min(replicates, begin + kChunk);
        for (std::uint64_t b = begin; b < end; ++b) {
            sampler.draw_z_star(seed.with_stream(b), {zs.data(), static_cast<std::size_t>(m)});
            if (!zs.allFinite()) throw NumericalError("non-finite Z* in null simulation");
            parts[c].add(zs);
        }
    });

    MomentAccumulator total(m);
    for (const auto& part : parts) total.merge(part);

    CovarianceModel cov;
    cov.sigma = total.correlation();
    cov.repaired = repair_psd(cov.sigma);
    cov.source = CovSource::empirical;
    cov.replicates = replicates;
    cov.seed = seed;
    cov.window = w;
    cov.n = n;
    cov.q = q;
    return cov;
}

void save_covariance_csv(const std::string& path, const CovarianceModel& cov) {
    cov.validate();
    std::ofstream out(path);
    if (!out) throw InputError("cannot write covariance file " + path);
    const auto offsets = cov.window.offsets();
    if (static_cast<int>(offsets.size()) != cov.m_star()) throw DomainError("covariance window does not match its dimension");
    char buf[64];
    for (std::size_t a = 0; a < offsets.size(); ++a) out << (a ? "," : "") << offsets[a];
    out << '\n';
    for (Eigen::Index i = 0; i < cov.sigma.rows(); ++i) {
        for (Eigen::Index j = 0; j < cov.sigma.cols(); ++j) {
            const auto res = std::to_chars(buf, buf + sizeof buf, cov.sigma(i, j));
            out << (j ? "," : "") << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
    }
    if (!out) throw InputError("failed writing covariance file " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(const std::string& text, const std::string& where) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw InputError("non-numeric value '" + text + "' at " + where);
    return v;
}

}  // namespace

CovarianceModel load_covariance_csv(const std::string& path, int n, int q, const ScanWindow& w) {
    w.validate(n);
    std::ifstream in(path);
    if (!in) throw InputError("cannot open covariance file " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError("covariance file " + path + " is empty");
    const auto header = split_csv_line(line);
    const auto expected = w.offsets();
    if (header.size() != expected.size()) throw InputError("covariance file offsets do not match the scan window");
    for (std::size_t a = 0; a < header.size(); ++a)
        if (parse_number(header[a], "header column " + std::to_string(a + 1)) != expected[a])
            throw InputError("covariance file offsets do not match the scan window");

    const auto m = static_cast<Eigen::Index>(expected.size());
    CovarianceModel cov;
    cov.sigma.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!std::getline(in, line)) throw InputError("covariance file has too few rows");
        const auto cells = split_csv_line(line);
        if (static_cast<Eigen::Index>(cells.size()) != m) throw InputError("covariance row " + std::to_string(i + 2) + " has the wrong width");
        for (Eigen::Index j = 0; j < m; ++j)
            cov.sigma(i, j) = parse_number(cells[j], "row " + std::to_string(i + 2) + ", column " + std::to_string(j + 1));
    }
    cov.source = CovSource::imported;
    cov.window = w;
    cov.n = n;
    cov.q = q;
    cov.validate();
    return cov;
}

}  // namespace cpinfer
