#include "tensorcorr/model_selection.hpp"

#include "tensorcorr/io.hpp"
#include "tensorcorr/linalg.hpp"
#include "tensorcorr/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tensorcorr {

namespace {

void check_ranks(ModelKind kind, const std::vector<int>& ranks) {
    std::size_t need = kind == ModelKind::parafac ? 1 : kind == ModelKind::tucker ? 3 : 2;
    if (ranks.size() != need)
        throw std::invalid_argument("count_free_params: " + to_string(kind) + " needs " +
                                    std::to_string(need) + " ranks, got " +
                                    std::to_string(ranks.size()));
    for (int r : ranks)
        if (r < 1) throw std::invalid_argument("count_free_params: ranks must be >= 1");
}

}  // namespace

long long count_free_params(ModelKind kind, const std::array<Index, 3>& dims,
                            const std::vector<int>& ranks) {
    check_ranks(kind, ranks);
    long long i = dims[0], j = dims[1], k = dims[2];
    switch (kind) {
        case ModelKind::parafac:
            return ranks[0] * (i + j + k);
        case ModelKind::tucker:
            return ranks[0] * i + ranks[1] * j + ranks[2] * k +
                   static_cast<long long>(ranks[0]) * ranks[1] * ranks[2];
        case ModelKind::sdt:
            return ranks[0] * i + ranks[0] * j + ranks[1] * k +
                   static_cast<long long>(ranks[0]) * ranks[1];
    }
    throw std::invalid_argument("count_free_params: invalid kind");
}

ComplexityCount complexity(ModelKind kind, const std::array<Index, 3>& dims,
                           const std::vector<int>& ranks) {
    return {kind, dims, ranks, count_free_params(kind, dims, ranks)};
}

namespace {

void check_ic_args(double ssr, long long u, long long w) {
    if (!(ssr >= 0.0)) throw std::invalid_argument("information criterion: ssr must be >= 0");
    if (w < 1) throw std::invalid_argument("information criterion: w must be >= 1");
    if (u <= w)
        throw std::invalid_argument("information criterion: need u > w, got u = " +
                                    std::to_string(u) + ", w = " + std::to_string(w));
}

}  // namespace

double bic(double ssr, long long u, long long w) {
    check_ic_args(ssr, u, w);
    if (ssr == 0.0) return -std::numeric_limits<double>::infinity();
    double du = static_cast<double>(u);
    return du * std::log(ssr / du) + static_cast<double>(w) * std::log(du);
}

double aic(double ssr, long long u, long long w) {
    check_ic_args(ssr, u, w);
    if (ssr == 0.0) return -std::numeric_limits<double>::infinity();
    double du = static_cast<double>(u);
    return du * std::log(ssr / du) + 2.0 * static_cast<double>(w);
}

double aicc(double ssr, long long u, long long w) {
    check_ic_args(ssr, u, w);
    if (u <= w + 1)
        throw std::domain_error("aicc: needs u > w + 1, got u = " + std::to_string(u) +
                                ", w = " + std::to_string(w));
    double dw = static_cast<double>(w);
    return aic(ssr, u, w) + 2.0 * dw * (dw + 1.0) / static_cast<double>(u - w - 1);
}

ConcordiaResult concordia_detail(const Tensor3& t, const ParafacModel& m) {
    auto [I, J, K] = t.dims();
    if (m.a.rows() != I || m.b.rows() != J || m.c.rows() != K || m.rank() < 1)
        throw std::invalid_argument("concordia: model does not match tensor dims");
    Index r = m.rank();
    Matrix an = m.a, bn = m.b, cn = m.c;
    for (Index p = 0; p < r; ++p) {
        double na = an.col(p).norm(), nb = bn.col(p).norm(), nc = cn.col(p).norm();
        if (na > 0) an.col(p) /= na;
        if (nb > 0) bn.col(p) /= nb;
        if (nc > 0) cn.col(p) /= nc;
    }
    bool deficient = false;
    for (const Matrix* f : {&an, &bn, &cn}) {
        Eigen::BDCSVD<Matrix> dec(*f);
        if (dec.singularValues().size() == 0 ||
            dec.singularValues()(dec.singularValues().size() - 1) <
                1e-10 * dec.singularValues()(0))
            deficient = true;
    }
    Tensor3 g = tucker_core_from_factors(t, an, bn, cn);
    double diag_mass = 0.0, off_mass = 0.0;
    for (Index kk = 1; kk <= r; ++kk)
        for (Index jj = 1; jj <= r; ++jj)
            for (Index ii = 1; ii <= r; ++ii) {
                double v = g(ii, jj, kk) * g(ii, jj, kk);
                if (ii == jj && jj == kk)
                    diag_mass += v;
                else
                    off_mass += v;
            }
    double value;
    if (diag_mass > 0.0)
        value = 100.0 * (1.0 - off_mass / diag_mass);
    else if (off_mass == 0.0)
        value = 100.0;
    else
        value = -std::numeric_limits<double>::infinity();
    return {value, deficient};
}

double concordia(const Tensor3& t, const ParafacModel& m) {
    return concordia_detail(t, m).value;
}

int diffit(const std::vector<std::pair<int, double>>& fits) {
    if (fits.size() < 3)
        throw std::invalid_argument("diffit: needs at least 3 (components, fit) entries, got " +
                                    std::to_string(fits.size()));
    for (std::size_t n = 1; n < fits.size(); ++n) {
        if (fits[n].first <= fits[n - 1].first)
            throw std::invalid_argument("diffit: component counts must be strictly increasing");
        if (fits[n].second < fits[n - 1].second)
            throw std::invalid_argument("diffit: fit values must be non-decreasing");
    }
    int best_s = fits[1].first;
    double best_ratio = -1.0;
    for (std::size_t n = 1; n + 1 < fits.size(); ++n) {
        double dif = fits[n].second - fits[n - 1].second;
        double dif_next = fits[n + 1].second - fits[n].second;
        double ratio;
        if (dif_next > 0.0)
            ratio = dif / dif_next;
        else
            ratio = dif > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best_s = fits[n].first;
        }
    }
    return best_s;
}

RankScanResult scan_ranks(const Tensor3& t, ModelKind kind, const std::vector<int>& rank_grid,
                          const ScanConfig& cfg) {
    if (rank_grid.empty()) throw std::invalid_argument("scan_ranks: empty rank grid");
    std::vector<int> grid = rank_grid;
    std::sort(grid.begin(), grid.end());
    if (std::adjacent_find(grid.begin(), grid.end()) != grid.end())
        throw std::invalid_argument("scan_ranks: duplicate ranks in grid");

    auto [I, J, K] = t.dims();
    long long u = static_cast<long long>(I) * J * K;
    RankScanResult out;
    out.criterion_name = kind == ModelKind::parafac ? "concordia" : "bic";

    for (int rank : grid) {
        AlsConfig als = cfg.als;
        als.seed = mix_seed(cfg.als.seed, static_cast<std::uint64_t>(rank));
        try {
            double crit, ssr;
            FitReport rep;
            if (kind == ModelKind::parafac) {
                auto [model, r] = fit_parafac(t, rank, als);
                rep = std::move(r);
                crit = concordia(t, model);
            } else if (kind == ModelKind::tucker) {
                auto [model, r] = fit_tucker(t, {rank, rank, cfg.time_rank}, als);
                rep = std::move(r);
                crit = bic(rep.ssr, u, count_free_params(kind, t.dims(),
                                                         {rank, rank, cfg.time_rank}));
            } else {
                auto [model, r] = fit_sdt(t, rank, cfg.time_rank, als);
                rep = std::move(r);
                crit = bic(rep.ssr, u, count_free_params(kind, t.dims(), {rank, cfg.time_rank}));
            }
            ssr = rep.ssr;
            out.ranks.push_back(rank);
            out.criterion.push_back(crit);
            out.ssr.push_back(ssr);
            out.iterations.push_back(rep.iterations);
            out.converged.push_back(rep.converged ? 1 : 0);
        } catch (const std::exception& e) {
            out.failures.push_back("rank " + std::to_string(rank) + ": " + e.what());
        }
    }

    if (out.ranks.empty()) {
        std::string msg = "scan_ranks: all fits failed";
        for (const auto& f : out.failures) msg += "\n  " + f;
        throw std::runtime_error(msg);
    }

    if (kind == ModelKind::parafac) {
        // largest rank meeting the threshold; otherwise the best-scoring rank
        std::size_t best = 0;
        bool found = false;
        for (std::size_t n = 0; n < out.ranks.size(); ++n) {
            if (out.criterion[n] >= cfg.concordia_threshold) {
                best = n;
                found = true;
            }
        }
        if (!found)
            for (std::size_t n = 1; n < out.ranks.size(); ++n)
                if (out.criterion[n] > out.criterion[best]) best = n;
        out.selected = out.ranks[best];
    } else {
        std::size_t best = 0;
        for (std::size_t n = 1; n < out.ranks.size(); ++n)
            if (out.criterion[n] < out.criterion[best]) best = n;
        out.selected = out.ranks[best];
    }
    return out;
}

void write_scan_csv(const RankScanResult& r, const std::filesystem::path& file) {
    Matrix m(static_cast<Index>(r.ranks.size()), 5);
    for (std::size_t n = 0; n < r.ranks.size(); ++n) {
        Index row = static_cast<Index>(n);
        m(row, 0) = r.ranks[n];
        m(row, 1) = r.criterion[n];
        m(row, 2) = r.ssr[n];
        m(row, 3) = r.iterations[n];
        m(row, 4) = r.converged[n];
    }
    write_matrix_csv(m, file);
}

}  // namespace tensorcorr
