#include "tensorcorr/simulation.hpp"

#include "tensorcorr/rng.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tensorcorr {

CorrelationMatrix vine_beta_corr(int n, double d, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("vine_beta_corr: n must be >= 1");
    if (!(d > 0.0)) throw std::invalid_argument("vine_beta_corr: d must be > 0");
    Rng rng(seed);
    Matrix partial = Matrix::Zero(n, n);
    Matrix out = Matrix::Identity(n, n);
    for (int i = 0; i < n - 1; ++i) {
        for (int j = i + 1; j < n; ++j) {
            partial(i, j) = 2.0 * rng.beta(d, d) - 1.0;
            double rho = partial(i, j);
            for (int k = i - 1; k >= 0; --k)
                rho = rho * std::sqrt((1.0 - partial(k, i) * partial(k, i)) *
                                      (1.0 - partial(k, j) * partial(k, j))) +
                      partial(k, i) * partial(k, j);
            out(i, j) = rho;
            out(j, i) = rho;
        }
    }
    return CorrelationMatrix(std::move(out));
}

Matrix block_diag_corr(const std::vector<int>& sizes, double d, std::uint64_t seed) {
    if (sizes.empty()) throw std::invalid_argument("block_diag_corr: sizes must be nonempty");
    for (int s : sizes)
        if (s < 1) throw std::invalid_argument("block_diag_corr: block sizes must be >= 1");
    Index m = std::accumulate(sizes.begin(), sizes.end(), Index{0});
    Matrix out = Matrix::Identity(m, m);
    Index offset = 0;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
        Index s = sizes[b];
        out.block(offset, offset, s, s) =
            vine_beta_corr(static_cast<int>(s), d, mix_seed(seed, b)).values();
        offset += s;
    }
    return out;
}

namespace {

void check_config(const SimConfig& cfg) {
    if (cfg.block_sizes.empty())
        throw std::invalid_argument("simulate: block_sizes must be nonempty");
    for (int s : cfg.block_sizes)
        if (s < 1) throw std::invalid_argument("simulate: block sizes must be >= 1");
    if (!(cfg.d_block > 0.0) || !(cfg.d_full > 0.0))
        throw std::invalid_argument("simulate: Beta shapes must be > 0");
    if (cfg.w_e < 0.0 || cfg.w_s < 0.0 || std::abs(cfg.w_e + cfg.w_s - 1.0) > 1e-12)
        throw std::invalid_argument("simulate: weights must be nonnegative and sum to 1");
    Index m = std::accumulate(cfg.block_sizes.begin(), cfg.block_sizes.end(), Index{0});
    if (cfg.svd_rank < 1 || cfg.svd_rank > m)
        throw std::invalid_argument("simulate: svd_rank " + std::to_string(cfg.svd_rank) +
                                    " outside [1, " + std::to_string(m) + "]");
    if (cfg.t_len < 1) throw std::invalid_argument("simulate: t_len must be >= 1");
    if (cfg.noise_sigma < 0.0)
        throw std::invalid_argument("simulate: noise_sigma must be >= 0");
    if (!(cfg.ts_level > 0.0) || cfg.ts_innovation_sd < 0.0 ||
        std::abs(cfg.ts_persistence) >= 1.0)
        throw std::invalid_argument(
            "simulate: synthesized series needs level > 0, innovation sd >= 0, |persistence| < 1");
    if (!(cfg.var_min > 0.0) || cfg.var_max < cfg.var_min)
        throw std::invalid_argument("simulate: need 0 < var_min <= var_max");
    if (!cfg.time_series.empty()) {
        if (static_cast<int>(cfg.time_series.size()) != cfg.t_len)
            throw std::invalid_argument("simulate: time_series has " +
                                        std::to_string(cfg.time_series.size()) +
                                        " entries, expected t_len = " +
                                        std::to_string(cfg.t_len));
        for (std::size_t k = 0; k < cfg.time_series.size(); ++k)
            if (!(cfg.time_series[k] > 0.0))
                throw std::invalid_argument("simulate: time_series entry " + std::to_string(k) +
                                            " is not positive");
    }
}

}  // namespace

SimOutput simulate(const SimConfig& cfg) {
    check_config(cfg);
    Index m = std::accumulate(cfg.block_sizes.begin(), cfg.block_sizes.end(), Index{0});

    Matrix e = block_diag_corr(cfg.block_sizes, cfg.d_block, mix_seed(cfg.seed, 1));
    Matrix s = vine_beta_corr(static_cast<int>(m), cfg.d_full, mix_seed(cfg.seed, 2)).values();
    CorrelationMatrix omega = nearest_correlation(cfg.w_e * e + cfg.w_s * s);

    Rng var_rng(mix_seed(cfg.seed, 3));
    Vector sqrt_v(m);
    double lo = std::log(cfg.var_min), hi = std::log(cfg.var_max);
    for (Index i = 0; i < m; ++i)
        sqrt_v(i) = std::sqrt(std::exp(lo + (hi - lo) * var_rng.uniform()));
    Matrix sigma = sqrt_v.asDiagonal() * omega.values() * sqrt_v.asDiagonal();
    sigma = 0.5 * (sigma + sigma.transpose());

    Matrix sigma_svd;
    if (cfg.svd_rank == m) {
        // full-rank truncation is the identity; skipping the SVD keeps slices
        // exactly proportional to sigma
        sigma_svd = sigma;
    } else {
        Eigen::BDCSVD<Matrix> dec(sigma, Eigen::ComputeThinU | Eigen::ComputeThinV);
        sigma_svd = dec.matrixU().leftCols(cfg.svd_rank) *
                    dec.singularValues().head(cfg.svd_rank).asDiagonal() *
                    dec.matrixV().leftCols(cfg.svd_rank).transpose();
        double asym = (sigma_svd - sigma_svd.transpose()).norm() /
                      std::max(sigma_svd.norm(), 1e-300);
        if (asym > 1e-10)
            throw std::runtime_error(
                "simulate: truncated covariance lost symmetry (relative asymmetry " +
                std::to_string(asym) + ")");
        sigma_svd = 0.5 * (sigma_svd + sigma_svd.transpose());
    }

    std::vector<double> tau = cfg.time_series;
    if (tau.empty()) {
        Rng ts_rng(mix_seed(cfg.seed, 4));
        tau.resize(cfg.t_len);
        double x = 0.0;
        for (int k = 0; k < cfg.t_len; ++k) {
            x = cfg.ts_persistence * x + cfg.ts_innovation_sd * ts_rng.normal();
            tau[k] = cfg.ts_level * std::exp(x);
        }
    }

    Rng noise_rng(mix_seed(cfg.seed, 5));
    Tensor3 tensor(m, m, cfg.t_len);
    double* out = tensor.data();
    for (int k = 0; k < cfg.t_len; ++k) {
        const double t_k = tau[k];
        for (Index j = 0; j < m; ++j)
            for (Index i = 0; i < m; ++i)
                *out++ = t_k * sigma_svd(i, j) + cfg.noise_sigma * noise_rng.normal();
    }

    return SimOutput{std::move(omega), std::move(sigma), std::move(sigma_svd),
                     std::move(tensor), std::move(tau)};
}

std::pair<Tensor3, Tensor3> split_tensor(const Tensor3& t, Index at) {
    auto [I, J, K] = t.dims();
    if (at < 1 || at >= K)
        throw std::out_of_range("split_tensor: split point " + std::to_string(at) +
                                " outside [1, " + std::to_string(K - 1) + "]");
    Tensor3 first(I, J, at), second(I, J, K - at);
    for (Index k = 1; k <= at; ++k) first.frontal(k) = t.frontal(k);
    for (Index k = at + 1; k <= K; ++k) second.frontal(k - at) = t.frontal(k);
    return {std::move(first), std::move(second)};
}

}  // namespace tensorcorr
