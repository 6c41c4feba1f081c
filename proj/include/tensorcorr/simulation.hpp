#pragma once

#include "tensorcorr/hcm.hpp"
#include "tensorcorr/tensor.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace tensorcorr {

struct SimConfig {
    std::vector<int> block_sizes = {20, 10, 30, 15, 25};  // sums to M
    double d_block = 0.2;  // Beta shape for within-block correlations
    double d_full = 1.0;   // Beta shape for the full-size mixing matrix
    double w_e = 0.9;      // weight of the block-diagonal part
    double w_s = 0.1;      // weight of the full matrix; w_e + w_s must be 1
    int svd_rank = 10;
    int t_len = 150;
    std::vector<double> time_series;  // optional; must have t_len positive entries
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;
    // synthesized modulating series: level * exp(AR(1) path), always positive
    double ts_level = 20.0;
    double ts_persistence = 0.95;
    double ts_innovation_sd = 0.1;
    // per-asset variances drawn log-uniform on [var_min, var_max]
    double var_min = 0.5;
    double var_max = 2.0;
};

struct SimOutput {
    CorrelationMatrix omega_true;
    Matrix sigma;      // diag(sqrt(v)) * omega_true * diag(sqrt(v))
    Matrix sigma_svd;  // rank-svd_rank truncation of sigma
    Tensor3 tensor;    // slice k = tau_k * sigma_svd + noise_sigma * N(0,1)
    std::vector<double> time_series;  // the tau actually used
};

// Random correlation matrix via the C-vine construction: partial correlations
// drawn from Beta(d, d) rescaled to (-1, 1), then converted to plain
// correlations by the standard recursion. Positive semidefinite by
// construction. Small d piles mass near the +-1 boundaries; d = 1 is uniform.
CorrelationMatrix vine_beta_corr(int n, double d, std::uint64_t seed);

// Block-diagonal matrix with vine_beta_corr blocks (per-block seeds derived
// from seed and the block index) and zeros elsewhere.
Matrix block_diag_corr(const std::vector<int>& sizes, double d, std::uint64_t seed);

SimOutput simulate(const SimConfig& cfg);

// Split along the third mode into slices 1..at and at+1..K.
std::pair<Tensor3, Tensor3> split_tensor(const Tensor3& t, Index at);

}  // namespace tensorcorr
