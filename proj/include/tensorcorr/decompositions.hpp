#pragma once

#include "tensorcorr/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace tensorcorr {

enum class ModelKind { parafac, tucker, sdt };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// X ~ sum_r a_r o b_r o c_r. Fitted factors keep component magnitude split
// evenly across the three columns (weight^(1/3) each).
struct ParafacModel {
    Matrix a, b, c;  // I x R, J x R, K x R
    Index rank() const { return a.cols(); }
};

// X ~ G x1 A x2 B x3 C. Fitted factors have orthonormal columns; magnitude
// lives in the core.
struct TuckerModel {
    Matrix a, b, c;  // I x P, J x Q, K x R
    Tensor3 core;    // P x Q x R
};

// X ~ L x1 A x2 B x3 C where L's frontal slices are diagonal (lambda_pqr != 0
// only for p = q, so P = Q). core_diag(p, r) = lambda_{p p r}. Fitted factors
// have unit-norm columns; magnitude lives in core_diag.
struct SdtModel {
    Matrix a, b, c;    // I x P, J x P, K x R
    Matrix core_diag;  // P x R
    Index p() const { return a.cols(); }
    Index r() const { return c.cols(); }
};

struct AlsConfig {
    int max_iter = 500;
    double tol = 1e-8;  // stop when |eps_prev - eps| < tol
    int restarts = 5;   // best SSR wins; ties broken by lowest restart index
    std::uint64_t seed = 0;
};

struct FitReport {
    double ssr = 0.0;        // squared residual Frobenius norm; = (rel_error * ||X||_F)^2
    double rel_error = 0.0;  // ||X - Xhat||_F / ||X||_F
    int iterations = 0;
    bool converged = false;       // tolerance met before max_iter ran out
    long long free_params = 0;
    bool degenerate_input = false;  // all-zero tensor; zero model returned untouched
    std::vector<double> eps_trace;  // winning restart's eps after each sweep
};

// ALS fits. Each factor update is an exact least-squares solve on the matching
// unfolding; restarts use independent standard-normal initializations derived
// from cfg.seed. Tucker restart 1 uses HOSVD initialization (leading singular
// vectors of each unfolding), further restarts are random orthonormal.
std::pair<ParafacModel, FitReport> fit_parafac(const Tensor3& t, int rank,
                                               const AlsConfig& cfg);
std::pair<TuckerModel, FitReport> fit_tucker(const Tensor3& t, const std::array<int, 3>& ranks,
                                             const AlsConfig& cfg);
std::pair<SdtModel, FitReport> fit_sdt(const Tensor3& t, int p, int r, const AlsConfig& cfg);

// Single-start fits from caller-supplied factors (cfg.restarts ignored).
// Tucker init factors are orthonormalized first.
std::pair<ParafacModel, FitReport> fit_parafac_from(const Tensor3& t, ParafacModel init,
                                                    const AlsConfig& cfg);
std::pair<TuckerModel, FitReport> fit_tucker_from(const Tensor3& t, TuckerModel init,
                                                  const AlsConfig& cfg);
std::pair<SdtModel, FitReport> fit_sdt_from(const Tensor3& t, SdtModel init,
                                            const AlsConfig& cfg);

Tensor3 reconstruct(const ParafacModel& m);
Tensor3 reconstruct(const TuckerModel& m);
Tensor3 reconstruct(const SdtModel& m);

// Exact embedding: PARAFAC rank R becomes SDT with P = R time-facing
// components, R time factors, identity core diagonal.
SdtModel embed_parafac_as_sdt(const ParafacModel& m);

// Least-squares core given fixed factors: G minimizing ||t - G x1 a x2 b x3 c||,
// computed with pseudoinverse contractions so rank-deficient factors work.
Tensor3 tucker_core_from_factors(const Tensor3& t, const Matrix& a, const Matrix& b,
                                 const Matrix& c);

using AnyModel = std::variant<ParafacModel, TuckerModel, SdtModel>;

ModelKind kind_of(const AnyModel& m);
Tensor3 reconstruct(const AnyModel& m);

// Model directory layout: a.csv, b.csv, c.csv, core.csv (tucker: mode-1
// unfolding of the core; sdt: core_diag), metadata.json.
struct SavedModel {
    AnyModel model;
    FitReport report;
    std::uint64_t seed = 0;
};
void save_model(const AnyModel& m, const FitReport& report, std::uint64_t seed,
                const std::filesystem::path& dir);
SavedModel load_model(const std::filesystem::path& dir);

}  // namespace tensorcorr
