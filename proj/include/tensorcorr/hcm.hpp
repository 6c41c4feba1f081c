#pragma once

#include "tensorcorr/decompositions.hpp"
#include "tensorcorr/model_selection.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace tensorcorr {

// Symmetric matrix with unit diagonal, off-diagonal entries in [-1, 1], and
// smallest eigenvalue >= -1e-8. The constructor validates those properties
// (admitting only float-level slack: asymmetry <= 1e-10 relative, diagonal
// within 1e-8 of 1, off-diagonal within 1e-8 of the bounds) and then
// canonicalizes storage so symmetry and the unit diagonal hold exactly:
// the lower triangle is mirrored, the diagonal set to 1, off-diagonal
// entries clamped into [-1, 1]. Invalid input -> invalid_argument naming the
// violated property.
class CorrelationMatrix {
public:
    explicit CorrelationMatrix(Matrix m);
    const Matrix& values() const { return m_; }
    Index size() const { return m_.rows(); }

private:
    Matrix m_;
};

// Symmetrized asset-by-asset link matrix extracted from a fitted model, with
// the asymmetry of the raw product recorded as a diagnostic.
struct LinkMatrix {
    Matrix values;     // M x M, symmetric by construction: (raw + raw^T)/2
    double asymmetry;  // ||raw - raw^T||_F / max(||raw||_F, 1e-300)
};

// Static-factor cross-product:
//   sdt:     A * diag(lambda_.1) * B^T   (single time component)
//   tucker:  A * G_.1 * B^T              (single frontal core slice)
//   parafac: A * B^T                     (identity core, any rank)
// Requires A and B to have the same row count. sdt/tucker models with more
// than one time component are rejected unless collapse_time is set, in which
// case the core slices are combined weighted by the mean of each time-factor
// column (experimental fallback).
LinkMatrix link_matrix(const AnyModel& m, bool collapse_time = false);

// Omega = D^-1 * Gamma * D^-1 with D = diag(sqrt(Gamma_mm)). Unit diagonal by
// construction; every diagonal entry of Gamma must be strictly positive, else
// invalid_argument naming the (0-based) offending index.
Matrix normalize_to_correlation(const LinkMatrix& g);

struct NearestCorrelationError : std::runtime_error {
    NearestCorrelationError(const std::string& msg, Matrix iterate, double res);
    Matrix last_iterate;
    double residual;
};

// Alternating projections between the PSD cone and the unit-diagonal set with
// Dykstra's correction. Stops when max(unit-diagonal violation of the PSD
// projection, Frobenius change between successive PSD projections) < tol and
// the returned iterate clears the CorrelationMatrix eigenvalue floor.
// Non-convergence within max_iter -> NearestCorrelationError carrying the
// last iterate and its residual.
CorrelationMatrix nearest_correlation(const Matrix& w, double tol = 1e-7, int max_iter = 200);

// Drops the dominant static component, identified by the largest core weight:
// |lambda_p1| (sdt), |g_pp1| (tucker), ||a_p||*||b_p|| (parafac). Columns p of
// A and B go away along with the matching core row/column; for parafac the
// matching time-factor column goes too (components are inseparable there).
// A single-component model -> invalid_argument.
AnyModel remove_market_mode(const AnyModel& m);

enum class MarketMode { keep, remove };
MarketMode market_mode_from_string(const std::string& s);
std::string to_string(MarketMode m);

struct HcmConfig {
    ScanConfig scan;    // rank scan settings (time_rank also used for the refit)
    AlsConfig refit;    // full-strength fit at the selected rank
    double nearest_tol = 1e-7;
    int nearest_max_iter = 200;
    bool collapse_time = false;
};

struct HcmResult {
    CorrelationMatrix hcm;
    FitReport report;  // refit at the selected rank, before market-mode removal
    RankScanResult scan;
    AnyModel model;  // the model the link matrix came from (after removal, if any)
    ModelKind kind;
    MarketMode market_mode;
    int selected_rank;
    int time_rank;
    double link_asymmetry;
    double projection_residual;  // ||Theta - Omega||_F
    double slice_asymmetry;      // max relative frontal-slice asymmetry of the input
};

// Full pipeline: scan_ranks -> refit at the selected rank -> optional
// market-mode removal -> link_matrix -> normalize_to_correlation ->
// nearest_correlation. Requires a square-slice tensor (I == J); frontal-slice
// asymmetry is measured and reported rather than rejected, since noisy
// covariance estimates are routinely asymmetric at float level. Errors from
// any stage propagate with a "build_hcm[stage]" prefix.
HcmResult build_hcm(const Tensor3& t, ModelKind kind, const std::vector<int>& rank_grid,
                    MarketMode market_mode, const HcmConfig& cfg = {});

// JSON sidecar describing one build_hcm run (kind, ranks, market-mode flag,
// fit metrics, projection residual, link asymmetry).
void write_hcm_provenance(const HcmResult& r, const std::filesystem::path& file);

}  // namespace tensorcorr
