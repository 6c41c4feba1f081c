#pragma once

#include "tensorcorr/decompositions.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace tensorcorr {

// Free-parameter count for one model configuration.
//   parafac: ranks = {R},       w = R*(I+J+K)
//   tucker:  ranks = {P,Q,R},   w = P*I + Q*J + R*K + P*Q*R
//   sdt:     ranks = {P,R},     w = P*I + P*J + R*K + P*R   (Q = P)
struct ComplexityCount {
    ModelKind kind;
    std::array<Index, 3> dims;
    std::vector<int> ranks;
    long long w;
};

long long count_free_params(ModelKind kind, const std::array<Index, 3>& dims,
                            const std::vector<int>& ranks);
ComplexityCount complexity(ModelKind kind, const std::array<Index, 3>& dims,
                           const std::vector<int>& ranks);

// Information criteria on u data points and w free parameters.
// bic = u*ln(ssr/u) + w*ln(u); aic = u*ln(ssr/u) + 2w;
// aicc = aic + 2w(w+1)/(u-w-1).
// A perfect fit (ssr == 0) returns -infinity so minimization still works.
double bic(double ssr, long long u, long long w);
double aic(double ssr, long long u, long long w);
double aicc(double ssr, long long u, long long w);  // u <= w+1 -> domain_error

// Core-consistency diagnostic, in percent. Factors are column-normalized, the
// least-squares Tucker core G implied by them is computed, and the score is
//   100 * (1 - offdiag_mass(G) / superdiag_mass(G)),
// i.e. the core is compared against its own superdiagonal (the column norms
// absorbed there). 100 means perfectly superdiagonal; large off-superdiagonal
// mass drives it toward 0 and below. Degenerate cases: a zero core scores 100,
// a zero superdiagonal with nonzero off-mass scores -infinity.
struct ConcordiaResult {
    double value;
    bool rank_deficient;  // some normalized factor lost column rank; score via pseudoinverse
};
ConcordiaResult concordia_detail(const Tensor3& t, const ParafacModel& m);
double concordia(const Tensor3& t, const ParafacModel& m);

// Fit-difference heuristic: given (components s, best fit) pairs sorted by
// ascending s with non-decreasing fit, returns the s maximizing
// dif(s)/dif(s+1) where dif(s) = fit(s) - fit(s-1). Endpoints are not
// candidates; ties pick the smallest s. Needs at least 3 entries.
int diffit(const std::vector<std::pair<int, double>>& fits);

struct ScanConfig {
    AlsConfig als;                      // per-rank seed derived from als.seed and the rank
    int time_rank = 1;                  // fixed R for tucker/sdt scans
    double concordia_threshold = 80.0;  // acceptance bar for parafac scans
};

// One row per scanned rank, plus the selection. criterion is BIC for
// tucker/sdt (selected = argmin) and the core-consistency score for parafac
// (selected = largest rank still at or above the threshold, falling back to
// the best-scoring rank when none qualifies).
struct RankScanResult {
    std::vector<int> ranks;
    std::vector<double> criterion;
    std::vector<double> ssr;
    std::vector<int> iterations;
    std::vector<int> converged;
    std::vector<std::string> failures;  // per-rank fit failures, normally empty
    int selected = 0;
    std::string criterion_name;  // "bic" or "concordia"
};

RankScanResult scan_ranks(const Tensor3& t, ModelKind kind, const std::vector<int>& rank_grid,
                          const ScanConfig& cfg);

// Numeric CSV, one row per rank: rank, criterion, ssr, iterations, converged.
void write_scan_csv(const RankScanResult& r, const std::filesystem::path& file);

}  // namespace tensorcorr
