#pragma once

#include "tensorcorr/hcm.hpp"

#include <filesystem>
#include <vector>

namespace tensorcorr {

struct TestResult {
    double statistic;
    double p_value;
};

// Two-group Kruskal-Wallis with midranks and the ties correction; p-value from
// the chi-square distribution with 1 degree of freedom. Needs a combined
// sample of at least 5 for the asymptotic approximation. When every pooled
// value is identical the test degenerates to H = 0, p = 1.
TestResult kruskal_wallis(const std::vector<double>& x, const std::vector<double>& y);

// Two-sample Kolmogorov-Smirnov: D = sup |F_x - F_y|, p from the asymptotic
// Kolmogorov distribution at sqrt(n*m/(n+m)) * D (series truncated at 100
// terms, clamped into [0, 1]).
TestResult ks_two_sample(const std::vector<double>& x, const std::vector<double>& y);

// Exact permutation version: enumerates all C(n+m, n) group assignments of the
// pooled sample and returns the fraction with D at least as large as observed.
// Only for n + m <= 20.
TestResult ks_two_sample_exact(const std::vector<double>& x, const std::vector<double>& y);

struct SpectrumComparison {
    std::vector<double> eigs_1, eigs_2;
    TestResult kw;
    TestResult ks;
};

// Eigenvalue spectra of the two matrices (ascending), optionally dropping
// eigenvalues below 1e-10, then both tests on the spectra. Each trace is
// sanity-checked against the matrix size before testing.
SpectrumComparison compare_spectra(const CorrelationMatrix& t1, const CorrelationMatrix& t2,
                                   bool drop_zero = false);

// Mean within-block off-diagonal value minus mean between-block value; the
// descriptive "how block-structured is this matrix" score. Blocks follow
// sizes in order; empty averages count as 0.
double block_contrast(const Matrix& corr, const std::vector<int>& block_sizes);

// Numeric CSV, one row per test: test id (1 = Kruskal-Wallis,
// 2 = Kolmogorov-Smirnov), statistic, p-value.
void write_test_report_csv(const SpectrumComparison& c, const std::filesystem::path& file);

}  // namespace tensorcorr
