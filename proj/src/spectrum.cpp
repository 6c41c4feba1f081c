#include "tensorcorr/spectrum.hpp"

#include "tensorcorr/io.hpp"
#include "tensorcorr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tensorcorr {

TestResult kruskal_wallis(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty())
        throw std::invalid_argument("kruskal_wallis: both samples must be nonempty");
    std::size_t n = x.size(), m = y.size(), total = n + m;
    if (total < 5)
        throw std::invalid_argument(
            "kruskal_wallis: combined sample of " + std::to_string(total) +
            " is too small for the asymptotic p-value (need at least 5)");

    std::vector<std::pair<double, int>> pooled;
    pooled.reserve(total);
    for (double v : x) pooled.emplace_back(v, 0);
    for (double v : y) pooled.emplace_back(v, 1);
    std::sort(pooled.begin(), pooled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double rank_sum_x = 0.0, ties = 0.0;
    std::size_t i = 0;
    while (i < total) {
        std::size_t j = i;
        while (j < total && pooled[j].first == pooled[i].first) ++j;
        double run = static_cast<double>(j - i);
        double midrank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (pooled[k].second == 0) rank_sum_x += midrank;
        ties += run * run * run - run;
        i = j;
    }

    double dn = static_cast<double>(total);
    double tie_denom = 1.0 - ties / (dn * dn * dn - dn);
    if (tie_denom <= 0.0) return {0.0, 1.0};  // every pooled value identical

    double rank_sum_y = dn * (dn + 1.0) / 2.0 - rank_sum_x;
    double h = 12.0 / (dn * (dn + 1.0)) *
                   (rank_sum_x * rank_sum_x / static_cast<double>(n) +
                    rank_sum_y * rank_sum_y / static_cast<double>(m)) -
               3.0 * (dn + 1.0);
    h = std::max(h / tie_denom, 0.0);
    double p = std::erfc(std::sqrt(h / 2.0));  // chi-square survival, 1 df
    return {h, std::clamp(p, 0.0, 1.0)};
}

namespace {

// D = sup |F_x - F_y| for two ascending-sorted samples; evaluated after each
// run of tied values so shared values are handled exactly.
double ks_statistic_sorted(const std::vector<double>& xs, const std::vector<double>& ys) {
    double n = static_cast<double>(xs.size()), m = static_cast<double>(ys.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < xs.size() || j < ys.size()) {
        double v = i < xs.size() && (j >= ys.size() || xs[i] <= ys[j]) ? xs[i] : ys[j];
        while (i < xs.size() && xs[i] == v) ++i;
        while (j < ys.size() && ys[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return d;
}

double ks_asymptotic_p(double d, std::size_t n, std::size_t m) {
    if (d == 0.0) return 1.0;
    double en = static_cast<double>(n) * static_cast<double>(m) /
                static_cast<double>(n + m);
    double lambda = std::sqrt(en) * d;
    double q = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double term = 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
        q += (j % 2 == 1) ? term : -term;
    }
    return std::clamp(q, 0.0, 1.0);
}

}  // namespace

TestResult ks_two_sample(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty())
        throw std::invalid_argument("ks_two_sample: both samples must be nonempty");
    std::vector<double> xs = x, ys = y;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double d = ks_statistic_sorted(xs, ys);
    return {d, ks_asymptotic_p(d, x.size(), y.size())};
}

TestResult ks_two_sample_exact(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty())
        throw std::invalid_argument("ks_two_sample_exact: both samples must be nonempty");
    std::size_t n = x.size(), m = y.size(), total = n + m;
    if (total > 20)
        throw std::invalid_argument("ks_two_sample_exact: combined sample of " +
                                    std::to_string(total) + " exceeds the limit of 20");

    std::vector<double> xs = x, ys = y;
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double d_obs = ks_statistic_sorted(xs, ys);

    std::vector<double> pooled;
    pooled.reserve(total);
    pooled.insert(pooled.end(), xs.begin(), xs.end());
    pooled.insert(pooled.end(), ys.begin(), ys.end());
    std::sort(pooled.begin(), pooled.end());

    // walk every size-n index subset of the pooled (sorted) sample
    std::vector<std::size_t> pick(n);
    std::iota(pick.begin(), pick.end(), 0);
    std::vector<bool> in_x(total);
    long long hits = 0, combos = 0;
    double dn = static_cast<double>(n), dm = static_cast<double>(m);
    while (true) {
        std::fill(in_x.begin(), in_x.end(), false);
        for (std::size_t p : pick) in_x[p] = true;
        double d = 0.0;
        std::size_t cx = 0, cy = 0, i = 0;
        while (i < total) {
            std::size_t j = i;
            while (j < total && pooled[j] == pooled[i]) ++j;
            for (std::size_t k = i; k < j; ++k) (in_x[k] ? cx : cy) += 1;
            d = std::max(d, std::abs(static_cast<double>(cx) / dn -
                                     static_cast<double>(cy) / dm));
            i = j;
        }
        ++combos;
        if (d >= d_obs - 1e-12) ++hits;

        // next combination in lexicographic order
        std::size_t k = n;
        while (k > 0 && pick[k - 1] == total - n + k - 1) --k;
        if (k == 0) break;
        ++pick[k - 1];
        for (std::size_t l = k; l < n; ++l) pick[l] = pick[l - 1] + 1;
    }
    return {d_obs, static_cast<double>(hits) / static_cast<double>(combos)};
}

SpectrumComparison compare_spectra(const CorrelationMatrix& t1, const CorrelationMatrix& t2,
                                   bool drop_zero) {
    SpectrumComparison out;
    auto spectrum = [&](const CorrelationMatrix& t) {
        Vector eig = sym_eig(t.values()).eigenvalues;
        double trace_dev = std::abs(eig.sum() - static_cast<double>(t.size()));
        if (trace_dev > 1e-8 * std::max<double>(1.0, static_cast<double>(t.size())))
            throw std::runtime_error(
                "compare_spectra: eigenvalue sum deviates from the trace by " +
                format_double(trace_dev));
        std::vector<double> v;
        v.reserve(eig.size());
        for (Index i = 0; i < eig.size(); ++i)
            if (!drop_zero || eig(i) >= 1e-10) v.push_back(eig(i));
        return v;
    };
    out.eigs_1 = spectrum(t1);
    out.eigs_2 = spectrum(t2);
    out.kw = kruskal_wallis(out.eigs_1, out.eigs_2);
    out.ks = ks_two_sample(out.eigs_1, out.eigs_2);
    return out;
}

double block_contrast(const Matrix& corr, const std::vector<int>& block_sizes) {
    if (corr.rows() != corr.cols())
        throw std::invalid_argument("block_contrast: matrix must be square");
    if (block_sizes.empty())
        throw std::invalid_argument("block_contrast: block sizes must be nonempty");
    Index m = 0;
    for (int s : block_sizes) {
        if (s < 1) throw std::invalid_argument("block_contrast: block sizes must be >= 1");
        m += s;
    }
    if (m != corr.rows())
        throw std::invalid_argument("block_contrast: block sizes sum to " + std::to_string(m) +
                                    " but matrix has " + std::to_string(corr.rows()) + " rows");
    std::vector<int> label(m);
    Index offset = 0;
    for (std::size_t b = 0; b < block_sizes.size(); ++b)
        for (int k = 0; k < block_sizes[b]; ++k) label[offset++] = static_cast<int>(b);

    double within = 0.0, between = 0.0;
    long long n_within = 0, n_between = 0;
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j) {
            if (i == j) continue;
            if (label[i] == label[j]) {
                within += corr(i, j);
                ++n_within;
            } else {
                between += corr(i, j);
                ++n_between;
            }
        }
    double mean_within = n_within > 0 ? within / static_cast<double>(n_within) : 0.0;
    double mean_between = n_between > 0 ? between / static_cast<double>(n_between) : 0.0;
    return mean_within - mean_between;
}

void write_test_report_csv(const SpectrumComparison& c, const std::filesystem::path& file) {
    Matrix m(2, 3);
    m << 1, c.kw.statistic, c.kw.p_value, 2, c.ks.statistic, c.ks.p_value;
    write_matrix_csv(m, file);
}

}  // namespace tensorcorr
