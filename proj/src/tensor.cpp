#include "tensorcorr/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tensorcorr {

namespace {

void check_dims(Index i, Index j, Index k) {
    if (i < 1 || j < 1 || k < 1)
        throw std::invalid_argument("Tensor3: dimensions must be >= 1, got (" +
                                    std::to_string(i) + ", " + std::to_string(j) + ", " +
                                    std::to_string(k) + ")");
}

[[noreturn]] void bounds_fail(const char* what, int mode, Index idx, Index limit) {
    throw std::out_of_range(std::string(what) + ": index " + std::to_string(idx) +
                            " out of range for mode " + std::to_string(mode) +
                            " (extent " + std::to_string(limit) + ")");
}

void check_index(const char* what, int mode, Index idx, Index limit) {
    if (idx < 1 || idx > limit) bounds_fail(what, mode, idx, limit);
}

}  // namespace

Tensor3::Tensor3(Index i, Index j, Index k) : i_(i), j_(j), k_(k) {
    check_dims(i, j, k);
    values_.assign(static_cast<std::size_t>(i * j * k), 0.0);
}

Tensor3::Tensor3(Index i, Index j, Index k, std::vector<double> values)
    : i_(i), j_(j), k_(k), values_(std::move(values)) {
    check_dims(i, j, k);
    if (static_cast<Index>(values_.size()) != i * j * k)
        throw std::invalid_argument("Tensor3: got " + std::to_string(values_.size()) +
                                    " values for shape (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ", " + std::to_string(k) + ")");
    for (double v : values_)
        if (!std::isfinite(v))
            throw std::invalid_argument("Tensor3: values must be finite");
}

Index Tensor3::dim(Mode m) const {
    switch (m) {
        case Mode::one: return i_;
        case Mode::two: return j_;
        case Mode::three: return k_;
    }
    throw std::invalid_argument("Tensor3::dim: invalid mode");
}

double Tensor3::at(Index i, Index j, Index k) const {
    check_index("Tensor3::at", 1, i, i_);
    check_index("Tensor3::at", 2, j, j_);
    check_index("Tensor3::at", 3, k, k_);
    return (*this)(i, j, k);
}

double& Tensor3::at(Index i, Index j, Index k) {
    check_index("Tensor3::at", 1, i, i_);
    check_index("Tensor3::at", 2, j, j_);
    check_index("Tensor3::at", 3, k, k_);
    return (*this)(i, j, k);
}

Eigen::Map<const Matrix> Tensor3::frontal(Index k) const {
    check_index("Tensor3::frontal", 3, k, k_);
    return Eigen::Map<const Matrix>(values_.data() + (k - 1) * i_ * j_, i_, j_);
}

Eigen::Map<Matrix> Tensor3::frontal(Index k) {
    check_index("Tensor3::frontal", 3, k, k_);
    return Eigen::Map<Matrix>(values_.data() + (k - 1) * i_ * j_, i_, j_);
}

Matrix slice(const Tensor3& t, Mode mode, Index idx) {
    auto [I, J, K] = t.dims();
    switch (mode) {
        case Mode::one: {
            check_index("slice", 1, idx, I);
            Matrix m(J, K);
            for (Index k = 1; k <= K; ++k)
                for (Index j = 1; j <= J; ++j) m(j - 1, k - 1) = t(idx, j, k);
            return m;
        }
        case Mode::two: {
            check_index("slice", 2, idx, J);
            Matrix m(I, K);
            for (Index k = 1; k <= K; ++k)
                for (Index i = 1; i <= I; ++i) m(i - 1, k - 1) = t(i, idx, k);
            return m;
        }
        case Mode::three: {
            check_index("slice", 3, idx, K);
            return t.frontal(idx);
        }
    }
    throw std::invalid_argument("slice: invalid mode");
}

Vector fiber(const Tensor3& t, Mode mode, Index fixed1, Index fixed2) {
    auto [I, J, K] = t.dims();
    switch (mode) {
        case Mode::one: {  // column fiber x(:, j, k)
            check_index("fiber", 2, fixed1, J);
            check_index("fiber", 3, fixed2, K);
            Vector v(I);
            for (Index i = 1; i <= I; ++i) v(i - 1) = t(i, fixed1, fixed2);
            return v;
        }
        case Mode::two: {  // row fiber x(i, :, k)
            check_index("fiber", 1, fixed1, I);
            check_index("fiber", 3, fixed2, K);
            Vector v(J);
            for (Index j = 1; j <= J; ++j) v(j - 1) = t(fixed1, j, fixed2);
            return v;
        }
        case Mode::three: {  // tube fiber x(i, j, :)
            check_index("fiber", 1, fixed1, I);
            check_index("fiber", 2, fixed2, J);
            Vector v(K);
            for (Index k = 1; k <= K; ++k) v(k - 1) = t(fixed1, fixed2, k);
            return v;
        }
    }
    throw std::invalid_argument("fiber: invalid mode");
}

Matrix unfold(const Tensor3& t, Mode mode) {
    auto [I, J, K] = t.dims();
    switch (mode) {
        case Mode::one:
            return Eigen::Map<const Matrix>(t.data(), I, J * K);
        case Mode::two: {
            Matrix m(J, I * K);
            for (Index k = 1; k <= K; ++k)
                m.middleCols((k - 1) * I, I) = t.frontal(k).transpose();
            return m;
        }
        case Mode::three:
            return Eigen::Map<const Matrix>(t.data(), I * J, K).transpose();
    }
    throw std::invalid_argument("unfold: invalid mode");
}

Matrix unfold_general(const Tensor3& t, const std::vector<Mode>& row_modes,
                      const std::vector<Mode>& col_modes) {
    bool seen[4] = {false, false, false, false};
    for (const auto& ms : {row_modes, col_modes})
        for (Mode m : ms) {
            int n = mode_number(m);
            if (seen[n])
                throw std::invalid_argument("unfold_general: mode " + std::to_string(n) +
                                            " listed twice");
            seen[n] = true;
        }
    if (!(seen[1] && seen[2] && seen[3]))
        throw std::invalid_argument(
            "unfold_general: row and column modes must partition {1,2,3}");

    auto [I, J, K] = t.dims();
    const Index ext[4] = {0, I, J, K};
    // strides in storage order (first index fastest)
    const Index stride[4] = {0, 1, I, I * J};

    auto axis = [&](const std::vector<Mode>& ms) {
        // per listed mode: (storage stride, extent); earlier-listed varies fastest
        Index total = 1;
        std::vector<std::pair<Index, Index>> parts;
        for (Mode m : ms) {
            int n = mode_number(m);
            parts.emplace_back(stride[n], ext[n]);
            total *= ext[n];
        }
        return std::make_pair(parts, total);
    };
    auto [row_parts, n_rows] = axis(row_modes);
    auto [col_parts, n_cols] = axis(col_modes);

    auto offsets = [](const std::vector<std::pair<Index, Index>>& parts, Index total) {
        std::vector<Index> off(static_cast<std::size_t>(total), 0);
        Index repeat = 1;
        for (auto [str, ext2] : parts) {
            for (Index pos = 0; pos < total; ++pos)
                off[static_cast<std::size_t>(pos)] += ((pos / repeat) % ext2) * str;
            repeat *= ext2;
        }
        return off;
    };
    auto row_off = offsets(row_parts, n_rows);
    auto col_off = offsets(col_parts, n_cols);

    Matrix m(n_rows, n_cols);
    const double* d = t.data();
    for (Index c = 0; c < n_cols; ++c)
        for (Index r = 0; r < n_rows; ++r)
            m(r, c) = d[row_off[static_cast<std::size_t>(r)] +
                        col_off[static_cast<std::size_t>(c)]];
    return m;
}

Tensor3 fold(const Matrix& m, Mode mode, const std::array<Index, 3>& dims) {
    auto [I, J, K] = dims;
    const Index ext[4] = {0, I, J, K};
    int n = mode_number(mode);
    Index other = I * J * K / ext[n];
    if (m.rows() != ext[n] || m.cols() != other)
        throw std::invalid_argument(
            "fold: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
            " but mode-" + std::to_string(n) + " unfolding of shape (" + std::to_string(I) +
            ", " + std::to_string(J) + ", " + std::to_string(K) + ") is " +
            std::to_string(ext[n]) + "x" + std::to_string(other));

    Tensor3 t(I, J, K);
    switch (mode) {
        case Mode::one:
            Eigen::Map<Matrix>(t.data(), I, J * K) = m;
            break;
        case Mode::two:
            for (Index k = 1; k <= K; ++k)
                t.frontal(k) = m.middleCols((k - 1) * I, I).transpose();
            break;
        case Mode::three:
            Eigen::Map<Matrix>(t.data(), I * J, K) = m.transpose();
            break;
    }
    return t;
}

Tensor3 nmode_product(const Tensor3& t, const Matrix& v, Mode mode) {
    int n = mode_number(mode);
    if (v.cols() != t.dim(mode))
        throw std::invalid_argument(
            "nmode_product: matrix has " + std::to_string(v.cols()) +
            " columns but mode " + std::to_string(n) + " has extent " +
            std::to_string(t.dim(mode)));
    auto dims = t.dims();
    dims[static_cast<std::size_t>(n - 1)] = v.rows();
    return fold(v * unfold(t, mode), mode, dims);
}

Tensor3 outer3(const Vector& a, const Vector& b, const Vector& c) {
    Index I = a.size(), J = b.size(), K = c.size();
    if (I < 1 || J < 1 || K < 1)
        throw std::invalid_argument("outer3: vectors must be nonempty");
    Tensor3 t(I, J, K);
    for (Index k = 1; k <= K; ++k) t.frontal(k) = c(k - 1) * (a * b.transpose());
    return t;
}

double frob_norm(const Tensor3& t) {
    return Eigen::Map<const Vector>(t.data(), t.size()).norm();
}

}  // namespace tensorcorr
