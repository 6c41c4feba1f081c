#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace tensorcorr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Mode { one = 1, two = 2, three = 3 };

inline int mode_number(Mode m) { return static_cast<int>(m); }

// Dense order-3 tensor of shape I x J x K. Public indices are 1-based, matching
// the usual tensor-literature notation; storage is first-index-fastest, i.e.
// value(i,j,k) sits at offset (i-1) + (j-1)*I + (k-1)*I*J. That makes each
// frontal slice a contiguous I x J column-major block.
class Tensor3 {
public:
    Tensor3(Index i, Index j, Index k);
    // values given in storage order (first index fastest); must all be finite
    Tensor3(Index i, Index j, Index k, std::vector<double> values);

    Index dim(Mode m) const;
    std::array<Index, 3> dims() const { return {i_, j_, k_}; }
    Index size() const { return i_ * j_ * k_; }

    // unchecked, 1-based
    double operator()(Index i, Index j, Index k) const {
        return values_[(i - 1) + (j - 1) * i_ + (k - 1) * i_ * j_];
    }
    double& operator()(Index i, Index j, Index k) {
        return values_[(i - 1) + (j - 1) * i_ + (k - 1) * i_ * j_];
    }
    // bounds-checked, 1-based
    double at(Index i, Index j, Index k) const;
    double& at(Index i, Index j, Index k);

    const double* data() const { return values_.data(); }
    double* data() { return values_.data(); }

    // zero-copy view of frontal slice k (1-based), I x J
    Eigen::Map<const Matrix> frontal(Index k) const;
    Eigen::Map<Matrix> frontal(Index k);

private:
    Index i_, j_, k_;
    std::vector<double> values_;
};

// Slice of t along the given mode at 1-based index idx.
// mode one -> horizontal slice, J x K; mode two -> lateral slice, I x K;
// mode three -> frontal slice, I x J.
Matrix slice(const Tensor3& t, Mode mode, Index idx);

// Mode-n fiber with the other two indices fixed (1-based, given in ascending
// mode order of the fixed modes).
Vector fiber(const Tensor3& t, Mode mode, Index fixed1, Index fixed2);

// Mode-n unfolding: mode-n fibers laid out as columns, remaining modes ordered
// ascending with the lower-numbered one varying fastest.
Matrix unfold(const Tensor3& t, Mode mode);

// General matricization: rows indexed by the ordered mode set row_modes, columns
// by col_modes; together they must partition {1,2,3}. Within each axis the
// earlier-listed mode varies fastest.
Matrix unfold_general(const Tensor3& t, const std::vector<Mode>& row_modes,
                      const std::vector<Mode>& col_modes);

// Inverse of unfold: rebuild the tensor of shape dims from its mode-n unfolding.
Tensor3 fold(const Matrix& m, Mode mode, const std::array<Index, 3>& dims);

// n-mode product t x_n v: contracts mode n with the columns of v
// (cols(v) must equal dim_n); that mode's extent becomes rows(v).
Tensor3 nmode_product(const Tensor3& t, const Matrix& v, Mode mode);

// Rank-1 tensor a o b o c: value(i,j,k) = a_i * b_j * c_k.
Tensor3 outer3(const Vector& a, const Vector& b, const Vector& c);

double frob_norm(const Tensor3& t);

}  // namespace tensorcorr
