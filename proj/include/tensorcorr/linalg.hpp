#pragma once

#include "tensorcorr/tensor.hpp"

namespace tensorcorr {

struct EigResult {
    Vector eigenvalues;   // ascending
    Matrix eigenvectors;  // column i pairs with eigenvalues(i), orthonormal
};

// Symmetric eigendecomposition. Input must be square and symmetric within
// 1e-10 relative; it is symmetrized as (M + M^T)/2 before factorizing.
EigResult sym_eig(const Matrix& m);

struct SvdResult {
    Matrix u;  // rows(m) x r, orthonormal columns
    Vector s;  // descending, nonnegative
    Matrix v;  // cols(m) x r, orthonormal columns
};

// Thin SVD, r = min(rows, cols).
SvdResult svd(const Matrix& m);

// Minimum-norm least-squares solution of a x = b (works for rank-deficient a).
Matrix lstsq(const Matrix& a, const Matrix& b);

// Moore-Penrose pseudoinverse; singular values below 1e-12 * s_max are dropped.
Matrix pinv(const Matrix& m);

// Columnwise Kronecker product: a and b must have the same number of columns;
// result column r = kron(a.col(r), b.col(r)), with b's index varying fastest.
Matrix khatri_rao(const Matrix& a, const Matrix& b);

}  // namespace tensorcorr
