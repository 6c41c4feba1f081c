#include "tensorcorr/linalg.hpp"

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tensorcorr {

EigResult sym_eig(const Matrix& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("sym_eig: matrix is " + std::to_string(m.rows()) + "x" +
                                    std::to_string(m.cols()) + ", expected square");
    double scale = m.norm();
    double asym = (m - m.transpose()).norm();
    if (asym > 1e-10 * (scale > 0 ? scale : 1.0))
        throw std::invalid_argument("sym_eig: matrix is not symmetric (relative asymmetry " +
                                    std::to_string(asym / (scale > 0 ? scale : 1.0)) + ")");
    Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("sym_eig: eigendecomposition failed to converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

SvdResult svd(const Matrix& m) {
    if (m.size() == 0) throw std::invalid_argument("svd: empty matrix");
    Eigen::BDCSVD<Matrix> s(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {s.matrixU(), s.singularValues(), s.matrixV()};
}

Matrix lstsq(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw std::invalid_argument("lstsq: a has " + std::to_string(a.rows()) +
                                    " rows but b has " + std::to_string(b.rows()));
    return a.completeOrthogonalDecomposition().solve(b);
}

Matrix pinv(const Matrix& m) {
    if (m.size() == 0) throw std::invalid_argument("pinv: empty matrix");
    Eigen::BDCSVD<Matrix> s(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = s.singularValues();
    double cutoff = 1e-12 * (sv.size() > 0 ? sv(0) : 0.0);
    Vector inv = Vector::Zero(sv.size());
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
    return s.matrixV() * inv.asDiagonal() * s.matrixU().transpose();
}

Matrix khatri_rao(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw std::invalid_argument("khatri_rao: column counts differ (" +
                                    std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.cols()) + ")");
    Matrix out(a.rows() * b.rows(), a.cols());
    for (Index r = 0; r < a.cols(); ++r)
        for (Index i = 0; i < a.rows(); ++i)
            out.col(r).segment(i * b.rows(), b.rows()) = a(i, r) * b.col(r);
    return out;
}

}  // namespace tensorcorr
