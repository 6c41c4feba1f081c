#include "tensorcorr/decompositions.hpp"

#include "tensorcorr/io.hpp"
#include "tensorcorr/linalg.hpp"
#include "tensorcorr/rng.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace tensorcorr {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::parafac: return "parafac";
        case ModelKind::tucker: return "tucker";
        case ModelKind::sdt: return "sdt";
    }
    throw std::invalid_argument("to_string: invalid ModelKind");
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "parafac") return ModelKind::parafac;
    if (s == "tucker") return ModelKind::tucker;
    if (s == "sdt") return ModelKind::sdt;
    throw std::invalid_argument("unknown model kind '" + s + "'");
}

namespace {

void check_config(const AlsConfig& cfg) {
    if (cfg.max_iter < 1) throw std::invalid_argument("AlsConfig: max_iter must be >= 1");
    if (!(cfg.tol > 0.0)) throw std::invalid_argument("AlsConfig: tol must be > 0");
    if (cfg.restarts < 1) throw std::invalid_argument("AlsConfig: restarts must be >= 1");
}

// Precomputed unfoldings shared across sweeps. x1 and xf alias the tensor's
// storage (mode-1 unfolding and the I*J x K flattening whose transpose is the
// mode-3 unfolding); x2 is materialized once.
struct TensorView {
    Index I, J, K;
    Eigen::Map<const Matrix> x1;  // I x J*K
    Eigen::Map<const Matrix> xf;  // I*J x K
    Matrix x2;                    // J x I*K
    double norm2;

    explicit TensorView(const Tensor3& t)
        : I(t.dim(Mode::one)),
          J(t.dim(Mode::two)),
          K(t.dim(Mode::three)),
          x1(t.data(), I, J * K),
          xf(t.data(), I * J, K),
          x2(J, I * K),
          norm2(x1.squaredNorm()) {
        for (Index k = 1; k <= K; ++k)
            x2.middleCols((k - 1) * I, I) = t.frontal(k).transpose();
    }
};

Matrix gram_pinv(const Matrix& g) {
    return g.completeOrthogonalDecomposition().pseudoInverse();
}

Matrix kron(const Matrix& x, const Matrix& y) {
    Matrix out(x.rows() * y.rows(), x.cols() * y.cols());
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = 0; i < x.rows(); ++i)
            out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return out;
}

Matrix random_normal(Index rows, Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

Matrix random_orthonormal(Index rows, Index cols, Rng& rng) {
    Matrix g = random_normal(rows, cols, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

// Orthonormal I x p basis whose leading columns are y's top left singular
// vectors; padded with an orthonormal complement if y is too narrow.
Matrix leading_left_singular(const Matrix& y, Index p) {
    Eigen::BDCSVD<Matrix> dec(y, Eigen::ComputeThinU);
    Matrix u = dec.matrixU();
    if (u.cols() >= p) return u.leftCols(p);
    Matrix out(y.rows(), p);
    out.leftCols(u.cols()) = u;
    Eigen::HouseholderQR<Matrix> qr(u);
    Matrix q = qr.householderQ();
    out.rightCols(p - u.cols()) = q.rightCols(y.rows() - u.cols()).leftCols(p - u.cols());
    return out;
}

struct AlsTrace {
    double ssr = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> eps_trace;
};

// Shared convergence bookkeeping: records eps, returns true when |delta| < tol.
bool step_monitor(AlsTrace& out, double ssr, double norm2, double tol, double& prev_eps) {
    double eps = std::sqrt(std::max(ssr, 0.0) / norm2);
    out.ssr = std::max(ssr, 0.0);
    out.eps_trace.push_back(eps);
    bool done = std::abs(prev_eps - eps) < tol;
    prev_eps = eps;
    return done;
}

// The Gram-based SSR identities below lose all precision once the residual is
// ~1e-8 of the data norm (cancellation); near-exact fits switch to an explicit
// residual so the monitor and trace stay meaningful.
constexpr double kExplicitSsrThreshold = 1e-9;

double cp_explicit_ssr(const TensorView& v, const Matrix& a, const Matrix& b,
                       const Matrix& w) {
    return (v.x1 - a * khatri_rao(w, b).transpose()).squaredNorm();
}

AlsTrace run_parafac(const TensorView& v, Matrix& a, Matrix& b, Matrix& c,
                     const AlsConfig& cfg) {
    AlsTrace out;
    double prev_eps = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= cfg.max_iter; ++it) {
        Matrix gb = b.transpose() * b;
        Matrix gc = c.transpose() * c;
        a = v.x1 * khatri_rao(c, b) * gram_pinv(gc.cwiseProduct(gb));
        Matrix ga = a.transpose() * a;
        b = v.x2 * khatri_rao(c, a) * gram_pinv(gc.cwiseProduct(ga));
        gb = b.transpose() * b;
        Matrix m3 = v.xf.transpose() * khatri_rao(b, a);
        c = m3 * gram_pinv(gb.cwiseProduct(ga));
        double ssr = v.norm2 - m3.cwiseProduct(c).sum();
        if (ssr < kExplicitSsrThreshold * v.norm2) ssr = cp_explicit_ssr(v, a, b, c);
        out.iterations = it;
        if (step_monitor(out, ssr, v.norm2, cfg.tol, prev_eps)) {
            out.converged = true;
            break;
        }
    }
    return out;
}

// SDT is CP with a structured time factor: x_ijk = sum_p a_ip b_jp w_kp where
// W = C * L^T. Every update below is the exact least-squares solve of the
// global objective in that block, so SSR is non-increasing.
AlsTrace run_sdt(const TensorView& v, Matrix& a, Matrix& b, Matrix& c, Matrix& l,
                 const AlsConfig& cfg) {
    AlsTrace out;
    double prev_eps = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= cfg.max_iter; ++it) {
        Matrix w = c * l.transpose();
        Matrix gw = w.transpose() * w;
        Matrix gb = b.transpose() * b;
        a = v.x1 * khatri_rao(w, b) * gram_pinv(gw.cwiseProduct(gb));
        Matrix ga = a.transpose() * a;
        b = v.x2 * khatri_rao(w, a) * gram_pinv(gw.cwiseProduct(ga));
        gb = b.transpose() * b;
        Matrix gab = ga.cwiseProduct(gb);
        Matrix m3 = v.xf.transpose() * khatri_rao(b, a);  // m3(k,p) = <A_p X_k B_p>
        c = m3 * l * gram_pinv(l.transpose() * gab * l);
        Matrix gc = c.transpose() * c;
        Matrix h = m3.transpose() * c;
        l = gram_pinv(gab) * h * gram_pinv(gc);  // normal equations Gab L Gc = H
        double ssr = v.norm2 - h.cwiseProduct(l).sum();
        if (ssr < kExplicitSsrThreshold * v.norm2)
            ssr = cp_explicit_ssr(v, a, b, c * l.transpose());
        out.iterations = it;
        if (step_monitor(out, ssr, v.norm2, cfg.tol, prev_eps)) {
            out.converged = true;
            break;
        }
    }
    return out;
}

AlsTrace run_tucker(const Tensor3& t, const TensorView& v, Matrix& a, Matrix& b, Matrix& c,
                    Tensor3& core, const AlsConfig& cfg) {
    const Index I = v.I, J = v.J, K = v.K;
    const Index P = a.cols(), Q = b.cols(), R = c.cols();
    AlsTrace out;
    double prev_eps = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= cfg.max_iter; ++it) {
        Matrix y1 = Matrix::Zero(I, Q * R);  // (X x2 B^T x3 C^T) unfolded in mode 1
        for (Index k = 1; k <= K; ++k) {
            Matrix z = t.frontal(k) * b;
            for (Index r = 0; r < R; ++r) y1.middleCols(r * Q, Q) += c(k - 1, r) * z;
        }
        a = leading_left_singular(y1, P);

        Matrix y2 = Matrix::Zero(J, P * R);  // (X x1 A^T x3 C^T) unfolded in mode 2
        for (Index k = 1; k <= K; ++k) {
            Matrix z = t.frontal(k).transpose() * a;
            for (Index r = 0; r < R; ++r) y2.middleCols(r * P, P) += c(k - 1, r) * z;
        }
        b = leading_left_singular(y2, Q);

        Matrix y3(K, P * Q);  // (X x1 A^T x2 B^T) unfolded in mode 3
        for (Index k = 1; k <= K; ++k) {
            Matrix z = a.transpose() * t.frontal(k) * b;
            y3.row(k - 1) = Eigen::Map<const Vector>(z.data(), P * Q);
        }
        c = leading_left_singular(y3, R);

        Matrix g3 = c.transpose() * y3;  // core in mode-3 unfolding
        core = fold(g3, Mode::three, {P, Q, R});
        double ssr = v.norm2 - g3.squaredNorm();  // orthonormal factors
        if (ssr < kExplicitSsrThreshold * v.norm2) {
            Matrix g1 = unfold(core, Mode::one);
            ssr = (v.x1 - a * g1 * kron(c, b).transpose()).squaredNorm();
        }
        out.iterations = it;
        if (step_monitor(out, ssr, v.norm2, cfg.tol, prev_eps)) {
            out.converged = true;
            break;
        }
    }
    return out;
}

Matrix hosvd_factor(const Tensor3& t, const TensorView& v, int mode, Index p) {
    Matrix gram;
    if (mode == 1) {
        gram = v.x1 * v.x1.transpose();
    } else if (mode == 2) {
        gram = Matrix::Zero(v.J, v.J);
        for (Index k = 1; k <= v.K; ++k)
            gram.noalias() += t.frontal(k).transpose() * t.frontal(k);
    } else {
        gram = v.xf.transpose() * v.xf;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    Matrix out(gram.rows(), p);
    for (Index i = 0; i < p; ++i) out.col(i) = es.eigenvectors().col(gram.rows() - 1 - i);
    return out;
}

Matrix sdt_core_ls(const TensorView& v, const Matrix& a, const Matrix& b, const Matrix& c) {
    Matrix gab = (a.transpose() * a).cwiseProduct(b.transpose() * b);
    Matrix m3 = v.xf.transpose() * khatri_rao(b, a);
    return gram_pinv(gab) * (m3.transpose() * c) * gram_pinv(c.transpose() * c);
}

long long parafac_params(Index i, Index j, Index k, Index r) {
    return static_cast<long long>(r) * (i + j + k);
}
long long tucker_params(Index i, Index j, Index k, Index p, Index q, Index r) {
    return static_cast<long long>(p) * i + static_cast<long long>(q) * j +
           static_cast<long long>(r) * k + static_cast<long long>(p) * q * r;
}
long long sdt_params(Index i, Index j, Index k, Index p, Index r) {
    return static_cast<long long>(p) * i + static_cast<long long>(p) * j +
           static_cast<long long>(r) * k + static_cast<long long>(p) * r;
}

FitReport finalize_report(const Tensor3& t, const Tensor3& xhat, AlsTrace trace,
                          long long free_params) {
    double norm = frob_norm(t);
    double ssr = 0.0;
    const double* td = t.data();
    const double* xd = xhat.data();
    for (Index n = 0; n < t.size(); ++n) {
        double d = td[n] - xd[n];
        ssr += d * d;
    }
    FitReport rep;
    rep.ssr = ssr;
    rep.rel_error = norm > 0 ? std::sqrt(ssr) / norm : 0.0;
    rep.iterations = trace.iterations;
    rep.converged = trace.converged;
    rep.free_params = free_params;
    rep.eps_trace = std::move(trace.eps_trace);
    return rep;
}

// Restart driver: runs starts indexed 0..n-1, keeps the smallest Gram-based SSR,
// ties broken by lowest index. NaN SSR (blown-up start) loses to everything.
template <typename RunStart>
auto best_of_restarts(int n, RunStart&& run) {
    auto best = run(0);
    for (int s = 1; s < n; ++s) {
        auto cur = run(s);
        bool better = std::isnan(best.second.ssr) ||
                      (!std::isnan(cur.second.ssr) && cur.second.ssr < best.second.ssr);
        if (better) best = std::move(cur);
    }
    return best;
}

}  // namespace

std::pair<ParafacModel, FitReport> fit_parafac(const Tensor3& t, int rank,
                                               const AlsConfig& cfg) {
    check_config(cfg);
    auto [I, J, K] = t.dims();
    Index max_rank = std::min({I * J, I * K, J * K});
    if (rank < 1 || rank > max_rank)
        throw std::invalid_argument("fit_parafac: rank " + std::to_string(rank) +
                                    " outside [1, " + std::to_string(max_rank) + "]");
    if (frob_norm(t) == 0.0) {
        ParafacModel m{Matrix::Zero(I, rank), Matrix::Zero(J, rank), Matrix::Zero(K, rank)};
        FitReport rep;
        rep.converged = true;
        rep.degenerate_input = true;
        rep.free_params = parafac_params(I, J, K, rank);
        return {m, rep};
    }
    TensorView v(t);
    auto [model, trace] = best_of_restarts(cfg.restarts, [&](int s) {
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(s)));
        ParafacModel m{random_normal(I, rank, rng), random_normal(J, rank, rng),
                       random_normal(K, rank, rng)};
        AlsTrace tr = run_parafac(v, m.a, m.b, m.c, cfg);
        return std::make_pair(std::move(m), std::move(tr));
    });
    // canonical form: component weight split evenly across the three columns,
    // time columns oriented mean-positive (sign absorbed by the first factor)
    for (Index r = 0; r < rank; ++r) {
        double na = model.a.col(r).norm(), nb = model.b.col(r).norm(),
               nc = model.c.col(r).norm();
        if (na > 0 && nb > 0 && nc > 0) {
            double s = std::cbrt(na * nb * nc);
            model.a.col(r) *= s / na;
            model.b.col(r) *= s / nb;
            model.c.col(r) *= s / nc;
        }
        if (model.c.col(r).mean() < 0.0) {
            model.c.col(r) = -model.c.col(r);
            model.a.col(r) = -model.a.col(r);
        }
    }
    FitReport rep =
        finalize_report(t, reconstruct(model), std::move(trace), parafac_params(I, J, K, rank));
    return {std::move(model), std::move(rep)};
}

std::pair<ParafacModel, FitReport> fit_parafac_from(const Tensor3& t, ParafacModel init,
                                                    const AlsConfig& cfg) {
    check_config(cfg);
    auto [I, J, K] = t.dims();
    if (init.a.rows() != I || init.b.rows() != J || init.c.rows() != K ||
        init.a.cols() != init.b.cols() || init.a.cols() != init.c.cols())
        throw std::invalid_argument("fit_parafac_from: init factors inconsistent with tensor");
    TensorView v(t);
    AlsTrace tr = run_parafac(v, init.a, init.b, init.c, cfg);
    FitReport rep = finalize_report(t, reconstruct(init), std::move(tr),
                                    parafac_params(I, J, K, init.rank()));
    return {std::move(init), std::move(rep)};
}

namespace {

// Orient time-basis columns mean-positive; the matching core slab absorbs the
// sign so the reconstruction is unchanged.
void tucker_orient(TuckerModel& m) {
    for (Index r = 0; r < m.c.cols(); ++r) {
        if (m.c.col(r).mean() < 0.0) {
            m.c.col(r) = -m.c.col(r);
            for (Index p = 1; p <= m.core.dim(Mode::one); ++p)
                for (Index q = 1; q <= m.core.dim(Mode::two); ++q)
                    m.core(p, q, r + 1) = -m.core(p, q, r + 1);
        }
    }
}

}  // namespace

std::pair<TuckerModel, FitReport> fit_tucker(const Tensor3& t, const std::array<int, 3>& ranks,
                                             const AlsConfig& cfg) {
    check_config(cfg);
    auto [I, J, K] = t.dims();
    auto [P, Q, R] = ranks;
    if (P < 1 || P > I || Q < 1 || Q > J || R < 1 || R > K)
        throw std::invalid_argument("fit_tucker: ranks (" + std::to_string(P) + ", " +
                                    std::to_string(Q) + ", " + std::to_string(R) +
                                    ") exceed dims (" + std::to_string(I) + ", " +
                                    std::to_string(J) + ", " + std::to_string(K) + ")");
    if (frob_norm(t) == 0.0) {
        TuckerModel m{Matrix::Zero(I, P), Matrix::Zero(J, Q), Matrix::Zero(K, R),
                      Tensor3(P, Q, R)};
        FitReport rep;
        rep.converged = true;
        rep.degenerate_input = true;
        rep.free_params = tucker_params(I, J, K, P, Q, R);
        return {std::move(m), rep};
    }
    TensorView v(t);
    auto [model, trace] = best_of_restarts(cfg.restarts, [&](int s) {
        TuckerModel m{Matrix(), Matrix(), Matrix(), Tensor3(P, Q, R)};
        if (s == 0) {
            m.a = hosvd_factor(t, v, 1, P);
            m.b = hosvd_factor(t, v, 2, Q);
            m.c = hosvd_factor(t, v, 3, R);
        } else {
            Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(s)));
            m.a = random_orthonormal(I, P, rng);
            m.b = random_orthonormal(J, Q, rng);
            m.c = random_orthonormal(K, R, rng);
        }
        AlsTrace tr = run_tucker(t, v, m.a, m.b, m.c, m.core, cfg);
        return std::make_pair(std::move(m), std::move(tr));
    });
    tucker_orient(model);
    FitReport rep = finalize_report(t, reconstruct(model), std::move(trace),
                                    tucker_params(I, J, K, P, Q, R));
    return {std::move(model), std::move(rep)};
}

std::pair<TuckerModel, FitReport> fit_tucker_from(const Tensor3& t, TuckerModel init,
                                                  const AlsConfig& cfg) {
    check_config(cfg);
    auto [I, J, K] = t.dims();
    if (init.a.rows() != I || init.b.rows() != J || init.c.rows() != K)
        throw std::invalid_argument("fit_tucker_from: init factors inconsistent with tensor");
    auto orth = [](const Matrix& m) {
        Eigen::HouseholderQR<Matrix> qr(m);
        return Matrix(qr.householderQ() * Matrix::Identity(m.rows(), m.cols()));
    };
    init.a = orth(init.a);
    init.b = orth(init.b);
    init.c = orth(init.c);
    TensorView v(t);
    AlsTrace tr = run_tucker(t, v, init.a, init.b, init.c, init.core, cfg);
    tucker_orient(init);
    FitReport rep = finalize_report(
        t, reconstruct(init), std::move(tr),
        tucker_params(I, J, K, init.a.cols(), init.b.cols(), init.c.cols()));
    return {std::move(init), std::move(rep)};
}

namespace {

void sdt_canonicalize(SdtModel& m) {
    for (Index p = 0; p < m.p(); ++p) {
        double na = m.a.col(p).norm(), nb = m.b.col(p).norm();
        if (na > 0) m.a.col(p) /= na;
        if (nb > 0) m.b.col(p) /= nb;
        m.core_diag.row(p) *= na * nb;
    }
    for (Index r = 0; r < m.r(); ++r) {
        double nc = m.c.col(r).norm();
        if (nc > 0) {
            m.c.col(r) /= nc;
            m.core_diag.col(r) *= nc;
        }
        if (m.c.col(r).mean() < 0.0) {
            m.c.col(r) = -m.c.col(r);
            m.core_diag.col(r) = -m.core_diag.col(r);
        }
    }
}

}  // namespace

std::pair<SdtModel, FitReport> fit_sdt(const Tensor3& t, int p, int r, const AlsConfig& cfg) {
    check_config(cfg);
    auto [I, J, K] = t.dims();
    if (p < 1 || p > std::min(I, J))
        throw std::invalid_argument("fit_sdt: P " + std::to_string(p) + " outside [1, " +
                                    std::to_string(std::min(I, J)) + "]");
    if (r < 1 || r > K)
        throw std::invalid_argument("fit_sdt: R " + std::to_string(r) + " outside [1, " +
                                    std::to_string(K) + "]");
    if (frob_norm(t) == 0.0) {
        SdtModel m{Matrix::Zero(I, p), Matrix::Zero(J, p), Matrix::Zero(K, r),
                   Matrix::Zero(p, r)};
        FitReport rep;
        rep.converged = true;
        rep.degenerate_input = true;
        rep.free_params = sdt_params(I, J, K, p, r);
        return {std::move(m), rep};
    }
    TensorView v(t);
    auto [model, trace] = best_of_restarts(cfg.restarts, [&](int s) {
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(s)));
        SdtModel m{random_normal(I, p, rng), random_normal(J, p, rng),
                   random_normal(K, r, rng), Matrix()};
        m.core_diag = sdt_core_ls(v, m.a, m.b, m.c);
        AlsTrace tr = run_sdt(v, m.a, m.b, m.c, m.core_diag, cfg);
        return std::make_pair(std::move(m), std::move(tr));
    });
    sdt_canonicalize(model);
    FitReport rep = finalize_report(t, reconstruct(model), std::move(trace),
                                    sdt_params(I, J, K, p, r));
    return {std::move(model), std::move(rep)};
}

std::pair<SdtModel, FitReport> fit_sdt_from(const Tensor3& t, SdtModel init,
                                            const AlsConfig& cfg) {
    check_config(cfg);
    auto [I, J, K] = t.dims();
    if (init.a.rows() != I || init.b.rows() != J || init.c.rows() != K ||
        init.a.cols() != init.b.cols() || init.core_diag.rows() != init.p() ||
        init.core_diag.cols() != init.r())
        throw std::invalid_argument("fit_sdt_from: init factors inconsistent with tensor");
    TensorView v(t);
    AlsTrace tr = run_sdt(v, init.a, init.b, init.c, init.core_diag, cfg);
    sdt_canonicalize(init);
    FitReport rep = finalize_report(t, reconstruct(init), std::move(tr),
                                    sdt_params(I, J, K, init.p(), init.r()));
    return {std::move(init), std::move(rep)};
}

Tensor3 reconstruct(const ParafacModel& m) {
    Index I = m.a.rows(), J = m.b.rows(), K = m.c.rows();
    Tensor3 out(I, J, K);
    Eigen::Map<Matrix>(out.data(), I, J * K) = m.a * khatri_rao(m.c, m.b).transpose();
    return out;
}

Tensor3 reconstruct(const TuckerModel& m) {
    Index I = m.a.rows(), J = m.b.rows(), K = m.c.rows();
    Tensor3 out(I, J, K);
    Eigen::Map<Matrix>(out.data(), I, J * K) =
        m.a * unfold(m.core, Mode::one) * kron(m.c, m.b).transpose();
    return out;
}

Tensor3 reconstruct(const SdtModel& m) {
    Index I = m.a.rows(), J = m.b.rows(), K = m.c.rows();
    Tensor3 out(I, J, K);
    Matrix w = m.c * m.core_diag.transpose();
    Eigen::Map<Matrix>(out.data(), I, J * K) = m.a * khatri_rao(w, m.b).transpose();
    return out;
}

SdtModel embed_parafac_as_sdt(const ParafacModel& m) {
    Index r = m.rank();
    return {m.a, m.b, m.c, Matrix::Identity(r, r)};
}

Tensor3 tucker_core_from_factors(const Tensor3& t, const Matrix& a, const Matrix& b,
                                 const Matrix& c) {
    auto [I, J, K] = t.dims();
    if (a.rows() != I || b.rows() != J || c.rows() != K)
        throw std::invalid_argument(
            "tucker_core_from_factors: factor rows (" + std::to_string(a.rows()) + ", " +
            std::to_string(b.rows()) + ", " + std::to_string(c.rows()) +
            ") do not match tensor dims (" + std::to_string(I) + ", " + std::to_string(J) +
            ", " + std::to_string(K) + ")");
    Tensor3 g = nmode_product(t, pinv(a), Mode::one);
    g = nmode_product(g, pinv(b), Mode::two);
    return nmode_product(g, pinv(c), Mode::three);
}

ModelKind kind_of(const AnyModel& m) {
    if (std::holds_alternative<ParafacModel>(m)) return ModelKind::parafac;
    if (std::holds_alternative<TuckerModel>(m)) return ModelKind::tucker;
    return ModelKind::sdt;
}

Tensor3 reconstruct(const AnyModel& m) {
    return std::visit([](const auto& model) { return reconstruct(model); }, m);
}

void save_model(const AnyModel& m, const FitReport& report, std::uint64_t seed,
                const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json meta;
    meta["kind"] = to_string(kind_of(m));
    meta["seed"] = seed;
    meta["fit"] = {{"ssr", report.ssr},
                   {"rel_error", report.rel_error},
                   {"iterations", report.iterations},
                   {"converged", report.converged},
                   {"free_params", report.free_params},
                   {"degenerate_input", report.degenerate_input}};

    std::visit(
        [&](const auto& model) {
            using T = std::decay_t<decltype(model)>;
            write_matrix_csv(model.a, dir / "a.csv");
            write_matrix_csv(model.b, dir / "b.csv");
            write_matrix_csv(model.c, dir / "c.csv");
            meta["dims"] = {model.a.rows(), model.b.rows(), model.c.rows()};
            if constexpr (std::is_same_v<T, ParafacModel>) {
                meta["ranks"] = {model.rank()};
            } else if constexpr (std::is_same_v<T, TuckerModel>) {
                auto [p, q, r] = model.core.dims();
                meta["ranks"] = {p, q, r};
                write_matrix_csv(unfold(model.core, Mode::one), dir / "core.csv");
            } else {
                meta["ranks"] = {model.p(), model.r()};
                write_matrix_csv(model.core_diag, dir / "core.csv");
            }
        },
        m);
    write_text_atomic(dir / "metadata.json", meta.dump(2) + "\n");
}

SavedModel load_model(const std::filesystem::path& dir) {
    std::ifstream in(dir / "metadata.json");
    if (!in) throw ParseError("cannot open " + (dir / "metadata.json").string());
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError((dir / "metadata.json").string() + ": " + e.what());
    }
    SavedModel out;
    try {
        ModelKind kind = model_kind_from_string(meta.at("kind").get<std::string>());
        out.seed = meta.at("seed").get<std::uint64_t>();
        const auto& fit = meta.at("fit");
        out.report.ssr = fit.at("ssr").get<double>();
        out.report.rel_error = fit.at("rel_error").get<double>();
        out.report.iterations = fit.at("iterations").get<int>();
        out.report.converged = fit.at("converged").get<bool>();
        out.report.free_params = fit.at("free_params").get<long long>();
        out.report.degenerate_input = fit.value("degenerate_input", false);

        Matrix a = read_matrix_csv(dir / "a.csv");
        Matrix b = read_matrix_csv(dir / "b.csv");
        Matrix c = read_matrix_csv(dir / "c.csv");
        if (kind == ModelKind::parafac) {
            out.model = ParafacModel{std::move(a), std::move(b), std::move(c)};
        } else if (kind == ModelKind::tucker) {
            auto ranks = meta.at("ranks").get<std::vector<Index>>();
            if (ranks.size() != 3)
                throw ParseError((dir / "metadata.json").string() + ": tucker needs 3 ranks");
            Tensor3 core = fold(read_matrix_csv(dir / "core.csv"), Mode::one,
                                {ranks[0], ranks[1], ranks[2]});
            out.model =
                TuckerModel{std::move(a), std::move(b), std::move(c), std::move(core)};
        } else {
            out.model = SdtModel{std::move(a), std::move(b), std::move(c),
                                 read_matrix_csv(dir / "core.csv")};
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError((dir / "metadata.json").string() + ": " + e.what());
    }
    return out;
}

}  // namespace tensorcorr
