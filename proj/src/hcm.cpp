#include "tensorcorr/hcm.hpp"

#include "tensorcorr/io.hpp"
#include "tensorcorr/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "json.hpp"

namespace tensorcorr {

CorrelationMatrix::CorrelationMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0)
        throw std::invalid_argument("CorrelationMatrix: matrix must be square and nonempty");
    if (!m_.allFinite())
        throw std::invalid_argument("CorrelationMatrix: entries must be finite");
    double scale = std::max(m_.norm(), 1e-300);
    if ((m_ - m_.transpose()).norm() > 1e-10 * scale)
        throw std::invalid_argument("CorrelationMatrix: matrix is not symmetric");
    for (Index i = 0; i < m_.rows(); ++i) {
        if (std::abs(m_(i, i) - 1.0) > 1e-8)
            throw std::invalid_argument("CorrelationMatrix: diagonal entry " +
                                        std::to_string(i) + " is " +
                                        format_double(m_(i, i)) + ", expected 1");
        for (Index j = 0; j < i; ++j)
            if (std::abs(m_(i, j)) > 1.0 + 1e-8)
                throw std::invalid_argument(
                    "CorrelationMatrix: entry (" + std::to_string(i) + ", " +
                    std::to_string(j) + ") is " + format_double(m_(i, j)) +
                    ", outside [-1, 1]");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m_ + m_.transpose()),
                                             Eigen::EigenvaluesOnly);
    double min_eig = es.eigenvalues()(0);
    if (min_eig < -1e-8)
        throw std::invalid_argument("CorrelationMatrix: smallest eigenvalue " +
                                    format_double(min_eig) + " below -1e-8");
    // canonicalize: mirror the lower triangle, pin the diagonal, clamp bounds
    for (Index i = 0; i < m_.rows(); ++i) {
        m_(i, i) = 1.0;
        for (Index j = 0; j < i; ++j) {
            double v = std::clamp(m_(i, j), -1.0, 1.0);
            m_(i, j) = v;
            m_(j, i) = v;
        }
    }
}

namespace {

LinkMatrix make_link(const Matrix& raw) {
    LinkMatrix out;
    out.asymmetry = (raw - raw.transpose()).norm() / std::max(raw.norm(), 1e-300);
    out.values = 0.5 * (raw + raw.transpose());
    return out;
}

Vector time_column_means(const Matrix& c) {
    return c.colwise().mean().transpose();
}

}  // namespace

LinkMatrix link_matrix(const AnyModel& m, bool collapse_time) {
    return std::visit(
        [&](const auto& model) -> LinkMatrix {
            using T = std::decay_t<decltype(model)>;
            if (model.a.rows() != model.b.rows())
                throw std::invalid_argument(
                    "link_matrix: needs square cross-sections, got A with " +
                    std::to_string(model.a.rows()) + " rows and B with " +
                    std::to_string(model.b.rows()));
            if constexpr (std::is_same_v<T, ParafacModel>) {
                return make_link(model.a * model.b.transpose());
            } else if constexpr (std::is_same_v<T, SdtModel>) {
                Vector lambda;
                if (model.r() == 1) {
                    lambda = model.core_diag.col(0);
                } else if (collapse_time) {
                    lambda = model.core_diag * time_column_means(model.c);
                } else {
                    throw std::invalid_argument(
                        "link_matrix: model has " + std::to_string(model.r()) +
                        " time components; refit with R = 1 or set collapse_time");
                }
                return make_link(model.a * lambda.asDiagonal() * model.b.transpose());
            } else {
                auto [P, Q, R] = model.core.dims();
                Matrix slice;
                if (R == 1) {
                    slice = model.core.frontal(1);
                } else if (collapse_time) {
                    Vector wts = time_column_means(model.c);
                    slice = Matrix::Zero(P, Q);
                    for (Index r = 1; r <= R; ++r) slice += wts(r - 1) * model.core.frontal(r);
                } else {
                    throw std::invalid_argument(
                        "link_matrix: model has " + std::to_string(R) +
                        " time components; refit with R = 1 or set collapse_time");
                }
                return make_link(model.a * slice * model.b.transpose());
            }
        },
        m);
}

Matrix normalize_to_correlation(const LinkMatrix& g) {
    const Matrix& v = g.values;
    Index m = v.rows();
    Vector d(m);
    for (Index i = 0; i < m; ++i) {
        if (!(v(i, i) > 0.0))
            throw std::invalid_argument("normalize_to_correlation: diagonal entry " +
                                        std::to_string(i) + " is " + format_double(v(i, i)) +
                                        ", must be positive");
        d(i) = std::sqrt(v(i, i));
    }
    Matrix out = v.array() / (d * d.transpose()).array();
    out = 0.5 * (out + out.transpose());
    return out;
}

NearestCorrelationError::NearestCorrelationError(const std::string& msg, Matrix iterate,
                                                 double res)
    : std::runtime_error(msg), last_iterate(std::move(iterate)), residual(res) {}

CorrelationMatrix nearest_correlation(const Matrix& w, double tol, int max_iter) {
    if (w.rows() != w.cols() || w.rows() == 0)
        throw std::invalid_argument("nearest_correlation: matrix must be square and nonempty");
    if (!(tol > 0.0)) throw std::invalid_argument("nearest_correlation: tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("nearest_correlation: max_iter must be >= 1");
    double scale = std::max(w.norm(), 1e-300);
    if ((w - w.transpose()).norm() > 1e-8 * scale)
        throw std::invalid_argument("nearest_correlation: input is not symmetric");

    Matrix y = 0.5 * (w + w.transpose());
    Matrix ds = Matrix::Zero(y.rows(), y.cols());
    Matrix x_prev;
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= max_iter; ++it) {
        Matrix r = y - ds;
        Eigen::SelfAdjointEigenSolver<Matrix> es(r);
        Matrix x = es.eigenvectors() *
                   es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                   es.eigenvectors().transpose();
        x = 0.5 * (x + x.transpose());
        ds = x - r;
        double diag_viol = (x.diagonal().array() - 1.0).abs().maxCoeff();
        double change = x_prev.size() > 0
                            ? (x - x_prev).norm()
                            : std::numeric_limits<double>::infinity();
        x_prev = x;
        y = x;
        y.diagonal().setOnes();
        residual = std::max(diag_viol, change);
        if (residual < tol) {
            Eigen::SelfAdjointEigenSolver<Matrix> check(y, Eigen::EigenvaluesOnly);
            if (check.eigenvalues()(0) >= -1e-8) return CorrelationMatrix(y);
            // converged per the loop criterion but still below the eigenvalue
            // floor; keep projecting
        }
    }
    throw NearestCorrelationError("nearest_correlation: no convergence after " +
                                      std::to_string(max_iter) +
                                      " iterations (residual " + format_double(residual) + ")",
                                  y, residual);
}

namespace {

template <typename ModelT>
Index dominant_component(const ModelT& model) {
    Vector weights;
    if constexpr (std::is_same_v<ModelT, SdtModel>) {
        weights = model.core_diag.col(0).cwiseAbs();
    } else if constexpr (std::is_same_v<ModelT, TuckerModel>) {
        auto [P, Q, R] = model.core.dims();
        (void)R;
        if (P != Q)
            throw std::invalid_argument(
                "remove_market_mode: needs matching static ranks, core is " +
                std::to_string(P) + " x " + std::to_string(Q));
        weights = Vector(P);
        for (Index p = 1; p <= P; ++p) weights(p - 1) = std::abs(model.core(p, p, 1));
    } else {
        weights = Vector(model.rank());
        for (Index p = 0; p < model.rank(); ++p)
            weights(p) = model.a.col(p).norm() * model.b.col(p).norm();
    }
    Index which = 0;
    weights.maxCoeff(&which);
    return which;
}

Matrix drop_column(const Matrix& m, Index col) {
    Matrix out(m.rows(), m.cols() - 1);
    out.leftCols(col) = m.leftCols(col);
    out.rightCols(m.cols() - 1 - col) = m.rightCols(m.cols() - 1 - col);
    return out;
}

Matrix drop_row(const Matrix& m, Index row) {
    Matrix out(m.rows() - 1, m.cols());
    out.topRows(row) = m.topRows(row);
    out.bottomRows(m.rows() - 1 - row) = m.bottomRows(m.rows() - 1 - row);
    return out;
}

}  // namespace

AnyModel remove_market_mode(const AnyModel& m) {
    return std::visit(
        [](const auto& model) -> AnyModel {
            using T = std::decay_t<decltype(model)>;
            if (model.a.cols() < 2)
                throw std::invalid_argument(
                    "remove_market_mode: model has a single static component");
            Index p = dominant_component(model);
            if constexpr (std::is_same_v<T, ParafacModel>) {
                return ParafacModel{drop_column(model.a, p), drop_column(model.b, p),
                                    drop_column(model.c, p)};
            } else if constexpr (std::is_same_v<T, SdtModel>) {
                return SdtModel{drop_column(model.a, p), drop_column(model.b, p), model.c,
                                drop_row(model.core_diag, p)};
            } else {
                auto [P, Q, R] = model.core.dims();
                Tensor3 core(P - 1, Q - 1, R);
                for (Index r = 1; r <= R; ++r)
                    core.frontal(r) = drop_row(drop_column(model.core.frontal(r), p), p);
                return TuckerModel{drop_column(model.a, p), drop_column(model.b, p), model.c,
                                   std::move(core)};
            }
        },
        m);
}

MarketMode market_mode_from_string(const std::string& s) {
    if (s == "keep") return MarketMode::keep;
    if (s == "remove") return MarketMode::remove;
    throw std::invalid_argument("unknown market-mode '" + s + "' (keep|remove)");
}

std::string to_string(MarketMode m) {
    return m == MarketMode::keep ? "keep" : "remove";
}

namespace {

// Runs one pipeline stage, prefixing escaping errors with the stage name while
// preserving the exception type the CLI maps to exit codes.
template <typename F>
auto stage(const char* name, F&& f) {
    auto prefix = [&](const std::string& what) {
        return "build_hcm[" + std::string(name) + "]: " + what;
    };
    try {
        return f();
    } catch (const NearestCorrelationError& e) {
        throw NearestCorrelationError(prefix(e.what()), e.last_iterate, e.residual);
    } catch (const ParseError& e) {
        throw ParseError(prefix(e.what()));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(prefix(e.what()));
    } catch (const std::exception& e) {
        throw std::runtime_error(prefix(e.what()));
    }
}

}  // namespace

HcmResult build_hcm(const Tensor3& t, ModelKind kind, const std::vector<int>& rank_grid,
                    MarketMode market_mode, const HcmConfig& cfg) {
    auto [I, J, K] = t.dims();
    if (I != J)
        throw std::invalid_argument("build_hcm: needs square frontal slices, got " +
                                    std::to_string(I) + " x " + std::to_string(J));
    double slice_asym = 0.0;
    for (Index k = 1; k <= K; ++k) {
        auto s = t.frontal(k);
        double scale = std::max(s.norm(), 1e-300);
        slice_asym = std::max(slice_asym, (s - s.transpose()).norm() / scale);
    }

    RankScanResult scan =
        stage("scan", [&] { return scan_ranks(t, kind, rank_grid, cfg.scan); });

    AnyModel model{ParafacModel{}};
    FitReport report;
    stage("fit", [&] {
        if (kind == ModelKind::parafac) {
            auto [m, r] = fit_parafac(t, scan.selected, cfg.refit);
            model = std::move(m);
            report = std::move(r);
        } else if (kind == ModelKind::tucker) {
            auto [m, r] =
                fit_tucker(t, {scan.selected, scan.selected, cfg.scan.time_rank}, cfg.refit);
            model = std::move(m);
            report = std::move(r);
        } else {
            auto [m, r] = fit_sdt(t, scan.selected, cfg.scan.time_rank, cfg.refit);
            model = std::move(m);
            report = std::move(r);
        }
        return 0;
    });

    if (market_mode == MarketMode::remove)
        model = stage("market_mode", [&] { return remove_market_mode(model); });

    LinkMatrix link =
        stage("link_matrix", [&] { return link_matrix(model, cfg.collapse_time); });
    Matrix omega =
        stage("normalize", [&] { return normalize_to_correlation(link); });
    CorrelationMatrix theta = stage("nearest_correlation", [&] {
        return nearest_correlation(omega, cfg.nearest_tol, cfg.nearest_max_iter);
    });

    double projection_residual = (theta.values() - omega).norm();
    int selected_rank = scan.selected;
    return HcmResult{std::move(theta),
                     std::move(report),
                     std::move(scan),
                     std::move(model),
                     kind,
                     market_mode,
                     selected_rank,
                     cfg.scan.time_rank,
                     link.asymmetry,
                     projection_residual,
                     slice_asym};
}

void write_hcm_provenance(const HcmResult& r, const std::filesystem::path& file) {
    nlohmann::json j;
    j["model"] = to_string(r.kind);
    j["selected_rank"] = r.selected_rank;
    j["time_rank"] = r.time_rank;
    j["market_mode"] = to_string(r.market_mode);
    j["criterion"] = r.scan.criterion_name;
    j["scanned_ranks"] = r.scan.ranks;
    j["fit"] = {{"ssr", r.report.ssr},
                {"rel_error", r.report.rel_error},
                {"iterations", r.report.iterations},
                {"converged", r.report.converged},
                {"free_params", r.report.free_params}};
    j["link_asymmetry"] = r.link_asymmetry;
    j["projection_residual"] = r.projection_residual;
    j["slice_asymmetry"] = r.slice_asymmetry;
    write_text_atomic(file, j.dump(2) + "\n");
}

}  // namespace tensorcorr
