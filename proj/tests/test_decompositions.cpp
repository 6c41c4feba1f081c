#include "doctest.h"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "temp_dir.hpp"
#include "tensorcorr/decompositions.hpp"
#include "tensorcorr/io.hpp"
#include "tensorcorr/linalg.hpp"
#include "tensorcorr/model_selection.hpp"
#include "tensorcorr/rng.hpp"

using namespace tensorcorr;

namespace {

Matrix random_matrix(Index r, Index c, Rng& rng) {
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = rng.normal();
    return m;
}

Tensor3 random_tensor(Index i, Index j, Index k, Rng& rng) {
    Tensor3 t(i, j, k);
    for (Index n = 0; n < t.size(); ++n) t.data()[n] = rng.normal();
    return t;
}

double max_abs_diff(const Tensor3& x, const Tensor3& y) {
    REQUIRE(x.dims() == y.dims());
    double m = 0.0;
    for (Index n = 0; n < x.size(); ++n)
        m = std::max(m, std::abs(x.data()[n] - y.data()[n]));
    return m;
}

bool trace_non_increasing(const std::vector<double>& eps, double slack) {
    for (std::size_t n = 1; n < eps.size(); ++n)
        if (eps[n] > eps[n - 1] + slack) return false;
    return true;
}

}  // namespace

TEST_CASE("model kind names round trip") {
    for (ModelKind k : {ModelKind::parafac, ModelKind::tucker, ModelKind::sdt})
        CHECK(model_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(model_kind_from_string("nope"), std::invalid_argument);
}

TEST_CASE("reconstruction matches the definition written as loops") {
    Rng rng(17);

    SUBCASE("three-factor sum of rank-one terms") {
        ParafacModel m{random_matrix(4, 3, rng), random_matrix(3, 3, rng),
                       random_matrix(5, 3, rng)};
        Tensor3 t = reconstruct(m);
        for (Index i = 1; i <= 4; ++i)
            for (Index j = 1; j <= 3; ++j)
                for (Index k = 1; k <= 5; ++k) {
                    double want = 0;
                    for (Index r = 0; r < 3; ++r)
                        want += m.a(i - 1, r) * m.b(j - 1, r) * m.c(k - 1, r);
                    CHECK(t(i, j, k) == doctest::Approx(want).epsilon(1e-13));
                }
    }

    SUBCASE("dense core") {
        TuckerModel m{random_matrix(4, 2, rng), random_matrix(3, 2, rng),
                      random_matrix(5, 2, rng), random_tensor(2, 2, 2, rng)};
        Tensor3 t = reconstruct(m);
        for (Index i = 1; i <= 4; ++i)
            for (Index j = 1; j <= 3; ++j)
                for (Index k = 1; k <= 5; ++k) {
                    double want = 0;
                    for (Index p = 1; p <= 2; ++p)
                        for (Index q = 1; q <= 2; ++q)
                            for (Index r = 1; r <= 2; ++r)
                                want += m.core(p, q, r) * m.a(i - 1, p - 1) *
                                        m.b(j - 1, q - 1) * m.c(k - 1, r - 1);
                    CHECK(t(i, j, k) == doctest::Approx(want).epsilon(1e-13));
                }
    }

    SUBCASE("diagonal-slice core") {
        SdtModel m{random_matrix(4, 2, rng), random_matrix(3, 2, rng),
                   random_matrix(5, 3, rng), random_matrix(2, 3, rng)};
        Tensor3 t = reconstruct(m);
        for (Index i = 1; i <= 4; ++i)
            for (Index j = 1; j <= 3; ++j)
                for (Index k = 1; k <= 5; ++k) {
                    double want = 0;
                    for (Index p = 0; p < 2; ++p)
                        for (Index r = 0; r < 3; ++r)
                            want += m.core_diag(p, r) * m.a(i - 1, p) * m.b(j - 1, p) *
                                    m.c(k - 1, r);
                    CHECK(t(i, j, k) == doctest::Approx(want).epsilon(1e-13));
                }
    }
}

TEST_CASE("rank-R data is recovered exactly by each fit") {
    Rng rng(23);
    AlsConfig cfg;
    cfg.tol = 1e-13;
    cfg.max_iter = 2000;
    cfg.restarts = 4;
    cfg.seed = 1;

    SUBCASE("parafac") {
        ParafacModel truth{random_matrix(6, 2, rng), random_matrix(5, 2, rng),
                           random_matrix(4, 2, rng)};
        Tensor3 t = reconstruct(truth);
        auto [m, rep] = fit_parafac(t, 2, cfg);
        CHECK(rep.rel_error < 1e-6);
        CHECK(max_abs_diff(reconstruct(m), t) < 1e-5);
    }

    SUBCASE("tucker") {
        TuckerModel truth{random_matrix(6, 2, rng), random_matrix(5, 2, rng),
                          random_matrix(4, 2, rng), random_tensor(2, 2, 2, rng)};
        Tensor3 t = reconstruct(truth);
        auto [m, rep] = fit_tucker(t, {2, 2, 2}, cfg);
        CHECK(rep.rel_error < 1e-8);
        CHECK(m.core.dims() == std::array<Index, 3>{2, 2, 2});
        CHECK((m.a.transpose() * m.a - Matrix::Identity(2, 2)).norm() < 1e-10);
        CHECK((m.b.transpose() * m.b - Matrix::Identity(2, 2)).norm() < 1e-10);
        CHECK((m.c.transpose() * m.c - Matrix::Identity(2, 2)).norm() < 1e-10);
    }

    SUBCASE("diagonal-slice model") {
        Matrix lam = random_matrix(2, 2, rng);
        lam.array() += lam.array().sign() * 0.5;  // keep weights away from zero
        SdtModel truth{random_matrix(6, 2, rng), random_matrix(5, 2, rng),
                       random_matrix(4, 2, rng), lam};
        Tensor3 t = reconstruct(truth);
        auto [m, rep] = fit_sdt(t, 2, 2, cfg);
        CHECK(rep.rel_error < 1e-6);
        for (Index p = 0; p < 2; ++p) {
            CHECK(m.a.col(p).norm() == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(m.b.col(p).norm() == doctest::Approx(1.0).epsilon(1e-10));
        }
        for (Index r = 0; r < 2; ++r)
            CHECK(m.c.col(r).norm() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("fitted factors use the canonical form") {
    Rng rng(29);
    Tensor3 t = random_tensor(6, 5, 4, rng);
    AlsConfig cfg;
    cfg.max_iter = 100;
    cfg.restarts = 2;

    auto [cp, cp_rep] = fit_parafac(t, 2, cfg);
    for (Index r = 0; r < 2; ++r) {
        double na = cp.a.col(r).norm(), nb = cp.b.col(r).norm(), nc = cp.c.col(r).norm();
        CHECK(na == doctest::Approx(nb).epsilon(1e-8));
        CHECK(nb == doctest::Approx(nc).epsilon(1e-8));
        CHECK(cp.c.col(r).mean() >= 0.0);
    }

    auto [tk, tk_rep] = fit_tucker(t, {2, 2, 2}, cfg);
    CHECK((tk.a.transpose() * tk.a - Matrix::Identity(2, 2)).norm() < 1e-12);
    for (Index r = 0; r < 2; ++r) CHECK(tk.c.col(r).mean() >= 0.0);

    auto [sd, sd_rep] = fit_sdt(t, 2, 2, cfg);
    for (Index p = 0; p < 2; ++p) {
        CHECK(sd.a.col(p).norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(sd.b.col(p).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (Index r = 0; r < 2; ++r) {
        CHECK(sd.c.col(r).norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(sd.c.col(r).mean() >= 0.0);
    }
}

TEST_CASE("every sweep improves or holds the residual") {
    Rng rng(31);
    AlsConfig cfg;
    cfg.max_iter = 60;
    cfg.tol = 1e-300;  // effectively never met: run all sweeps
    cfg.restarts = 1;
    for (int trial = 0; trial < 5; ++trial) {
        Tensor3 t = random_tensor(5, 4, 3, rng);
        cfg.seed = static_cast<std::uint64_t>(trial);
        auto [m1, r1] = fit_parafac(t, 2, cfg);
        CHECK(trace_non_increasing(r1.eps_trace, 1e-10));
        auto [m2, r2] = fit_tucker(t, {2, 2, 2}, cfg);
        CHECK(trace_non_increasing(r2.eps_trace, 1e-10));
        auto [m3, r3] = fit_sdt(t, 2, 2, cfg);
        CHECK(trace_non_increasing(r3.eps_trace, 1e-10));
    }
}

TEST_CASE("fits are bit-for-bit deterministic") {
    Rng rng(37);
    Tensor3 t = random_tensor(6, 5, 4, rng);
    AlsConfig cfg;
    cfg.max_iter = 80;
    cfg.restarts = 3;
    cfg.seed = 99;

    auto [m1, r1] = fit_sdt(t, 3, 2, cfg);
    auto [m2, r2] = fit_sdt(t, 3, 2, cfg);
    CHECK(m1.a == m2.a);
    CHECK(m1.b == m2.b);
    CHECK(m1.c == m2.c);
    CHECK(m1.core_diag == m2.core_diag);
    CHECK(r1.ssr == r2.ssr);
    CHECK(r1.iterations == r2.iterations);
    CHECK(r1.eps_trace == r2.eps_trace);

    auto [p1, pr1] = fit_parafac(t, 2, cfg);
    auto [p2, pr2] = fit_parafac(t, 2, cfg);
    CHECK(p1.a == p2.a);
    CHECK(pr1.ssr == pr2.ssr);

    auto [t1, tr1] = fit_tucker(t, {2, 2, 1}, cfg);
    auto [t2, tr2] = fit_tucker(t, {2, 2, 1}, cfg);
    CHECK(t1.a == t2.a);
    CHECK(Matrix(t1.core.frontal(1)) == Matrix(t2.core.frontal(1)));
    CHECK(tr1.ssr == tr2.ssr);
}

TEST_CASE("report bookkeeping is internally consistent") {
    Rng rng(41);
    Tensor3 t = random_tensor(5, 4, 3, rng);
    AlsConfig cfg;
    cfg.max_iter = 200;
    cfg.restarts = 2;
    auto [m, rep] = fit_sdt(t, 2, 2, cfg);
    CHECK(rep.iterations == static_cast<int>(rep.eps_trace.size()));
    CHECK(rep.iterations >= 1);
    CHECK(rep.free_params == count_free_params(ModelKind::sdt, t.dims(), {2, 2}));
    double n = frob_norm(t);
    CHECK(rep.rel_error == doctest::Approx(std::sqrt(rep.ssr) / n).epsilon(1e-12));
    if (rep.converged && rep.iterations >= 2) {
        double last = rep.eps_trace[rep.eps_trace.size() - 1];
        double prev = rep.eps_trace[rep.eps_trace.size() - 2];
        CHECK(std::abs(prev - last) < cfg.tol);
    }
    auto [mp, repp] = fit_parafac(t, 3, cfg);
    CHECK(repp.free_params == count_free_params(ModelKind::parafac, t.dims(), {3}));
    auto [mt, rept] = fit_tucker(t, {2, 3, 2}, cfg);
    CHECK(rept.free_params == count_free_params(ModelKind::tucker, t.dims(), {2, 3, 2}));
}

TEST_CASE("three-factor model embeds exactly into the diagonal-slice form") {
    Rng rng(43);
    ParafacModel cp{random_matrix(5, 3, rng), random_matrix(4, 3, rng),
                    random_matrix(6, 3, rng)};
    SdtModel s = embed_parafac_as_sdt(cp);
    CHECK(s.p() == 3);
    CHECK(s.r() == 3);
    CHECK(s.core_diag == Matrix::Identity(3, 3));
    CHECK(max_abs_diff(reconstruct(cp), reconstruct(s)) < 1e-12);
}

TEST_CASE("diagonal-slice refinement never loses to the embedded start") {
    Rng rng(47);
    Tensor3 t = random_tensor(6, 5, 4, rng);
    AlsConfig cfg;
    cfg.max_iter = 150;
    cfg.restarts = 2;
    auto [cp, cp_rep] = fit_parafac(t, 2, cfg);
    AlsConfig refine = cfg;
    refine.restarts = 1;
    auto [s, s_rep] = fit_sdt_from(t, embed_parafac_as_sdt(cp), refine);
    CHECK(s_rep.ssr <= cp_rep.ssr * (1.0 + 1e-9) + 1e-12);
}

TEST_CASE("all-zero input short-circuits with a zero model") {
    Tensor3 z(4, 3, 2);
    AlsConfig cfg;
    auto [cp, r1] = fit_parafac(z, 2, cfg);
    CHECK(r1.degenerate_input);
    CHECK(r1.converged);
    CHECK(r1.ssr == 0.0);
    CHECK(cp.a.isZero());
    auto [tk, r2] = fit_tucker(z, {2, 2, 1}, cfg);
    CHECK(r2.degenerate_input);
    auto [sd, r3] = fit_sdt(z, 2, 1, cfg);
    CHECK(r3.degenerate_input);
    CHECK(sd.core_diag.isZero());
}

TEST_CASE("rank and config validation") {
    Tensor3 t(3, 4, 2);
    t(1, 1, 1) = 1.0;
    AlsConfig cfg;
    CHECK_THROWS_AS(fit_parafac(t, 0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(fit_parafac(t, 7, cfg), std::invalid_argument);  // > min(IJ, IK, JK)
    CHECK_THROWS_AS(fit_tucker(t, {4, 1, 1}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(fit_tucker(t, {1, 5, 1}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(fit_tucker(t, {1, 1, 3}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(fit_sdt(t, 4, 1, cfg), std::invalid_argument);  // p > min(I, J)
    CHECK_THROWS_AS(fit_sdt(t, 1, 3, cfg), std::invalid_argument);  // r > K

    AlsConfig bad = cfg;
    bad.max_iter = 0;
    CHECK_THROWS_AS(fit_parafac(t, 1, bad), std::invalid_argument);
    bad = cfg;
    bad.tol = -1.0;
    CHECK_THROWS_AS(fit_parafac(t, 1, bad), std::invalid_argument);
    bad = cfg;
    bad.restarts = 0;
    CHECK_THROWS_AS(fit_parafac(t, 1, bad), std::invalid_argument);
}

TEST_CASE("warm-start fit validates factor shapes") {
    Rng rng(53);
    Tensor3 t = random_tensor(4, 4, 3, rng);
    AlsConfig cfg;
    cfg.max_iter = 50;
    SdtModel bad{random_matrix(5, 2, rng), random_matrix(4, 2, rng),
                 random_matrix(3, 2, rng), random_matrix(2, 2, rng)};
    CHECK_THROWS_AS(fit_sdt_from(t, bad, cfg), std::invalid_argument);

    // non-orthonormal start is orthonormalized before sweeping
    TuckerModel init{random_matrix(4, 2, rng) * 3.0, random_matrix(4, 2, rng) * 3.0,
                     random_matrix(3, 2, rng) * 3.0, Tensor3(2, 2, 2)};
    auto [m, rep] = fit_tucker_from(t, std::move(init), cfg);
    CHECK((m.a.transpose() * m.a - Matrix::Identity(2, 2)).norm() < 1e-10);
}

TEST_CASE("least-squares core given fixed factors") {
    Rng rng(59);

    SUBCASE("identity factors return the tensor itself") {
        Tensor3 t = random_tensor(3, 3, 3, rng);
        Matrix id = Matrix::Identity(3, 3);
        Tensor3 g = tucker_core_from_factors(t, id, id, id);
        CHECK(max_abs_diff(g, t) < 1e-12);
    }

    SUBCASE("recovers the core of exactly multilinear data") {
        TuckerModel truth{random_matrix(6, 2, rng), random_matrix(5, 2, rng),
                          random_matrix(4, 2, rng), random_tensor(2, 2, 2, rng)};
        Tensor3 t = reconstruct(truth);
        Tensor3 g = tucker_core_from_factors(t, truth.a, truth.b, truth.c);
        CHECK(max_abs_diff(g, truth.core) < 1e-8);
    }

    SUBCASE("dimension mismatch throws") {
        Tensor3 t = random_tensor(3, 3, 3, rng);
        CHECK_THROWS_AS(
            tucker_core_from_factors(t, Matrix::Zero(4, 2), Matrix::Zero(3, 2),
                                     Matrix::Zero(3, 2)),
            std::invalid_argument);
    }
}

TEST_CASE("saved models reload bit-for-bit") {
    Rng rng(61);
    Tensor3 t = random_tensor(5, 4, 3, rng);
    AlsConfig cfg;
    cfg.max_iter = 60;
    cfg.restarts = 2;

    SUBCASE("parafac") {
        TempDir dir("save_cp");
        auto [m, rep] = fit_parafac(t, 2, cfg);
        save_model(AnyModel(m), rep, 42, dir.path());
        SavedModel back = load_model(dir.path());
        CHECK(kind_of(back.model) == ModelKind::parafac);
        const auto& bm = std::get<ParafacModel>(back.model);
        CHECK(bm.a == m.a);
        CHECK(bm.b == m.b);
        CHECK(bm.c == m.c);
        CHECK(back.report.ssr == rep.ssr);
        CHECK(back.report.iterations == rep.iterations);
        CHECK(back.report.converged == rep.converged);
        CHECK(back.report.free_params == rep.free_params);
        CHECK(back.seed == 42);
    }

    SUBCASE("tucker") {
        TempDir dir("save_tk");
        auto [m, rep] = fit_tucker(t, {2, 2, 2}, cfg);
        save_model(AnyModel(m), rep, 7, dir.path());
        SavedModel back = load_model(dir.path());
        const auto& bm = std::get<TuckerModel>(back.model);
        CHECK(bm.a == m.a);
        CHECK(max_abs_diff(bm.core, m.core) == 0.0);
    }

    SUBCASE("diagonal-slice") {
        TempDir dir("save_sdt");
        auto [m, rep] = fit_sdt(t, 2, 2, cfg);
        save_model(AnyModel(m), rep, 9, dir.path());
        SavedModel back = load_model(dir.path());
        const auto& bm = std::get<SdtModel>(back.model);
        CHECK(bm.core_diag == m.core_diag);
        CHECK(bm.c == m.c);
    }

    SUBCASE("missing or corrupt directory") {
        TempDir dir("save_bad");
        CHECK_THROWS_AS(load_model(dir.file("nope")), ParseError);
        std::filesystem::create_directories(dir.file("half"));
        {
            std::ofstream meta(dir.file("half") / "metadata.json");
            meta << "{ not json";
        }
        CHECK_THROWS_AS(load_model(dir.file("half")), ParseError);
    }
}
