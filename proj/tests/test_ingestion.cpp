#include "doctest.h"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "temp_dir.hpp"
#include "tensorcorr/ingestion.hpp"
#include "tensorcorr/io.hpp"
#include "tensorcorr/rng.hpp"

using namespace tensorcorr;

namespace {

ReturnsPanel small_prices() {
    ReturnsPanel p;
    p.tickers = {"AAA", "BBB"};
    p.timestamps = {"2024-01-02", "2024-01-03", "2024-01-04"};
    p.values = Matrix(3, 2);
    p.values << 100.0, 50.0,
                110.0, 45.0,
                99.0, 54.0;
    return p;
}

void put(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("panel validation") {
    ReturnsPanel p = small_prices();
    CHECK_NOTHROW(validate_panel(p));

    ReturnsPanel bad = p;
    bad.values = Matrix(2, 2);
    CHECK_THROWS_AS(validate_panel(bad), std::invalid_argument);

    bad = p;
    bad.timestamps[2] = "2024-01-03";  // duplicate, not strictly increasing
    CHECK_THROWS_AS(validate_panel(bad), std::invalid_argument);

    bad = p;
    bad.timestamps = {"2024-01-05", "2024-01-03", "2024-01-04"};
    CHECK_THROWS_AS(validate_panel(bad), std::invalid_argument);

    bad = p;
    bad.values(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(validate_panel(bad), std::invalid_argument);
}

TEST_CASE("log returns") {
    ReturnsPanel p = small_prices();
    ReturnsPanel r = log_returns(p);
    REQUIRE(r.values.rows() == 2);
    CHECK(r.tickers == p.tickers);
    CHECK(r.timestamps == std::vector<std::string>{"2024-01-03", "2024-01-04"});
    CHECK(r.values(0, 0) == doctest::Approx(std::log(110.0 / 100.0)).epsilon(1e-15));
    CHECK(r.values(0, 1) == doctest::Approx(std::log(45.0 / 50.0)).epsilon(1e-15));
    CHECK(r.values(1, 0) == doctest::Approx(std::log(99.0 / 110.0)).epsilon(1e-15));

    // returns invert: summing them recovers the log price change
    double total = r.values.col(0).sum();
    CHECK(total == doctest::Approx(std::log(99.0 / 100.0)).epsilon(1e-12));

    ReturnsPanel bad = p;
    bad.values(1, 1) = -45.0;
    CHECK_THROWS_WITH_AS(log_returns(bad), doctest::Contains("BBB"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(log_returns(bad), doctest::Contains("2024-01-03"),
                         std::invalid_argument);

    ReturnsPanel one = p;
    one.timestamps = {"2024-01-02"};
    one.values = Matrix::Ones(1, 2);
    CHECK_THROWS_AS(log_returns(one), std::invalid_argument);
}

TEST_CASE("windowed sample covariance") {
    ReturnsPanel p;
    p.tickers = {"A", "B"};
    p.timestamps = {"2024-01-01", "2024-01-02", "2024-01-03", "2024-01-04"};
    p.values = Matrix(4, 2);
    p.values << 1.0, 2.0,
                3.0, 1.0,
                2.0, 4.0,
                5.0, 0.0;

    // hand-computed covariance of rows 0..2
    // means: (2, 7/3); cov_ab = sum (a - ma)(b - mb) / 2
    Matrix c = window_cov(p, 0, 3);
    double ma = 2.0, mb = 7.0 / 3.0;
    double caa = ((1 - ma) * (1 - ma) + (3 - ma) * (3 - ma) + (2 - ma) * (2 - ma)) / 2.0;
    double cbb =
        ((2 - mb) * (2 - mb) + (1 - mb) * (1 - mb) + (4 - mb) * (4 - mb)) / 2.0;
    double cab =
        ((1 - ma) * (2 - mb) + (3 - ma) * (1 - mb) + (2 - ma) * (4 - mb)) / 2.0;
    CHECK(c(0, 0) == doctest::Approx(caa).epsilon(1e-12));
    CHECK(c(1, 1) == doctest::Approx(cbb).epsilon(1e-12));
    CHECK(c(0, 1) == doctest::Approx(cab).epsilon(1e-12));
    CHECK(c(0, 1) == c(1, 0));
    CHECK((c - c.transpose()).norm() == 0.0);

    // offset window
    Matrix tail = window_cov(p, 2, 2);
    CHECK(tail(0, 0) == doctest::Approx(4.5).epsilon(1e-12));  // var of (2, 5)

    CHECK_THROWS_AS(window_cov(p, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(window_cov(p, 3, 2), std::out_of_range);  // runs past the end
    CHECK_THROWS_AS(window_cov(p, -1, 2), std::out_of_range);
}

TEST_CASE("covariance tensor over observation windows") {
    Rng rng(113);
    ReturnsPanel p;
    p.tickers = {"A", "B", "C"};
    for (int t = 0; t < 20; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "2024-01-%02d", t + 1);
        p.timestamps.push_back(buf);
    }
    p.values = Matrix(20, 3);
    for (Index i = 0; i < 20; ++i)
        for (Index j = 0; j < 3; ++j) p.values(i, j) = rng.normal();

    SUBCASE("non-overlapping windows") {
        WindowSpec spec;
        spec.length = 5;  // step 0 means stride = length
        Tensor3 t = build_cov_tensor(p, spec);
        CHECK(t.dims() == std::array<Index, 3>{3, 3, 4});
        for (Index k = 0; k < 4; ++k) {
            Matrix want = window_cov(p, k * 5, 5);
            CHECK((Matrix(t.frontal(k + 1)) - want).norm() == 0.0);
        }
    }

    SUBCASE("overlapping windows and the trailing-drop warning") {
        WindowSpec spec;
        spec.length = 6;
        spec.step = 4;
        std::vector<std::string> warnings;
        Tensor3 t = build_cov_tensor(p, spec, &warnings);
        // windows start at 0, 4, 8, 12; 16 would need rows past the end
        CHECK(t.dim(Mode::three) == 4);
        REQUIRE(warnings.size() == 1);
        CHECK(warnings[0].find("2") != std::string::npos);  // 2 rows dropped
        CHECK((Matrix(t.frontal(2)) - window_cov(p, 4, 6)).norm() == 0.0);
    }

    SUBCASE("window too long for the panel") {
        WindowSpec spec;
        spec.length = 21;
        CHECK_THROWS_AS(build_cov_tensor(p, spec), std::invalid_argument);
        spec.length = 1;
        CHECK_THROWS_AS(build_cov_tensor(p, spec), std::invalid_argument);
    }

    SUBCASE("column reordering permutes slices exactly") {
        ReturnsPanel q = p;
        q.tickers = {p.tickers[2], p.tickers[0], p.tickers[1]};
        q.values.col(0) = p.values.col(2);
        q.values.col(1) = p.values.col(0);
        q.values.col(2) = p.values.col(1);
        WindowSpec spec;
        spec.length = 5;
        Tensor3 t1 = build_cov_tensor(p, spec);
        Tensor3 t2 = build_cov_tensor(q, spec);
        // permutation pi maps q column a to p column perm[a]; equal up to
        // accumulation-order rounding in the matrix products
        std::array<Index, 3> perm{2, 0, 1};
        for (Index k = 1; k <= 4; ++k)
            for (Index a = 0; a < 3; ++a)
                for (Index b = 0; b < 3; ++b)
                    CHECK(std::abs(t2(a + 1, b + 1, k) - t1(perm[a] + 1, perm[b] + 1, k)) <=
                          1e-13);
    }

    SUBCASE("slices converge to the generating covariance") {
        // iid standard normal: expected covariance is the identity
        ReturnsPanel big;
        big.tickers = {"A", "B", "C"};
        Rng r2(5);
        int rows = 2000;
        big.values = Matrix(rows, 3);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < 3; ++j) big.values(i, j) = r2.normal();
        for (int t = 0; t < rows; ++t) {
            char buf[24];
            std::snprintf(buf, sizeof buf, "2024-01-01T%04d", t);
            big.timestamps.push_back(buf);
        }
        WindowSpec spec;
        spec.length = 50;
        Tensor3 t = build_cov_tensor(big, spec);
        Matrix mean = Matrix::Zero(3, 3);
        for (Index k = 1; k <= t.dim(Mode::three); ++k) mean += t.frontal(k);
        mean /= static_cast<double>(t.dim(Mode::three));
        CHECK((mean - Matrix::Identity(3, 3)).norm() < 0.2);
    }
}

TEST_CASE("covariance tensor over calendar months") {
    ReturnsPanel p;
    p.tickers = {"A", "B"};
    p.timestamps = {"2024-01-02", "2024-01-15", "2024-01-30",
                    "2024-02-05", "2024-02-20",
                    "2024-03-01", "2024-03-08", "2024-03-29"};
    Rng rng(127);
    p.values = Matrix(8, 2);
    for (Index i = 0; i < 8; ++i)
        for (Index j = 0; j < 2; ++j) p.values(i, j) = rng.normal();

    WindowSpec spec;
    spec.unit = WindowUnit::calendar_month;
    Tensor3 t = build_cov_tensor(p, spec);
    CHECK(t.dims() == std::array<Index, 3>{2, 2, 3});
    CHECK((Matrix(t.frontal(1)) - window_cov(p, 0, 3)).norm() == 0.0);
    CHECK((Matrix(t.frontal(2)) - window_cov(p, 3, 2)).norm() == 0.0);
    CHECK((Matrix(t.frontal(3)) - window_cov(p, 5, 3)).norm() == 0.0);

    // a single-observation month cannot produce a covariance
    ReturnsPanel single;
    single.tickers = {"A", "B"};
    single.timestamps = {"2024-01-02", "2024-01-15", "2024-02-05"};
    single.values = Matrix::Ones(3, 2);
    single.values(1, 0) = 2.0;
    single.values(2, 1) = 3.0;
    CHECK_THROWS_WITH_AS(build_cov_tensor(single, spec), doctest::Contains("2024-02"),
                         std::invalid_argument);
}

TEST_CASE("panel csv loading") {
    TempDir dir("panel_csv");
    auto p = dir.file("panel.csv");

    SUBCASE("happy path with CRLF endings") {
        put(p,
            "date,AAA,BBB\r\n"
            "2024-01-02,100,50\r\n"
            "2024-01-03,110,45\r\n");
        ReturnsPanel panel = load_panel_csv(p);
        CHECK(panel.tickers == std::vector<std::string>{"AAA", "BBB"});
        CHECK(panel.timestamps ==
              std::vector<std::string>{"2024-01-02", "2024-01-03"});
        CHECK(panel.values(1, 0) == 110.0);
        CHECK(panel.values(0, 1) == 50.0);
    }

    SUBCASE("round trip with data written by hand") {
        put(p,
            "label,X\n"
            "2023-12-29,1.5\n"
            "2024-01-02,-0.25\n");
        ReturnsPanel panel = load_panel_csv(p);
        CHECK(panel.values(0, 0) == 1.5);
        CHECK(panel.values(1, 0) == -0.25);
    }

    SUBCASE("error cases name the line") {
        put(p, "");
        CHECK_THROWS_AS(load_panel_csv(p), ParseError);

        put(p, "date,AAA\n");
        CHECK_THROWS_AS(load_panel_csv(p), ParseError);  // header only, no rows

        put(p, "date\n2024-01-02\n");
        CHECK_THROWS_AS(load_panel_csv(p), ParseError);  // no tickers

        put(p, "date,AAA,BBB\n2024-01-02,100\n");
        CHECK_THROWS_WITH_AS(load_panel_csv(p), doctest::Contains(":2"), ParseError);

        put(p, "date,AAA\n2024-01-02,100,7\n");
        CHECK_THROWS_WITH_AS(load_panel_csv(p), doctest::Contains(":2"), ParseError);

        put(p, "date,AAA,BBB\n2024-01-02,100,\n");
        CHECK_THROWS_WITH_AS(load_panel_csv(p), doctest::Contains("BBB"), ParseError);

        put(p, "date,AAA\n2024-01-02,oops\n");
        CHECK_THROWS_AS(load_panel_csv(p), ParseError);

        put(p, "date,AAA\n2024-01-02,inf\n");
        CHECK_THROWS_AS(load_panel_csv(p), ParseError);

        put(p, "date,AAA\nJan 2 2024,100\n");
        CHECK_THROWS_WITH_AS(load_panel_csv(p), doctest::Contains(":2"), ParseError);

        put(p, "date,AAA\n2024-01-03,100\n2024-01-02,99\n");
        CHECK_THROWS_WITH_AS(load_panel_csv(p), doctest::Contains(":3"), ParseError);

        CHECK_THROWS_AS(load_panel_csv(dir.file("missing.csv")), ParseError);
    }
}
