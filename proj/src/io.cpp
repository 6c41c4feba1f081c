#include "tensorcorr/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tensorcorr {

namespace {

std::string loc(const std::filesystem::path& file, std::size_t line) {
    return file.string() + ":" + std::to_string(line);
}

double parse_double(const std::string& tok, const std::filesystem::path& file,
                    std::size_t line, bool finite_only = false) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || errno == ERANGE)
        throw ParseError(loc(file, line) + ": expected a number, got '" + tok + "'");
    // infinities round-trip (information criteria can be -inf); NaN never does
    if (std::isnan(v) || (finite_only && !std::isfinite(v)))
        throw ParseError(loc(file, line) + ": non-finite value '" + tok + "'");
    return v;
}

std::ifstream open_in(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open " + file.string());
    return in;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    // shortest form that round-trips; try increasing precision
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

void write_text_atomic(const std::filesystem::path& file, const std::string& content) {
    auto tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

void write_tensor(const Tensor3& t, const std::filesystem::path& file) {
    auto [I, J, K] = t.dims();
    std::string s;
    s.reserve(static_cast<std::size_t>(t.size()) * 10 + 32);
    s += "dims " + std::to_string(I) + " " + std::to_string(J) + " " + std::to_string(K) +
         "\n";
    for (Index i = 1; i <= I; ++i) {
        for (Index k = 1; k <= K; ++k)
            for (Index j = 1; j <= J; ++j) {
                if (j > 1 || k > 1) s += ' ';
                s += format_double(t(i, j, k));
            }
        s += '\n';
    }
    write_text_atomic(file, s);
}

Tensor3 read_tensor(const std::filesystem::path& file) {
    auto in = open_in(file);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(loc(file, 1) + ": empty file");
    std::istringstream hdr(line);
    std::string tag;
    long long i = 0, j = 0, k = 0;
    if (!(hdr >> tag >> i >> j >> k) || tag != "dims" || (hdr >> tag))
        throw ParseError(loc(file, 1) + ": expected header 'dims I J K', got '" + line + "'");
    if (i < 1 || j < 1 || k < 1)
        throw ParseError(loc(file, 1) + ": dimensions must be >= 1");

    const std::size_t need = static_cast<std::size_t>(i) * static_cast<std::size_t>(j) *
                             static_cast<std::size_t>(k);
    std::vector<double> vals;
    vals.reserve(need);
    std::size_t line_no = 1;
    std::string tok;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        while (ls >> tok) {
            if (vals.size() == need)
                throw ParseError(loc(file, line_no) + ": more than " + std::to_string(need) +
                                 " values");
            vals.push_back(parse_double(tok, file, line_no, /*finite_only=*/true));
        }
    }
    if (vals.size() != need)
        throw ParseError(file.string() + ": expected " + std::to_string(need) +
                         " values, got " + std::to_string(vals.size()));

    // file order is mode-1 unfolding row-major: i slowest, then k, then j
    Tensor3 t(i, j, k);
    std::size_t pos = 0;
    for (Index ii = 1; ii <= i; ++ii)
        for (Index kk = 1; kk <= k; ++kk)
            for (Index jj = 1; jj <= j; ++jj) t(ii, jj, kk) = vals[pos++];
    return t;
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& file) {
    std::string s;
    s.reserve(static_cast<std::size_t>(m.size()) * 10 + 16);
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            if (c > 0) s += ',';
            s += format_double(m(r, c));
        }
        s += '\n';
    }
    write_text_atomic(file, s);
}

Matrix read_matrix_csv(const std::filesystem::path& file) {
    auto in = open_in(file);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            throw ParseError(loc(file, line_no) + ": empty line");
        if (line.back() == ',')
            throw ParseError(loc(file, line_no) + ": empty trailing cell");
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            row.push_back(parse_double(cell, file, line_no));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(loc(file, line_no) + ": row has " + std::to_string(row.size()) +
                             " cells, expected " + std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(file.string() + ": empty matrix");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return m;
}

void write_series_csv(const std::vector<double>& v, const std::filesystem::path& file) {
    std::string s;
    for (double x : v) {
        s += format_double(x);
        s += '\n';
    }
    write_text_atomic(file, s);
}

std::vector<double> read_series_csv(const std::filesystem::path& file) {
    auto in = open_in(file);
    std::vector<double> v;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        v.push_back(parse_double(line, file, line_no));
    }
    if (v.empty()) throw ParseError(file.string() + ": empty series");
    return v;
}

}  // namespace tensorcorr
