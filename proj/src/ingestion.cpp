#include "tensorcorr/ingestion.hpp"

#include "tensorcorr/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace tensorcorr {

void validate_panel(const ReturnsPanel& p) {
    if (p.tickers.empty()) throw std::invalid_argument("panel: no tickers");
    if (p.timestamps.empty()) throw std::invalid_argument("panel: no rows");
    if (p.values.rows() != static_cast<Index>(p.timestamps.size()) ||
        p.values.cols() != static_cast<Index>(p.tickers.size()))
        throw std::invalid_argument(
            "panel: values are " + std::to_string(p.values.rows()) + " x " +
            std::to_string(p.values.cols()) + " but there are " +
            std::to_string(p.timestamps.size()) + " timestamps and " +
            std::to_string(p.tickers.size()) + " tickers");
    for (std::size_t t = 1; t < p.timestamps.size(); ++t)
        if (p.timestamps[t] <= p.timestamps[t - 1])
            throw std::invalid_argument("panel: timestamp " + p.timestamps[t] + " at row " +
                                        std::to_string(t) + " not after " +
                                        p.timestamps[t - 1]);
    if (!p.values.allFinite())
        throw std::invalid_argument("panel: values must be finite");
}

ReturnsPanel log_returns(const ReturnsPanel& prices) {
    validate_panel(prices);
    Index rows = prices.values.rows(), cols = prices.values.cols();
    if (rows < 2) throw std::invalid_argument("log_returns: needs at least 2 rows of prices");
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            if (!(prices.values(r, c) > 0.0))
                throw std::invalid_argument(
                    "log_returns: nonpositive price " + format_double(prices.values(r, c)) +
                    " at row " + std::to_string(r) + " (timestamp " + prices.timestamps[r] +
                    "), ticker " + prices.tickers[c]);
    ReturnsPanel out;
    out.tickers = prices.tickers;
    out.timestamps.assign(prices.timestamps.begin() + 1, prices.timestamps.end());
    out.values = (prices.values.bottomRows(rows - 1).array().log() -
                  prices.values.topRows(rows - 1).array().log())
                     .matrix();
    return out;
}

Matrix window_cov(const ReturnsPanel& panel, Index first_row, Index count) {
    validate_panel(panel);
    if (count < 2)
        throw std::invalid_argument("window_cov: window of " + std::to_string(count) +
                                    " rows is too short; covariance needs at least 2");
    if (first_row < 0 || first_row + count > panel.values.rows())
        throw std::out_of_range("window_cov: rows [" + std::to_string(first_row) + ", " +
                                std::to_string(first_row + count) + ") outside panel of " +
                                std::to_string(panel.values.rows()) + " rows");
    Matrix block = panel.values.middleRows(first_row, count);
    Matrix centered = block.rowwise() - block.colwise().mean();
    Matrix cov = centered.transpose() * centered / static_cast<double>(count - 1);
    return 0.5 * (cov + cov.transpose());
}

Tensor3 build_cov_tensor(const ReturnsPanel& panel, const WindowSpec& spec,
                         std::vector<std::string>* warnings) {
    validate_panel(panel);
    Index m = panel.values.cols();
    Index t_obs = panel.values.rows();

    if (spec.unit == WindowUnit::observations) {
        Index length = spec.length;
        Index step = spec.step == 0 ? length : spec.step;
        if (length < 2)
            throw std::invalid_argument("build_cov_tensor: window length must be >= 2, got " +
                                        std::to_string(length));
        if (step < 1) throw std::invalid_argument("build_cov_tensor: step must be >= 1");
        if (t_obs < length)
            throw std::invalid_argument("build_cov_tensor: panel of " + std::to_string(t_obs) +
                                        " rows has no full window of " + std::to_string(length));
        Index k = (t_obs - length) / step + 1;
        Index used = length + (k - 1) * step;
        if (used < t_obs && warnings)
            warnings->push_back("dropping " + std::to_string(t_obs - used) +
                                " trailing observations that do not fill a window");
        Tensor3 out(m, m, k);
        for (Index w = 0; w < k; ++w) out.frontal(w + 1) = window_cov(panel, w * step, length);
        return out;
    }

    // calendar months: strictly increasing timestamps make each month one
    // contiguous run of rows
    std::vector<std::pair<Index, Index>> groups;  // (first_row, count)
    Index start = 0;
    for (Index r = 1; r <= t_obs; ++r) {
        if (r == t_obs ||
            panel.timestamps[r].substr(0, 7) != panel.timestamps[start].substr(0, 7)) {
            groups.emplace_back(start, r - start);
            start = r;
        }
    }
    for (const auto& [first, count] : groups)
        if (count < 2)
            throw std::invalid_argument("build_cov_tensor: calendar month " +
                                        panel.timestamps[first].substr(0, 7) + " has " +
                                        std::to_string(count) +
                                        " observation(s); covariance needs at least 2");
    Tensor3 out(m, m, static_cast<Index>(groups.size()));
    for (std::size_t g = 0; g < groups.size(); ++g)
        out.frontal(static_cast<Index>(g) + 1) =
            window_cov(panel, groups[g].first, groups[g].second);
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

bool looks_iso8601(const std::string& s) {
    if (s.size() < 10) return false;
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return s[4] == '-' && s[7] == '-';
}

}  // namespace

ReturnsPanel load_panel_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open " + file.string());
    auto fail = [&](int line, const std::string& msg) {
        throw ParseError(file.string() + ":" + std::to_string(line) + ": " + msg);
    };

    std::string line;
    if (!std::getline(in, line)) fail(1, "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2) fail(1, "header needs a timestamp column plus at least one ticker");
    ReturnsPanel out;
    out.tickers.assign(header.begin() + 1, header.end());
    for (std::size_t c = 0; c < out.tickers.size(); ++c)
        if (out.tickers[c].empty()) fail(1, "empty ticker name in column " + std::to_string(c + 2));

    std::size_t m = out.tickers.size();
    std::vector<double> data;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) fail(lineno, "empty line");
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != m + 1)
            fail(lineno, "expected " + std::to_string(m + 1) + " cells, got " +
                             std::to_string(cells.size()));
        if (!looks_iso8601(cells[0]))
            fail(lineno, "timestamp '" + cells[0] + "' is not ISO-8601");
        if (!out.timestamps.empty() && cells[0] <= out.timestamps.back())
            fail(lineno, "timestamp " + cells[0] + " not after " + out.timestamps.back());
        for (std::size_t c = 0; c < m; ++c) {
            const std::string& cell = cells[c + 1];
            if (cell.empty())
                fail(lineno, "missing value for ticker " + out.tickers[c]);
            const char* begin = cell.c_str();
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end != begin + cell.size())
                fail(lineno, "'" + cell + "' is not a number (ticker " + out.tickers[c] + ")");
            if (!std::isfinite(v))
                fail(lineno, "non-finite value for ticker " + out.tickers[c]);
            data.push_back(v);
        }
        out.timestamps.push_back(cells[0]);
    }
    if (out.timestamps.empty()) fail(lineno + 1, "no data rows");

    Index rows = static_cast<Index>(out.timestamps.size());
    out.values.resize(rows, static_cast<Index>(m));
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < static_cast<Index>(m); ++c)
            out.values(r, c) = data[static_cast<std::size_t>(r) * m + c];
    return out;
}

}  // namespace tensorcorr
