#pragma once

#include "tensorcorr/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tensorcorr {

// A dense panel: one row per timestamp, one column per ticker. Timestamps are
// ISO-8601 strings in strictly increasing order; rows with missing values are
// rejected at load, so the matrix is always complete.
struct ReturnsPanel {
    std::vector<std::string> tickers;
    std::vector<std::string> timestamps;
    Matrix values;  // timestamps.size() x tickers.size()
};

// Shape/order/finiteness consistency check; throws invalid_argument.
void validate_panel(const ReturnsPanel& p);

enum class WindowUnit { observations, calendar_month };

struct WindowSpec {
    WindowUnit unit = WindowUnit::observations;
    Index length = 0;  // observations unit: window size, >= 2
    Index step = 0;    // observations unit: stride; 0 means non-overlapping (= length)
};

// r_t = ln P_t - ln P_{t-1} per column; output has one fewer row. Every price
// must be strictly positive; violations name the row, timestamp, and ticker.
ReturnsPanel log_returns(const ReturnsPanel& prices);

// Sample covariance (1/(n-1) normalization) of rows [first_row, first_row +
// count); exactly symmetric by construction. count must be >= 2.
Matrix window_cov(const ReturnsPanel& panel, Index first_row, Index count);

// M x M x K covariance tensor, one frontal slice per window. Observation
// windows advance by step; a trailing stretch too short to fill a window is
// dropped with a note appended to *warnings (when given). Calendar-month
// windows group rows by the YYYY-MM timestamp prefix; every month present
// must have at least 2 observations.
Tensor3 build_cov_tensor(const ReturnsPanel& panel, const WindowSpec& spec,
                         std::vector<std::string>* warnings = nullptr);

// CSV with a header row (arbitrary label, then one ticker per column) and an
// ISO-8601 timestamp leading each data row. Gaps, short rows, non-numeric or
// non-finite cells, and out-of-order timestamps are rejected with the line
// number. Whether the values are prices or returns is the caller's concern.
ReturnsPanel load_panel_csv(const std::filesystem::path& file);

}  // namespace tensorcorr
