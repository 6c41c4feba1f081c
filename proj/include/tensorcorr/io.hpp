#pragma once

#include "tensorcorr/tensor.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace tensorcorr {

// Malformed input file (bad header, non-numeric token, wrong count, ...).
// Messages carry the offending line number where one exists.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor text format: first line "dims I J K", then the entries of the mode-1
// unfolding in row-major order (row 1 left to right, then row 2, ...), one
// unfolding row per line.
void write_tensor(const Tensor3& t, const std::filesystem::path& file);
Tensor3 read_tensor(const std::filesystem::path& file);

// Numeric CSV, no header, one matrix row per line.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& file);
Matrix read_matrix_csv(const std::filesystem::path& file);

// One value per line.
void write_series_csv(const std::vector<double>& v, const std::filesystem::path& file);
std::vector<double> read_series_csv(const std::filesystem::path& file);

// Shortest round-trip representation of a double.
std::string format_double(double v);

// Writes via a temp file in the same directory, then renames into place, so a
// crash never leaves a half-written output.
void write_text_atomic(const std::filesystem::path& file, const std::string& content);

}  // namespace tensorcorr
