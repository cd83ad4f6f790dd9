#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace refmmd::csv {

/// Parses a headerless (unless skip_header) comma-separated numeric table.
/// Throws refmmd::Error on empty input, ragged rows or non-numeric cells.
Eigen::MatrixXd read_matrix(const std::filesystem::path& path, bool skip_header = false);
Eigen::MatrixXd parse_matrix(std::string_view text, bool skip_header = false,
                             std::string_view source = "<memory>");

enum class Precision {
  Shortest,     // shortest representation that round-trips
  Significant17 // fixed 17 significant digits
};

std::string format_matrix(const Eigen::MatrixXd& m, Precision precision = Precision::Shortest);
std::string format_double(double v, Precision precision = Precision::Shortest);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                  Precision precision = Precision::Shortest);

}  // namespace refmmd::csv
