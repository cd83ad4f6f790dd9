#include "refmmd/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "refmmd/error.hpp"

namespace refmmd::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Eigen::MatrixXd parse_matrix(std::string_view text, bool skip_header, std::string_view source) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool header_pending = skip_header;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::size_t row_cols = 0;
    while (true) {
      const auto comma = line.find(',');
      const std::string_view cell = trim(line.substr(0, comma));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw Error("datagen", std::string(source) + ":" + std::to_string(line_no) +
                                   ": non-numeric cell '" + std::string(cell) + "'");
      }
      values.push_back(v);
      ++row_cols;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = row_cols;
    } else if (row_cols != cols) {
      throw Error("datagen", std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(cols) + " columns, found " + std::to_string(row_cols));
    }
    ++rows;
  }
  if (rows == 0) throw Error("datagen", std::string(source) + ": empty file");
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = values[r * cols + c];
  return m;
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path, bool skip_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("datagen", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_matrix(buf.str(), skip_header, path.string());
}

std::string format_double(double v, Precision precision) {
  char buf[64];
  const auto res = precision == Precision::Shortest
                       ? std::to_chars(buf, buf + sizeof buf, v)
                       : std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string format_matrix(const Eigen::MatrixXd& m, Precision precision) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 20);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c), precision);
    }
    out += '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("io", "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("io", "cannot rename " + tmp.string() + ": " + ec.message());
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m, Precision precision) {
  write_file_atomic(path, format_matrix(m, precision));
}

}  // namespace refmmd::csv
