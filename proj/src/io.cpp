#include "rscatter/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rscatter {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() &&
         (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
    token.remove_suffix(1);
  }
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw std::invalid_argument("not a number: '" + std::string(token) + "'");
  }
  return v;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find(',', start);
    out.push_back(parse_double(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Matrix read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file '" + path.string() + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(parse_double_list(line));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (rows.back().size() != rows.front().size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": inconsistent number of columns");
    }
  }
  if (rows.empty()) throw std::runtime_error("input file '" + path.string() + "' has no rows");

  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = rows[i][j];
  }
  return out;
}

std::string to_csv(const Matrix& rows) {
  std::string out;
  for (Index i = 0; i < rows.rows(); ++i) {
    for (Index j = 0; j < rows.cols(); ++j) {
      if (j) out += ',';
      out += format_double(rows(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Matrix& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file '" + path.string() + "'");
  out << to_csv(rows);
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace rscatter
