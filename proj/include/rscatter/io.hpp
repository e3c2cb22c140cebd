#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rscatter/matcore.hpp"

namespace rscatter {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Strict parse of a whole token; throws std::invalid_argument.
double parse_double(std::string_view token);

/// Comma-separated list of doubles, e.g. "0.1,0.5,1".
std::vector<double> parse_double_list(std::string_view text);

/// Reads a headerless CSV of observations (one row per observation).
/// Throws std::runtime_error naming the path on I/O or parse problems.
Matrix read_csv(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const Matrix& rows);
std::string to_csv(const Matrix& rows);

}  // namespace rscatter
