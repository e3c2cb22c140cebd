#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rscatter/dataset.hpp"

namespace rscatter {

/// How data is centered before scatter estimation.
struct CenterSpec {
  enum class Kind { kFixed, kMarginalMedian, kSpatialMedian };

  Kind kind = Kind::kSpatialMedian;
  /// Location for kFixed. Empty means the origin of whatever dimension the data has.
  Vector fixed;
  int max_iter = 500;
  double tol = 1e-10;

  static CenterSpec origin() { return {Kind::kFixed, Vector(), 500, 1e-10}; }
  static CenterSpec at(Vector c) { return {Kind::kFixed, std::move(c), 500, 1e-10}; }
  static CenterSpec marginal() { return {Kind::kMarginalMedian, Vector(), 500, 1e-10}; }
  static CenterSpec spatial() { return {Kind::kSpatialMedian, Vector(), 500, 1e-10}; }

  std::string to_string() const;
};

/// "fixed" / "fixed:0,0" / "marginal" / "spatial".
CenterSpec parse_center(std::string_view text);

struct SpatialMedianResult {
  Vector point;
  int iterations = 0;
  /// ||sum_i S(x_i - mu)|| off the data, or the excess of that norm over the
  /// point's multiplicity when mu is a data point (0 means optimal).
  double residual = 0.0;
  bool at_data_point = false;
  /// sum_i ||x_i - mu_k|| for every iterate, starting at the initial point.
  std::vector<double> objective_trace;
};

/// L1 (spatial) median by Weiszfeld iteration with the Vardi-Zhang step at
/// data points, started from the coordinatewise median. Throws NonConvergence
/// if the stationarity residual exceeds 1e-7 n after max_iter steps.
SpatialMedianResult spatial_median(const Dataset& data, int max_iter = 500, double tol = 1e-10);

Vector marginal_median(const Dataset& data);

/// Location chosen by `spec` for this data.
Vector resolve_center(const Dataset& data, const CenterSpec& spec);

/// Subtracts the chosen center from every row and records it in center_meta.
Dataset center(const Dataset& data, const CenterSpec& spec);

/// Subtracts a known location.
Dataset shift(const Dataset& data, const Vector& location, std::string method);

}  // namespace rscatter
