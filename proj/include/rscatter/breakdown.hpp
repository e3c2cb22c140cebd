#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rscatter/estimators.hpp"

namespace rscatter {

/// m copies of magnitude * direction. An empty direction means the unit
/// vector along `axis` (0-based).
struct PointMass {
  Vector direction;
  Index axis = 0;
};
/// magnitude * direction + spread * N(0, I) per point.
struct Cluster {
  Vector direction;
  Index axis = 0;
  double spread = 1.0;
};
/// Points at distance `magnitude` inside span(e1..e_k), squeezing the
/// remaining directions relative to the dominant ones.
struct NearSingular {
  Index subspace_dim = 1;
};
using ContaminationPattern = std::variant<PointMass, Cluster, NearSingular>;

/// "point-mass[:dir=e1|dir=1,0,0]", "cluster[:dir=e2,spread=0.5]", "near-singular[:k=1]".
ContaminationPattern parse_pattern(std::string_view text);
std::string to_string(const ContaminationPattern& pattern);

std::vector<double> default_ladder();

struct ContaminationSpec {
  ContaminationPattern pattern = PointMass{};
  Index m = 1;
  std::vector<double> ladder = default_ladder();
  std::uint64_t seed = 0;
};

/// The m added points at one magnitude; randomness keyed by (seed, m, magnitude index).
Matrix contamination_points(const ContaminationSpec& spec, Index q, std::size_t magnitude_index);

enum class Verdict { kBounded, kDiverging, kEstimateFailed, kInconclusive };
std::string_view to_string(Verdict v);

struct MagnitudeRecord {
  double magnitude = 0.0;
  /// Riemannian distance to the clean estimate; +infinity on failure or singularity.
  double bias = 0.0;
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  /// Lower bound on lambda_min implied by the clean points alone.
  double lambda_floor = 0.0;
  /// Distance between the centers used for the contaminated and clean data.
  double center_shift = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string failure;
  std::vector<std::string> bound_violations;
};

struct ContaminationReport {
  Index n = 0;
  Index m = 0;
  double epsilon = 0.0;
  std::vector<MagnitudeRecord> records;
  Verdict verdict = Verdict::kInconclusive;
  std::string verdict_reason;
};

/// Riemannian bias between two estimates; +infinity if either is singular.
double bias(const ScatterEstimate& clean, const ScatterEstimate& contaminated);

/// Re-estimates on X plus the contamination at every ladder magnitude.
/// Estimation failures are recorded, not thrown. Throws std::invalid_argument
/// if the clean data do not span R^q.
ContaminationReport stress_sweep(const Dataset& data, const EstimatorConfig& config,
                                 const CenterSpec& center, const ContaminationSpec& spec);

/// Bracket on the breakdown point restricted to one contamination family.
struct BreakdownBracket {
  /// Largest m/(n+m) with a bounded verdict (0 if none).
  double lower = 0.0;
  /// Smallest m/(n+m) with a diverging or failed verdict, if any was observed.
  std::optional<double> upper;
  std::vector<ContaminationReport> reports;
  /// Pearson correlation across the grid of log(bias) and log(center shift) at
  /// the top magnitude; empty when fewer than three usable points.
  std::optional<double> center_tracking_correlation;
};

BreakdownBracket breakdown_estimate(const Dataset& data, const EstimatorConfig& config,
                                    const CenterSpec& center, const ContaminationSpec& family,
                                    const std::vector<Index>& m_grid);

}  // namespace rscatter
