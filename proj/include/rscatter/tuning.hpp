#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rscatter/estimators.hpp"

namespace rscatter {

struct TuneSpec {
  /// Candidate eta (trace kinds) or gamma (KL kinds) values.
  std::vector<double> grid;
  int folds = 5;
  std::uint64_t seed = 0;
};

struct CandidateScore {
  double value = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  bool failed = false;
  std::string failure;
};

struct TuneResult {
  double best = 0.0;
  /// In grid order.
  std::vector<CandidateScore> scores;
};

/// 0.5 * (log det S + mean_i x_i' S^-1 x_i) over the rows of `x`.
double gaussian_nll(const SpdMatrix& sigma, const Matrix& x);

/// K-fold cross-validation of the tuning constant by held-out Gaussian
/// negative log-likelihood. Hybrid fits are scored through their positive
/// definite penalized counterparts. The centering is estimated on each
/// training part and applied to its held-out fold. Fold membership depends on
/// row values and the seed, not on row order. Ties go to the larger value.
TuneResult cross_validate(const Dataset& data, const EstimatorConfig& config,
                          const CenterSpec& center, const TuneSpec& spec);

}  // namespace rscatter
