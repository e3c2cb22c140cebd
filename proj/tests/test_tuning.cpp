#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rscatter/errors.hpp"
#include "rscatter/tuning.hpp"
#include "support.hpp"

using namespace rscatter;

namespace {

EstimatorConfig pen_trace_gaussian() {
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::kPenTrace;
  cfg.weight = WeightSpec::gaussian();
  return cfg;
}

}  // namespace

TEST_CASE("gaussian_nll matches a direct evaluation") {
  const SpdMatrix s = testing::random_spd(3, 4);
  const Matrix x = testing::random_matrix(7, 3, 5);
  double quad = 0.0;
  for (Index i = 0; i < 7; ++i) quad += x.row(i) * s.matrix().inverse() * x.row(i).transpose();
  const double direct = 0.5 * (std::log(s.matrix().determinant()) + quad / 7.0);
  CHECK(gaussian_nll(s, x) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("single candidate is returned") {
  const Dataset d = testing::gaussian_data(30, 2, 1);
  TuneSpec spec;
  spec.grid = {0.25};
  CHECK(cross_validate(d, pen_trace_gaussian(), CenterSpec::origin(), spec).best == 0.25);
}

TEST_CASE("gross over-shrinkage loses") {
  const Dataset d = testing::gaussian_data(500, 2, 2);
  TuneSpec spec;
  spec.grid = {0.01, 1.0, 100.0};
  const auto r = cross_validate(d, pen_trace_gaussian(), CenterSpec::origin(), spec);
  CHECK(r.best != 100.0);

  // Oracle: closed-form estimates scored on the full sample.
  const Matrix m = d.rows().transpose() * d.rows() / 500.0;
  auto nll = [&](double eta) {
    return gaussian_nll(SpdMatrix(SymMatrix(m + eta * Matrix::Identity(2, 2))), d.rows());
  };
  CHECK(nll(100.0) > nll(1.0));
  CHECK(nll(100.0) > nll(0.01));
  for (const auto& s : r.scores) CHECK(std::isfinite(s.mean));
}

TEST_CASE("row order and candidate order do not matter") {
  const Dataset d = testing::gaussian_data(60, 3, 3);
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::kHybridKl;
  cfg.weight = WeightSpec::bounded_huber(0.9, 2.0);
  TuneSpec spec;
  spec.grid = {0.1, 0.5, 0.9};
  spec.seed = 11;
  const auto a = cross_validate(d, cfg, CenterSpec::spatial(), spec);

  Matrix reversed = d.rows().colwise().reverse();
  const auto b = cross_validate(Dataset(reversed), cfg, CenterSpec::spatial(), spec);
  CHECK(a.best == b.best);
  for (std::size_t k = 0; k < 3; ++k) CHECK(a.scores[k].mean == doctest::Approx(b.scores[k].mean).epsilon(1e-10));

  std::reverse(spec.grid.begin(), spec.grid.end());
  CHECK(cross_validate(d, cfg, CenterSpec::spatial(), spec).best == a.best);
}

TEST_CASE("tuning input validation") {
  const Dataset d = testing::gaussian_data(10, 2, 4);
  TuneSpec spec;
  CHECK_THROWS_AS(cross_validate(d, pen_trace_gaussian(), CenterSpec::origin(), spec),
                  std::invalid_argument);
  spec.grid = {0.0};
  CHECK_THROWS_AS(cross_validate(d, pen_trace_gaussian(), CenterSpec::origin(), spec),
                  std::invalid_argument);
  spec.grid = {1.0};
  spec.folds = 11;
  CHECK_THROWS_AS(cross_validate(d, pen_trace_gaussian(), CenterSpec::origin(), spec),
                  std::invalid_argument);
  EstimatorConfig sscm_cfg;
  spec.folds = 5;
  CHECK_THROWS_AS(cross_validate(d, sscm_cfg, CenterSpec::origin(), spec), std::invalid_argument);
}

TEST_CASE("failed candidates are excluded") {
  const Dataset d = testing::gaussian_data(30, 2, 5);
  EstimatorConfig cfg;
  cfg.kind = EstimatorKind::kPenTrace;
  cfg.weight = WeightSpec::tyler(0.5);
  cfg.solver.max_iter = 1;
  TuneSpec spec;
  spec.grid = {0.5, 1.0};
  CHECK_THROWS_AS(cross_validate(d, cfg, CenterSpec::origin(), spec), NumericalError);
}
