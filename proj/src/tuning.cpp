#include "rscatter/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "rscatter/datagen.hpp"
#include "rscatter/errors.hpp"
#include "rscatter/parallel.hpp"

namespace rscatter {

namespace {

/// Lexicographic row order.
std::vector<Index> canonical_order(const Matrix& x) {
  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    }
    return false;
  });
  return order;
}

/// Fold index per row. Rows are first put in lexicographic order so the
/// assignment does not depend on how the input was ordered.
std::vector<int> assign_folds(const Matrix& x, int folds, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<Index> order = canonical_order(x);
  auto rng = keyed_engine(seed, {0x666f6c64ULL});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    fold[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(folds));
  }
  return fold;
}

Matrix gather(const Matrix& x, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = x.row(rows[k]);
  return out;
}

void check_value(EstimatorKind kind, double v) {
  if (uses_eta(kind)) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("tuning grid: eta must be > 0");
  } else if (!(v > 0.0 && v <= 1.0)) {
    throw std::invalid_argument("tuning grid: gamma must be in (0, 1]");
  }
}

}  // namespace

double gaussian_nll(const SpdMatrix& sigma, const Matrix& x) {
  if (x.rows() == 0) throw std::invalid_argument("gaussian_nll: no rows");
  const Matrix inv = sigma.inverse();
  const double quad = (x * inv).cwiseProduct(x).sum() / static_cast<double>(x.rows());
  return 0.5 * (sigma.log_det() + quad);
}

TuneResult cross_validate(const Dataset& data, const EstimatorConfig& config,
                          const CenterSpec& center, const TuneSpec& spec) {
  if (!uses_eta(config.kind) && !uses_gamma(config.kind)) {
    throw std::invalid_argument("cross-validation needs a penalized or hybrid estimator");
  }
  if (spec.grid.empty()) throw std::invalid_argument("tuning grid is empty");
  if (spec.folds < 2 || spec.folds > data.n()) {
    throw std::invalid_argument("folds must satisfy 2 <= K <= n");
  }
  for (double v : spec.grid) check_value(config.kind, v);

  const std::vector<int> fold = assign_folds(data.rows(), spec.folds, spec.seed);
  const std::vector<Index> order = canonical_order(data.rows());
  std::vector<std::vector<Index>> train(spec.folds), test(spec.folds);
  for (Index i : order) {
    const int f = fold[static_cast<std::size_t>(i)];
    for (int k = 0; k < spec.folds; ++k) (k == f ? test[k] : train[k]).push_back(i);
  }

  const std::size_t n_cand = spec.grid.size();
  const auto n_folds = static_cast<std::size_t>(spec.folds);
  std::vector<double> nll(n_cand * n_folds, 0.0);
  std::vector<std::string> errors(n_cand * n_folds);

  parallel_for(n_cand * n_folds, [&](std::size_t task) {
    const std::size_t c = task / n_folds;
    const std::size_t k = task % n_folds;
    EstimatorConfig cfg = config;
    cfg.tuning = spec.grid[c];
    try {
      const Dataset train_set(gather(data.rows(), train[k]));
      const ScatterEstimate est = estimate(train_set, cfg, center);
      const Vector mu = est.center_used ? est.center_used->center : Vector::Zero(data.q());
      const Matrix held = gather(data.rows(), test[k]).rowwise() - mu.transpose();
      const auto sigma = SpdMatrix::try_from(penalized_counterpart(est));
      if (!sigma) throw NotPositiveDefinite("fold estimate is singular");
      nll[task] = gaussian_nll(*sigma, held);
    } catch (const NumericalError& e) {
      errors[task] = e.what();
    } catch (const ZeroNormObservation& e) {
      errors[task] = e.what();
    }
  });

  TuneResult out;
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < n_cand; ++c) {
    CandidateScore s;
    s.value = spec.grid[c];
    for (std::size_t k = 0; k < n_folds; ++k) {
      if (!errors[c * n_folds + k].empty()) {
        s.failed = true;
        s.failure = errors[c * n_folds + k];
        break;
      }
    }
    if (!s.failed) {
      const Eigen::Map<const Vector> v(nll.data() + c * n_folds, static_cast<Index>(n_folds));
      s.mean = v.mean();
      s.sd = std::sqrt((v.array() - s.mean).square().sum() / static_cast<double>(n_folds - 1));
      if (!std::isfinite(s.mean)) {
        s.failed = true;
        s.failure = "non-finite score";
      }
    }
    if (!s.failed) {
      const auto& cur = best ? &out.scores[*best] : nullptr;
      if (!cur || s.mean < cur->mean || (s.mean == cur->mean && s.value > cur->value)) best = c;
    }
    out.scores.push_back(std::move(s));
  }
  if (!best) throw NumericalError("cross-validation: every candidate failed to fit");
  out.best = out.scores[*best].value;
  return out;
}

}  // namespace rscatter
