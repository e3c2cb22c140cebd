#include "rscatter/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "rscatter/errors.hpp"
#include "rscatter/io.hpp"

namespace rscatter {

namespace {

constexpr double kResidualRelTol = 1e-8;
constexpr double kDivergenceRatio = 1e12;

/// Rows of a centered dataset that carry a nonzero term. A row counts as zero
/// when its norm is at the rounding level of the subtraction that centered it.
struct ActiveRows {
  Matrix x;
  double n_total = 0.0;
  Index dropped = 0;
};

ActiveRows active_rows(const Dataset& data, const WeightSpec* weight, ZeroNormPolicy policy) {
  const Vector norms = data.rows().rowwise().norm();
  const auto& meta = data.center_meta();
  const double thresh = meta && meta->center.size() > 0 ? 1e-14 * meta->center.norm() : 0.0;

  std::vector<Index> keep;
  keep.reserve(static_cast<std::size_t>(data.n()));
  for (Index i = 0; i < data.n(); ++i) {
    if (norms(i) > thresh) keep.push_back(i);
  }

  ActiveRows out;
  out.n_total = static_cast<double>(data.n());
  const Index zero_rows = data.n() - static_cast<Index>(keep.size());
  const bool weight_needs_drop = weight == nullptr || !weight->finite_at_zero();
  if (zero_rows > 0 && weight_needs_drop) {
    if (policy == ZeroNormPolicy::kError) {
      throw ZeroNormObservation(std::to_string(zero_rows) +
                                " observation(s) coincide with the center");
    }
    out.dropped = zero_rows;
    spdlog::debug("dropping {} zero-norm observation(s) of {}", zero_rows, data.n());
  }
  out.x.resize(static_cast<Index>(keep.size()), data.q());
  for (std::size_t k = 0; k < keep.size(); ++k) out.x.row(static_cast<Index>(k)) = data.row(keep[k]);
  return out;
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// (1/n) sum_i w_i x_i x_i^T
Matrix weighted_moment(const Matrix& x, const Vector& w, double n_total) {
  if (x.rows() == 0) return Matrix::Zero(x.cols(), x.cols());
  return symmetrized(x.transpose() * w.asDiagonal() * x / n_total);
}

/// M(V) = a V + b I,  F(V) = c A(M(V)) + d I,  A(M) = (1/n) sum u(x' M^-1 x) x x'.
struct FixedPointMap {
  double a = 1.0;
  double b = 0.0;
  double c = 1.0;
  double d = 0.0;
};

class ScatterMap {
 public:
  ScatterMap(const ActiveRows& rows, const WeightSpec& weight, FixedPointMap map)
      : rows_(rows), weight_(weight), map_(map) {}

  /// Returns F(V). Throws NotPositiveDefinite when M(V) is not positive definite.
  Matrix operator()(const Matrix& v) const {
    const Index q = v.rows();
    const Matrix metric = map_.a * v + map_.b * Matrix::Identity(q, q);
    const EigenDecomposition eig = eigendecompose(SymMatrix(symmetrized(metric)));
    if (!(eig.values.minCoeff() > 0.0) || !std::isfinite(eig.values(0))) {
      throw NotPositiveDefinite("fixed-point metric matrix lost positive definiteness");
    }
    const Vector inv_sqrt = eig.values.array().rsqrt();
    const Matrix whitened = rows_.x * eig.vectors * inv_sqrt.asDiagonal();
    const Vector s = whitened.rowwise().squaredNorm();
    Vector w(s.size());
    for (Index i = 0; i < s.size(); ++i) w(i) = weight_.u(s(i));
    Matrix out = map_.c * weighted_moment(rows_.x, w, rows_.n_total);
    out.diagonal().array() += map_.d;
    return out;
  }

 private:
  const ActiveRows& rows_;
  const WeightSpec& weight_;
  FixedPointMap map_;
};

struct FixedPointResult {
  Matrix v;
  int iterations = 0;
  double gap = 0.0;
  double residual = 0.0;
};

/// Watches for the plain M-estimator's iterates exploding or collapsing.
struct DivergenceWatch {
  bool enabled = false;
  double scale = 1.0;
};

void check_divergence(const Matrix& v, const DivergenceWatch& watch, int k, double gap) {
  const EigenDecomposition eig = eigendecompose(SymMatrix(v));
  const double top = eig.values(0);
  const double bottom = eig.values(eig.values.size() - 1);
  const bool bad = !(bottom > 0.0) || !std::isfinite(top) || top / bottom > kDivergenceRatio ||
                   top > kDivergenceRatio * watch.scale || top < watch.scale / kDivergenceRatio;
  if (bad) {
    throw Nonexistence("M-estimate likely does not exist: eigenvalues (" + format_double(top) +
                           ", " + format_double(bottom) + ") after " + std::to_string(k) +
                           " iterations",
                       k, gap, std::numeric_limits<double>::quiet_NaN(), v);
  }
}

FixedPointResult iterate(const ScatterMap& map, const Matrix& init, const SolverOptions& opts,
                         bool constant_map, const DivergenceWatch& watch) {
  FixedPointResult out;
  Matrix v = init;
  const auto residual_ok = [&](double residual, const Matrix& m) {
    bool ok = residual <= kResidualRelTol * (1.0 + m.norm());
    if (watch.enabled) ok = ok && residual <= kResidualRelTol * m.norm();
    return ok;
  };

  if (constant_map) {
    out.v = map(v);
    out.iterations = 1;
    out.residual = (map(out.v) - out.v).norm();
    return out;
  }

  for (int k = 1; k <= opts.max_iter; ++k) {
    Matrix next;
    try {
      next = map(v);
    } catch (const NotPositiveDefinite&) {
      if (watch.enabled) {
        throw Nonexistence("M-estimate likely does not exist: iterate became singular", k,
                           out.gap, std::numeric_limits<double>::quiet_NaN(), v);
      }
      throw;
    }
    const double step = (next - v).norm();
    out.gap = step / (1.0 + v.norm());
    double rel_gap = out.gap;
    if (watch.enabled) rel_gap = std::max(out.gap, step / v.norm());
    v = std::move(next);
    out.iterations = k;
    if (!v.allFinite()) break;
    if (watch.enabled) check_divergence(v, watch, k, out.gap);

    if (rel_gap <= opts.tol) {
      out.residual = (map(v) - v).norm();
      if (residual_ok(out.residual, v)) {
        out.v = std::move(v);
        return out;
      }
    }
  }
  throw NonConvergence("fixed-point iteration did not converge in " +
                           std::to_string(opts.max_iter) + " iterations (gap " +
                           format_double(out.gap) + ")",
                       out.iterations, out.gap, out.residual, v);
}

Matrix initial_matrix(const SolverOptions& opts, Index q) {
  if (!opts.init) return Matrix::Identity(q, q);
  if (opts.init->dim() != q) {
    throw std::invalid_argument("solver init has dimension " + std::to_string(opts.init->dim()) +
                                " but data has " + std::to_string(q));
  }
  return opts.init->matrix();
}

void require_rows(const Dataset& data) {
  if (data.n() < 1) throw std::invalid_argument("estimator needs at least one observation");
}

ScatterEstimate finish(EstimatorKind kind, Matrix m, double tuning, const ActiveRows& rows,
                       const std::optional<WeightSpec>& weight, const Dataset& data) {
  ScatterEstimate est;
  est.kind = kind;
  est.matrix = SymMatrix(symmetrized(m));
  const EigenDecomposition eig = eigendecompose(est.matrix);
  est.eigenvalues = eig.values;
  est.positive_definite = is_strictly_positive(eig);
  est.tuning = tuning;
  est.n = data.n();
  est.dropped_rows = rows.dropped;
  est.flags = guarantee_flags(kind, weight, tuning);
  est.center_used = data.center_meta();
  return est;
}

ScatterEstimate solve_fixed_point(EstimatorKind kind, const Dataset& data,
                                  const WeightSpec& weight, double tuning, FixedPointMap map,
                                  const SolverOptions& opts, DivergenceWatch watch = {}) {
  require_rows(data);
  const ActiveRows rows = active_rows(data, &weight, opts.zero_norm);
  const ScatterMap f(rows, weight, map);
  FixedPointResult r =
      iterate(f, initial_matrix(opts, data.q()), opts, weight.is_constant(), watch);
  ScatterEstimate est = finish(kind, std::move(r.v), tuning, rows, weight, data);
  est.iterations = r.iterations;
  est.final_gap = r.gap;
  est.residual = r.residual;
  return est;
}

ScatterEstimate gen_sscm_centered(const Dataset& data, const WeightSpec& weight,
                                  ZeroNormPolicy policy, EstimatorKind kind, double tuning) {
  require_rows(data);
  const ActiveRows rows = active_rows(data, &weight, policy);
  const Vector s = rows.x.rowwise().squaredNorm();
  Vector w(s.size());
  for (Index i = 0; i < s.size(); ++i) w(i) = weight.u(s(i));
  return finish(kind, weighted_moment(rows.x, w, rows.n_total), tuning, rows, weight, data);
}

void require_eta(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be > 0");
}

void require_gamma(double gamma, bool allow_zero) {
  const bool ok = allow_zero ? (gamma >= 0.0 && gamma <= 1.0) : (gamma > 0.0 && gamma <= 1.0);
  if (!ok) {
    throw std::invalid_argument(allow_zero ? "gamma must be in [0, 1]" : "gamma must be in (0, 1]");
  }
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kSscm: return "sscm";
    case EstimatorKind::kGenSscm: return "gen-sscm";
    case EstimatorKind::kMPlain: return "m";
    case EstimatorKind::kPenTrace: return "pen-trace";
    case EstimatorKind::kPenKl: return "pen-kl";
    case EstimatorKind::kHybridTrace: return "hybrid-trace";
    case EstimatorKind::kHybridKl: return "hybrid-kl";
  }
  return {};
}

EstimatorKind parse_estimator_kind(std::string_view text) {
  for (EstimatorKind k :
       {EstimatorKind::kSscm, EstimatorKind::kGenSscm, EstimatorKind::kMPlain,
        EstimatorKind::kPenTrace, EstimatorKind::kPenKl, EstimatorKind::kHybridTrace,
        EstimatorKind::kHybridKl}) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument("unknown estimator '" + std::string(text) + "'");
}

bool uses_eta(EstimatorKind kind) {
  return kind == EstimatorKind::kPenTrace || kind == EstimatorKind::kHybridTrace;
}

bool uses_gamma(EstimatorKind kind) {
  return kind == EstimatorKind::kPenKl || kind == EstimatorKind::kHybridKl;
}

void EstimatorConfig::check() const {
  if (kind != EstimatorKind::kSscm && !weight) {
    throw std::invalid_argument(std::string(to_string(kind)) + " needs a weight");
  }
  switch (kind) {
    case EstimatorKind::kPenTrace: require_eta(tuning); break;
    case EstimatorKind::kHybridTrace:
      if (tuning != 0.0) require_eta(tuning);
      break;
    case EstimatorKind::kPenKl: require_gamma(tuning, false); break;
    case EstimatorKind::kHybridKl: require_gamma(tuning, true); break;
    default: break;
  }
  if (solver.max_iter < 1) throw std::invalid_argument("max-iter must be >= 1");
  if (!(solver.tol > 0.0)) throw std::invalid_argument("tol must be > 0");
}

GuaranteeFlags guarantee_flags(EstimatorKind kind, const std::optional<WeightSpec>& weight,
                               double tuning) {
  GuaranteeFlags f;
  f.fixed_center = true;
  if (kind == EstimatorKind::kSscm) {
    f.weight_admissible = true;
    f.kappa_condition = true;
    f.breakdown_guarantee = true;
    return f;
  }
  if (!weight) return f;
  const auto violations = validate(*weight);
  f.weight_admissible = violations.empty();
  for (const auto& v : violations) f.notes.push_back(v.message);
  f.rho_bounded_below = weight->rho_bounded_below();
  const double kappa = weight->kappa();

  switch (kind) {
    case EstimatorKind::kPenTrace:
    case EstimatorKind::kHybridTrace:
      f.kappa_condition = kappa < 1.0;
      if (f.kappa_condition && tuning > 0.0) {
        f.eigen_bounds_apply = true;
        f.lower_bound = tuning;
        f.upper_bound = tuning / (1.0 - kappa);
      }
      break;
    case EstimatorKind::kPenKl:
    case EstimatorKind::kHybridKl:
      f.kappa_condition = (1.0 - tuning) * kappa < 1.0;
      if (f.kappa_condition && tuning > 0.0) {
        f.eigen_bounds_apply = true;
        f.lower_bound = tuning;
        f.upper_bound = tuning / (1.0 - (1.0 - tuning) * kappa);
      }
      break;
    case EstimatorKind::kGenSscm:
      f.kappa_condition = true;
      break;
    default:
      break;
  }
  f.breakdown_guarantee = f.weight_admissible && f.kappa_condition &&
                          (kind != EstimatorKind::kMPlain) &&
                          !(uses_eta(kind) && tuning <= 0.0) &&
                          !(kind == EstimatorKind::kHybridKl && tuning <= 0.0);
  if (!f.rho_bounded_below) {
    f.notes.emplace_back("rho unbounded below: uniqueness relies on the kappa condition");
  }
  if (!f.kappa_condition) f.notes.emplace_back("kappa condition fails: no eigenvalue bounds");
  return f;
}

Vector spatial_sign(const Vector& x) {
  const double nrm = x.norm();
  if (nrm == 0.0) return Vector::Zero(x.size());
  return x / nrm;
}

ScatterEstimate sscm(const Dataset& data, const CenterSpec& center_spec) {
  require_rows(data);
  const Dataset centered = center(data, center_spec);
  const ActiveRows rows = active_rows(centered, nullptr, ZeroNormPolicy::kDrop);
  Matrix acc = Matrix::Zero(data.q(), data.q());
  for (Index i = 0; i < rows.x.rows(); ++i) {
    const Vector sgn = spatial_sign(rows.x.row(i).transpose());
    acc.noalias() += sgn * sgn.transpose();
  }
  ScatterEstimate est = finish(EstimatorKind::kSscm, acc / rows.n_total, 0.0, rows,
                               std::nullopt, centered);
  est.flags.fixed_center = center_spec.kind == CenterSpec::Kind::kFixed;
  est.flags.breakdown_guarantee = est.flags.fixed_center;
  return est;
}

ScatterEstimate gen_sscm(const Dataset& data, const WeightSpec& weight,
                         const CenterSpec& center_spec, ZeroNormPolicy policy) {
  ScatterEstimate est =
      gen_sscm_centered(center(data, center_spec), weight, policy, EstimatorKind::kGenSscm, 0.0);
  est.flags.fixed_center = center_spec.kind == CenterSpec::Kind::kFixed;
  est.flags.breakdown_guarantee = est.flags.breakdown_guarantee && est.flags.fixed_center;
  return est;
}

ScatterEstimate solve_pen_trace(const Dataset& data, const WeightSpec& weight, double eta,
                                const SolverOptions& opts) {
  require_eta(eta);
  return solve_fixed_point(EstimatorKind::kPenTrace, data, weight, eta,
                           {.a = 1.0, .b = 0.0, .c = 1.0, .d = eta}, opts);
}

ScatterEstimate solve_pen_kl(const Dataset& data, const WeightSpec& weight, double gamma,
                             const SolverOptions& opts) {
  require_gamma(gamma, false);
  if (gamma == 1.0) {
    require_rows(data);
    const ActiveRows rows = active_rows(data, &weight, opts.zero_norm);
    return finish(EstimatorKind::kPenKl, Matrix::Identity(data.q(), data.q()), gamma, rows,
                  weight, data);
  }
  return solve_fixed_point(EstimatorKind::kPenKl, data, weight, gamma,
                           {.a = 1.0, .b = 0.0, .c = 1.0 - gamma, .d = gamma}, opts);
}

ScatterEstimate solve_hybrid_trace(const Dataset& data, const WeightSpec& weight, double eta,
                                   const SolverOptions& opts) {
  if (eta == 0.0) {
    ScatterEstimate est = solve_m_plain(data, weight, opts);
    est.kind = EstimatorKind::kHybridTrace;
    return est;
  }
  require_eta(eta);
  return solve_fixed_point(EstimatorKind::kHybridTrace, data, weight, eta,
                           {.a = 1.0, .b = eta, .c = 1.0, .d = 0.0}, opts);
}

ScatterEstimate solve_hybrid_kl(const Dataset& data, const WeightSpec& weight, double gamma,
                                const SolverOptions& opts) {
  require_gamma(gamma, true);
  if (gamma == 0.0) {
    ScatterEstimate est = solve_m_plain(data, weight, opts);
    est.kind = EstimatorKind::kHybridKl;
    return est;
  }
  if (gamma == 1.0) {
    return gen_sscm_centered(data, weight, opts.zero_norm, EstimatorKind::kHybridKl, 1.0);
  }
  return solve_fixed_point(EstimatorKind::kHybridKl, data, weight, gamma,
                           {.a = 1.0 - gamma, .b = gamma, .c = 1.0, .d = 0.0}, opts);
}

Index data_rank(const Dataset& data) {
  if (data.n() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(data.rows());
  const Vector& sv = svd.singularValues();
  if (!(sv(0) > 0.0)) return 0;
  return (sv.array() > 1e-10 * sv(0)).count();
}

ScatterEstimate solve_m_plain(const Dataset& data, const WeightSpec& weight,
                              const SolverOptions& opts) {
  require_rows(data);
  // The closed form for a constant weight exists for any data.
  if (!weight.is_constant() && data_rank(data) < data.q()) {
    throw std::invalid_argument("plain M-estimator needs data spanning R^q (rank " +
                                std::to_string(data_rank(data)) + " < " +
                                std::to_string(data.q()) + ")");
  }
  const double scale =
      data.rows().rowwise().squaredNorm().mean() / static_cast<double>(data.q());
  return solve_fixed_point(EstimatorKind::kMPlain, data, weight, 0.0, {}, opts,
                           {.enabled = true, .scale = scale});
}

ScatterEstimate estimate_centered(const Dataset& data, const EstimatorConfig& config) {
  config.check();
  const auto& w = config.weight;
  switch (config.kind) {
    case EstimatorKind::kSscm: return sscm(data, CenterSpec::origin());
    case EstimatorKind::kGenSscm:
      return gen_sscm_centered(data, *w, config.solver.zero_norm, EstimatorKind::kGenSscm, 0.0);
    case EstimatorKind::kMPlain: return solve_m_plain(data, *w, config.solver);
    case EstimatorKind::kPenTrace: return solve_pen_trace(data, *w, config.tuning, config.solver);
    case EstimatorKind::kPenKl: return solve_pen_kl(data, *w, config.tuning, config.solver);
    case EstimatorKind::kHybridTrace:
      return solve_hybrid_trace(data, *w, config.tuning, config.solver);
    case EstimatorKind::kHybridKl: return solve_hybrid_kl(data, *w, config.tuning, config.solver);
  }
  throw std::logic_error("unhandled estimator kind");
}

ScatterEstimate estimate(const Dataset& data, const EstimatorConfig& config,
                         const CenterSpec& center_spec) {
  config.check();
  require_rows(data);
  ScatterEstimate est = estimate_centered(center(data, center_spec), config);
  est.flags.fixed_center = center_spec.kind == CenterSpec::Kind::kFixed;
  est.flags.breakdown_guarantee = est.flags.breakdown_guarantee && est.flags.fixed_center;
  if (config.kind == EstimatorKind::kSscm) est.flags.breakdown_guarantee = est.flags.fixed_center;
  return est;
}

SymMatrix penalized_counterpart(const ScatterEstimate& est) {
  const Index q = est.matrix.dim();
  switch (est.kind) {
    case EstimatorKind::kHybridTrace:
      return SymMatrix(est.matrix.matrix() + est.tuning * Matrix::Identity(q, q));
    case EstimatorKind::kHybridKl:
      return SymMatrix((1.0 - est.tuning) * est.matrix.matrix() +
                       est.tuning * Matrix::Identity(q, q));
    default:
      return est.matrix;
  }
}

double evaluate_loss(const Dataset& data, const SpdMatrix& sigma, const WeightSpec& weight,
                     Penalty penalty, double tuning) {
  require_rows(data);
  if (sigma.dim() != data.q()) throw std::invalid_argument("evaluate_loss: dimension mismatch");
  const ActiveRows rows = active_rows(data, &weight, ZeroNormPolicy::kDrop);
  const Matrix inv = sigma.inverse();
  double fit = 0.0;
  for (Index i = 0; i < rows.x.rows(); ++i) {
    const auto x = rows.x.row(i);
    fit += weight.rho((x * inv * x.transpose())(0, 0));
  }
  // Dropped rows contribute rho(0) when it is finite.
  if (rows.dropped == 0 && rows.x.rows() < data.n()) {
    fit += static_cast<double>(data.n() - rows.x.rows()) * weight.rho(0.0);
  }
  const double log_det = sigma.log_det();
  double loss = fit / rows.n_total + log_det;
  switch (penalty) {
    case Penalty::kNone:
      break;
    case Penalty::kTrace:
      loss += tuning * inv.trace();
      break;
    case Penalty::kKl: {
      if (!(tuning >= 0.0 && tuning < 1.0)) {
        throw std::invalid_argument("evaluate_loss: KL gamma must be in [0, 1)");
      }
      const double eta = tuning / (1.0 - tuning);
      loss += eta * (inv.trace() + log_det);
      break;
    }
  }
  return loss;
}

}  // namespace rscatter
