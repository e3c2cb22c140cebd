#include "rscatter/breakdown.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rscatter/datagen.hpp"
#include "rscatter/errors.hpp"
#include "rscatter/io.hpp"
#include "rscatter/parallel.hpp"

namespace rscatter {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDivergingBias = 1e6;
constexpr double kGrowthRelTol = 1e-6;

Vector resolve_direction(const Vector& dir, Index axis, Index q) {
  if (dir.size() == 0) {
    if (axis < 0 || axis >= q) {
      throw std::invalid_argument("contamination axis e" + std::to_string(axis + 1) +
                                  " exceeds data dimension " + std::to_string(q));
    }
    Vector e = Vector::Zero(q);
    e(axis) = 1.0;
    return e;
  }
  if (dir.size() != q) {
    throw std::invalid_argument("contamination direction has dimension " +
                                std::to_string(dir.size()) + " but data has " +
                                std::to_string(q));
  }
  const double nrm = dir.norm();
  if (!(nrm > 0.0)) throw std::invalid_argument("contamination direction must be nonzero");
  return dir / nrm;
}

/// "e3" sets axis 2, "1,0,0" an explicit vector.
template <class P>
void parse_direction(std::string_view text, P& pattern) {
  if (text.size() > 1 && text.front() == 'e') {
    const double idx = parse_double(text.substr(1));
    if (idx < 1.0 || idx != std::floor(idx)) {
      throw std::invalid_argument("bad axis direction '" + std::string(text) + "'");
    }
    pattern.axis = static_cast<Index>(idx) - 1;
    pattern.direction = Vector();
    return;
  }
  const std::vector<double> v = parse_double_list(text);
  pattern.direction = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

/// Smallest eigenvalue of (1/(n+m)) sum_clean u(|x|^2 / t) x x^T, the lower
/// bound that the clean points alone force on hybrid-type estimates.
double hybrid_floor(const Matrix& clean_centered, const WeightSpec& weight, double t,
                    double n_total) {
  const Index q = clean_centered.cols();
  Matrix acc = Matrix::Zero(q, q);
  for (Index i = 0; i < clean_centered.rows(); ++i) {
    const Vector x = clean_centered.row(i).transpose();
    const double s = x.squaredNorm();
    if (!(s > 0.0)) continue;
    acc.noalias() += weight.u(s / t) * x * x.transpose();
  }
  acc /= n_total;
  return eigendecompose(SymMatrix(acc)).values.minCoeff();
}

double lambda_floor(const EstimatorConfig& config, const Matrix& clean_centered, double n_total) {
  switch (config.kind) {
    case EstimatorKind::kPenTrace:
    case EstimatorKind::kPenKl:
      return config.tuning;
    case EstimatorKind::kHybridTrace:
      if (config.tuning <= 0.0) return 0.0;
      return hybrid_floor(clean_centered, *config.weight, config.tuning, n_total);
    case EstimatorKind::kHybridKl:
      if (config.tuning <= 0.0) return 0.0;
      return hybrid_floor(clean_centered, *config.weight, config.tuning, n_total);
    case EstimatorKind::kGenSscm:
      return hybrid_floor(clean_centered, *config.weight, 1.0, n_total);
    case EstimatorKind::kSscm:
      return hybrid_floor(clean_centered, WeightSpec::tyler(1.0), 1.0, n_total);
    case EstimatorKind::kMPlain:
      return 0.0;
  }
  return 0.0;
}

Vector center_of(const ScatterEstimate& est, Index q) {
  return est.center_used ? est.center_used->center : Vector::Zero(q);
}

MagnitudeRecord evaluate_point(const Dataset& data, const EstimatorConfig& config,
                               const CenterSpec& center, const ContaminationSpec& spec,
                               std::size_t mag_index, const ScatterEstimate& clean) {
  const Index n = data.n();
  const Index q = data.q();
  MagnitudeRecord rec;
  rec.magnitude = spec.ladder[mag_index];
  rec.bias = kInf;

  Matrix z(n + spec.m, q);
  z.topRows(n) = data.rows();
  z.bottomRows(spec.m) = contamination_points(spec, q, mag_index);

  ScatterEstimate est;
  try {
    est = estimate(Dataset(std::move(z)), config, center);
  } catch (const NumericalError& e) {
    rec.failure = e.what();
    return rec;
  } catch (const ZeroNormObservation& e) {
    rec.failure = e.what();
    return rec;
  } catch (const std::invalid_argument& e) {
    rec.failure = e.what();
    return rec;
  }

  rec.converged = true;
  rec.iterations = est.iterations;
  rec.bias = bias(clean, est);
  rec.lambda_max = est.eigenvalues(0);
  rec.lambda_min = est.eigenvalues(q - 1);
  const Vector mu = center_of(est, q);
  rec.center_shift = (mu - center_of(clean, q)).norm();
  const Matrix clean_centered = data.rows().rowwise() - mu.transpose();
  rec.lambda_floor = lambda_floor(config, clean_centered, static_cast<double>(n + spec.m));

  if (est.flags.eigen_bounds_apply) {
    const Vector ev = eigendecompose(penalized_counterpart(est)).values;
    const double lo = est.flags.lower_bound;
    const double hi = est.flags.upper_bound;
    const double tol = 1e-7 * hi;
    if (ev(q - 1) < lo - tol) {
      rec.bound_violations.push_back("lambda_min " + format_double(ev(q - 1)) + " < " +
                                     format_double(lo));
    }
    if (ev(0) > hi + tol) {
      rec.bound_violations.push_back("lambda_max " + format_double(ev(0)) + " > " +
                                     format_double(hi));
    }
  }
  return rec;
}

void classify(ContaminationReport& report) {
  const auto& recs = report.records;
  const std::size_t len = recs.size();
  for (const auto& r : recs) {
    if (!r.converged) {
      report.verdict = Verdict::kEstimateFailed;
      report.verdict_reason =
          "estimate failed at magnitude " + format_double(r.magnitude) + ": " + r.failure;
      return;
    }
  }
  for (const auto& r : recs) {
    if (!std::isfinite(r.bias)) {
      report.verdict = Verdict::kDiverging;
      report.verdict_reason = "singular estimate at magnitude " + format_double(r.magnitude);
      return;
    }
  }
  double max_bias = 0.0;
  for (const auto& r : recs) max_bias = std::max(max_bias, r.bias);
  if (max_bias > kDivergingBias) {
    report.verdict = Verdict::kDiverging;
    report.verdict_reason = "bias exceeds 1e6";
    return;
  }
  const auto grows = [&](std::size_t k) {
    return recs[k + 1].bias > recs[k].bias * (1.0 + kGrowthRelTol) + 1e-12;
  };
  if (len >= 3 && grows(len - 3) && grows(len - 2)) {
    report.verdict = Verdict::kDiverging;
    report.verdict_reason = "bias grows across the top three magnitudes";
    return;
  }
  bool plateau = true;
  for (std::size_t k = len / 2; k + 1 < len; ++k) {
    if (grows(k)) plateau = false;
  }
  bool floor_ok = true;
  for (const auto& r : recs) {
    const double slack = 1e-9 * r.lambda_floor + 1e-14 * r.lambda_max;
    if (!(r.lambda_floor > 0.0) || r.lambda_min < r.lambda_floor - slack) floor_ok = false;
  }
  if (plateau && floor_ok) {
    report.verdict = Verdict::kBounded;
    report.verdict_reason = "bias levels off and lambda_min stays above the clean-data floor";
    return;
  }
  report.verdict = Verdict::kInconclusive;
  report.verdict_reason = plateau ? "no positive lambda_min floor" : "bias not monotone";
}

ScatterEstimate clean_estimate(const Dataset& data, const EstimatorConfig& config,
                               const CenterSpec& center) {
  if (data_rank(data) < data.q()) {
    throw std::invalid_argument("clean data must span R^q");
  }
  return estimate(data, config, center);
}

ContaminationReport make_report(Index n, Index m) {
  ContaminationReport r;
  r.n = n;
  r.m = m;
  r.epsilon = static_cast<double>(m) / static_cast<double>(n + m);
  return r;
}

}  // namespace

std::vector<double> default_ladder() { return {1e2, 1e4, 1e6, 1e8, 1e10, 1e12}; }

ContaminationPattern parse_pattern(std::string_view text) {
  const std::size_t colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  std::vector<std::pair<std::string, std::string>> kv;
  if (colon != std::string_view::npos) {
    // Keys are separated by ',' but a dir= value may itself contain commas;
    // a token without '=' continues the previous value.
    std::string_view rest = text.substr(colon + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      const std::size_t pos = rest.find(',', start);
      const std::string_view tok = rest.substr(start, pos - start);
      const std::size_t eq = tok.find('=');
      if (eq == std::string_view::npos) {
        if (kv.empty()) throw std::invalid_argument("bad pattern '" + std::string(text) + "'");
        kv.back().second += "," + std::string(tok);
      } else {
        kv.emplace_back(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
      }
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  }
  const auto reject = [&](const std::string& key) {
    return std::invalid_argument("pattern '" + std::string(head) + "' has no option '" + key + "'");
  };
  if (head == "point-mass") {
    PointMass p;
    for (const auto& [k, v] : kv) {
      if (k != "dir") throw reject(k);
      parse_direction(v, p);
    }
    return p;
  }
  if (head == "cluster") {
    Cluster c;
    for (const auto& [k, v] : kv) {
      if (k == "dir") parse_direction(v, c);
      else if (k == "spread") c.spread = parse_double(v);
      else throw reject(k);
    }
    if (!(c.spread >= 0.0)) throw std::invalid_argument("cluster spread must be >= 0");
    return c;
  }
  if (head == "near-singular") {
    NearSingular s;
    for (const auto& [k, v] : kv) {
      if (k != "k") throw reject(k);
      const double d = parse_double(v);
      if (d < 1.0 || d != std::floor(d)) throw std::invalid_argument("near-singular k must be >= 1");
      s.subspace_dim = static_cast<Index>(d);
    }
    return s;
  }
  throw std::invalid_argument("unknown contamination pattern '" + std::string(head) + "'");
}

std::string to_string(const ContaminationPattern& pattern) {
  const auto dir_text = [](const Vector& d, Index axis) {
    if (d.size() == 0) return "e" + std::to_string(axis + 1);
    std::string out;
    for (Index i = 0; i < d.size(); ++i) {
      if (i) out += ',';
      out += format_double(d(i));
    }
    return out;
  };
  return std::visit(
      [&](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return "point-mass:dir=" + dir_text(p.direction, p.axis);
        } else if constexpr (std::is_same_v<T, Cluster>) {
          return "cluster:dir=" + dir_text(p.direction, p.axis) + ",spread=" + format_double(p.spread);
        } else {
          return "near-singular:k=" + std::to_string(p.subspace_dim);
        }
      },
      pattern);
}

Matrix contamination_points(const ContaminationSpec& spec, Index q, std::size_t magnitude_index) {
  if (spec.m < 1) throw std::invalid_argument("contamination needs m >= 1");
  if (magnitude_index >= spec.ladder.size()) throw std::out_of_range("magnitude index");
  const double mag = spec.ladder[magnitude_index];
  Matrix y(spec.m, q);
  auto rng = keyed_engine(spec.seed, {static_cast<std::uint64_t>(spec.m), magnitude_index});
  std::normal_distribution<double> normal;

  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          const Vector d = resolve_direction(p.direction, p.axis, q);
          for (Index j = 0; j < spec.m; ++j) y.row(j) = mag * d.transpose();
        } else if constexpr (std::is_same_v<T, Cluster>) {
          const Vector d = resolve_direction(p.direction, p.axis, q);
          for (Index j = 0; j < spec.m; ++j) {
            for (Index c = 0; c < q; ++c) y(j, c) = mag * d(c) + p.spread * normal(rng);
          }
        } else {
          const Index k = std::min(p.subspace_dim, q);
          y.setZero();
          for (Index j = 0; j < spec.m; ++j) {
            Vector g(k);
            for (Index c = 0; c < k; ++c) g(c) = normal(rng);
            const double nrm = g.norm();
            if (nrm > 0.0) y.row(j).head(k) = (mag / nrm) * g.transpose();
          }
        }
      },
      spec.pattern);
  return y;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kBounded: return "bounded";
    case Verdict::kDiverging: return "diverging";
    case Verdict::kEstimateFailed: return "estimate_failed";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return {};
}

double bias(const ScatterEstimate& clean, const ScatterEstimate& contaminated) {
  return riemannian_bias(clean.matrix, contaminated.matrix);
}

ContaminationReport stress_sweep(const Dataset& data, const EstimatorConfig& config,
                                 const CenterSpec& center, const ContaminationSpec& spec) {
  const ScatterEstimate clean = clean_estimate(data, config, center);
  ContaminationReport report = make_report(data.n(), spec.m);
  report.records.resize(spec.ladder.size());
  parallel_for(spec.ladder.size(), [&](std::size_t k) {
    report.records[k] = evaluate_point(data, config, center, spec, k, clean);
  });
  classify(report);
  return report;
}

BreakdownBracket breakdown_estimate(const Dataset& data, const EstimatorConfig& config,
                                    const CenterSpec& center, const ContaminationSpec& family,
                                    const std::vector<Index>& m_grid) {
  for (Index m : m_grid) {
    if (m < 1 || m > data.n()) {
      throw std::invalid_argument("m-grid entries must lie in [1, n]");
    }
  }
  const ScatterEstimate clean = clean_estimate(data, config, center);
  const std::size_t per_m = family.ladder.size();

  BreakdownBracket out;
  std::vector<ContaminationSpec> specs;
  for (Index m : m_grid) {
    ContaminationSpec s = family;
    s.m = m;
    specs.push_back(s);
    out.reports.push_back(make_report(data.n(), m));
    out.reports.back().records.resize(per_m);
  }
  parallel_for(m_grid.size() * per_m, [&](std::size_t task) {
    const std::size_t g = task / per_m;
    const std::size_t k = task % per_m;
    out.reports[g].records[k] = evaluate_point(data, config, center, specs[g], k, clean);
  });

  for (auto& r : out.reports) {
    classify(r);
    if (r.verdict == Verdict::kBounded) out.lower = std::max(out.lower, r.epsilon);
    if (r.verdict == Verdict::kDiverging || r.verdict == Verdict::kEstimateFailed) {
      out.upper = out.upper ? std::min(*out.upper, r.epsilon) : r.epsilon;
    }
  }

  std::vector<double> lb, ls;
  for (const auto& r : out.reports) {
    if (r.records.empty()) continue;
    const auto& top = r.records.back();
    if (std::isfinite(top.bias) && top.bias > 0.0 && top.center_shift > 0.0) {
      lb.push_back(std::log(top.bias));
      ls.push_back(std::log(top.center_shift));
    }
  }
  if (lb.size() >= 3) {
    const auto k = static_cast<Index>(lb.size());
    const Eigen::Map<const Vector> a(lb.data(), k), b(ls.data(), k);
    const Vector da = a.array() - a.mean();
    const Vector db = b.array() - b.mean();
    const double denom = da.norm() * db.norm();
    if (denom > 0.0) out.center_tracking_correlation = da.dot(db) / denom;
  }
  return out;
}

}  // namespace rscatter
