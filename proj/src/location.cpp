#include "rscatter/location.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rscatter/errors.hpp"
#include "rscatter/io.hpp"

namespace rscatter {

namespace {

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

double l1_objective(const Matrix& x, const Vector& mu) {
  return (x.rowwise() - mu.transpose()).rowwise().norm().sum();
}

/// Vardi-Zhang optimality test at data point x_j: the pull of the other points
/// must not exceed the multiplicity of x_j.
struct VertexCheck {
  double excess;
  bool optimal;
};

VertexCheck check_vertex(const Matrix& x, Index j, double coincide_tol) {
  const Vector xj = x.row(j).transpose();
  Vector pull = Vector::Zero(x.cols());
  double multiplicity = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    const Vector d = x.row(i).transpose() - xj;
    const double nrm = d.norm();
    if (nrm <= coincide_tol) {
      multiplicity += 1.0;
    } else {
      pull += d / nrm;
    }
  }
  const double excess = std::max(0.0, pull.norm() - multiplicity);
  return {excess, pull.norm() <= multiplicity};
}

}  // namespace

std::string CenterSpec::to_string() const {
  switch (kind) {
    case Kind::kFixed: {
      if (fixed.size() == 0) return "fixed";
      std::string out = "fixed:";
      for (Index i = 0; i < fixed.size(); ++i) {
        if (i) out += ',';
        out += format_double(fixed(i));
      }
      return out;
    }
    case Kind::kMarginalMedian:
      return "marginal";
    case Kind::kSpatialMedian:
      return "spatial";
  }
  return {};
}

CenterSpec parse_center(std::string_view text) {
  if (text == "spatial") return CenterSpec::spatial();
  if (text == "marginal") return CenterSpec::marginal();
  if (text == "fixed" || text == "zero") return CenterSpec::origin();
  if (text.starts_with("fixed:")) {
    const std::vector<double> v = parse_double_list(text.substr(6));
    return CenterSpec::at(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
  }
  throw std::invalid_argument("invalid center spec '" + std::string(text) +
                              "' (expected fixed[:c1,c2,...] | marginal | spatial)");
}

Vector marginal_median(const Dataset& data) {
  if (data.n() < 1) throw std::invalid_argument("marginal_median: empty dataset");
  Vector out(data.q());
  for (Index j = 0; j < data.q(); ++j) {
    const auto col = data.rows().col(j);
    out(j) = median_of(std::vector<double>(col.begin(), col.end()));
  }
  return out;
}

SpatialMedianResult spatial_median(const Dataset& data, int max_iter, double tol) {
  if (data.n() < 1) throw std::invalid_argument("spatial_median: empty dataset");
  const Matrix& x = data.rows();
  const Index n = data.n();

  SpatialMedianResult out;
  Vector y = marginal_median(data);

  Vector dist = (x.rowwise() - y.transpose()).rowwise().norm();
  double scale = median_of(std::vector<double>(dist.begin(), dist.end()));
  if (!(scale > 0.0)) scale = dist.mean();
  if (!(scale > 0.0)) {
    // All points coincide with the start.
    out.point = x.row(0).transpose();
    out.at_data_point = true;
    out.objective_trace.push_back(0.0);
    return out;
  }
  const double coincide_tol = 1e-12 * scale;
  const double residual_limit = 1e-7 * static_cast<double>(n);

  out.objective_trace.push_back(dist.sum());
  double residual = 0.0;
  bool converged = false;

  for (int k = 0; k <= max_iter; ++k) {
    dist = (x.rowwise() - y.transpose()).rowwise().norm();

    // Snap to the nearest data point if it is optimal. Weiszfeld approaches
    // an optimal vertex only sublinearly, so this is tested every pass.
    Index nearest = 0;
    dist.minCoeff(&nearest);
    {
      const VertexCheck vc = check_vertex(x, nearest, coincide_tol);
      if (vc.optimal) {
        out.point = x.row(nearest).transpose();
        out.at_data_point = true;
        out.residual = 0.0;
        out.iterations = k;
        const double obj = l1_objective(x, out.point);
        if (obj < out.objective_trace.back()) out.objective_trace.push_back(obj);
        return out;
      }
    }

    Vector num = Vector::Zero(x.cols());
    Vector pull = Vector::Zero(x.cols());
    double den = 0.0;
    double multiplicity = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (dist(i) <= coincide_tol) {
        multiplicity += 1.0;
        continue;
      }
      const double w = 1.0 / dist(i);
      num += w * x.row(i).transpose();
      pull += w * (x.row(i).transpose() - y);
      den += w;
    }
    const double r = pull.norm();
    residual = multiplicity > 0.0 ? std::max(0.0, r - multiplicity) : r;
    if (converged || k == max_iter) break;

    Vector next = num / den;
    if (multiplicity > 0.0) {
      // Vardi-Zhang: r > multiplicity here, otherwise the snap above returned.
      const double mix = multiplicity / r;
      next = (1.0 - mix) * next + mix * y;
    }
    double next_obj = l1_objective(x, next);
    if (multiplicity == 0.0) {
      // Newton candidate; kept only when it beats the Weiszfeld step, which
      // preserves the monotone objective.
      Matrix hess = Matrix::Zero(x.cols(), x.cols());
      for (Index i = 0; i < n; ++i) {
        const Vector u = (x.row(i).transpose() - y) / dist(i);
        hess += (Matrix::Identity(x.cols(), x.cols()) - u * u.transpose()) / dist(i);
      }
      const Eigen::LDLT<Matrix> ldlt(hess);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Vector newton = y + ldlt.solve(pull);
        const double newton_obj = l1_objective(x, newton);
        if (newton.allFinite() && newton_obj < next_obj) {
          next = newton;
          next_obj = newton_obj;
        }
      }
    }
    const double step = (next - y).norm();
    y = std::move(next);
    out.iterations = k + 1;
    out.objective_trace.push_back(next_obj);
    // One more pass to compute the residual at the accepted iterate.
    if (step <= tol * scale) converged = true;
  }

  out.point = y;
  out.residual = residual;
  if (!converged && residual > residual_limit) {
    throw NonConvergence("spatial_median: no convergence after " + std::to_string(max_iter) +
                             " iterations (residual " + format_double(residual) + ")",
                         out.iterations, 0.0, residual, Matrix(y));
  }
  return out;
}

Vector resolve_center(const Dataset& data, const CenterSpec& spec) {
  switch (spec.kind) {
    case CenterSpec::Kind::kFixed:
      if (spec.fixed.size() == 0) return Vector::Zero(data.q());
      if (spec.fixed.size() != data.q()) {
        throw std::invalid_argument("fixed center has dimension " +
                                    std::to_string(spec.fixed.size()) + " but data has " +
                                    std::to_string(data.q()));
      }
      return spec.fixed;
    case CenterSpec::Kind::kMarginalMedian:
      return marginal_median(data);
    case CenterSpec::Kind::kSpatialMedian:
      return spatial_median(data, spec.max_iter, spec.tol).point;
  }
  return {};
}

Dataset shift(const Dataset& data, const Vector& location, std::string method) {
  Matrix rows = data.rows().rowwise() - location.transpose();
  return Dataset(std::move(rows), CenterRecord{std::move(method), location});
}

Dataset center(const Dataset& data, const CenterSpec& spec) {
  return shift(data, resolve_center(data, spec), spec.to_string());
}

}  // namespace rscatter
