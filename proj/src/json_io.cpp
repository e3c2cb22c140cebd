#include "rscatter/json_io.hpp"

#include <cmath>
#include <stdexcept>

namespace rscatter {

using nlohmann::json;

namespace {

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

/// JSON has no infinity; unbounded values are written as the string "infinity".
json finite_or_tag(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "infinity" : "-infinity";
}

}  // namespace

json matrix_to_json(const SymMatrix& m) {
  json arr = json::array();
  for (Index i = 0; i < m.dim(); ++i) {
    for (Index j = 0; j < m.dim(); ++j) arr.push_back(m(i, j));
  }
  return arr;
}

SymMatrix matrix_from_json(const json& obj) {
  if (!obj.is_object() || !obj.contains("q") || !obj.contains("matrix")) {
    throw std::invalid_argument("matrix_from_json: expected an object with q and matrix");
  }
  const auto q = obj.at("q").get<Index>();
  const json& data = obj.at("matrix");
  if (q < 1 || !data.is_array() || data.size() != static_cast<std::size_t>(q * q)) {
    throw std::invalid_argument("matrix_from_json: matrix must hold q*q numbers");
  }
  Matrix m(q, q);
  for (Index i = 0; i < q; ++i) {
    for (Index j = 0; j < q; ++j) m(i, j) = data.at(static_cast<std::size_t>(i * q + j)).get<double>();
  }
  return SymMatrix(m);
}

json to_json(const GuaranteeFlags& f) {
  json j{{"weight_admissible", f.weight_admissible},
         {"rho_bounded_below", f.rho_bounded_below},
         {"kappa_condition", f.kappa_condition},
         {"eigen_bounds_apply", f.eigen_bounds_apply},
         {"breakdown_guarantee", f.breakdown_guarantee},
         {"fixed_center", f.fixed_center},
         {"notes", f.notes}};
  if (f.eigen_bounds_apply) {
    j["lower_bound"] = f.lower_bound;
    j["upper_bound"] = f.upper_bound;
  }
  return j;
}

json to_json(const ScatterEstimate& est) {
  json j{{"estimator", std::string(to_string(est.kind))},
         {"q", est.matrix.dim()},
         {"n", est.n},
         {"matrix", matrix_to_json(est.matrix)},
         {"eigenvalues", vector_to_json(est.eigenvalues)},
         {"positive_definite", est.positive_definite},
         {"iterations", est.iterations},
         {"final_gap", est.final_gap},
         {"residual", est.residual},
         {"dropped_rows", est.dropped_rows},
         {"guarantee_flags", to_json(est.flags)}};
  if (uses_eta(est.kind)) j["eta"] = est.tuning;
  if (uses_gamma(est.kind)) j["gamma"] = est.tuning;
  if (est.center_used) {
    j["center_used"] = {{"method", est.center_used->method},
                        {"center", vector_to_json(est.center_used->center)}};
  } else {
    j["center_used"] = nullptr;
  }
  return j;
}

json to_json(const ContaminationReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    json rec{{"magnitude", r.magnitude},
             {"bias", finite_or_tag(r.bias)},
             {"converged", r.converged},
             {"bound_violations", r.bound_violations}};
    if (r.converged) {
      rec["lambda_max"] = r.lambda_max;
      rec["lambda_min"] = r.lambda_min;
      rec["lambda_floor"] = r.lambda_floor;
      rec["center_shift"] = r.center_shift;
      rec["iterations"] = r.iterations;
    } else {
      rec["failure"] = r.failure;
    }
    records.push_back(std::move(rec));
  }
  return json{{"n", report.n},
              {"m", report.m},
              {"epsilon", report.epsilon},
              {"verdict", std::string(to_string(report.verdict))},
              {"verdict_reason", report.verdict_reason},
              {"records", std::move(records)}};
}

json to_json(const BreakdownBracket& bracket) {
  json reports = json::array();
  for (const auto& r : bracket.reports) reports.push_back(to_json(r));
  json j{{"bracket",
          {{"lower", bracket.lower},
           {"upper", bracket.upper ? json(*bracket.upper) : json(nullptr)},
           {"note", "restricted to the contamination family; not a point estimate"}}},
         {"reports", std::move(reports)}};
  j["center_tracking_correlation"] = bracket.center_tracking_correlation
                                         ? json(*bracket.center_tracking_correlation)
                                         : json(nullptr);
  return j;
}

json to_json(const TuneResult& result) {
  json scores = json::array();
  for (const auto& s : result.scores) {
    json c{{"value", s.value}, {"failed", s.failed}};
    if (s.failed) {
      c["failure"] = s.failure;
    } else {
      c["mean"] = s.mean;
      c["sd"] = s.sd;
    }
    scores.push_back(std::move(c));
  }
  return json{{"best", result.best}, {"scores", std::move(scores)}};
}

}  // namespace rscatter
