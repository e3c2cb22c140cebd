#pragma once

#include <json.hpp>

#include "rscatter/breakdown.hpp"
#include "rscatter/estimators.hpp"
#include "rscatter/tuning.hpp"

namespace rscatter {

/// Row-major entries as a flat array.
nlohmann::json matrix_to_json(const SymMatrix& m);
/// Reads the "q" and "matrix" members of an object such as an emitted
/// estimate. Throws std::invalid_argument on a malformed object.
SymMatrix matrix_from_json(const nlohmann::json& obj);

nlohmann::json to_json(const GuaranteeFlags& flags);
/// {estimator, q, n, matrix, eigenvalues, iterations, final_gap, residual,
///  guarantee_flags, center_used, ...}
nlohmann::json to_json(const ScatterEstimate& est);
nlohmann::json to_json(const ContaminationReport& report);
nlohmann::json to_json(const BreakdownBracket& bracket);
nlohmann::json to_json(const TuneResult& result);

}  // namespace rscatter
