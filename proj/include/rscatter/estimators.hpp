#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rscatter/dataset.hpp"
#include "rscatter/location.hpp"
#include "rscatter/matcore.hpp"
#include "rscatter/weights.hpp"

namespace rscatter {

enum class EstimatorKind {
  kSscm,         ///< spatial sign covariance matrix
  kGenSscm,      ///< (1/n) sum u(x'x) x x'
  kMPlain,       ///< V = (1/n) sum u(x' V^-1 x) x x'
  kPenTrace,     ///< S = (1/n) sum u(x' S^-1 x) x x' + eta I
  kPenKl,        ///< S = (1-gamma) (1/n) sum u(x' S^-1 x) x x' + gamma I
  kHybridTrace,  ///< V = (1/n) sum u(x' (V + eta I)^-1 x) x x'
  kHybridKl,     ///< V = (1/n) sum u(x' ((1-gamma) V + gamma I)^-1 x) x x'
};

/// CLI names: sscm, gen-sscm, m, pen-trace, pen-kl, hybrid-trace, hybrid-kl.
std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view text);

/// True for kinds whose tuning constant is eta (trace penalty).
bool uses_eta(EstimatorKind kind);
/// True for kinds whose tuning constant is gamma (Kullback-Leibler penalty).
bool uses_gamma(EstimatorKind kind);

enum class ZeroNormPolicy { kDrop, kError };

struct SolverOptions {
  /// Starting matrix; identity when empty.
  std::optional<SymMatrix> init;
  int max_iter = 500;
  /// Stop when ||V_{k+1} - V_k||_F / (1 + ||V_k||_F) <= tol.
  double tol = 1e-10;
  /// Observations at the center under weights with u(0) = infinity either
  /// contribute a zero term (kDrop, n is unchanged) or abort (kError).
  ZeroNormPolicy zero_norm = ZeroNormPolicy::kDrop;
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::kSscm;
  std::optional<WeightSpec> weight;
  /// eta for trace kinds, gamma for KL kinds, ignored otherwise.
  double tuning = 0.0;
  SolverOptions solver;

  /// Throws std::invalid_argument when the parameters are out of range.
  void check() const;
};

/// Which hypotheses of the eigenvalue-bound and breakdown results held for a run.
struct GuaranteeFlags {
  bool weight_admissible = false;
  bool rho_bounded_below = false;
  /// kappa < 1 (trace kinds) or (1 - gamma) kappa < 1 (KL kinds).
  bool kappa_condition = false;
  /// Sandwich bounds below apply to the penalized matrix.
  bool eigen_bounds_apply = false;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  /// Cannot break down when centered at a fixed location.
  bool breakdown_guarantee = false;
  bool fixed_center = false;
  std::vector<std::string> notes;
};

struct ScatterEstimate {
  EstimatorKind kind = EstimatorKind::kSscm;
  SymMatrix matrix = SymMatrix::identity(1);
  /// Descending.
  Vector eigenvalues;
  double tuning = 0.0;
  int iterations = 0;
  double final_gap = 0.0;
  /// Frobenius norm of (map(matrix) - matrix) for the estimating equation.
  double residual = 0.0;
  bool positive_definite = false;
  Index n = 0;
  Index dropped_rows = 0;
  GuaranteeFlags flags;
  std::optional<CenterRecord> center_used;
};

/// x / ||x||, and 0 for x = 0.
Vector spatial_sign(const Vector& x);

ScatterEstimate sscm(const Dataset& data, const CenterSpec& center);
ScatterEstimate gen_sscm(const Dataset& data, const WeightSpec& weight, const CenterSpec& center,
                         ZeroNormPolicy policy = ZeroNormPolicy::kDrop);

// The solvers below take data that is already centered.

ScatterEstimate solve_pen_trace(const Dataset& data, const WeightSpec& weight, double eta,
                                const SolverOptions& opts = {});
ScatterEstimate solve_pen_kl(const Dataset& data, const WeightSpec& weight, double gamma,
                             const SolverOptions& opts = {});
ScatterEstimate solve_hybrid_trace(const Dataset& data, const WeightSpec& weight, double eta,
                                   const SolverOptions& opts = {});
ScatterEstimate solve_hybrid_kl(const Dataset& data, const WeightSpec& weight, double gamma,
                                const SolverOptions& opts = {});
/// Throws std::invalid_argument if the data do not span R^q and Nonexistence
/// when the iterates explode or collapse.
ScatterEstimate solve_m_plain(const Dataset& data, const WeightSpec& weight,
                              const SolverOptions& opts = {});

/// Centers `data` per `center` and runs the configured estimator.
ScatterEstimate estimate(const Dataset& data, const EstimatorConfig& config,
                         const CenterSpec& center);
/// Runs the configured estimator on already-centered data.
ScatterEstimate estimate_centered(const Dataset& data, const EstimatorConfig& config);

/// The positive definite matrix the estimate is a shift of: V + eta I for
/// hybrid-trace, (1 - gamma) V + gamma I for hybrid-kl, the matrix itself otherwise.
SymMatrix penalized_counterpart(const ScatterEstimate& est);

GuaranteeFlags guarantee_flags(EstimatorKind kind, const std::optional<WeightSpec>& weight,
                               double tuning);

enum class Penalty { kNone, kTrace, kKl };

/// (1/n) sum rho(x' S^-1 x) + log det S + eta * Pi(S), with Pi = tr(S^-1) for
/// kTrace and tr(S^-1) + log det S for kKl. For kKl `tuning` is gamma in [0, 1)
/// and eta = gamma / (1 - gamma); for kTrace it is eta.
double evaluate_loss(const Dataset& data, const SpdMatrix& sigma, const WeightSpec& weight,
                     Penalty penalty, double tuning);

/// Rank of the data matrix at tolerance 1e-10 times the largest singular value.
Index data_rank(const Dataset& data);

}  // namespace rscatter
