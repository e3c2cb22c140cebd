#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace rscatter {

enum class WeightFamily { kTyler, kBoundedHuber, kGaussian, kScaled, kCustom };

/// A weight family (rho, u = rho', psi = s u(s), kappa = psi(inf)) defining an
/// M-estimator of scatter. Immutable value type.
///
///   tyler          u(s) = kappa / s
///   bounded_huber  u(s) = kappa / max(s, c)
///   gaussian       u(s) = 1
///   scaled         u(s) = base.u(eta * s)
class WeightSpec {
 public:
  static WeightSpec tyler(double kappa);
  static WeightSpec bounded_huber(double kappa, double threshold);
  static WeightSpec gaussian();
  static WeightSpec scaled(const WeightSpec& base, double eta);
  /// Arbitrary u for experiments and validation tests. `rho` may be empty, in
  /// which case rho() throws.
  static WeightSpec custom(std::string name, std::function<double(double)> u, double kappa,
                           std::function<double(double)> rho = {});

  WeightFamily family() const { return family_; }
  /// Declared psi(infinity); +infinity for families with unbounded psi.
  double kappa() const { return kappa_; }
  double threshold() const { return threshold_; }
  double eta() const { return eta_; }
  const WeightSpec* base() const { return base_.get(); }

  double u(double s) const;
  double psi(double s) const;
  double rho(double s) const;

  /// True when psi(s) is constant in s (u(s) = kappa/s up to scaling).
  bool is_tyler_type() const;
  /// True when u does not depend on s, so fixed-point maps are constant.
  bool is_constant() const;
  /// u(0) is finite, so zero-norm observations are harmless.
  bool finite_at_zero() const;
  bool bounded_psi() const;
  bool rho_bounded_below() const;

  /// Canonical CLI form, e.g. "huber:0.9:2". Custom weights render as "custom:<name>".
  std::string to_string() const;

 private:
  WeightSpec() = default;

  WeightFamily family_ = WeightFamily::kGaussian;
  double kappa_ = 0.0;
  double threshold_ = 0.0;
  double eta_ = 1.0;
  std::shared_ptr<const WeightSpec> base_;
  std::string name_;
  std::function<double(double)> custom_u_;
  std::function<double(double)> custom_rho_;
};

/// Parses "tyler:0.5", "huber:0.9:2.0", "gaussian", "scaled:huber:0.9:2.0:eta=10".
/// Throws std::invalid_argument on malformed input.
WeightSpec parse_weight(std::string_view text);

struct WeightViolation {
  enum class Severity { kError, kWarning };
  Severity severity;
  std::string message;
};

/// Samples u and psi on 200 log-spaced points in [1e-8, 1e12] and reports any
/// failure of positivity, monotonicity, or the declared kappa. An empty result
/// means the breakdown guarantees apply (given the kappa conditions).
std::vector<WeightViolation> validate(const WeightSpec& spec);

/// True when validate() reports no errors (warnings allowed).
bool is_admissible(const WeightSpec& spec);

}  // namespace rscatter
