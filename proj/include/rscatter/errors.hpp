#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rscatter {

/// Base for failures of a numerical procedure on valid input (exit code 3 in the CLI).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Iteration budget exhausted. Carries the last iterate for diagnostics.
class NonConvergence : public NumericalError {
 public:
  NonConvergence(const std::string& what, int iterations, double gap, double residual,
                 Eigen::MatrixXd last)
      : NumericalError(what),
        iterations_(iterations),
        gap_(gap),
        residual_(residual),
        last_(std::move(last)) {}

  int iterations() const { return iterations_; }
  double gap() const { return gap_; }
  double residual() const { return residual_; }
  const Eigen::MatrixXd& last_iterate() const { return last_; }

 private:
  int iterations_;
  double gap_;
  double residual_;
  Eigen::MatrixXd last_;
};

/// The plain M-estimating equation appears to have no solution for this data
/// (iterates explode or collapse).
class Nonexistence : public NonConvergence {
 public:
  using NonConvergence::NonConvergence;
};

/// An observation with zero norm was passed to a weight with u(0) = infinity.
class ZeroNormObservation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace rscatter
