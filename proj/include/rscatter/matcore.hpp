#pragma once

#include <optional>

#include <Eigen/Dense>

namespace rscatter {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Dense symmetric q x q matrix. Storage is kept exactly symmetric.
class SymMatrix {
 public:
  /// Takes the symmetric part of `m`. Throws std::invalid_argument if `m` is
  /// not square, empty, or visibly asymmetric (relative 1e-8).
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Index q) { return scaled_identity(q, 1.0); }
  static SymMatrix scaled_identity(Index q, double c);
  static SymMatrix diagonal(const Vector& d);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }
  double frobenius() const { return m_.norm(); }
  double trace() const { return m_.trace(); }

 private:
  Matrix m_;
};

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;

  /// Q f(Lambda) Q^T
  template <class F>
  Matrix apply(F&& f) const {
    Vector fv = values.unaryExpr(std::forward<F>(f));
    return vectors * fv.asDiagonal() * vectors.transpose();
  }
};

EigenDecomposition eigendecompose(const SymMatrix& m);

/// Symmetric positive definite matrix with its spectrum cached.
class SpdMatrix {
 public:
  /// Throws NotPositiveDefinite unless lambda_min > 1e-12 * max(lambda_max, 1).
  explicit SpdMatrix(SymMatrix m);

  static std::optional<SpdMatrix> try_from(const SymMatrix& m);

  const SymMatrix& sym() const { return m_; }
  const Matrix& matrix() const { return m_.matrix(); }
  Index dim() const { return m_.dim(); }
  const EigenDecomposition& eigen() const { return eig_; }
  double lambda_max() const { return eig_.values(0); }
  double lambda_min() const { return eig_.values(eig_.values.size() - 1); }

  Matrix inverse() const;
  Matrix inverse_sqrt() const;
  Matrix sqrt() const;
  Matrix log() const;
  double log_det() const;

 private:
  SpdMatrix(SymMatrix m, EigenDecomposition eig) : m_(std::move(m)), eig_(std::move(eig)) {}

  SymMatrix m_;
  EigenDecomposition eig_;
};

/// Scale-relative strictness threshold used for SPD construction.
bool is_strictly_positive(const EigenDecomposition& eig);

/// a >= b in the Loewner order: smallest eigenvalue of (a - b) >= -tol.
bool loewner_geq(const SymMatrix& a, const SymMatrix& b, double tol);

/// || log(V1^{-1/2} V2 V1^{-1/2}) ||_F. Returns +infinity when either argument
/// is not strictly positive definite.
double riemannian_bias(const SymMatrix& v1, const SymMatrix& v2);
double riemannian_bias(const SpdMatrix& v1, const SpdMatrix& v2);

}  // namespace rscatter
