#include "rscatter/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rscatter/errors.hpp"

namespace rscatter {

namespace {

constexpr double kSpdRelTol = 1e-12;

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw std::invalid_argument("SymMatrix: expected a non-empty square matrix");
  }
  const double asym = (m - m.transpose()).norm();
  if (!(asym <= 1e-8 * (1.0 + m.norm()))) {
    throw std::invalid_argument("SymMatrix: input is not symmetric");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::scaled_identity(Index q, double c) {
  return SymMatrix(c * Matrix::Identity(q, q));
}

SymMatrix SymMatrix::diagonal(const Vector& d) {
  return SymMatrix(Matrix(d.asDiagonal()));
}

EigenDecomposition eigendecompose(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecompose: symmetric eigensolver failed");
  }
  // Eigen returns ascending order.
  EigenDecomposition out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

bool is_strictly_positive(const EigenDecomposition& eig) {
  const double top = eig.values(0);
  const double bottom = eig.values(eig.values.size() - 1);
  return std::isfinite(top) && bottom > kSpdRelTol * std::max(top, 1.0);
}

SpdMatrix::SpdMatrix(SymMatrix m) : m_(std::move(m)), eig_(eigendecompose(m_)) {
  if (!is_strictly_positive(eig_)) {
    throw NotPositiveDefinite("SpdMatrix: smallest eigenvalue is not strictly positive");
  }
}

std::optional<SpdMatrix> SpdMatrix::try_from(const SymMatrix& m) {
  EigenDecomposition eig = eigendecompose(m);
  if (!is_strictly_positive(eig)) return std::nullopt;
  return SpdMatrix(m, std::move(eig));
}

Matrix SpdMatrix::inverse() const {
  return eig_.apply([](double v) { return 1.0 / v; });
}

Matrix SpdMatrix::inverse_sqrt() const {
  return eig_.apply([](double v) { return 1.0 / std::sqrt(v); });
}

Matrix SpdMatrix::sqrt() const {
  return eig_.apply([](double v) { return std::sqrt(v); });
}

Matrix SpdMatrix::log() const {
  return eig_.apply([](double v) { return std::log(v); });
}

double SpdMatrix::log_det() const {
  return eig_.values.array().log().sum();
}

bool loewner_geq(const SymMatrix& a, const SymMatrix& b, double tol) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("loewner_geq: dimension mismatch");
  }
  const EigenDecomposition eig = eigendecompose(SymMatrix(a.matrix() - b.matrix()));
  return eig.values(eig.values.size() - 1) >= -tol;
}

double riemannian_bias(const SpdMatrix& v1, const SpdMatrix& v2) {
  if (v1.dim() != v2.dim()) {
    throw std::invalid_argument("riemannian_bias: dimension mismatch");
  }
  const Matrix w = v1.inverse_sqrt();
  const EigenDecomposition eig = eigendecompose(SymMatrix(w * v2.matrix() * w));
  if (!(eig.values.minCoeff() > 0.0)) return std::numeric_limits<double>::infinity();
  return eig.values.array().log().matrix().norm();
}

double riemannian_bias(const SymMatrix& v1, const SymMatrix& v2) {
  if (v1.dim() != v2.dim()) {
    throw std::invalid_argument("riemannian_bias: dimension mismatch");
  }
  const auto a = SpdMatrix::try_from(v1);
  const auto b = SpdMatrix::try_from(v2);
  if (!a || !b) return std::numeric_limits<double>::infinity();
  return riemannian_bias(*a, *b);
}

}  // namespace rscatter
