#include <doctest.h>

#include <cmath>
#include <limits>

#include "rscatter/errors.hpp"
#include "rscatter/matcore.hpp"
#include "support.hpp"

using namespace rscatter;
using rscatter::testing::random_spd;
using rscatter::testing::random_symmetric;

TEST_CASE("SymMatrix rejects asymmetric and non-square input") {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  CHECK_THROWS_AS(SymMatrix{a}, std::invalid_argument);
  CHECK_THROWS_AS(SymMatrix{Matrix(2, 3)}, std::invalid_argument);
  CHECK_THROWS_AS(SymMatrix{Matrix(0, 0)}, std::invalid_argument);

  a << 1, 2, 2 + 1e-12, 4;
  const SymMatrix s(a);
  CHECK(s(0, 1) == s(1, 0));
}

TEST_CASE("eigendecompose on simple cases") {
  const auto id = eigendecompose(SymMatrix::identity(3));
  CHECK(id.values.isApprox(Vector::Ones(3)));

  Vector d(2);
  d << 1, 4;
  const auto e = eigendecompose(SymMatrix::diagonal(d));
  CHECK(e.values(0) == doctest::Approx(4.0));
  CHECK(e.values(1) == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(0, 1)) == doctest::Approx(1.0));
}

TEST_CASE("eigendecompose reconstructs random symmetric matrices") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const SymMatrix m = random_symmetric(5, seed);
    const auto e = eigendecompose(m);
    const Matrix rebuilt = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((rebuilt - m.matrix()).norm() <= 1e-10 * (1.0 + m.frobenius()));
    CHECK((e.vectors * e.vectors.transpose() - Matrix::Identity(5, 5)).norm() <= 1e-10);
    for (Index i = 1; i < 5; ++i) CHECK(e.values(i - 1) >= e.values(i));
  }
}

TEST_CASE("SpdMatrix construction and matrix functions") {
  CHECK_THROWS_AS(SpdMatrix(SymMatrix::diagonal(Vector::Unit(2, 0))), NotPositiveDefinite);
  CHECK_FALSE(SpdMatrix::try_from(SymMatrix::scaled_identity(2, -1.0)).has_value());

  const SpdMatrix v = random_spd(4, 7);
  const Matrix s = v.sqrt();
  CHECK((s * s - v.matrix()).norm() <= 1e-10 * v.sym().frobenius());
  CHECK((v.inverse() * v.matrix() - Matrix::Identity(4, 4)).norm() <= 1e-10);
  const Matrix is = v.inverse_sqrt();
  CHECK((is * v.matrix() * is - Matrix::Identity(4, 4)).norm() <= 1e-10);
  CHECK(v.log_det() == doctest::Approx(std::log(v.matrix().determinant())).epsilon(1e-10));
  CHECK(v.log().trace() == doctest::Approx(v.log_det()).epsilon(1e-10));
}

TEST_CASE("loewner_geq") {
  CHECK(loewner_geq(SymMatrix::scaled_identity(2, 2.0), SymMatrix::identity(2), 0.0));
  CHECK_FALSE(loewner_geq(SymMatrix::identity(2), SymMatrix::scaled_identity(2, 2.0), 0.0));
  Vector a(2), b(2);
  a << 3, 1;
  b << 1, 2;
  CHECK_FALSE(loewner_geq(SymMatrix::diagonal(a), SymMatrix::diagonal(b), 1e-12));
  CHECK_THROWS_AS(loewner_geq(SymMatrix::identity(2), SymMatrix::identity(3), 0.0),
                  std::invalid_argument);
}

TEST_CASE("loewner_geq in both directions pins the difference") {
  const double tol = 1e-6;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SymMatrix a = random_symmetric(3, seed);
    const SymMatrix b(a.matrix() + 1e-7 * random_symmetric(3, seed + 100).matrix());
    if (loewner_geq(a, b, tol) && loewner_geq(b, a, tol)) {
      CHECK((a.matrix() - b.matrix()).norm() <= 2.0 * tol * 3);
    }
  }
}

TEST_CASE("riemannian_bias") {
  const SpdMatrix v = random_spd(3, 3);
  CHECK(riemannian_bias(v, v) == doctest::Approx(0.0).epsilon(1e-12));

  const SpdMatrix id(SymMatrix::identity(2));
  const SpdMatrix e_id(SymMatrix::scaled_identity(2, std::exp(1.0)));
  CHECK(riemannian_bias(id, e_id) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SpdMatrix a = random_spd(4, seed);
    const SpdMatrix b = random_spd(4, seed + 50);
    CHECK(std::abs(riemannian_bias(a, b) - riemannian_bias(b, a)) <= 1e-9);

    const double c = 0.1 + static_cast<double>(seed);
    const SpdMatrix ca(SymMatrix(c * a.matrix()));
    CHECK(std::abs(riemannian_bias(a, ca) - 2.0 * std::abs(std::log(c))) <= 1e-9);

    const Matrix q = random_orthogonal(4, seed);
    const SpdMatrix qa(SymMatrix(q * a.matrix() * q.transpose()));
    const SpdMatrix qb(SymMatrix(q * b.matrix() * q.transpose()));
    CHECK(std::abs(riemannian_bias(qa, qb) - riemannian_bias(a, b)) <= 1e-9);
  }
}

TEST_CASE("riemannian_bias is infinite for singular input") {
  const SymMatrix singular = SymMatrix::diagonal(Vector::Unit(2, 0));
  CHECK(riemannian_bias(SymMatrix::identity(2), singular) == std::numeric_limits<double>::infinity());
  CHECK(riemannian_bias(singular, SymMatrix::identity(2)) == std::numeric_limits<double>::infinity());
}
