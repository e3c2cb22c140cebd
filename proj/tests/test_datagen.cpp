#include <doctest.h>

#include <cmath>

#include "rscatter/datagen.hpp"
#include "rscatter/estimators.hpp"
#include "rscatter/location.hpp"
#include "support.hpp"

using namespace rscatter;

TEST_CASE("gaussian sample covariance approaches the shape") {
  const Dataset d = testing::gaussian_data(10000, 2, 17);
  const Matrix centered = d.rows().rowwise() - d.rows().colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(d.n() - 1);
  CHECK((cov - Matrix::Identity(2, 2)).norm() <= 0.1);
}

TEST_CASE("sample is deterministic and handles n = 0") {
  CHECK(testing::gaussian_data(0, 3, 1).n() == 0);
  CHECK(testing::gaussian_data(50, 3, 9).rows() == testing::gaussian_data(50, 3, 9).rows());
  CHECK(testing::gaussian_data(50, 3, 9).rows() != testing::gaussian_data(50, 3, 10).rows());
  // Row i depends only on (seed, i).
  CHECK(testing::gaussian_data(20, 3, 9).rows() == testing::gaussian_data(50, 3, 9).rows().topRows(20));
}

TEST_CASE("student t sample has heavier tails") {
  GeneratorSpec spec;
  spec.distribution = GeneratorSpec::Distribution::kStudentT;
  spec.dof = 1.0;
  spec.shape = SymMatrix::identity(3);
  spec.n = 400;
  spec.seed = 5;
  const Dataset t = sample(spec);
  const double t_max = t.rows().rowwise().norm().maxCoeff();
  const double g_max = testing::gaussian_data(400, 3, 5).rows().rowwise().norm().maxCoeff();
  CHECK(t_max > g_max);

  // Cauchy-like data still gives convergent hybrid estimates.
  const auto est = solve_hybrid_kl(center(t, CenterSpec::spatial()),
                                   WeightSpec::bounded_huber(0.9, 2.0), 0.5);
  CHECK(est.iterations <= 500);
  CHECK(est.residual <= 1e-8 * (1.0 + est.matrix.frobenius()));
}

TEST_CASE("pairwise differences") {
  Matrix x(2, 2);
  x << 1, 2, 5, 3;
  const Dataset p = pairwise_differences(Dataset(x));
  REQUIRE(p.n() == 1);
  CHECK(p.rows()(0, 0) == -4.0);
  CHECK(p.rows()(0, 1) == -1.0);
  REQUIRE(p.center_meta().has_value());
  CHECK(p.center_meta()->center.norm() == 0.0);

  const Dataset d = testing::gaussian_data(3, 2, 1);
  CHECK(pairwise_differences(d).n() == 3);
  Vector c(2);
  c << 0.5, -4.0;
  // Exact for values with few significant bits.
  Matrix ints(4, 2);
  ints << 1, 2, 3, 4, -5, 6, 7, -8;
  CHECK(pairwise_differences(transform(Dataset(ints), Translate{c})).rows() ==
        pairwise_differences(Dataset(ints)).rows());
  CHECK_THROWS_AS(pairwise_differences(Dataset(Matrix(1, 2))), std::invalid_argument);
}

TEST_CASE("transforms") {
  const Dataset d = testing::gaussian_data(10, 2, 3);
  CHECK(transform(d, Rotate{Matrix::Identity(2, 2)}).rows() == d.rows());
  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  Matrix e1(1, 2);
  e1 << 1, 0;
  const Dataset r = transform(Dataset(e1), Rotate{rot});
  CHECK(r.rows()(0, 0) == 0.0);
  CHECK(r.rows()(0, 1) == 1.0);
  const Dataset s = transform(d, Scale{2.0});
  for (Index i = 0; i < d.n(); ++i) {
    CHECK(s.rows().row(i).norm() == doctest::Approx(2.0 * d.rows().row(i).norm()));
  }
  Matrix bad(2, 2);
  bad << 1, 1, 0, 1;
  CHECK_THROWS_AS(transform(d, Rotate{bad}), std::invalid_argument);
}

TEST_CASE("random_orthogonal is orthogonal and SSCM conjugates") {
  const Matrix q = random_orthogonal(4, 77);
  CHECK((q * q.transpose() - Matrix::Identity(4, 4)).norm() <= 1e-12);
  const Dataset d = testing::gaussian_data(30, 4, 2);
  const Matrix a = sscm(d, CenterSpec::spatial()).matrix.matrix();
  const Matrix b = sscm(transform(d, Rotate{q}), CenterSpec::spatial()).matrix.matrix();
  CHECK((b - q * a * q.transpose()).norm() <= 1e-8);
}
