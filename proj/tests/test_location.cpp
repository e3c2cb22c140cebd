#include <doctest.h>

#include <cmath>
#include <limits>

#include "rscatter/datagen.hpp"
#include "rscatter/location.hpp"
#include "support.hpp"

using namespace rscatter;

namespace {

Dataset rows2(std::initializer_list<std::pair<double, double>> pts) {
  Matrix m(static_cast<Index>(pts.size()), 2);
  Index i = 0;
  for (auto [a, b] : pts) {
    m(i, 0) = a;
    m(i, 1) = b;
    ++i;
  }
  return Dataset(m);
}

double objective(const Matrix& x, const Vector& mu) {
  return (x.rowwise() - mu.transpose()).rowwise().norm().sum();
}

}  // namespace

TEST_CASE("spatial median of a symmetric cross is the origin") {
  const auto r = spatial_median(rows2({{-1, 0}, {1, 0}, {0, 1}, {0, -1}}));
  CHECK(r.point.norm() <= 1e-10);
}

TEST_CASE("spatial median of collinear points is the univariate median") {
  const auto r = spatial_median(rows2({{0, 0}, {1, 0}, {10, 0}}));
  CHECK(r.point(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.point(1)) <= 1e-12);
  CHECK(r.at_data_point);
}

TEST_CASE("spatial median agrees with brute-force grid search") {
  const Dataset d = rows2({{0, 0}, {4, 0}, {0, 3}});
  double best = std::numeric_limits<double>::infinity();
  Vector arg(2);
  Vector mu(2);
  for (int i = 0; i <= 6000; ++i) {
    for (int j = 0; j <= 5000; ++j) {
      mu << -1.0 + 1e-3 * i, -1.0 + 1e-3 * j;
      const double f = objective(d.rows(), mu);
      if (f < best) {
        best = f;
        arg = mu;
      }
    }
  }
  const auto r = spatial_median(d);
  CHECK(std::abs(r.point(0) - arg(0)) <= 2e-3);
  CHECK(std::abs(r.point(1) - arg(1)) <= 2e-3);
  CHECK(objective(d.rows(), r.point) <= best + 1e-8);
}

TEST_CASE("spatial median stationarity and monotone objective") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Dataset d = testing::gaussian_data(60, 3, seed);
    const auto r = spatial_median(d);
    if (!r.at_data_point) {
      Vector grad = Vector::Zero(3);
      for (Index i = 0; i < d.n(); ++i) {
        const Vector diff = d.row(i).transpose() - r.point;
        grad += diff / diff.norm();
      }
      CHECK(grad.norm() <= 1e-7 * static_cast<double>(d.n()));
    }
    for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
      CHECK(r.objective_trace[k] <= r.objective_trace[k - 1] * (1.0 + 1e-14));
    }
  }
}

TEST_CASE("spatial median of identical points is that point") {
  const auto r = spatial_median(rows2({{2, 3}, {2, 3}, {2, 3}}));
  CHECK(r.point(0) == 2.0);
  CHECK(r.point(1) == 3.0);
}

TEST_CASE("spatial median equivariance") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Dataset d = testing::gaussian_data(40, 4, seed);
    const Matrix q = random_orthogonal(4, seed + 1000);
    Vector a(4);
    a << 1.0, -2.0, 3.5, 0.25;
    const Dataset moved = transform(transform(d, Rotate{q}), Translate{a});
    const Vector lhs = spatial_median(moved).point;
    const Vector rhs = q * spatial_median(d).point + a;
    CHECK((lhs - rhs).norm() <= 1e-7);

    const Dataset c1 = center(d, CenterSpec::spatial());
    const Dataset c2 = center(transform(d, Translate{a}), CenterSpec::spatial());
    CHECK((c1.rows() - c2.rows()).norm() <= 1e-8);
  }
}

TEST_CASE("center with each method") {
  const Dataset d = rows2({{1, 10}, {3, 20}, {100, 30}});
  const Dataset fixed = center(d, CenterSpec::origin());
  CHECK(fixed.rows() == d.rows());
  REQUIRE(fixed.center_meta().has_value());
  CHECK(fixed.center_meta()->method == "fixed");

  const Dataset marg = center(d, CenterSpec::marginal());
  CHECK(marg.center_meta()->center(0) == 3.0);
  CHECK(marg.center_meta()->center(1) == 20.0);
  CHECK(marg.rows()(2, 0) == 97.0);

  const Dataset cross = rows2({{-1, 0}, {1, 0}, {0, 1}, {0, -1}});
  const Dataset sp = center(cross, CenterSpec::spatial());
  CHECK((sp.rows() - cross.rows()).norm() <= 1e-10);

  Vector c(3);
  c << 1, 2, 3;
  CHECK_THROWS_AS(center(d, CenterSpec::at(c)), std::invalid_argument);
}

TEST_CASE("parse_center") {
  CHECK(parse_center("spatial").kind == CenterSpec::Kind::kSpatialMedian);
  CHECK(parse_center("marginal").kind == CenterSpec::Kind::kMarginalMedian);
  const auto f = parse_center("fixed:0,0");
  CHECK(f.kind == CenterSpec::Kind::kFixed);
  CHECK(f.fixed.size() == 2);
  CHECK(parse_center("fixed").fixed.size() == 0);
  CHECK_THROWS_AS(parse_center("mean"), std::invalid_argument);
  CHECK_THROWS_AS(parse_center("fixed:a,b"), std::invalid_argument);
}
