#include <doctest.h>

#include <cmath>

#include "rscatter/errors.hpp"
#include "rscatter/weights.hpp"

using namespace rscatter;

namespace {

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> s(points);
  for (int i = 0; i < points; ++i) {
    s[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
  }
  return s;
}

std::vector<WeightSpec> catalog() {
  return {WeightSpec::tyler(0.5), WeightSpec::tyler(2.0), WeightSpec::bounded_huber(0.9, 2.0),
          WeightSpec::bounded_huber(4.0, 0.3), WeightSpec::gaussian(),
          WeightSpec::scaled(WeightSpec::bounded_huber(0.9, 2.0), 10.0),
          WeightSpec::scaled(WeightSpec::tyler(0.5), 0.1)};
}

bool has_error(const std::vector<WeightViolation>& v) {
  for (const auto& x : v) {
    if (x.severity == WeightViolation::Severity::kError) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("u, psi and rho examples") {
  const auto t = WeightSpec::tyler(0.5);
  CHECK(t.u(2.0) == doctest::Approx(0.25));
  CHECK(t.psi(7.0) == 0.5);
  CHECK(t.rho(1.0) == 0.0);
  CHECK_THROWS_AS(t.u(0.0), ZeroNormObservation);

  const auto h = WeightSpec::bounded_huber(0.9, 2.0);
  CHECK(h.u(1.0) == doctest::Approx(0.45));
  CHECK(h.u(4.0) == doctest::Approx(0.225));
  CHECK(h.psi(1.0) == doctest::Approx(0.45));
  CHECK(h.psi(100.0) == doctest::Approx(0.9));
  CHECK(h.u(0.0) == doctest::Approx(0.45));

  const auto g = WeightSpec::gaussian();
  CHECK(g.u(0.0) == 1.0);
  CHECK(g.u(123.0) == 1.0);
  CHECK(g.psi(3.0) == 3.0);
  CHECK(g.rho(2.0) == 2.0);
}

TEST_CASE("bounded_huber rho is continuous at the threshold") {
  const auto h = WeightSpec::bounded_huber(0.9, 2.0);
  const double below = 2.0 * 0.9 / 2.0;
  const double above = 0.9 * (1.0 + std::log(2.0 / 2.0));
  CHECK(std::abs(below - above) <= 1e-12);
  CHECK(std::abs(h.rho(2.0) - below) <= 1e-12);
  CHECK(std::abs(h.rho(std::nextafter(2.0, 3.0)) - h.rho(std::nextafter(2.0, 1.0))) <= 1e-12);
}

TEST_CASE("psi equals s u(s) across the catalog") {
  for (const auto& w : catalog()) {
    for (double s : log_grid(1e-8, 1e12, 200)) {
      const double psi = w.psi(s);
      CHECK(std::abs(psi - s * w.u(s)) <= 1e-12 * (1.0 + psi));
    }
  }
}

TEST_CASE("rho derivative matches u") {
  for (const auto& w : catalog()) {
    for (double s : log_grid(0.1, 1e4, 60)) {
      const double h = 1e-6 * s;
      const double fd = (w.rho(s + h) - w.rho(s - h)) / (2.0 * h);
      INFO(w.to_string(), " s=", s);
      CHECK(std::abs(fd - w.u(s)) <= 1e-5);
    }
  }
}

TEST_CASE("scaled weight composes exactly") {
  const auto base = WeightSpec::bounded_huber(0.9, 2.0);
  const auto sc = WeightSpec::scaled(base, 10.0);
  for (double s : log_grid(1e-6, 1e6, 50)) CHECK(sc.u(s) == base.u(10.0 * s));
  CHECK(sc.kappa() == doctest::Approx(0.09));
}

TEST_CASE("validate") {
  CHECK(validate(WeightSpec::tyler(0.5)).empty());
  CHECK(validate(WeightSpec::bounded_huber(0.9, 2.0)).empty());

  const auto g = validate(WeightSpec::gaussian());
  REQUIRE(g.size() == 1);
  CHECK(g[0].severity == WeightViolation::Severity::kWarning);
  CHECK(g[0].message.find("psi unbounded") != std::string::npos);
  CHECK_FALSE(is_admissible(WeightSpec::gaussian()));

  const auto broken = WeightSpec::custom("increasing", [](double s) { return s; }, 1.0);
  CHECK(has_error(validate(broken)));
  CHECK_FALSE(is_admissible(broken));

  // Declared kappa disagreeing with psi(infinity).
  const auto wrong_kappa =
      WeightSpec::custom("huber-like", [](double s) { return 0.9 / std::max(s, 2.0); }, 0.5);
  CHECK(has_error(validate(wrong_kappa)));
}

TEST_CASE("parse_weight round trip") {
  CHECK(parse_weight("tyler:0.5").family() == WeightFamily::kTyler);
  const auto h = parse_weight("huber:0.9:2.0");
  CHECK(h.kappa() == 0.9);
  CHECK(h.threshold() == 2.0);
  CHECK(parse_weight("gaussian").is_constant());
  const auto sc = parse_weight("scaled:huber:0.9:2.0:eta=10");
  CHECK(sc.family() == WeightFamily::kScaled);
  CHECK(sc.eta() == 10.0);
  for (const auto& w : catalog()) CHECK(parse_weight(w.to_string()).to_string() == w.to_string());

  CHECK_THROWS_AS(parse_weight("tyler"), std::invalid_argument);
  CHECK_THROWS_AS(parse_weight("huber:0.9"), std::invalid_argument);
  CHECK_THROWS_AS(parse_weight("tyler:-1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_weight("cauchy:1"), std::invalid_argument);
}
