#include "rscatter/weights.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rscatter/errors.hpp"
#include "rscatter/io.hpp"

namespace rscatter {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTylerMinS = 1e-300;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be a positive finite number");
  }
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

WeightSpec WeightSpec::tyler(double kappa) {
  require_positive(kappa, "tyler kappa");
  WeightSpec w;
  w.family_ = WeightFamily::kTyler;
  w.kappa_ = kappa;
  return w;
}

WeightSpec WeightSpec::bounded_huber(double kappa, double threshold) {
  require_positive(kappa, "huber kappa");
  require_positive(threshold, "huber threshold");
  WeightSpec w;
  w.family_ = WeightFamily::kBoundedHuber;
  w.kappa_ = kappa;
  w.threshold_ = threshold;
  return w;
}

WeightSpec WeightSpec::gaussian() {
  WeightSpec w;
  w.family_ = WeightFamily::kGaussian;
  w.kappa_ = kInf;
  return w;
}

WeightSpec WeightSpec::scaled(const WeightSpec& base, double eta) {
  require_positive(eta, "scaled eta");
  WeightSpec w;
  w.family_ = WeightFamily::kScaled;
  // psi_scaled(s) = psi_base(eta s) / eta
  w.kappa_ = base.kappa() / eta;
  w.eta_ = eta;
  w.base_ = std::make_shared<const WeightSpec>(base);
  return w;
}

WeightSpec WeightSpec::custom(std::string name, std::function<double(double)> u, double kappa,
                              std::function<double(double)> rho) {
  if (!u) throw std::invalid_argument("custom weight needs a u function");
  WeightSpec w;
  w.family_ = WeightFamily::kCustom;
  w.kappa_ = kappa;
  w.name_ = std::move(name);
  w.custom_u_ = std::move(u);
  w.custom_rho_ = std::move(rho);
  return w;
}

double WeightSpec::u(double s) const {
  switch (family_) {
    case WeightFamily::kTyler:
      if (s < kTylerMinS) {
        throw ZeroNormObservation("tyler weight evaluated at a zero-norm observation");
      }
      return kappa_ / s;
    case WeightFamily::kBoundedHuber:
      return kappa_ / std::max(s, threshold_);
    case WeightFamily::kGaussian:
      return 1.0;
    case WeightFamily::kScaled:
      return base_->u(eta_ * s);
    case WeightFamily::kCustom:
      return custom_u_(s);
  }
  return 0.0;
}

double WeightSpec::psi(double s) const {
  switch (family_) {
    case WeightFamily::kTyler:
      if (s < kTylerMinS) {
        throw ZeroNormObservation("tyler weight evaluated at a zero-norm observation");
      }
      return kappa_;
    case WeightFamily::kScaled:
      return base_->psi(eta_ * s) / eta_;
    default:
      return s * u(s);
  }
}

double WeightSpec::rho(double s) const {
  switch (family_) {
    case WeightFamily::kTyler:
      if (s < kTylerMinS) {
        throw ZeroNormObservation("tyler rho evaluated at a zero-norm observation");
      }
      return kappa_ * std::log(s);
    case WeightFamily::kBoundedHuber:
      if (s <= threshold_) return s * kappa_ / threshold_;
      return kappa_ * (1.0 + std::log(s / threshold_));
    case WeightFamily::kGaussian:
      return s;
    case WeightFamily::kScaled:
      return base_->rho(eta_ * s) / eta_;
    case WeightFamily::kCustom:
      if (!custom_rho_) throw std::logic_error("custom weight '" + name_ + "' has no rho");
      return custom_rho_(s);
  }
  return 0.0;
}

bool WeightSpec::is_tyler_type() const {
  if (family_ == WeightFamily::kScaled) return base_->is_tyler_type();
  return family_ == WeightFamily::kTyler;
}

bool WeightSpec::is_constant() const {
  if (family_ == WeightFamily::kScaled) return base_->is_constant();
  return family_ == WeightFamily::kGaussian;
}

bool WeightSpec::finite_at_zero() const {
  switch (family_) {
    case WeightFamily::kTyler:
      return false;
    case WeightFamily::kScaled:
      return base_->finite_at_zero();
    case WeightFamily::kCustom:
      return std::isfinite(custom_u_(0.0));
    default:
      return true;
  }
}

bool WeightSpec::bounded_psi() const { return std::isfinite(kappa_); }

bool WeightSpec::rho_bounded_below() const {
  switch (family_) {
    case WeightFamily::kTyler:
      return false;
    case WeightFamily::kScaled:
      return base_->rho_bounded_below();
    case WeightFamily::kCustom:
      return false;
    default:
      return true;
  }
}

std::string WeightSpec::to_string() const {
  switch (family_) {
    case WeightFamily::kTyler:
      return "tyler:" + format_double(kappa_);
    case WeightFamily::kBoundedHuber:
      return "huber:" + format_double(kappa_) + ":" + format_double(threshold_);
    case WeightFamily::kGaussian:
      return "gaussian";
    case WeightFamily::kScaled:
      return "scaled:" + base_->to_string() + ":eta=" + format_double(eta_);
    case WeightFamily::kCustom:
      return "custom:" + name_;
  }
  return {};
}

WeightSpec parse_weight(std::string_view text) {
  const auto parts = split(text, ':');
  const auto bad = [&](const std::string& why) {
    return std::invalid_argument("invalid weight spec '" + std::string(text) + "': " + why);
  };
  const auto number = [&](std::string_view tok) {
    try {
      return parse_double(tok);
    } catch (const std::invalid_argument&) {
      throw bad("'" + std::string(tok) + "' is not a number");
    }
  };

  const std::string_view head = parts.front();
  try {
    if (head == "gaussian") {
      if (parts.size() != 1) throw bad("gaussian takes no parameters");
      return WeightSpec::gaussian();
    }
    if (head == "tyler") {
      if (parts.size() != 2) throw bad("expected tyler:<kappa>");
      return WeightSpec::tyler(number(parts[1]));
    }
    if (head == "huber") {
      if (parts.size() != 3) throw bad("expected huber:<kappa>:<c>");
      return WeightSpec::bounded_huber(number(parts[1]), number(parts[2]));
    }
    if (head == "scaled") {
      const std::string_view last = parts.back();
      if (parts.size() < 3 || !last.starts_with("eta=")) {
        throw bad("expected scaled:<base>:eta=<value>");
      }
      const std::size_t base_begin = head.size() + 1;
      const std::size_t base_end = text.size() - last.size() - 1;
      const WeightSpec base = parse_weight(text.substr(base_begin, base_end - base_begin));
      return WeightSpec::scaled(base, number(last.substr(4)));
    }
  } catch (const std::invalid_argument& e) {
    if (std::string_view(e.what()).starts_with("invalid weight spec")) throw;
    throw bad(e.what());
  }
  throw bad("unknown family '" + std::string(head) + "'");
}

std::vector<WeightViolation> validate(const WeightSpec& spec) {
  using Severity = WeightViolation::Severity;
  constexpr int kGrid = 200;
  constexpr double kLo = -8.0;
  constexpr double kHi = 12.0;

  std::vector<WeightViolation> out;
  bool positive_ok = true;
  bool u_mono_ok = true;
  bool psi_mono_ok = true;
  double prev_u = 0.0;
  double prev_psi = 0.0;
  for (int k = 0; k < kGrid; ++k) {
    const double s = std::pow(10.0, kLo + (kHi - kLo) * k / (kGrid - 1));
    const double uv = spec.u(s);
    const double pv = spec.psi(s);
    if (!(uv > 0.0) && positive_ok) {
      out.push_back({Severity::kError, "u(s) is not positive at s=" + format_double(s)});
      positive_ok = false;
    }
    if (k > 0) {
      if (uv > prev_u + 1e-12 * std::max(1.0, std::abs(prev_u)) && u_mono_ok) {
        out.push_back({Severity::kError, "u is increasing near s=" + format_double(s)});
        u_mono_ok = false;
      }
      if (pv < prev_psi - 1e-12 * std::max(1.0, std::abs(prev_psi)) && psi_mono_ok) {
        out.push_back({Severity::kError, "psi is decreasing near s=" + format_double(s)});
        psi_mono_ok = false;
      }
    }
    prev_u = uv;
    prev_psi = pv;
  }

  if (spec.bounded_psi()) {
    const double at_top = spec.psi(1e12);
    if (std::abs(at_top - spec.kappa()) > 0.01 * spec.kappa()) {
      out.push_back({Severity::kError, "declared kappa " + format_double(spec.kappa()) +
                                           " does not match psi(1e12)=" +
                                           format_double(at_top)});
    }
  } else {
    out.push_back({Severity::kWarning, "psi unbounded: no breakdown guarantee"});
  }
  return out;
}

bool is_admissible(const WeightSpec& spec) {
  return validate(spec).empty();
}

}  // namespace rscatter
