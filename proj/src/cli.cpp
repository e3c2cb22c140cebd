#include "rscatter/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "rscatter/breakdown.hpp"
#include "rscatter/datagen.hpp"
#include "rscatter/errors.hpp"
#include "rscatter/io.hpp"
#include "rscatter/json_io.hpp"
#include "rscatter/parallel.hpp"
#include "rscatter/tuning.hpp"

namespace rscatter::cli {

namespace {

using nlohmann::json;

/// Thrown for bad flags or inputs detected after CLI11 parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EstimatorFlags {
  std::string estimator;
  std::string weight;
  std::optional<double> eta;
  std::optional<double> gamma;
  std::string center = "spatial";
  double tol = 1e-10;
  int max_iter = 500;
  std::string zero_norm = "drop";

  void add_to(CLI::App& app, bool with_tuning) {
    app.add_option("--estimator", estimator,
                   "sscm | gen-sscm | m | pen-trace | pen-kl | hybrid-trace | hybrid-kl")
        ->required();
    app.add_option("--weight", weight, "tyler:K | huber:K:C | gaussian | scaled:<base>:eta=E");
    if (with_tuning) {
      app.add_option("--eta", eta, "trace-penalty tuning constant");
      app.add_option("--gamma", gamma, "KL-penalty tuning constant");
    }
    app.add_option("--center", center, "fixed[:c1,...] | marginal | spatial")
        ->capture_default_str();
    app.add_option("--tol", tol, "relative Frobenius gap")->capture_default_str();
    app.add_option("--max-iter", max_iter)->capture_default_str();
    app.add_option("--zero-norm", zero_norm, "drop | error")->capture_default_str();
  }

  EstimatorConfig resolve(bool need_tuning) const {
    EstimatorConfig cfg;
    try {
      cfg.kind = parse_estimator_kind(estimator);
      if (!weight.empty()) cfg.weight = parse_weight(weight);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (cfg.kind == EstimatorKind::kSscm) {
      if (cfg.weight) throw UsageError("sscm takes no --weight");
    } else if (!cfg.weight) {
      throw UsageError(std::string(to_string(cfg.kind)) + " needs --weight");
    }
    if (uses_eta(cfg.kind)) {
      if (gamma) throw UsageError("--gamma does not apply to " + std::string(to_string(cfg.kind)));
      if (need_tuning && !eta) throw UsageError(std::string(to_string(cfg.kind)) + " needs --eta");
      cfg.tuning = eta.value_or(0.0);
      if (need_tuning && !(cfg.tuning > 0.0)) throw UsageError("eta must be > 0");
    } else if (uses_gamma(cfg.kind)) {
      if (eta) throw UsageError("--eta does not apply to " + std::string(to_string(cfg.kind)));
      if (need_tuning && !gamma) {
        throw UsageError(std::string(to_string(cfg.kind)) + " needs --gamma");
      }
      cfg.tuning = gamma.value_or(0.5);
    } else if (eta || gamma) {
      throw UsageError(std::string(to_string(cfg.kind)) + " takes no tuning constant");
    }
    cfg.solver.tol = tol;
    cfg.solver.max_iter = max_iter;
    if (zero_norm == "drop") {
      cfg.solver.zero_norm = ZeroNormPolicy::kDrop;
    } else if (zero_norm == "error") {
      cfg.solver.zero_norm = ZeroNormPolicy::kError;
    } else {
      throw UsageError("--zero-norm must be drop or error");
    }
    if (need_tuning) {
      try {
        cfg.check();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    return cfg;
  }

  CenterSpec resolve_center() const {
    try {
      return parse_center(center);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }

  json describe(const EstimatorConfig& cfg, const CenterSpec& c) const {
    json j{{"estimator", std::string(to_string(cfg.kind))},
           {"weight", cfg.weight ? json(cfg.weight->to_string()) : json(nullptr)},
           {"center", c.to_string()},
           {"tol", cfg.solver.tol},
           {"max_iter", cfg.solver.max_iter},
           {"zero_norm", zero_norm}};
    if (uses_eta(cfg.kind)) j["eta"] = cfg.tuning;
    if (uses_gamma(cfg.kind)) j["gamma"] = cfg.tuning;
    return j;
  }
};

Dataset load(const std::string& path) {
  if (path.empty()) throw UsageError("--input is required");
  if (!std::filesystem::exists(path)) throw UsageError("input file '" + path + "' not found");
  try {
    return Dataset(read_csv(path));
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
}

void emit(const json& j, const std::string& output, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (output.empty() || output == "-") {
    out << text;
    return;
  }
  std::ofstream f(output);
  if (!f) throw UsageError("cannot open output file '" + output + "'");
  f << text;
}

SymMatrix parse_shape(const std::string& text) {
  try {
    if (text.starts_with("diag:")) {
      const std::vector<double> d = parse_double_list(text.substr(5));
      return SymMatrix::diagonal(Eigen::Map<const Vector>(d.data(), static_cast<Index>(d.size())));
    }
    if (text.starts_with("identity:")) {
      const double q = parse_double(text.substr(9));
      if (q < 1.0 || q != std::floor(q)) throw std::invalid_argument("bad identity dimension");
      return SymMatrix::identity(static_cast<Index>(q));
    }
    if (text.starts_with("file:")) {
      const std::string path = text.substr(5);
      if (!std::filesystem::exists(path)) throw UsageError("shape file '" + path + "' not found");
      return SymMatrix(read_csv(path));
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError("invalid --shape '" + text + "': " + e.what());
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  throw UsageError("invalid --shape '" + text + "' (expected diag:a,b,... | identity:q | file:path)");
}

std::vector<double> parse_ladder(const std::string& text) {
  std::vector<double> out;
  try {
    const std::size_t dots = text.find("..");
    if (dots == std::string::npos) {
      out = parse_double_list(text);
    } else {
      const double lo = parse_double(text.substr(0, dots));
      const double hi = parse_double(text.substr(dots + 2));
      if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("need 0 < lo <= hi");
      for (double v = lo; v <= hi * (1.0 + 1e-9); v *= 100.0) out.push_back(v);
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError("invalid --ladder '" + text + "': " + e.what());
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!(out[k] > 0.0) || (k > 0 && !(out[k] > out[k - 1]))) {
      throw UsageError("--ladder magnitudes must be positive and increasing");
    }
  }
  return out;
}

std::vector<Index> parse_m_grid(const std::string& text) {
  std::vector<Index> out;
  try {
    for (double v : parse_double_list(text)) {
      if (v < 1.0 || v != std::floor(v)) throw std::invalid_argument("entries must be integers >= 1");
      out.push_back(static_cast<Index>(v));
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError("invalid --m-grid '" + text + "': " + e.what());
  }
  return out;
}

json failure_json(const std::exception& e, const json& config) {
  json j{{"status", "error"}, {"message", e.what()}, {"config", config}};
  if (const auto* nc = dynamic_cast<const NonConvergence*>(&e)) {
    j["error_kind"] = dynamic_cast<const Nonexistence*>(&e) ? "nonexistence" : "non_convergence";
    j["iterations"] = nc->iterations();
    j["final_gap"] = std::isfinite(nc->gap()) ? json(nc->gap()) : json(nullptr);
    j["residual"] = std::isfinite(nc->residual()) ? json(nc->residual()) : json(nullptr);
    const Matrix& last = nc->last_iterate();
    json rows = json::array();
    for (Index i = 0; i < last.rows(); ++i) {
      json row = json::array();
      for (Index k = 0; k < last.cols(); ++k) {
        row.push_back(std::isfinite(last(i, k)) ? json(last(i, k)) : json(nullptr));
      }
      rows.push_back(std::move(row));
    }
    j["last_iterate"] = std::move(rows);
  } else if (dynamic_cast<const ZeroNormObservation*>(&e)) {
    j["error_kind"] = "zero_norm_observation";
  } else {
    j["error_kind"] = "numerical";
  }
  return j;
}

struct Runner {
  std::ostream& out;
  std::ostream& err;
  json config;
  std::string output;

  template <class F>
  int guarded(F&& body) {
    try {
      body();
      return kOk;
    } catch (const UsageError& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    } catch (const NumericalError& e) {
      err << "numerical failure: " << e.what() << "\n";
      emit_failure(e);
      return kNumerical;
    } catch (const ZeroNormObservation& e) {
      err << "numerical failure: " << e.what() << "\n";
      emit_failure(e);
      return kNumerical;
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    }
  }

  void emit_failure(const std::exception& e) {
    try {
      emit(failure_json(e, config), output, out);
    } catch (const std::exception& inner) {
      err << "could not write diagnostics: " << inner.what() << "\n";
    }
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalized and hybrid M-estimators of scatter"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  // generate
  std::string dist = "gaussian";
  std::string shape = "identity:2";
  Index gen_n = 100;
  std::uint64_t seed = 0;
  std::string gen_output;
  auto* gen = app.add_subcommand("generate", "write a synthetic elliptical sample as CSV");
  gen->add_option("--dist", dist, "gaussian | t:<dof>")->capture_default_str();
  gen->add_option("--shape", shape, "diag:a,b,... | identity:q | file:shape.csv")
      ->capture_default_str();
  gen->add_option("--n", gen_n)->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--output", gen_output, "CSV path")->required();

  // estimate
  EstimatorFlags est_flags;
  std::string est_input, est_output;
  auto* est_cmd = app.add_subcommand("estimate", "estimate a scatter matrix");
  est_cmd->add_option("--input", est_input, "CSV of observations")->required();
  est_cmd->add_option("--output", est_output, "JSON path (default stdout)");
  est_flags.add_to(*est_cmd, true);

  // stress
  EstimatorFlags st_flags;
  std::string st_input, st_output, pattern = "point-mass:dir=e1", m_grid = "1";
  std::string ladder = "1e2..1e12";
  std::uint64_t st_seed = 0;
  auto* st_cmd = app.add_subcommand("stress", "contamination sweep and breakdown bracket");
  st_cmd->add_option("--input", st_input, "CSV of clean observations")->required();
  st_cmd->add_option("--output", st_output, "JSON path (default stdout)");
  st_flags.add_to(*st_cmd, true);
  st_cmd->add_option("--pattern", pattern,
                     "point-mass[:dir=e1] | cluster[:dir=e1,spread=1] | near-singular[:k=1]")
      ->capture_default_str();
  st_cmd->add_option("--m-grid", m_grid, "comma-separated counts of added points")
      ->capture_default_str();
  st_cmd->add_option("--ladder", ladder, "lo..hi (x100 steps) or comma list")
      ->capture_default_str();
  st_cmd->add_option("--seed", st_seed)->capture_default_str();

  // tune
  EstimatorFlags tu_flags;
  std::string tu_input, tu_output, grid;
  int folds = 5;
  std::uint64_t tu_seed = 0;
  auto* tu_cmd = app.add_subcommand("tune", "cross-validate eta or gamma");
  tu_cmd->add_option("--input", tu_input, "CSV of observations")->required();
  tu_cmd->add_option("--output", tu_output, "JSON path (default stdout)");
  tu_flags.add_to(*tu_cmd, false);
  tu_cmd->add_option("--grid", grid, "comma-separated candidates")->required();
  tu_cmd->add_option("--folds", folds)->capture_default_str();
  tu_cmd->add_option("--seed", tu_seed)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  if (gen->parsed()) {
    Runner r{out, err, json::object(), ""};
    return r.guarded([&] {
      GeneratorSpec spec;
      if (dist == "gaussian") {
        spec.distribution = GeneratorSpec::Distribution::kGaussian;
      } else if (dist.starts_with("t:")) {
        spec.distribution = GeneratorSpec::Distribution::kStudentT;
        try {
          spec.dof = parse_double(dist.substr(2));
        } catch (const std::invalid_argument& e) {
          throw UsageError("invalid --dist '" + dist + "'");
        }
        if (!(spec.dof > 0.0)) throw UsageError("t degrees of freedom must be > 0");
      } else {
        throw UsageError("invalid --dist '" + dist + "' (expected gaussian | t:<dof>)");
      }
      if (gen_n < 0) throw UsageError("--n must be >= 0");
      spec.shape = parse_shape(shape);
      if (!SpdMatrix::try_from(spec.shape)) throw UsageError("--shape must be positive definite");
      spec.n = gen_n;
      spec.seed = seed;
      const Dataset data = sample(spec);
      try {
        write_csv(gen_output, data.rows());
      } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
      }
      emit(json{{"status", "ok"},
                {"command", "generate"},
                {"config",
                 {{"dist", dist}, {"shape", shape}, {"n", gen_n}, {"seed", seed}}},
                {"n", data.n()},
                {"q", data.q()},
                {"output", gen_output}},
           "", out);
    });
  }

  if (est_cmd->parsed()) {
    Runner r{out, err, json::object(), est_output};
    return r.guarded([&] {
      const EstimatorConfig cfg = est_flags.resolve(true);
      const CenterSpec center = est_flags.resolve_center();
      r.config = est_flags.describe(cfg, center);
      r.config["input"] = est_input;
      const Dataset data = load(est_input);
      json j = to_json(estimate(data, cfg, center));
      j["status"] = "ok";
      j["config"] = r.config;
      emit(j, est_output, out);
    });
  }

  if (st_cmd->parsed()) {
    Runner r{out, err, json::object(), st_output};
    return r.guarded([&] {
      const EstimatorConfig cfg = st_flags.resolve(true);
      const CenterSpec center = st_flags.resolve_center();
      ContaminationSpec spec;
      try {
        spec.pattern = parse_pattern(pattern);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      spec.ladder = parse_ladder(ladder);
      spec.seed = st_seed;
      const std::vector<Index> grid_m = parse_m_grid(m_grid);
      r.config = st_flags.describe(cfg, center);
      r.config["input"] = st_input;
      r.config["pattern"] = to_string(spec.pattern);
      r.config["m_grid"] = grid_m;
      r.config["ladder"] = spec.ladder;
      r.config["seed"] = st_seed;
      r.config["threads"] = harness_threads();
      const Dataset data = load(st_input);
      for (Index m : grid_m) {
        if (m > data.n()) throw UsageError("--m-grid entries must not exceed n");
      }
      if (data_rank(data) < data.q()) throw UsageError("clean data must span R^q");
      const ScatterEstimate clean = estimate(data, cfg, center);
      json j = to_json(breakdown_estimate(data, cfg, center, spec, grid_m));
      j["status"] = "ok";
      j["clean"] = to_json(clean);
      j["config"] = r.config;
      emit(j, st_output, out);
    });
  }

  if (tu_cmd->parsed()) {
    Runner r{out, err, json::object(), tu_output};
    return r.guarded([&] {
      EstimatorConfig cfg = tu_flags.resolve(false);
      const CenterSpec center = tu_flags.resolve_center();
      if (!uses_eta(cfg.kind) && !uses_gamma(cfg.kind)) {
        throw UsageError("tune needs a penalized or hybrid estimator");
      }
      TuneSpec spec;
      try {
        spec.grid = parse_double_list(grid);
      } catch (const std::invalid_argument& e) {
        throw UsageError("invalid --grid '" + grid + "': " + e.what());
      }
      spec.folds = folds;
      spec.seed = tu_seed;
      r.config = tu_flags.describe(cfg, center);
      r.config.erase("eta");
      r.config.erase("gamma");
      r.config["input"] = tu_input;
      r.config["grid"] = spec.grid;
      r.config["folds"] = folds;
      r.config["seed"] = tu_seed;
      const Dataset data = load(tu_input);
      TuneResult result;
      try {
        result = cross_validate(data, cfg, center, spec);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      json j = to_json(result);
      j["status"] = "ok";
      j["parameter"] = uses_eta(cfg.kind) ? "eta" : "gamma";
      j["config"] = r.config;
      emit(j, tu_output, out);
    });
  }
  return kUsage;
}

}  // namespace rscatter::cli
