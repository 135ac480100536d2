#pragma once

// Experiment configuration: JSON document -> ExperimentConfig.
// The schema is documented in docs/config_schema.json.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgue/free_probability.hpp"
#include "tgue/model.hpp"

namespace tgue {

struct TermSpec {
  std::vector<int> legs;
  ComplexMatrix coefficient;
};

struct ModelSpec {
  std::vector<int> N;
  int m = 0;
  int d = 0;
  std::vector<TermSpec> terms;
};

struct PolynomialSpec {
  std::string name;
  NCPolynomial polynomial;
};

struct SolverSpec {
  double tol = 1e-12;
  double smoothing = 1e-3;
  double grid_step = 1e-2;
  double support_threshold = 1e-3;
  long max_iter = 2'000'000;
};

struct ExperimentConfig {
  ModelSpec model;
  int trials = 1;
  int pilot_trials = 20;
  std::uint64_t master_seed = 0;
  std::vector<double> t_grid;
  std::optional<double> C;  // nullopt: calibrate from pilot seeds
  std::vector<PolynomialSpec> polynomials;
  int norm_r = 12;
  SolverSpec solver;
  ParamOverrides overrides;
  bool record_timings = false;
  std::string out_dir = ".";
  std::string format = "both";
  std::string name = "result";
  nlohmann::json source;  // the document as parsed, after CLI overrides
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config: " + path + ": " + msg);
}

inline const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) config_fail(path, std::string("missing field '") + key + "'");
  return j.at(key);
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) config_fail(path, "expected a number");
  return j.get<double>();
}

inline int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) config_fail(path, "expected an integer");
  return j.get<int>();
}

inline Complex as_complex(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  config_fail(path, "expected a number or a [re, im] pair");
}

inline ComplexMatrix as_matrix(const json& j, int d, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) config_fail(path, "expected " + std::to_string(d) + " rows");
  ComplexMatrix out(d, d);
  for (int r = 0; r < d; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != d) {
      config_fail(path + "[" + std::to_string(r) + "]", "expected " + std::to_string(d) + " entries");
    }
    for (int c = 0; c < d; ++c) out(r, c) = as_complex(row[c], path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return out;
}

inline PolynomialSpec parse_polynomial(const json& j, const std::string& path) {
  PolynomialSpec spec;
  spec.name = j.value("name", std::string{});
  const auto& terms = require(j, "terms", path);
  if (!terms.is_array() || terms.empty()) config_fail(path + ".terms", "expected a nonempty array");
  NCPolynomial p;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string tp = path + ".terms[" + std::to_string(i) + "]";
    const Complex c = as_complex(require(terms[i], "coef", tp), tp + ".coef");
    const auto& w = require(terms[i], "word", tp);
    if (!w.is_array()) config_fail(tp + ".word", "expected an array of letters");
    Word word;
    for (const auto& l : w) {
      const int letter = as_int(l, tp + ".word");
      if (letter < 1) config_fail(tp + ".word", "letters are 1-based");
      word.push_back(letter);
    }
    p.add_term(c, word);
  }
  if (j.contains("power")) {
    const int e = as_int(j.at("power"), path + ".power");
    if (e < 0) config_fail(path + ".power", "must be nonnegative");
    p = p.pow(e);
  }
  spec.polynomial = std::move(p);
  return spec;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::config_fail;
  using detail::require;
  if (!j.is_object()) config_fail("$", "expected an object");
  ExperimentConfig cfg;
  cfg.source = j;

  const auto& model = require(j, "model", "$");
  const auto& ns = require(model, "N", "model");
  if (ns.is_array()) {
    for (const auto& n : ns) cfg.model.N.push_back(detail::as_int(n, "model.N"));
  } else {
    cfg.model.N.push_back(detail::as_int(ns, "model.N"));
  }
  if (cfg.model.N.empty()) config_fail("model.N", "sweep must be nonempty");
  for (int n : cfg.model.N) {
    if (n < 2) config_fail("model.N", "each N must be at least 2");
  }
  cfg.model.m = detail::as_int(require(model, "m", "model"), "model.m");
  cfg.model.d = detail::as_int(require(model, "d", "model"), "model.d");
  if (cfg.model.m < 1) config_fail("model.m", "must be positive");
  if (cfg.model.d < 1) config_fail("model.d", "must be positive");
  const auto& terms = require(model, "terms", "model");
  if (!terms.is_array() || terms.empty()) config_fail("model.terms", "expected a nonempty array");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string tp = "model.terms[" + std::to_string(i) + "]";
    TermSpec t;
    const auto& legs = require(terms[i], "J", tp);
    if (!legs.is_array()) config_fail(tp + ".J", "expected an array of legs");
    for (const auto& l : legs) t.legs.push_back(detail::as_int(l, tp + ".J"));
    t.coefficient = detail::as_matrix(require(terms[i], "B", tp), cfg.model.d, tp + ".B");
    cfg.model.terms.push_back(std::move(t));
  }

  cfg.trials = detail::as_int(require(j, "trials", "$"), "trials");
  if (cfg.trials < 1) config_fail("trials", "must be at least 1");
  if (j.contains("pilot_trials")) {
    cfg.pilot_trials = detail::as_int(j.at("pilot_trials"), "pilot_trials");
    if (cfg.pilot_trials < 1) config_fail("pilot_trials", "must be at least 1");
  }
  const auto& seed = require(j, "master_seed", "$");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
    config_fail("master_seed", "expected a nonnegative 64-bit integer");
  }
  cfg.master_seed = seed.get<std::uint64_t>();

  if (j.contains("t_grid")) {
    for (const auto& t : j.at("t_grid")) {
      const double v = detail::as_number(t, "t_grid");
      if (v < 0.0) config_fail("t_grid", "values must be nonnegative");
      cfg.t_grid.push_back(v);
    }
  }
  if (j.contains("C")) {
    const auto& c = j.at("C");
    if (c.is_string()) {
      if (c.get<std::string>() != "calibrate") config_fail("C", "expected a positive number or \"calibrate\"");
    } else {
      const double v = detail::as_number(c, "C");
      if (!(v > 0.0)) config_fail("C", "must be positive");
      cfg.C = v;
    }
  }
  if (j.contains("polynomials")) {
    const auto& ps = j.at("polynomials");
    if (!ps.is_array()) config_fail("polynomials", "expected an array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      auto spec = detail::parse_polynomial(ps[i], "polynomials[" + std::to_string(i) + "]");
      if (ps[i].value("name", std::string{}).empty()) spec.name = "P" + std::to_string(i + 1);
      cfg.polynomials.push_back(std::move(spec));
    }
  }
  if (j.contains("norm_r")) {
    cfg.norm_r = detail::as_int(j.at("norm_r"), "norm_r");
    if (cfg.norm_r < 2 || cfg.norm_r % 2 != 0) config_fail("norm_r", "must be a positive even integer");
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    if (s.contains("tol")) cfg.solver.tol = detail::as_number(s.at("tol"), "solver.tol");
    if (s.contains("smoothing")) cfg.solver.smoothing = detail::as_number(s.at("smoothing"), "solver.smoothing");
    if (s.contains("grid_step")) cfg.solver.grid_step = detail::as_number(s.at("grid_step"), "solver.grid_step");
    if (s.contains("support_threshold")) {
      cfg.solver.support_threshold = detail::as_number(s.at("support_threshold"), "solver.support_threshold");
    }
    if (s.contains("max_iter")) cfg.solver.max_iter = detail::as_int(s.at("max_iter"), "solver.max_iter");
    if (cfg.solver.tol < 1e-14) config_fail("solver.tol", "must be at least 1e-14");
    if (cfg.solver.smoothing < 1e-6 || cfg.solver.smoothing > 1e-1) config_fail("solver.smoothing", "must lie in [1e-6, 1e-1]");
    if (!(cfg.solver.grid_step > 0.0)) config_fail("solver.grid_step", "must be positive");
    if (!(cfg.solver.support_threshold > 0.0)) config_fail("solver.support_threshold", "must be positive");
    if (cfg.solver.max_iter < 1) config_fail("solver.max_iter", "must be positive");
  }
  if (j.contains("overrides")) {
    const auto& o = j.at("overrides");
    if (o.contains("gamma")) cfg.overrides.gamma = detail::as_number(o.at("gamma"), "overrides.gamma");
    if (o.contains("theta")) cfg.overrides.theta = detail::as_number(o.at("theta"), "overrides.theta");
  }
  cfg.record_timings = j.value("record_timings", false);
  if (j.contains("output")) {
    const auto& o = j.at("output");
    cfg.out_dir = o.value("dir", cfg.out_dir);
    cfg.format = o.value("format", cfg.format);
    cfg.name = o.value("name", cfg.name);
    if (cfg.format != "json" && cfg.format != "csv" && cfg.format != "both") {
      config_fail("output.format", "expected json, csv or both");
    }
  }
  return cfg;
}

inline nlohmann::json read_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + path + ": " + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(read_config_document(path)); }

/// The model at site dimension N. Model-level errors surface as ConfigError.
inline TensorGueModel model_at(const ModelSpec& spec, int N) {
  try {
    std::vector<ModelTerm> terms;
    for (const auto& t : spec.terms) {
      terms.push_back({LegSubset(spec.m, t.legs), HermitianMatrix(t.coefficient)});
    }
    return build_model(N, spec.m, spec.d, std::move(terms));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: model: ") + e.what());
  }
}

inline std::vector<HermitianMatrix> model_coefficients(const ModelSpec& spec) {
  std::vector<HermitianMatrix> out;
  for (const auto& t : spec.terms) {
    try {
      out.emplace_back(t.coefficient);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: model: ") + e.what());
    }
  }
  return out;
}

/// 64-bit FNV-1a over the compact dump of the configuration document.
inline std::uint64_t config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace tgue
