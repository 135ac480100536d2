#pragma once

// Seeded Monte Carlo runners for the spectrum-inclusion band, polynomial norm
// convergence and trace (weak) convergence, plus the free-limit density.
//
// Per-trial seed: derive_seed(master_seed, {N, trial, stream}) with stream 0
// for measured trials and stream 1 for calibration pilots. Term i inside a
// trial uses term_seed(trial_seed, i). Results are sorted by (N, trial) before
// serialization, so they do not depend on the worker count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgue/config.hpp"
#include "tgue/free_probability.hpp"
#include "tgue/model.hpp"
#include "tgue/parallel.hpp"
#include "tgue/spectral.hpp"

namespace tgue {

inline constexpr const char* kCodeVersion = "tgue 1.0.0";

enum class SeedStream : std::uint64_t { kMeasured = 0, kPilot = 1 };

inline std::uint64_t trial_seed(std::uint64_t master, int N, int trial, SeedStream stream = SeedStream::kMeasured) {
  return derive_seed(master, {static_cast<std::uint64_t>(N), static_cast<std::uint64_t>(trial),
                              static_cast<std::uint64_t>(stream)});
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Fixed 17-significant-digit formatting for CSV output.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Σ_w c_w X_{w_1} ⋯ X_{w_q} on concrete matrices (letters 1-based).
inline ComplexMatrix evaluate_polynomial(const NCPolynomial& p, const std::vector<ComplexMatrix>& letters) {
  if (letters.empty()) throw InvalidArgument("evaluate_polynomial: no letters");
  const auto n = letters[0].rows();
  if (p.max_letter() > static_cast<int>(letters.size())) {
    throw InvalidArgument("evaluate_polynomial: polynomial uses letter " + std::to_string(p.max_letter()) +
                          " but only " + std::to_string(letters.size()) + " are available");
  }
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (const auto& [w, c] : p.terms()) {
    if (c == Complex(0.0, 0.0)) continue;
    if (w.empty()) {
      out.diagonal().array() += c;
      continue;
    }
    ComplexMatrix prod = letters[w[0] - 1];
    for (std::size_t i = 1; i < w.size(); ++i) prod = prod * letters[w[i] - 1];
    out += c * prod;
  }
  return out;
}

/// tr̄ P(X_1, …) without forming P: tr(X_{w_1} ⋯ X_{w_q}) summed per word.
inline Complex normalized_trace_polynomial(const NCPolynomial& p, const std::vector<ComplexMatrix>& letters) {
  if (letters.empty()) throw InvalidArgument("normalized_trace_polynomial: no letters");
  const auto n = static_cast<double>(letters[0].rows());
  if (p.max_letter() > static_cast<int>(letters.size())) {
    throw InvalidArgument("normalized_trace_polynomial: letter out of range");
  }
  Complex acc(0.0, 0.0);
  for (const auto& [w, c] : p.terms()) {
    if (c == Complex(0.0, 0.0)) continue;
    if (w.empty()) {
      acc += c;
      continue;
    }
    if (w.size() == 1) {
      acc += c * letters[w[0] - 1].trace() / n;
      continue;
    }
    // tr(A B) = Σ (A ∘ Bᵀ), so the last product is never formed.
    ComplexMatrix prod = letters[w[0] - 1];
    for (std::size_t i = 1; i + 1 < w.size(); ++i) prod = prod * letters[w[i] - 1];
    acc += c * prod.cwiseProduct(letters[w.back() - 1].transpose()).sum() / n;
  }
  return acc;
}

/// ‖M‖ for a polynomial value; Hermitian polynomials use the eigensolver.
inline double polynomial_value_norm(const ComplexMatrix& value, bool self_adjoint) {
  if (self_adjoint) return operator_norm(hermitian_spectrum(value));
  const ComplexMatrix g = value.adjoint() * value;
  return std::sqrt(std::max(0.0, operator_norm(hermitian_spectrum(ComplexMatrix(0.5 * (g + g.adjoint()))))));
}

inline bool is_self_adjoint(const NCPolynomial& p) {
  const auto a = p.adjoint();
  NCPolynomial diff = p + Complex(-1.0, 0.0) * a;
  for (const auto& [w, c] : diff.terms()) {
    if (std::abs(c) > 1e-14) return false;
  }
  return true;
}

namespace detail {

/// Rethrows a trial failure with its (N, trial) identification, keeping the
/// error category.
template <typename Fn>
auto with_trial_context(int N, int trial, Fn&& fn) -> decltype(fn()) {
  const std::string where = "N=" + std::to_string(N) + " trial=" + std::to_string(trial) + ": ";
  try {
    return fn();
  } catch (const ConvergenceFailure& e) {
    throw ConvergenceFailure(where + e.what(), e.residual(), e.iterations());
  } catch (const SizeLimitError& e) {
    throw SizeLimitError(where + e.what());
  }
}

inline nlohmann::json solver_json(const SolverSpec& s) {
  return {{"tol", s.tol},
          {"smoothing", s.smoothing},
          {"grid_step", s.grid_step},
          {"support_threshold", s.support_threshold},
          {"max_iter", s.max_iter}};
}

inline DensityOptions density_options(const SolverSpec& s, unsigned threads) {
  DensityOptions opt;
  opt.grid_step = s.grid_step;
  opt.smoothing = s.smoothing;
  opt.support_threshold = s.support_threshold;
  opt.solver.tol = s.tol;
  opt.solver.max_iter = s.max_iter;
  opt.threads = threads;
  return opt;
}

inline nlohmann::json intervals_json(const std::vector<Interval>& v) {
  auto out = nlohmann::json::array();
  for (const auto& iv : v) out.push_back({iv.lo, iv.hi});
  return out;
}

inline std::string hex64(std::uint64_t x) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

inline nlohmann::json header_json(const char* experiment, const ExperimentConfig& cfg) {
  return {{"experiment", experiment},
          {"code_version", kCodeVersion},
          {"config_hash", hex64(config_hash(cfg.source))},
          {"master_seed", cfg.master_seed},
          {"solver", solver_json(cfg.solver)},
          {"config", cfg.source}};
}

inline SpectralDensity free_limit(const ExperimentConfig& cfg, unsigned threads) {
  const auto coeffs = model_coefficients(cfg.model);
  return free_spectral_density(CovarianceMap(coeffs), density_options(cfg.solver, threads));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Results

/// A named table destined for one CSV file.
struct CsvTable {
  std::string suffix;  // file name is <name><suffix>.csv
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct ExperimentResult {
  nlohmann::json document;
  std::vector<CsvTable> tables;
};

struct Thm1Record {
  int N = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double norm = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double excess = 0.0;
  double runtime_ms = 0.0;
};

struct Thm1Aggregate {
  int N = 0;
  double median_norm = 0.0;
  double max_norm = 0.0;
  double median_excess = 0.0;
  double max_excess = 0.0;
  double band_scale_t0 = 0.0;
  double c_hat = 0.0;  // max excess / band_scale(t = 0) over measured trials
  std::vector<double> outlier_fraction;       // per t: excess > ε(N, t; C)
  std::vector<double> norm_outlier_fraction;  // per t: ‖X_N‖ > ‖X_free‖ + ε(N, t; C)
};

struct Thm1Outcome {
  std::vector<Interval> support;
  double free_norm = 0.0;
  double C = 0.0;
  bool calibrated = false;
  double pilot_c_hat = 0.0;
  std::vector<double> t_grid;
  std::vector<Thm1Record> records;
  std::vector<Thm1Aggregate> aggregates;
  ExperimentResult result;
};

namespace detail {

inline Thm1Record thm1_trial(const TensorGueModel& model, int trial, std::uint64_t seed,
                             const std::vector<Interval>& support, bool timed) {
  return with_trial_context(model.N(), trial, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto x = sample_X_N(model, seed);
    const auto spec = hermitian_spectrum(x);
    Thm1Record r;
    r.N = model.N();
    r.trial = trial;
    r.seed = seed;
    r.norm = operator_norm(spec);
    r.lambda_min = spec.min();
    r.lambda_max = spec.max();
    r.excess = inclusion_excess(spec, support);
    if (timed) r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
  });
}

}  // namespace detail

/// Spectrum inclusion and norm band over an N sweep.
inline Thm1Outcome run_thm1(const ExperimentConfig& cfg, int threads_requested = 1) {
  const unsigned threads = resolve_threads(threads_requested);
  std::vector<TensorGueModel> models;
  for (int N : cfg.model.N) {
    models.push_back(model_at(cfg.model, N));
    if (models.back().dimension() > TensorGueModel::kMaxSampleDim) {
      throw SizeLimitError("thm1: d*N^m = " + std::to_string(models.back().dimension()) + " exceeds 8192 at N=" +
                           std::to_string(N));
    }
  }

  Thm1Outcome out;
  out.t_grid = cfg.t_grid;
  const auto density = detail::free_limit(cfg, threads);
  out.support = density.support;
  if (out.support.empty()) throw ConfigError("config: solver.support_threshold exceeds the free-limit density everywhere");
  out.free_norm = 0.0;
  for (const auto& iv : out.support) out.free_norm = std::max({out.free_norm, std::abs(iv.lo), std::abs(iv.hi)});

  struct Task {
    std::size_t model;
    int trial;
    SeedStream stream;
  };

  // Calibration pilots on their own seed stream.
  if (!cfg.C) {
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < models.size(); ++i) {
      for (int t = 0; t < cfg.pilot_trials; ++t) tasks.push_back({i, t, SeedStream::kPilot});
    }
    std::vector<double> ratio(tasks.size(), 0.0);
    parallel_for(tasks.size(), threads, [&](std::size_t k) {
      const auto& task = tasks[k];
      const auto& model = models[task.model];
      const auto rec = detail::thm1_trial(model, task.trial,
                                          trial_seed(cfg.master_seed, model.N(), task.trial, task.stream), out.support,
                                          false);
      const double scale = band_scale(model, 0.0, cfg.overrides);
      ratio[k] = scale > 0.0 ? rec.excess / scale : 0.0;
    });
    out.pilot_c_hat = ratio.empty() ? 0.0 : *std::max_element(ratio.begin(), ratio.end());
    out.C = out.pilot_c_hat;
    out.calibrated = true;
  } else {
    out.C = *cfg.C;
  }

  std::vector<Task> tasks;
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (int t = 0; t < cfg.trials; ++t) tasks.push_back({i, t, SeedStream::kMeasured});
  }
  out.records.resize(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t k) {
    const auto& task = tasks[k];
    const auto& model = models[task.model];
    out.records[k] = detail::thm1_trial(model, task.trial, trial_seed(cfg.master_seed, model.N(), task.trial),
                                        out.support, cfg.record_timings);
  });
  std::sort(out.records.begin(), out.records.end(),
            [](const Thm1Record& a, const Thm1Record& b) { return std::tie(a.N, a.trial) < std::tie(b.N, b.trial); });

  for (const auto& model : models) {
    Thm1Aggregate agg;
    agg.N = model.N();
    std::vector<double> norms, excesses;
    for (const auto& r : out.records) {
      if (r.N == model.N()) {
        norms.push_back(r.norm);
        excesses.push_back(r.excess);
      }
    }
    agg.median_norm = median(norms);
    agg.max_norm = *std::max_element(norms.begin(), norms.end());
    agg.median_excess = median(excesses);
    agg.max_excess = *std::max_element(excesses.begin(), excesses.end());
    agg.band_scale_t0 = band_scale(model, 0.0, cfg.overrides);
    agg.c_hat = agg.band_scale_t0 > 0.0 ? agg.max_excess / agg.band_scale_t0 : 0.0;
    for (double t : cfg.t_grid) {
      const double eps = out.C * band_scale(model, t, cfg.overrides);
      const auto n = static_cast<double>(excesses.size());
      const auto over = std::count_if(excesses.begin(), excesses.end(), [&](double e) { return e > eps; });
      const auto over_norm =
          std::count_if(norms.begin(), norms.end(), [&](double x) { return x > out.free_norm + eps; });
      agg.outlier_fraction.push_back(static_cast<double>(over) / n);
      agg.norm_outlier_fraction.push_back(static_cast<double>(over_norm) / n);
    }
    out.aggregates.push_back(std::move(agg));
  }

  // Serialization
  using nlohmann::json;
  const auto params = control_params(models.front(), cfg.overrides);
  json doc = detail::header_json("thm1", cfg);
  doc["free_limit"] = {{"support", detail::intervals_json(out.support)},
                       {"norm", out.free_norm},
                       {"density_integral", density.integral},
                       {"max_residual", density.max_residual}};
  doc["model"] = {{"alpha", params.alpha}, {"gamma", params.gamma}, {"theta", params.theta}, {"sigma", params.sigma}};
  doc["calibration"] = {{"C", out.C},
                        {"source", out.calibrated ? "pilot" : "config"},
                        {"pilot_trials_per_N", out.calibrated ? cfg.pilot_trials : 0},
                        {"pilot_c_hat", out.pilot_c_hat}};
  json recs = json::array();
  for (const auto& r : out.records) {
    json jr = {{"N", r.N},         {"trial", r.trial},   {"seed", r.seed},
               {"norm", r.norm},   {"excess", r.excess}, {"lambda_min", r.lambda_min},
               {"lambda_max", r.lambda_max}};
    if (cfg.record_timings) jr["runtime_ms"] = r.runtime_ms;
    recs.push_back(std::move(jr));
  }
  doc["records"] = std::move(recs);
  json aggs = json::array();
  for (const auto& a : out.aggregates) {
    json per_t = json::array();
    for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
      const double t = cfg.t_grid[i];
      const double bound = std::exp(-t * t);
      const double n = cfg.trials;
      per_t.push_back({{"t", t},
                       {"epsilon", out.C * band_scale(model_at(cfg.model, a.N), t, cfg.overrides)},
                       {"outlier_fraction", a.outlier_fraction[i]},
                       {"norm_outlier_fraction", a.norm_outlier_fraction[i]},
                       {"bound", bound},
                       {"binomial_sigma", std::sqrt(bound * (1.0 - bound) / n)}});
    }
    aggs.push_back({{"N", a.N},
                    {"dimension", model_at(cfg.model, a.N).dimension()},
                    {"median_norm", a.median_norm},
                    {"max_norm", a.max_norm},
                    {"median_excess", a.median_excess},
                    {"max_excess", a.max_excess},
                    {"band_scale_t0", a.band_scale_t0},
                    {"c_hat", a.c_hat},
                    {"per_t", std::move(per_t)}});
  }
  doc["aggregates"] = std::move(aggs);
  out.result.document = std::move(doc);

  CsvTable trials{"", {"N", "trial", "seed", "norm", "excess"}, {}};
  for (const auto& r : out.records) {
    trials.rows.push_back({std::to_string(r.N), std::to_string(r.trial), std::to_string(r.seed), fmt_double(r.norm),
                           fmt_double(r.excess)});
  }
  CsvTable outliers{"_outliers", {"N", "t", "outlier_fraction", "bound"}, {}};
  for (const auto& a : out.aggregates) {
    for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
      const double t = cfg.t_grid[i];
      outliers.rows.push_back({std::to_string(a.N), fmt_double(t), fmt_double(a.outlier_fraction[i]),
                               fmt_double(std::exp(-t * t))});
    }
  }
  CsvTable norms{"_norms", {"N", "median_norm"}, {}};
  for (const auto& a : out.aggregates) norms.rows.push_back({std::to_string(a.N), fmt_double(a.median_norm)});
  out.result.tables = {std::move(trials), std::move(outliers), std::move(norms)};
  return out;
}

// ---------------------------------------------------------------------------

struct PolyTrialRecord {
  int N = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;  // one per polynomial
};

struct Thm2Summary {
  std::string name;
  int r = 0;                          // largest feasible moment order
  double reference = 0.0;             // τ((P*P)^{r/2})^{1/r}
  std::vector<double> estimates;      // r = 2, 4, …
  std::optional<double> mde_norm;     // linear real polynomials only
  std::vector<int> N;
  std::vector<double> median_norm;
  std::vector<double> gap;            // median − reference
  bool lower_bound_holds = true;      // reference <= every sampled norm
};

struct Thm2Outcome {
  std::vector<PolyTrialRecord> records;
  std::vector<Thm2Summary> summaries;
  ExperimentResult result;
};

namespace detail {

inline void check_polynomials(const ExperimentConfig& cfg, int k) {
  if (cfg.polynomials.empty()) throw ConfigError("config: polynomials: at least one polynomial is required");
  for (const auto& p : cfg.polynomials) {
    if (p.polynomial.max_letter() > k) {
      throw ConfigError("config: polynomial " + p.name + " uses letter " + std::to_string(p.polynomial.max_letter()) +
                        " but the model has " + std::to_string(k) + " terms");
    }
  }
}

/// Coefficients c_i if P = Σ c_i x_i with real c_i.
inline std::optional<std::vector<double>> linear_real_coefficients(const NCPolynomial& p, int k) {
  std::vector<double> c(k, 0.0);
  for (const auto& [w, coef] : p.terms()) {
    if (coef == Complex(0.0, 0.0)) continue;
    if (w.size() != 1 || coef.imag() != 0.0) return std::nullopt;
    c[w[0] - 1] += coef.real();
  }
  return c;
}

}  // namespace detail

/// Sampled ‖P(X_{J_1} ⊗̃ I, …)‖ against the free norm lower bound.
inline Thm2Outcome run_thm2(const ExperimentConfig& cfg, int threads_requested = 1) {
  const unsigned threads = resolve_threads(threads_requested);
  std::vector<TensorGueModel> models;
  for (int N : cfg.model.N) models.push_back(model_at(cfg.model, N));
  detail::check_polynomials(cfg, models.front().k());

  std::vector<bool> self_adjoint;
  for (const auto& p : cfg.polynomials) self_adjoint.push_back(is_self_adjoint(p.polynomial));

  Thm2Outcome out;
  for (const auto& p : cfg.polynomials) {
    Thm2Summary s;
    s.name = p.name;
    for (int r = 2; r <= cfg.norm_r; r += 2) {
      try {
        s.estimates.push_back(polynomial_norm_estimate(p.polynomial, r));
        s.r = r;
      } catch (const SizeLimitError&) {
        break;
      }
    }
    if (s.estimates.empty()) throw SizeLimitError("thm2: polynomial " + p.name + " exceeds the expansion cap at r = 2");
    s.reference = s.estimates.back();
    if (const auto lin = detail::linear_real_coefficients(p.polynomial, models.front().k())) {
      std::vector<HermitianMatrix> coeffs;
      for (double c : *lin) coeffs.push_back(HermitianMatrix::scalar(c));
      const auto dens = free_spectral_density(CovarianceMap(coeffs), detail::density_options(cfg.solver, threads));
      s.mde_norm = dens.support.empty() ? 0.0 : dens.support_radius();
    }
    out.summaries.push_back(std::move(s));
  }

  struct Task {
    std::size_t model;
    int trial;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (int t = 0; t < cfg.trials; ++t) tasks.push_back({i, t});
  }
  out.records.resize(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t k) {
    const auto& model = models[tasks[k].model];
    const int trial = tasks[k].trial;
    out.records[k] = detail::with_trial_context(model.N(), trial, [&] {
      PolyTrialRecord rec{model.N(), trial, trial_seed(cfg.master_seed, model.N(), trial), {}};
      const auto letters = sample_legs(model, rec.seed);
      for (std::size_t i = 0; i < cfg.polynomials.size(); ++i) {
        rec.values.push_back(
            polynomial_value_norm(evaluate_polynomial(cfg.polynomials[i].polynomial, letters), self_adjoint[i]));
      }
      return rec;
    });
  });
  std::sort(out.records.begin(), out.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.N, a.trial) < std::tie(b.N, b.trial);
  });

  for (std::size_t i = 0; i < out.summaries.size(); ++i) {
    auto& s = out.summaries[i];
    for (const auto& model : models) {
      std::vector<double> v;
      for (const auto& r : out.records) {
        if (r.N == model.N()) {
          v.push_back(r.values[i]);
          if (r.values[i] < s.reference) s.lower_bound_holds = false;
        }
      }
      s.N.push_back(model.N());
      s.median_norm.push_back(median(v));
      s.gap.push_back(s.median_norm.back() - s.reference);
    }
  }

  using nlohmann::json;
  json doc = detail::header_json("thm2", cfg);
  json polys = json::array();
  for (const auto& s : out.summaries) {
    json per_n = json::array();
    for (std::size_t j = 0; j < s.N.size(); ++j) {
      per_n.push_back({{"N", s.N[j]}, {"median_norm", s.median_norm[j]}, {"gap", s.gap[j]}});
    }
    json est = json::array();
    for (std::size_t j = 0; j < s.estimates.size(); ++j) est.push_back({{"r", 2 * (j + 1)}, {"estimate", s.estimates[j]}});
    json jp = {{"name", s.name},
               {"reference", {{"r", s.r}, {"estimate", s.reference}, {"kind", "lower bound"}}},
               {"estimates", std::move(est)},
               {"per_N", std::move(per_n)},
               {"lower_bound_holds", s.lower_bound_holds}};
    if (s.mde_norm) jp["mde_norm"] = *s.mde_norm;
    polys.push_back(std::move(jp));
  }
  doc["polynomials"] = std::move(polys);
  json recs = json::array();
  for (const auto& r : out.records) recs.push_back({{"N", r.N}, {"trial", r.trial}, {"seed", r.seed}, {"norms", r.values}});
  doc["records"] = std::move(recs);
  out.result.document = std::move(doc);

  CsvTable trials{"", {"N", "trial", "seed", "polynomial", "norm"}, {}};
  for (const auto& r : out.records) {
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      trials.rows.push_back({std::to_string(r.N), std::to_string(r.trial), std::to_string(r.seed),
                             cfg.polynomials[i].name, fmt_double(r.values[i])});
    }
  }
  CsvTable gaps{"_gap", {"polynomial", "N", "median_norm", "reference", "gap"}, {}};
  for (const auto& s : out.summaries) {
    for (std::size_t j = 0; j < s.N.size(); ++j) {
      gaps.rows.push_back({s.name, std::to_string(s.N[j]), fmt_double(s.median_norm[j]), fmt_double(s.reference),
                           fmt_double(s.gap[j])});
    }
  }
  out.result.tables = {std::move(trials), std::move(gaps)};
  return out;
}

// ---------------------------------------------------------------------------

struct WeakSummary {
  std::string name;
  Complex oracle;
  std::vector<int> N;
  std::vector<double> mean_abs_deviation;
  std::vector<double> max_abs_deviation;
};

struct WeakOutcome {
  std::vector<PolyTrialRecord> records;  // values: |tr̄ P − τ(P)| per polynomial
  std::vector<std::vector<Complex>> traces;
  std::vector<WeakSummary> summaries;
  ExperimentResult result;
};

/// tr̄ P(X_{J_1} ⊗̃ I, …) against τ(P(s_1, …)).
inline WeakOutcome run_weak(const ExperimentConfig& cfg, int threads_requested = 1) {
  const unsigned threads = resolve_threads(threads_requested);
  std::vector<TensorGueModel> models;
  for (int N : cfg.model.N) models.push_back(model_at(cfg.model, N));
  detail::check_polynomials(cfg, models.front().k());

  WeakOutcome out;
  for (const auto& p : cfg.polynomials) out.summaries.push_back({p.name, polynomial_moment(p.polynomial), {}, {}, {}});

  struct Task {
    std::size_t model;
    int trial;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (int t = 0; t < cfg.trials; ++t) tasks.push_back({i, t});
  }
  out.records.resize(tasks.size());
  out.traces.resize(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t k) {
    const auto& model = models[tasks[k].model];
    const int trial = tasks[k].trial;
    detail::with_trial_context(model.N(), trial, [&] {
      PolyTrialRecord rec{model.N(), trial, trial_seed(cfg.master_seed, model.N(), trial), {}};
      const auto letters = sample_legs(model, rec.seed);
      std::vector<Complex> tr;
      for (std::size_t i = 0; i < cfg.polynomials.size(); ++i) {
        tr.push_back(normalized_trace_polynomial(cfg.polynomials[i].polynomial, letters));
        rec.values.push_back(std::abs(tr.back() - out.summaries[i].oracle));
      }
      out.records[k] = std::move(rec);
      out.traces[k] = std::move(tr);
      return 0;
    });
  });
  // Tasks are generated in (N, trial) order already.

  for (std::size_t i = 0; i < out.summaries.size(); ++i) {
    auto& s = out.summaries[i];
    for (const auto& model : models) {
      double sum = 0.0, mx = 0.0;
      int n = 0;
      for (const auto& r : out.records) {
        if (r.N != model.N()) continue;
        sum += r.values[i];
        mx = std::max(mx, r.values[i]);
        ++n;
      }
      s.N.push_back(model.N());
      s.mean_abs_deviation.push_back(sum / n);
      s.max_abs_deviation.push_back(mx);
    }
  }

  using nlohmann::json;
  json doc = detail::header_json("weak", cfg);
  json polys = json::array();
  for (const auto& s : out.summaries) {
    json per_n = json::array();
    for (std::size_t j = 0; j < s.N.size(); ++j) {
      per_n.push_back({{"N", s.N[j]}, {"mean_abs_deviation", s.mean_abs_deviation[j]}, {"max_abs_deviation", s.max_abs_deviation[j]}});
    }
    polys.push_back({{"name", s.name}, {"oracle", {s.oracle.real(), s.oracle.imag()}}, {"per_N", std::move(per_n)}});
  }
  doc["polynomials"] = std::move(polys);
  json recs = json::array();
  for (std::size_t k = 0; k < out.records.size(); ++k) {
    const auto& r = out.records[k];
    json tr = json::array();
    for (const auto& c : out.traces[k]) tr.push_back({c.real(), c.imag()});
    recs.push_back({{"N", r.N}, {"trial", r.trial}, {"seed", r.seed}, {"traces", std::move(tr)}, {"deviations", r.values}});
  }
  doc["records"] = std::move(recs);
  out.result.document = std::move(doc);

  CsvTable trials{"", {"N", "trial", "seed", "polynomial", "trace_re", "trace_im", "oracle", "deviation"}, {}};
  for (std::size_t k = 0; k < out.records.size(); ++k) {
    const auto& r = out.records[k];
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      trials.rows.push_back({std::to_string(r.N), std::to_string(r.trial), std::to_string(r.seed), cfg.polynomials[i].name,
                             fmt_double(out.traces[k][i].real()), fmt_double(out.traces[k][i].imag()),
                             fmt_double(out.summaries[i].oracle.real()), fmt_double(r.values[i])});
    }
  }
  out.result.tables = {std::move(trials)};
  return out;
}

// ---------------------------------------------------------------------------

struct MomentRow {
  int p = 0;
  double density = 0.0;
  double oracle = 0.0;
  double relative_error = 0.0;  // |density − oracle| / max(|oracle|, 1) for odd p
};

struct FreeSpectrumOutcome {
  SpectralDensity density;
  std::vector<MomentRow> moments;
  ExperimentResult result;
};

/// Density, support and the density-versus-oracle moment table for p <= 6.
inline FreeSpectrumOutcome run_free_spectrum(const ExperimentConfig& cfg, int threads_requested = 1) {
  const unsigned threads = resolve_threads(threads_requested);
  const auto coeffs = model_coefficients(cfg.model);
  FreeSpectrumOutcome out;
  out.density = free_spectral_density(CovarianceMap(coeffs), detail::density_options(cfg.solver, threads));
  for (int p = 1; p <= 6; ++p) {
    MomentRow row{p, out.density.moment(p), xfree_moment(coeffs, p), 0.0};
    row.relative_error = std::abs(row.density - row.oracle) / std::max(std::abs(row.oracle), p % 2 == 0 ? 1e-300 : 1.0);
    out.moments.push_back(row);
  }

  using nlohmann::json;
  json doc = detail::header_json("free-spectrum", cfg);
  json mom = json::array();
  for (const auto& r : out.moments) {
    mom.push_back({{"p", r.p}, {"density", r.density}, {"oracle", r.oracle}, {"relative_error", r.relative_error}});
  }
  doc["density"] = {{"support", detail::intervals_json(out.density.support)},
                    {"support_threshold", out.density.support_threshold},
                    {"smoothing", out.density.smoothing},
                    {"grid_step", out.density.grid_step},
                    {"x_min", out.density.x.front()},
                    {"x_max", out.density.x.back()},
                    {"points", out.density.x.size()},
                    {"integral", out.density.integral},
                    {"max_residual", out.density.max_residual},
                    {"total_iterations", out.density.total_iterations}};
  doc["moments"] = std::move(mom);
  out.result.document = std::move(doc);

  CsvTable dens{"_density", {"x", "rho"}, {}};
  for (std::size_t i = 0; i < out.density.x.size(); ++i) {
    dens.rows.push_back({fmt_double(out.density.x[i]), fmt_double(out.density.rho[i])});
  }
  CsvTable moments{"_moments", {"p", "density", "oracle", "relative_error"}, {}};
  for (const auto& r : out.moments) {
    moments.rows.push_back({std::to_string(r.p), fmt_double(r.density), fmt_double(r.oracle), fmt_double(r.relative_error)});
  }
  out.result.tables = {std::move(dens), std::move(moments)};
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline std::string to_csv(const CsvTable& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

/// Writes <dir>/<name>.json and/or <dir>/<name><suffix>.csv; returns the paths.
inline std::vector<std::string> write_result(const ExperimentResult& r, const std::string& dir, const std::string& name,
                                             const std::string& format) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  if (format == "json" || format == "both") {
    const auto path = (fs::path(dir) / (name + ".json")).string();
    std::ofstream f(path, std::ios::binary);
    f << r.document.dump(2) << '\n';
    if (!f) throw std::runtime_error("cannot write " + path);
    written.push_back(path);
  }
  if (format == "csv" || format == "both") {
    for (const auto& t : r.tables) {
      const auto path = (fs::path(dir) / (name + t.suffix + ".csv")).string();
      std::ofstream f(path, std::ios::binary);
      f << to_csv(t);
      if (!f) throw std::runtime_error("cannot write " + path);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace tgue
