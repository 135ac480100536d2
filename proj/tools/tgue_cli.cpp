// tgue: seeded experiment runner for tensor-GUE models.
//
// Exit codes: 0 success, 1 unexpected error, 2 config error, 3 size cap,
// 4 solver failure, 5 selftest failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "tgue/tgue.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<int> threads;
};

tgue::ExperimentConfig load(const Options& o) {
  auto doc = tgue::read_config_document(o.config);
  // Overrides go into the document so the recorded config and its hash match the run.
  if (o.seed) doc["master_seed"] = *o.seed;
  if (o.out) doc["output"]["dir"] = *o.out;
  if (o.format) doc["output"]["format"] = *o.format;
  return tgue::parse_config(doc);
}

int thread_count(const Options& o) {
  if (!o.threads) return 0;  // resolve_threads consults TENSOR_GUE_THREADS
  if (*o.threads < 0) throw tgue::ConfigError("--threads must be nonnegative");
  if (*o.threads == 0) return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return *o.threads;
}

void emit(const tgue::ExperimentResult& r, const tgue::ExperimentConfig& cfg) {
  for (const auto& path : tgue::write_result(r, cfg.out_dir, cfg.name, cfg.format)) std::cout << "wrote " << path << '\n';
}

int run_thm1(const Options& o) {
  const auto cfg = load(o);
  const auto out = tgue::run_thm1(cfg, thread_count(o));
  std::printf("free-limit support radius %.6f, C = %.6g (%s)\n", out.free_norm, out.C,
              out.calibrated ? "pilot-calibrated" : "config");
  for (const auto& a : out.aggregates) {
    std::printf("N=%-4d median |X_N| %.6f  max excess %.6f  C_hat %.4f\n", a.N, a.median_norm, a.max_excess, a.c_hat);
  }
  emit(out.result, cfg);
  return 0;
}

int run_thm2(const Options& o) {
  const auto cfg = load(o);
  const auto out = tgue::run_thm2(cfg, thread_count(o));
  for (const auto& s : out.summaries) {
    std::printf("%s: reference %.6f (r=%d)%s\n", s.name.c_str(), s.reference, s.r,
                s.lower_bound_holds ? "" : "  [lower bound violated]");
    for (std::size_t i = 0; i < s.N.size(); ++i) {
      std::printf("  N=%-4d median norm %.6f  gap %.6f\n", s.N[i], s.median_norm[i], s.gap[i]);
    }
  }
  emit(out.result, cfg);
  return 0;
}

int run_weak(const Options& o) {
  const auto cfg = load(o);
  const auto out = tgue::run_weak(cfg, thread_count(o));
  for (const auto& s : out.summaries) {
    std::printf("%s: tau = %.6f\n", s.name.c_str(), s.oracle.real());
    for (std::size_t i = 0; i < s.N.size(); ++i) {
      std::printf("  N=%-4d mean |dev| %.3e  max |dev| %.3e\n", s.N[i], s.mean_abs_deviation[i], s.max_abs_deviation[i]);
    }
  }
  emit(out.result, cfg);
  return 0;
}

int run_free_spectrum(const Options& o) {
  const auto cfg = load(o);
  const auto out = tgue::run_free_spectrum(cfg, thread_count(o));
  std::printf("support:");
  for (const auto& iv : out.density.support) std::printf(" [%.6f, %.6f]", iv.lo, iv.hi);
  std::printf("\nintegral %.6f\n", out.density.integral);
  for (const auto& r : out.moments) std::printf("  p=%d density %.6f oracle %.6f\n", r.p, r.density, r.oracle);
  emit(out.result, cfg);
  return 0;
}

int run_selftest() {
  bool ok = true;
  for (const auto& s : tgue::selftest()) {
    std::printf("%-16s %s  %s\n", s.name.c_str(), s.passed ? "PASS" : "FAIL", s.detail.c_str());
    ok = ok && s.passed;
  }
  return ok ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seeded experiments for tensor-GUE random matrix models"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed (overrides config)");
    sub->add_option("--out", o.out, "output directory (overrides config)");
    sub->add_option("--format", o.format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
    sub->add_option("--threads", o.threads, "worker threads, 0 = auto");
  };
  auto* thm1 = app.add_subcommand("thm1", "spectrum inclusion and norm band over an N sweep");
  auto* thm2 = app.add_subcommand("thm2", "polynomial norms against the free-limit reference");
  auto* weak = app.add_subcommand("weak", "normalized traces against free moments");
  auto* fs = app.add_subcommand("free-spectrum", "free-limit density, support and moment table");
  auto* st = app.add_subcommand("selftest", "exact identity suites");
  for (auto* s : {thm1, thm2, weak, fs}) add_common(s);
  st->add_option("--threads", o.threads, "ignored; accepted for uniformity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (thm1->parsed()) return run_thm1(o);
    if (thm2->parsed()) return run_thm2(o);
    if (weak->parsed()) return run_weak(o);
    if (fs->parsed()) return run_free_spectrum(o);
    return run_selftest();
  } catch (const tgue::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const tgue::SizeLimitError& e) {
    std::cerr << "error: size cap: " << e.what() << '\n';
    return 3;
  } catch (const tgue::ConvergenceFailure& e) {
    std::cerr << "error: solver failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
