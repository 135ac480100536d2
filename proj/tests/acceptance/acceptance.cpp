// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
// Thresholds are fixed here and must not be tuned to the outcome.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tgue/tgue.hpp"

using namespace tgue;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const double kTwoRootTwo = 2.0 * std::sqrt(2.0);

LegSubset random_leg_set(int m, std::mt19937_64& rng) {
  while (true) {
    std::vector<int> legs;
    for (int l = 1; l <= m; ++l) {
      if (rng() & 1) legs.push_back(l);
    }
    if (2 * static_cast<int>(legs.size()) > m) return LegSubset(m, legs);
  }
}

// Random models with N = 2, m <= 3, d <= 3, k <= 3 terms.
std::vector<TensorGueModel> random_models(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GaussianSource g(seed ^ 0xabcdef);
  std::vector<TensorGueModel> out;
  for (int i = 0; i < count; ++i) {
    const int m = 1 + static_cast<int>(rng() % 3);
    const auto d = 1 + static_cast<Eigen::Index>(rng() % 3);
    const int k = 1 + static_cast<int>(rng() % 3);
    std::vector<ModelTerm> terms;
    for (int t = 0; t < k; ++t) terms.push_back({random_leg_set(m, rng), random_hermitian(d, g)});
    out.push_back(build_model(2, m, d, std::move(terms)));
  }
  return out;
}

json two_term_json(std::vector<int> Ns) {
  return {{"model",
           {{"N", Ns}, {"m", 3}, {"d", 1}, {"terms", json::array({{{"J", {1, 2}}, {"B", {{1}}}}, {{"J", {2, 3}}, {"B", {{1}}}}})}}},
          {"trials", 1},
          {"master_seed", 0}};
}

// -- 1 ----------------------------------------------------------------------
Verdict tensor_calculus() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  GaussianSource g(1002);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int N = 2 + static_cast<int>(rng() % 2);
    const int m = 2 + static_cast<int>(rng() % 2);
    const auto J = random_leg_set(m, rng);
    const auto nj = ipow(N, J.size()), nc = ipow(N, m - J.size());
    const auto X = random_complex_matrix(nj, nj, g), Xp = random_complex_matrix(nj, nj, g);
    const auto Y = random_complex_matrix(nc, nc, g), Yp = random_complex_matrix(nc, nc, g);
    const Complex a(g(), g()), b(g(), g());
    worst = std::max(worst, max_abs_entry(tilde_otimes(a * X + b * Xp, Y, J, N) -
                                          (a * tilde_otimes(X, Y, J, N) + b * tilde_otimes(Xp, Y, J, N))));
    worst = std::max(worst, max_abs_entry(tilde_otimes(X, a * Y + b * Yp, J, N) -
                                          (a * tilde_otimes(X, Y, J, N) + b * tilde_otimes(X, Yp, J, N))));
    worst = std::max(worst, max_abs_entry(tilde_otimes(X, Y, J, N) * tilde_otimes(Xp, Yp, J, N) -
                                          tilde_otimes(X * Xp, Y * Yp, J, N)));
    const ComplexVector lhs = vectorize(tilde_otimes(X, Y, J, N));
    const ComplexVector rhs = vectorization_permutation(J, N).apply(kron(vectorize(X), vectorize(Y)));
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-10 && secs < 10.0, fmt("100 instances, max error %.2e (< 1e-10), %.2f s (< 10 s)", worst, secs)};
}

// -- 2 ----------------------------------------------------------------------
Verdict basis_identities() {
  double worst = 0.0;
  for (Eigen::Index n : {2, 3, 4, 8}) {
    const auto basis = hermitian_basis(n);
    ComplexMatrix sq = ComplexMatrix::Zero(n, n);
    ComplexMatrix outer = ComplexMatrix::Zero(n * n, n * n);
    for (Eigen::Index j = 0; j < basis.size(); ++j) {
      const auto a = basis.dense(j);
      sq += a * a;
      const ComplexVector v = vectorize(a);
      outer += v * v.adjoint();
    }
    worst = std::max(worst, max_abs_entry(sq - static_cast<double>(n) * ComplexMatrix::Identity(n, n)));
    worst = std::max(worst, max_abs_entry(outer - ComplexMatrix::Identity(n * n, n * n)));
  }
  return {worst < 1e-12, fmt("n in {2,3,4,8}, max error %.2e (< 1e-12)", worst)};
}

// -- 3 ----------------------------------------------------------------------
Verdict sigma_equality() {
  double worst = 0.0;
  for (const auto& model : random_models(20, 3003)) {
    const double closed = sigma_param_closed(model);
    worst = std::max(worst, std::abs(sigma_param_exact(model) - closed) / closed);
  }
  return {worst < 1e-10, fmt("20 models, max relative error %.2e (< 1e-10)", worst)};
}

// -- 4 ----------------------------------------------------------------------
Verdict v_bound() {
  int violations = 0, strict_expected = 0, strict_seen = 0;
  std::string tight;
  for (const auto& model : random_models(20, 3003)) {
    const double exact = v_param_exact(model), bound = v_param_bound(model);
    if (exact > bound * (1.0 + 1e-12)) ++violations;
    const bool partial = std::any_of(model.terms().begin(), model.terms().end(),
                                     [&](const ModelTerm& t) { return t.legs.size() < model.m(); });
    if (partial) {
      ++strict_expected;
      if (exact < bound * (1.0 - 1e-9)) {
        ++strict_seen;
      } else if (tight.size() < 120) {
        tight += fmt(" [m=%d d=%ld k=%d]", model.m(), static_cast<long>(model.d()), model.k());
      }
    }
  }
  double eq_err = 0.0;
  for (int m = 1; m <= 3; ++m) {
    std::vector<int> all(m);
    for (int l = 0; l < m; ++l) all[l] = l + 1;
    const auto model = build_model(2, m, 1, {{LegSubset(m, all), HermitianMatrix::scalar(1.3)}});
    eq_err = std::max(eq_err, std::abs(v_param_exact(model) - v_param_bound(model)) / v_param_bound(model));
  }
  const bool pass = violations == 0 && strict_seen == strict_expected && eq_err < 1e-12;
  return {pass, fmt("bound violations %d/20; strict in %d of %d models with some |J|<m%s; full-leg equality error %.1e",
                    violations, strict_seen, strict_expected, tight.empty() ? "" : (", tight:" + tight).c_str(), eq_err)};
}

// -- 5 ----------------------------------------------------------------------
Verdict free_oracle() {
  bool ok = true;
  std::string counts;
  for (int q : {4, 6, 8, 10}) {
    const auto n = enumerate_nc_pairings(q).size();
    counts += " " + std::to_string(n);
    ok = ok && n == catalan(q / 2);
  }
  ok = ok && counts == " 2 5 14 42";
  for (int p = 0; p <= 6; ++p) ok = ok && semicircular_word_moment(Word(2 * p, 1)) == static_cast<double>(catalan(p));
  const double a = semicircular_word_moment({1, 2, 1, 2}), b = semicircular_word_moment({1, 2, 1, 2, 1, 2});
  ok = ok && a == 0.0 && b == 0.0;
  return {ok, fmt("pairings q=4..10:%s; tau(s^2p) = C_p for p<=6; tau(1212) = %g, tau(121212) = %g", counts.c_str(), a, b)};
}

// -- 6 ----------------------------------------------------------------------
Verdict operator_valued_trace() {
  const auto t0 = Clock::now();
  const int N = 2;
  double worst = 0.0;
  int words = 0;
  // Leg sets with |J| in {1, 2} on m = 2 legs, plus the one-leg space.
  struct Space {
    int m;
    std::vector<std::vector<int>> sets;
  };
  for (const Space& sp : {Space{1, {{1}}}, Space{2, {{1}, {2}, {1, 2}}}}) {
    std::vector<CovarianceMap> maps;
    for (const auto& legs : sp.sets) {
      const LegSubset J(sp.m, legs);
      const auto basis = hermitian_basis(ipow(N, J.size()));
      std::vector<ComplexMatrix> c;
      for (Eigen::Index j = 0; j < basis.size(); ++j) {
        c.push_back(std::pow(static_cast<double>(N), -0.5 * J.size()) * embed_legs(basis.dense(j), J, N));
      }
      maps.emplace_back(std::move(c));
    }
    for (const auto& e1 : maps) {
      for (const auto& e2 : maps) {
        const std::vector<CovarianceMap> etas{e1, e2};
        for (int len = 0; len <= 6; ++len) {
          for (int code = 0; code < (1 << len); ++code) {
            Word w;
            for (int i = 0; i < len; ++i) w.push_back(((code >> i) & 1) + 1);
            worst = std::max(worst, std::abs(normalized_trace(opval_word_moment(w, etas)) - semicircular_word_moment(w)));
            ++words;
          }
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-12 && secs < 30.0,
          fmt("%d (word, covariance pair) cases, max error %.2e (< 1e-12), %.2f s (< 30 s)", words, worst, secs)};
}

// -- 7 ----------------------------------------------------------------------
Verdict mde_closed_form() {
  const std::vector<HermitianMatrix> one{HermitianMatrix::scalar(1.0)};
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Complex z(-3.0 + 6.0 * i / 49.0, 1e-3);
    worst = std::max(worst, std::abs(mde_solve(one, z).G(0, 0) - semicircle_stieltjes(z)));
  }
  DensityOptions opt;
  opt.smoothing = 1e-3;
  opt.grid_step = 1e-2;
  const auto d = free_spectral_density(one, opt);
  const bool single = d.support.size() == 1;
  const double lo = single ? d.support[0].lo : NAN, hi = single ? d.support[0].hi : NAN;
  const bool edges = single && std::abs(lo + 2.0) < 0.08 && std::abs(hi - 2.0) < 0.08;
  return {worst < 1e-8 && edges,
          fmt("max |G - G_closed| %.2e (< 1e-8); support [%.4f, %.4f] (edges within 0.08 of -2, 2)", worst, lo, hi)};
}

// -- 8 ----------------------------------------------------------------------
Verdict moment_cross_validation() {
  GaussianSource g(8008);
  const std::vector<std::pair<std::string, std::vector<HermitianMatrix>>> cases = {
      {"B1=B2=1", {HermitianMatrix::scalar(1.0), HermitianMatrix::scalar(1.0)}},
      {"random d=2 k=2", {random_hermitian(2, g), random_hermitian(2, g)}}};
  double worst = 0.0;
  std::string detail;
  for (const auto& [name, coeffs] : cases) {
    const auto d = free_spectral_density(coeffs);
    detail += " " + name + ":";
    for (int p : {2, 4, 6}) {
      const double oracle = xfree_moment(coeffs, p);
      const double rel = std::abs(d.moment(p) - oracle) / oracle;
      worst = std::max(worst, rel);
      detail += fmt(" p%d %.3g/%.3g", p, d.moment(p), oracle);
    }
  }
  return {worst < 0.01, fmt("max relative error %.2e (< 1e-2);", worst) + detail};
}

// -- 9 ----------------------------------------------------------------------
Verdict theorem1_band(Thm1Outcome& out_keep, double& secs_out, unsigned threads) {
  auto j = two_term_json({4, 6, 8, 10, 12});
  j["trials"] = 50;
  j["pilot_trials"] = 20;
  j["master_seed"] = 90210;
  j["t_grid"] = {0.5, 1.0, 1.5};
  j["C"] = "calibrate";
  const auto cfg = parse_config(j);
  const auto t0 = Clock::now();
  auto out = run_thm1(cfg, static_cast<int>(threads));
  const double secs = seconds_since(t0);

  std::string d;
  // (a) medians strictly decreasing toward 2√2
  bool a = true;
  d += "(a) median |X_N|:";
  for (std::size_t i = 0; i < out.aggregates.size(); ++i) {
    d += fmt(" %.4f", out.aggregates[i].median_norm);
    if (i > 0 && !(out.aggregates[i].median_norm < out.aggregates[i - 1].median_norm)) a = false;
  }
  d += a ? " ok" : " NOT strictly decreasing";

  // (b) excess against [−2√2, 2√2] positive, smaller max at N=12 than at N=4
  std::vector<double> max_ex(out.aggregates.size(), 0.0);
  for (const auto& r : out.records) {
    const double e = std::max({0.0, r.lambda_max - kTwoRootTwo, -kTwoRootTwo - r.lambda_min});
    for (std::size_t i = 0; i < out.aggregates.size(); ++i) {
      if (out.aggregates[i].N == r.N) max_ex[i] = std::max(max_ex[i], e);
    }
  }
  const bool b = std::all_of(max_ex.begin(), max_ex.end(), [](double e) { return e > 0.0; }) && max_ex.back() < max_ex.front();
  d += "; (b) max excess:";
  for (double e : max_ex) d += fmt(" %.4f", e);
  d += b ? " ok" : " FAIL";

  // (c) outlier fraction on fresh seeds within e^{-t²} + 3 binomial sigma
  bool c = true;
  double worst_margin = -1e300;
  for (const auto& agg : out.aggregates) {
    for (std::size_t i = 0; i < out.t_grid.size(); ++i) {
      const double t = out.t_grid[i], p = std::exp(-t * t);
      const double limit = p + 3.0 * std::sqrt(p * (1.0 - p) / cfg.trials);
      worst_margin = std::max(worst_margin, agg.outlier_fraction[i] - limit);
      if (agg.outlier_fraction[i] > limit) c = false;
    }
  }
  double chat_max = 0.0;
  for (const auto& agg : out.aggregates) chat_max = std::max(chat_max, agg.c_hat);
  d += fmt("; (c) pilot C_hat %.4f, worst fraction - limit %.3f%s; per-N C_hat max %.4f", out.C, worst_margin,
           c ? " ok" : " FAIL", chat_max);

  const double budget = threads >= 4 ? 240.0 : 900.0;
  const bool fast = secs < budget;
  d += fmt("; %.0f s with %u worker(s) (< %.0f s)", secs, threads, budget);
  secs_out = secs;
  out_keep = std::move(out);
  return {a && b && c && fast, d};
}

// -- 10 ---------------------------------------------------------------------
Verdict weak_convergence(unsigned threads) {
  auto j = two_term_json({8});
  j["trials"] = 20;
  j["master_seed"] = 1010;
  j["polynomials"] = json::parse(R"([
    {"name": "x1x2x1x2", "terms": [{"coef": 1, "word": [1, 2, 1, 2]}]},
    {"name": "x1^4", "terms": [{"coef": 1, "word": [1, 1, 1, 1]}]}])");
  const auto out = run_weak(parse_config(j), static_cast<int>(threads));
  int ok_mixed = 0, ok_quartic = 0;
  double worst_mixed = 0.0, worst_quartic = 0.0;
  for (const auto& r : out.records) {
    ok_mixed += r.values[0] < 0.05;
    ok_quartic += r.values[1] < 0.1;
    worst_mixed = std::max(worst_mixed, r.values[0]);
    worst_quartic = std::max(worst_quartic, r.values[1]);
  }
  const int n = static_cast<int>(out.records.size());
  const bool pass = ok_mixed >= 0.9 * n && ok_quartic >= 0.9 * n;
  return {pass, fmt("N=8, %d trials: |tr(x1x2x1x2)| < 0.05 in %d (max %.3f); |tr(x1^4) - 2| < 0.1 in %d (max %.3f); need >= 90%%",
                    n, ok_mixed, worst_mixed, ok_quartic, worst_quartic)};
}

// -- 11 ---------------------------------------------------------------------
Verdict theorem2_trend(unsigned threads) {
  auto j = two_term_json({4, 8, 12});
  j["trials"] = 20;
  j["master_seed"] = 1111;
  j["norm_r"] = 12;
  j["polynomials"] = json::parse(R"([{"name": "x1+x2", "terms": [{"coef": 1, "word": [1]}, {"coef": 1, "word": [2]}]}])");
  const auto cfg = parse_config(j);
  const auto out = run_thm2(cfg, static_cast<int>(threads));
  const auto& s = out.summaries[0];
  const double estimate = polynomial_norm_estimate(cfg.polynomials[0].polynomial, 12);
  bool decreasing = true;
  std::string meds;
  for (std::size_t i = 0; i < s.median_norm.size(); ++i) {
    meds += fmt(" %.4f", s.median_norm[i]);
    if (i > 0 && !(s.median_norm[i] < s.median_norm[i - 1])) decreasing = false;
  }
  const double gap4 = std::abs(s.median_norm.front() - kTwoRootTwo), gap12 = std::abs(s.median_norm.back() - kTwoRootTwo);
  bool lower = true;
  for (const auto& r : out.records) lower = lower && estimate <= r.values[0];
  return {decreasing && gap12 < gap4 && lower,
          fmt("median norm N=4,8,12:%s (%s); |gap| to 2.8284 %.4f -> %.4f (%s); estimate(r=12) %.4f below every sample: %s",
              meds.c_str(), decreasing ? "decreasing" : "NOT decreasing", gap4, gap12, gap12 < gap4 ? "ok" : "FAIL",
              estimate, lower ? "yes" : "NO")};
}

// -- 12 ---------------------------------------------------------------------
Verdict determinism(unsigned threads) {
  auto j = two_term_json({4, 6, 8});
  j["trials"] = 10;
  j["pilot_trials"] = 5;
  j["master_seed"] = 1212;
  j["t_grid"] = {0.0, 0.5, 1.0, 1.5};
  j["C"] = "calibrate";
  const auto cfg = parse_config(j);
  const auto a = run_thm1(cfg, 1).result.document.dump(2);
  const auto b = run_thm1(cfg, 1).result.document.dump(2);
  const auto c = run_thm1(cfg, static_cast<int>(std::max(threads, 2u))).result.document.dump(2);
  const auto t0 = Clock::now();
  bool suites = true;
  for (const auto& s : selftest()) suites = suites && s.passed;
  const double secs = seconds_since(t0);
  const bool pass = a == b && a == c && suites && secs < 120.0;
  return {pass, fmt("repeat run %s, other worker count %s (%zu bytes); selftest %s in %.2f s (< 120 s)",
                    a == b ? "identical" : "DIFFERS", a == c ? "identical" : "DIFFERS", a.size(),
                    suites ? "passes" : "FAILS", secs)};
}

}  // namespace

int main() {
  const unsigned threads = resolve_threads(0);
  std::printf("acceptance: %u worker thread(s)\n", threads);
  std::fflush(stdout);

  int failed = 0;
  auto report = [&](int id, const char* title, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s  [%2d] %s: %s\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "tensor calculus identities", tensor_calculus);
  report(2, "Hermitian basis identities", basis_identities);
  report(3, "sigma exact vs closed form", sigma_equality);
  report(4, "v exact vs bound", v_bound);
  report(5, "free oracle exact counts", free_oracle);
  report(6, "operator-valued trace vs scalar moments", operator_valued_trace);
  report(7, "MDE vs semicircle closed form", mde_closed_form);
  report(8, "free-limit moment cross-validation", moment_cross_validation);
  Thm1Outcome thm1;
  double thm1_secs = 0.0;
  report(9, "spectrum inclusion band, N sweep", [&] { return theorem1_band(thm1, thm1_secs, threads); });
  report(10, "trace convergence at N=8", [&] { return weak_convergence(threads); });
  report(11, "polynomial norm trend", [&] { return theorem2_trend(threads); });
  report(12, "determinism and selftest", [&] { return determinism(threads); });

  std::printf("%d of 12 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
