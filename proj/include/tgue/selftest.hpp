#pragma once

// Exact algebraic identity suites, runnable from the CLI on a fresh build.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "tgue/free_probability.hpp"
#include "tgue/gue_ensemble.hpp"
#include "tgue/model.hpp"
#include "tgue/spectral.hpp"
#include "tgue/tensor_core.hpp"

namespace tgue {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Fault injection for negative controls.
struct SelfTestHooks {
  double basis_scale = 1.0;  // multiplies every basis element in the "basis" suite
};

namespace detail {

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

/// Ascending leg subsets J of [m] with |J| > m/2.
inline std::vector<LegSubset> admissible_leg_sets(int m) {
  std::vector<LegSubset> out;
  for (int mask = 1; mask < (1 << m); ++mask) {
    std::vector<int> legs;
    for (int l = 0; l < m; ++l) {
      if (mask & (1 << l)) legs.push_back(l + 1);
    }
    if (2 * static_cast<int>(legs.size()) > m) out.emplace_back(m, legs);
  }
  return out;
}

inline SuiteResult suite_tilde_otimes() {
  GaussianSource g(0x5eed0001);
  double worst = 0.0;
  for (int N : {2, 3}) {
    for (int m : {2, 3}) {
      for (const auto& J : admissible_leg_sets(m)) {
        const auto nj = ipow(N, J.size());
        const auto nc = ipow(N, m - J.size());
        const auto X = random_complex_matrix(nj, nj, g), Y = random_complex_matrix(nj, nj, g);
        const auto Z = random_complex_matrix(nc, nc, g), W = random_complex_matrix(nc, nc, g);
        const Complex a(0.3, -1.1), b(-0.7, 0.2), c(1.4, 0.5), d(0.1, 0.9);
        const ComplexMatrix lhs = tilde_otimes(a * X + b * Y, c * Z + d * W, J, N);
        const ComplexMatrix rhs = a * c * tilde_otimes(X, Z, J, N) + a * d * tilde_otimes(X, W, J, N) +
                                  b * c * tilde_otimes(Y, Z, J, N) + b * d * tilde_otimes(Y, W, J, N);
        worst = std::max(worst, max_abs_entry(lhs - rhs));
        const ComplexMatrix prod = tilde_otimes(X, Z, J, N) * tilde_otimes(Y, W, J, N);
        worst = std::max(worst, (prod - tilde_otimes(X * Y, Z * W, J, N)).norm());
      }
    }
  }
  return {"tilde-otimes", worst < 1e-10, "max error " + sci(worst)};
}

inline SuiteResult suite_vectorization() {
  GaussianSource g(0x5eed0002);
  double worst = 0.0;
  for (int N : {2, 3}) {
    for (int m : {2, 3}) {
      for (const auto& J : admissible_leg_sets(m)) {
        const auto U = vectorization_permutation(J, N);
        const auto nj = ipow(N, J.size());
        const auto nc = ipow(N, m - J.size());
        for (int rep = 0; rep < 3; ++rep) {
          const auto X = random_complex_matrix(nj, nj, g);
          const auto Y = random_complex_matrix(nc, nc, g);
          const ComplexVector lhs = vectorize(tilde_otimes(X, Y, J, N));
          const ComplexVector rhs = U.apply(kron(ComplexVector(vectorize(X)), ComplexVector(vectorize(Y))));
          worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
        }
      }
    }
  }
  return {"vectorization", worst < 1e-10, "max error " + sci(worst)};
}

inline SuiteResult suite_basis(double scale) {
  double worst = 0.0;
  for (Eigen::Index n : {2, 3, 4, 8}) {
    const auto basis = hermitian_basis(n);
    ComplexMatrix sq = ComplexMatrix::Zero(n, n);
    ComplexMatrix outer = ComplexMatrix::Zero(n * n, n * n);
    for (Eigen::Index j = 0; j < basis.size(); ++j) {
      const ComplexMatrix a = scale * basis.dense(j);
      sq += a * a;
      const ComplexVector v = vectorize(a);
      outer += v * v.adjoint();
    }
    worst = std::max(worst, max_abs_entry(sq - static_cast<double>(n) * ComplexMatrix::Identity(n, n)));
    worst = std::max(worst, max_abs_entry(outer - ComplexMatrix::Identity(n * n, n * n)));
  }
  return {"basis", worst < 1e-12, "max error " + sci(worst)};
}

inline std::vector<TensorGueModel> selftest_models() {
  GaussianSource g(0x5eed0003);
  std::vector<TensorGueModel> out;
  out.push_back(build_model(2, 2, 1, {{LegSubset(2, {1, 2}), HermitianMatrix::scalar(1.0)}}));
  out.push_back(build_model(2, 3, 1, {{LegSubset(3, {1, 2}), HermitianMatrix::scalar(1.0)},
                                      {LegSubset(3, {2, 3}), HermitianMatrix::scalar(1.0)}}));
  out.push_back(build_model(2, 3, 2, {{LegSubset(3, {1, 3}), random_hermitian(2, g)},
                                      {LegSubset(3, {1, 2, 3}), random_hermitian(2, g)}}));
  out.push_back(build_model(3, 2, 3, {{LegSubset(2, {1, 2}), random_hermitian(3, g)}}));
  return out;
}

inline SuiteResult suite_sigma() {
  double worst = 0.0;
  for (const auto& model : selftest_models()) {
    const double exact = sigma_param_exact(model);
    const double closed = sigma_param_closed(model);
    worst = std::max(worst, std::abs(exact - closed) / std::max(closed, 1e-300));
  }
  return {"sigma", worst < 1e-10, "max relative error " + sci(worst)};
}

inline SuiteResult suite_v_bound() {
  double worst_slack = 0.0;  // most positive exact − bound
  bool ok = true;
  for (const auto& model : selftest_models()) {
    const double exact = v_param_exact(model);
    const double bound = v_param_bound(model);
    worst_slack = std::max(worst_slack, exact - bound);
    if (exact > bound + 1e-12) ok = false;
  }
  // Single full-leg term with d = 1: the chain of inequalities is tight.
  const auto tight = build_model(2, 2, 1, {{LegSubset(2, {1, 2}), HermitianMatrix::scalar(1.0)}});
  const double gap = std::abs(v_param_exact(tight) - 0.5);
  if (gap > 1e-12) ok = false;
  return {"v-bound", ok, "max exact-bound " + sci(worst_slack) + ", tight case error " + sci(gap)};
}

inline SuiteResult suite_catalan() {
  bool ok = true;
  std::string detail;
  for (int q = 2; q <= 10; q += 2) {
    const auto pairings = enumerate_nc_pairings(q);
    if (pairings.size() != catalan(q / 2)) ok = false;
    for (const auto& p : pairings) {
      if (!is_non_crossing(p)) ok = false;
    }
  }
  for (int p = 0; p <= 6; ++p) {
    if (semicircular_word_moment(Word(2 * p, 1)) != static_cast<double>(catalan(p))) ok = false;
  }
  if (semicircular_word_moment({1, 2, 1, 2}) != 0.0 || semicircular_word_moment({1, 2, 1, 2, 1, 2}) != 0.0) ok = false;
  detail = ok ? "pairing counts 1 2 5 14 42, tau(s^2p) = C_p, alternating words vanish" : "mismatch";
  return {"catalan", ok, detail};
}

/// Normalized traces of operator-valued moments with the scaled full-basis
/// covariance equal scalar semicircular moments.
inline SuiteResult suite_trace_reduction() {
  double worst = 0.0;
  const int N = 2;
  for (int m : {1, 2}) {
    std::vector<CovarianceMap> etas;
    for (const auto& J : admissible_leg_sets(m)) {
      const auto basis = hermitian_basis(ipow(N, J.size()));
      const double s = std::pow(static_cast<double>(N), -0.5 * J.size());
      std::vector<ComplexMatrix> coeffs;
      for (Eigen::Index j = 0; j < basis.size(); ++j) coeffs.push_back(s * embed_legs(basis.dense(j), J, N));
      etas.emplace_back(std::move(coeffs));
    }
    const int letters = std::min<int>(2, static_cast<int>(etas.size()));
    // Pair every letter set with both orderings when only one admissible J exists.
    std::vector<CovarianceMap> used(etas.begin(), etas.begin() + letters);
    if (used.size() == 1) used.push_back(used.front());
    for (int len = 0; len <= 6; ++len) {
      for (int code = 0; code < (1 << len); ++code) {
        Word w;
        for (int i = 0; i < len; ++i) w.push_back(((code >> i) & 1) + 1);
        const double op = normalized_trace(opval_word_moment(w, used)).real();
        worst = std::max(worst, std::abs(op - semicircular_word_moment(w)));
      }
    }
  }
  return {"trace-reduction", worst < 1e-12, "max error " + sci(worst)};
}

inline SuiteResult suite_mde() {
  const CovarianceMap eta(std::vector<ComplexMatrix>{ComplexMatrix::Constant(1, 1, 1.0)});
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Complex z(-3.0 + 6.0 * i / 49.0, 1e-3);
    MdeSettings s;
    s.tol = 1e-13;
    const auto sol = mde_solve(eta, z, s);
    worst = std::max(worst, std::abs(sol.G(0, 0) - semicircle_stieltjes(z)));
  }
  return {"mde-semicircle", worst < 1e-8, "max |G - G_closed| " + sci(worst)};
}

}  // namespace detail

/// Runs every suite; a suite that throws is reported as failed.
inline std::vector<SuiteResult> selftest(const SelfTestHooks& hooks = {}) {
  const std::vector<std::pair<std::string, std::function<SuiteResult()>>> suites = {
      {"tilde-otimes", detail::suite_tilde_otimes},
      {"vectorization", detail::suite_vectorization},
      {"basis", [&] { return detail::suite_basis(hooks.basis_scale); }},
      {"sigma", detail::suite_sigma},
      {"v-bound", detail::suite_v_bound},
      {"catalan", detail::suite_catalan},
      {"trace-reduction", detail::suite_trace_reduction},
      {"mde-semicircle", detail::suite_mde},
  };
  std::vector<SuiteResult> out;
  for (const auto& [name, fn] : suites) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("exception: ") + e.what()});
    }
  }
  return out;
}

}  // namespace tgue
