#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "tgue/free_probability.hpp"
#include "tgue/matrix.hpp"
#include "tgue/parallel.hpp"

namespace tgue {

/// Sorted eigenvalues.
struct Spectrum {
  std::vector<double> eigenvalues;

  double min() const { return eigenvalues.front(); }
  double max() const { return eigenvalues.back(); }
};

inline constexpr Eigen::Index kMaxEigenDim = 8192;

inline Spectrum hermitian_spectrum(const HermitianMatrix& a) {
  if (a.dim() > kMaxEigenDim) throw SizeLimitError("hermitian_spectrum: dimension exceeds 8192");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a.matrix(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("hermitian_spectrum: eigensolver failed");
  const auto& ev = es.eigenvalues();
  Spectrum s{std::vector<double>(ev.data(), ev.data() + ev.size())};
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
  return s;
}

/// Accepts a general matrix, rejecting it unless Hermitian to 1e-10 relative.
inline Spectrum hermitian_spectrum(const ComplexMatrix& a) { return hermitian_spectrum(HermitianMatrix(a, 1e-10)); }

inline double operator_norm(const Spectrum& s) {
  if (s.eigenvalues.empty()) return 0.0;
  return std::max(std::abs(s.min()), std::abs(s.max()));
}

inline double operator_norm(const HermitianMatrix& a) { return operator_norm(hermitian_spectrum(a)); }

// ---------------------------------------------------------------------------
// Matrix Dyson equation  G = (z I − η(G))^{-1}
//
// Sign convention: G(z) ~ 1/z at infinity, so Im G(z) ≺ 0 for Im z > 0 and the
// density is ρ(x) = −(1/π) Im tr̄ G(x + iδ).

struct MdeSettings {
  double tol = 1e-12;
  long max_iter = 2'000'000;
  double initial_damping = 0.5;
  double min_damping = 1.0 / 1024.0;
};

struct MdeSolution {
  ComplexMatrix G;
  double residual = 0.0;
  long iterations = 0;
};

namespace detail {

inline ComplexMatrix mde_map(const CovarianceMap& eta, Complex z, const ComplexMatrix& g) {
  const auto d = g.rows();
  if (d == 1) {
    return ComplexMatrix::Constant(1, 1, 1.0 / (z - eta.apply(g)(0, 0)));
  }
  ComplexMatrix a = -eta.apply(g);
  a.diagonal().array() += z;
  return a.partialPivLu().inverse();
}

}  // namespace detail

/// Damped fixed-point iteration G ← (1−λ)G + λ (zI − η(G))^{-1}. λ starts at
/// settings.initial_damping, is halved whenever the residual grows and
/// recovers by 10% per improving step, never exceeding the initial value.
inline MdeSolution mde_solve(const CovarianceMap& eta, Complex z, const MdeSettings& settings = {},
                             const std::optional<ComplexMatrix>& initial = std::nullopt) {
  if (!(z.imag() > 0.0)) throw InvalidArgument("mde_solve: Im z must be positive");
  if (settings.tol < 1e-14) throw InvalidArgument("mde_solve: tol must be at least 1e-14");
  const auto d = eta.dim();
  ComplexMatrix g = initial ? *initial : ComplexMatrix(ComplexMatrix::Identity(d, d) / z);
  if (g.rows() != d || g.cols() != d) throw InvalidArgument("mde_solve: initial guess has wrong dimension");
  double lambda = settings.initial_damping;
  ComplexMatrix f = detail::mde_map(eta, z, g);
  double res = (g - f).norm();
  long it = 0;
  while (res > settings.tol) {
    if (it >= settings.max_iter || !std::isfinite(res)) {
      throw ConvergenceFailure("mde_solve: no convergence at z = (" + std::to_string(z.real()) + ", " +
                                   std::to_string(z.imag()) + "), residual " + std::to_string(res),
                               res, it);
    }
    ++it;
    g = (1.0 - lambda) * g + lambda * f;
    f = detail::mde_map(eta, z, g);
    const double next = (g - f).norm();
    if (next > res) {
      lambda = std::max(0.5 * lambda, settings.min_damping);
    } else {
      lambda = std::min(1.1 * lambda, settings.initial_damping);
    }
    res = next;
  }
  // Branch check: Im G = (G − G*)/2i must be negative semidefinite.
  const ComplexMatrix im = (f - f.adjoint()) / Complex(0.0, 2.0);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(im, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().maxCoeff() > 10.0 * settings.tol) {
    throw ConvergenceFailure("mde_solve: converged to a solution with Im G not negative", res, it);
  }
  return MdeSolution{std::move(f), res, it};
}

inline MdeSolution mde_solve(const std::vector<HermitianMatrix>& coeffs, Complex z, const MdeSettings& settings = {}) {
  return mde_solve(CovarianceMap(coeffs), z, settings);
}

/// Stieltjes transform of the standard semicircle, (z − sqrt(z²−4))/2 on the
/// branch with G ~ 1/z.
inline Complex semicircle_stieltjes(Complex z) {
  return 0.5 * (z - std::sqrt(z - 2.0) * std::sqrt(z + 2.0));
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SpectralDensity {
  std::vector<double> x;
  std::vector<double> rho;
  double grid_step = 0.0;
  double smoothing = 0.0;
  double support_threshold = 0.0;
  std::vector<Interval> support;
  double integral = 0.0;
  double max_residual = 0.0;
  long total_iterations = 0;

  /// ∫ x^p ρ(x) dx by the trapezoidal rule.
  double moment(int p) const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      acc += 0.5 * (std::pow(x[i], p) * rho[i] + std::pow(x[i + 1], p) * rho[i + 1]) * (x[i + 1] - x[i]);
    }
    return acc;
  }

  /// max |endpoint| of the support.
  double support_radius() const {
    double r = 0.0;
    for (const auto& iv : support) r = std::max({r, std::abs(iv.lo), std::abs(iv.hi)});
    return r;
  }
};

struct DensityOptions {
  double x_min = 0.0;
  double x_max = 0.0;  // x_min == x_max: use default_density_range
  double grid_step = 1e-2;
  double smoothing = 1e-3;
  double support_threshold = 1e-3;
  MdeSettings solver{};
  unsigned threads = 1;
};

/// ±1.1 · 2 sqrt‖Σ B_i²‖.
inline Interval default_density_range(const CovarianceMap& eta) {
  const double radius = 2.0 * std::sqrt(hermitian_norm(eta.eta_identity()));
  const double r = std::max(1.1 * radius, 1e-3);
  return {-r, r};
}

/// Maximal runs of grid points with ρ > threshold; endpoints are refined by
/// linear interpolation against the neighboring sub-threshold point.
inline std::vector<Interval> detect_support(const std::vector<double>& x, const std::vector<double>& rho,
                                            double threshold) {
  std::vector<Interval> out;
  const std::size_t n = x.size();
  std::size_t i = 0;
  auto cross = [&](std::size_t below, std::size_t above) {
    const double t = (threshold - rho[below]) / (rho[above] - rho[below]);
    return x[below] + t * (x[above] - x[below]);
  };
  while (i < n) {
    if (rho[i] <= threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && rho[j + 1] > threshold) ++j;
    const double lo = i == 0 ? x[0] : cross(i - 1, i);
    const double hi = j + 1 == n ? x[n - 1] : cross(j + 1, j);
    out.push_back({lo, hi});
    i = j + 1;
  }
  return out;
}

/// ρ(x) = −(1/π) Im tr̄ G(x + i·smoothing) on a uniform grid.
///
/// The grid is cut into fixed blocks of 64 points; each block warm-starts its
/// solves from the previous point, and blocks run independently, so the result
/// does not depend on the worker count.
inline SpectralDensity free_spectral_density(const CovarianceMap& eta, DensityOptions opt = {}) {
  if (opt.smoothing < 1e-6 || opt.smoothing > 1e-1) throw InvalidArgument("free_spectral_density: smoothing outside [1e-6, 1e-1]");
  if (!(opt.grid_step > 0.0)) throw InvalidArgument("free_spectral_density: grid_step must be positive");
  if (opt.x_min == opt.x_max) {
    const auto r = default_density_range(eta);
    opt.x_min = r.lo;
    opt.x_max = r.hi;
  }
  if (opt.x_max < opt.x_min) throw InvalidArgument("free_spectral_density: empty range");
  const auto count = static_cast<std::size_t>(std::floor((opt.x_max - opt.x_min) / opt.grid_step + 1e-9)) + 1;
  if (count > 10'000'000) throw SizeLimitError("free_spectral_density: grid too large");

  SpectralDensity out;
  out.grid_step = opt.grid_step;
  out.smoothing = opt.smoothing;
  out.support_threshold = opt.support_threshold;
  out.x.resize(count);
  out.rho.resize(count);
  std::vector<double> residual(count);
  std::vector<long> iters(count);
  for (std::size_t i = 0; i < count; ++i) out.x[i] = opt.x_min + static_cast<double>(i) * opt.grid_step;

  constexpr std::size_t kBlock = 64;
  const std::size_t blocks = (count + kBlock - 1) / kBlock;
  parallel_for(blocks, opt.threads, [&](std::size_t b) {
    std::optional<ComplexMatrix> warm;
    for (std::size_t i = b * kBlock; i < std::min(count, (b + 1) * kBlock); ++i) {
      const auto sol = mde_solve(eta, Complex(out.x[i], opt.smoothing), opt.solver, warm);
      out.rho[i] = std::max(0.0, -normalized_trace(sol.G).imag() / std::numbers::pi);
      residual[i] = sol.residual;
      iters[i] = sol.iterations;
      warm = sol.G;
    }
  });
  for (std::size_t i = 0; i < count; ++i) {
    out.max_residual = std::max(out.max_residual, residual[i]);
    out.total_iterations += iters[i];
  }
  out.integral = out.moment(0);
  out.support = detect_support(out.x, out.rho, opt.support_threshold);
  // η = 0: the law is the point mass at 0, which no grid resolves.
  if (max_abs_entry(eta.eta_identity()) == 0.0) out.support = {{0.0, 0.0}};
  return out;
}

inline SpectralDensity free_spectral_density(const std::vector<HermitianMatrix>& coeffs, const DensityOptions& opt = {}) {
  return free_spectral_density(CovarianceMap(coeffs), opt);
}

/// max over eigenvalues of the distance to the nearest support interval.
inline double inclusion_excess(const Spectrum& spec, const std::vector<Interval>& support) {
  if (support.empty()) throw InvalidArgument("inclusion_excess: empty support");
  double worst = 0.0;
  for (double lam : spec.eigenvalues) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& iv : support) {
      const double dist = lam < iv.lo ? iv.lo - lam : (lam > iv.hi ? lam - iv.hi : 0.0);
      best = std::min(best, dist);
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace tgue
