#pragma once

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tgue/gue_ensemble.hpp"
#include "tgue/matrix.hpp"
#include "tgue/rng.hpp"
#include "tgue/tensor_core.hpp"

namespace tgue {

/// One summand B_i ⊗ (X_{J_i} ⊗̃_{J_i} I).
struct ModelTerm {
  LegSubset legs;
  HermitianMatrix coefficient;
};

/// X_N = Σ_i B_i ⊗ (X_{J_i} ⊗̃_{J_i} I_N^{⊗(m−|J_i|)}) with independent GUE X_{J_i}
/// of size N^{|J_i|}, every |J_i| > m/2.
class TensorGueModel {
 public:
  static constexpr std::int64_t kMaxSampleDim = 8192;

  TensorGueModel(int N, int m, Eigen::Index d, std::vector<ModelTerm> terms)
      : N_(N), m_(m), d_(d), terms_(std::move(terms)) {
    if (N_ < 2) throw InvalidArgument("model: N must be at least 2");
    if (m_ < 1) throw InvalidArgument("model: m must be positive");
    if (d_ < 1) throw InvalidArgument("model: d must be positive");
    if (terms_.empty()) throw InvalidArgument("model: at least one term is required");
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      const auto& t = terms_[i];
      if (t.legs.m() != m_) {
        throw InvalidArgument("model: term " + std::to_string(i + 1) + " leg set built for m=" +
                              std::to_string(t.legs.m()) + ", model has m=" + std::to_string(m_));
      }
      if (2 * t.legs.size() <= m_) {
        throw ModelViolation("model: term " + std::to_string(i + 1) + " has |J| = " + std::to_string(t.legs.size()) +
                             ", need |J| > m/2 = " + std::to_string(m_ / 2.0));
      }
      if (t.coefficient.dim() != d_) {
        throw InvalidArgument("model: term " + std::to_string(i + 1) + " coefficient has dim " +
                              std::to_string(t.coefficient.dim()) + ", expected d=" + std::to_string(d_));
      }
    }
    dim_ = d_ * ipow(N_, m_);
  }

  int N() const noexcept { return N_; }
  int m() const noexcept { return m_; }
  Eigen::Index d() const noexcept { return d_; }
  int k() const noexcept { return static_cast<int>(terms_.size()); }
  const std::vector<ModelTerm>& terms() const noexcept { return terms_; }

  /// d·N^m.
  std::int64_t dimension() const noexcept { return dim_; }

  /// α = min_i (2|J_i| − m) >= 1.
  int alpha() const {
    int a = std::numeric_limits<int>::max();
    for (const auto& t : terms_) a = std::min(a, 2 * t.legs.size() - m_);
    return a;
  }

  /// Same terms at a different site dimension.
  TensorGueModel with_N(int N) const { return TensorGueModel(N, m_, d_, terms_); }

 private:
  int N_;
  int m_;
  Eigen::Index d_;
  std::vector<ModelTerm> terms_;
  std::int64_t dim_ = 0;
};

inline TensorGueModel build_model(int N, int m, Eigen::Index d, std::vector<ModelTerm> terms) {
  return TensorGueModel(N, m, d, std::move(terms));
}

/// Seed of term i's GUE inside a draw with the given seed.
inline std::uint64_t term_seed(std::uint64_t seed, int term_index) {
  return derive_seed(seed, {static_cast<std::uint64_t>(term_index)});
}

/// The embedded letters X_{J_i} ⊗̃ I (without B_i) of one draw.
inline std::vector<ComplexMatrix> sample_legs(const TensorGueModel& model, std::uint64_t seed) {
  if (ipow(model.N(), model.m()) > TensorGueModel::kMaxSampleDim) {
    throw SizeLimitError("sample_legs: N^m exceeds " + std::to_string(TensorGueModel::kMaxSampleDim));
  }
  std::vector<ComplexMatrix> out;
  out.reserve(model.terms().size());
  for (int i = 0; i < model.k(); ++i) {
    const auto& t = model.terms()[i];
    const auto gue = sample_gue(ipow(model.N(), t.legs.size()), term_seed(seed, i));
    out.push_back(embed_legs(gue.matrix, t.legs, model.N()));
  }
  return out;
}

/// One realization of X_N, of size d·N^m.
inline HermitianMatrix sample_X_N(const TensorGueModel& model, std::uint64_t seed) {
  if (model.dimension() > TensorGueModel::kMaxSampleDim) {
    throw SizeLimitError("sample_X_N: dimension " + std::to_string(model.dimension()) + " exceeds " +
                         std::to_string(TensorGueModel::kMaxSampleDim));
  }
  const auto n = ipow(model.N(), model.m());
  ComplexMatrix x = ComplexMatrix::Zero(model.dimension(), model.dimension());
  for (int i = 0; i < model.k(); ++i) {
    const auto& t = model.terms()[i];
    const auto gue = sample_gue(ipow(model.N(), t.legs.size()), term_seed(seed, i));
    const ComplexMatrix leg = embed_legs(gue.matrix, t.legs, model.N());
    const ComplexMatrix& b = t.coefficient;
    for (Eigen::Index r = 0; r < model.d(); ++r) {
      for (Eigen::Index c = 0; c < model.d(); ++c) {
        if (b(r, c) != Complex(0.0, 0.0)) x.block(r * n, c * n, n, n) += b(r, c) * leg;
      }
    }
  }
  return HermitianMatrix(std::move(x));
}

// ---------------------------------------------------------------------------
// Control parameters

/// ‖Σ B_i²‖, the least admissible Γ.
inline double gamma_param(const TensorGueModel& model) {
  ComplexMatrix s = ComplexMatrix::Zero(model.d(), model.d());
  for (const auto& t : model.terms()) s += t.coefficient.matrix() * t.coefficient.matrix();
  return hermitian_norm(s);
}

/// Σ ‖ι(B_i) ι(B_i)*‖ evaluated as the norm of each dense rank-one outer product.
inline double theta_param_outer(const TensorGueModel& model) {
  double acc = 0.0;
  for (const auto& t : model.terms()) {
    const ComplexVector v = vectorize(t.coefficient);
    acc += hermitian_norm(v * v.adjoint());
  }
  return acc;
}

/// Σ ‖ι(B_i) ι(B_i)*‖ = Σ ‖B_i‖_F², the least admissible Θ.
///
/// For d <= 8 the rank-one outer products are also formed densely and the two
/// evaluations must agree to 1e-10 relative.
inline double theta_param(const TensorGueModel& model) {
  double acc = 0.0;
  for (const auto& t : model.terms()) acc += t.coefficient.matrix().squaredNorm();
  if (model.d() <= 8) {
    const double dense = theta_param_outer(model);
    if (std::abs(dense - acc) > 1e-10 * std::max(1.0, acc)) {
      throw std::logic_error("theta_param: rank-one and Frobenius evaluations disagree");
    }
  }
  return acc;
}

namespace detail {

/// N^{-|J|/2} B ⊗ (A_j ⊗̃_J I) as a sparse matrix.
inline Eigen::SparseMatrix<Complex> coefficient_matrix(const TensorGueModel& model, const ModelTerm& term,
                                                       const HermitianBasis& basis, Eigen::Index j) {
  const int N = model.N();
  const auto n = ipow(N, model.m());
  const double scale = std::pow(static_cast<double>(N), -0.5 * term.legs.size());
  const auto e = embed_legs_sparse(basis.dense(j), term.legs, N);
  const ComplexMatrix& b = term.coefficient;
  std::vector<Eigen::Triplet<Complex>> trips;
  for (Eigen::Index r = 0; r < b.rows(); ++r) {
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
      const Complex bv = b(r, c);
      if (bv == Complex(0.0, 0.0)) continue;
      for (int col = 0; col < e.outerSize(); ++col) {
        for (Eigen::SparseMatrix<Complex>::InnerIterator it(e, col); it; ++it) {
          trips.emplace_back(static_cast<int>(r * n + it.row()), static_cast<int>(c * n + it.col()),
                             scale * bv * it.value());
        }
      }
    }
  }
  Eigen::SparseMatrix<Complex> out(model.dimension(), model.dimension());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

inline std::int64_t coefficient_count(const TensorGueModel& model) {
  std::int64_t c = 0;
  for (const auto& t : model.terms()) c += ipow(model.N(), 2 * t.legs.size());
  return c;
}

}  // namespace detail

/// σ from its definition: sqrt‖Σ_t C_t²‖ over every Gaussian coefficient
/// matrix C_t = N^{-|J_i|/2} B_i ⊗ (A_{i,j} ⊗̃ I). Requires d·N^m <= 4096.
inline double sigma_param_exact(const TensorGueModel& model) {
  constexpr std::int64_t kMaxDim = 4096;
  if (model.dimension() > kMaxDim) {
    throw SizeLimitError("sigma_param_exact: dimension " + std::to_string(model.dimension()) + " exceeds " +
                         std::to_string(kMaxDim));
  }
  if (detail::coefficient_count(model) * model.dimension() > 200'000'000) {
    throw SizeLimitError("sigma_param_exact: too many coefficient matrices");
  }
  ComplexMatrix s = ComplexMatrix::Zero(model.dimension(), model.dimension());
  for (const auto& t : model.terms()) {
    const auto basis = hermitian_basis(ipow(model.N(), t.legs.size()));
    for (Eigen::Index j = 0; j < basis.size(); ++j) {
      const auto c = detail::coefficient_matrix(model, t, basis, j);
      s += ComplexMatrix(c * c);
    }
  }
  return std::sqrt(hermitian_norm(s));
}

/// σ = sqrt‖Σ B_i²‖.
inline double sigma_param_closed(const TensorGueModel& model) { return std::sqrt(gamma_param(model)); }

/// v from its definition via the Gram matrix G_ts = ⟨C_t, C_s⟩_F, whose top
/// eigenvalue equals ‖Σ_t ι(C_t) ι(C_t)*‖. Requires d·N^m <= 64.
inline double v_param_exact(const TensorGueModel& model) {
  constexpr std::int64_t kMaxDim = 64;
  if (model.dimension() > kMaxDim) {
    throw SizeLimitError("v_param_exact: dimension " + std::to_string(model.dimension()) + " exceeds " +
                         std::to_string(kMaxDim));
  }
  const std::int64_t count = detail::coefficient_count(model);
  const std::int64_t len = model.dimension() * model.dimension();
  // Columns ι(C_t), row-major vectorization.
  std::vector<Eigen::Triplet<Complex>> trips;
  std::int64_t col = 0;
  for (const auto& t : model.terms()) {
    const auto basis = hermitian_basis(ipow(model.N(), t.legs.size()));
    for (Eigen::Index j = 0; j < basis.size(); ++j, ++col) {
      const auto c = detail::coefficient_matrix(model, t, basis, j);
      for (int oc = 0; oc < c.outerSize(); ++oc) {
        for (Eigen::SparseMatrix<Complex>::InnerIterator it(c, oc); it; ++it) {
          trips.emplace_back(static_cast<int>(it.row() * model.dimension() + it.col()), static_cast<int>(col),
                             it.value());
        }
      }
    }
  }
  Eigen::SparseMatrix<Complex> v(len, count);
  v.setFromTriplets(trips.begin(), trips.end());
  const Eigen::SparseMatrix<Complex> vt = v.adjoint();
  const ComplexMatrix g = count <= len ? ComplexMatrix(vt * v) : ComplexMatrix(v * vt);
  return std::sqrt(hermitian_norm(g));
}

/// N^{-α/2} sqrt(Θ), the upper bound on v.
inline double v_param_bound(const TensorGueModel& model) {
  return std::pow(static_cast<double>(model.N()), -0.5 * model.alpha()) * std::sqrt(theta_param(model));
}

/// Optional looser Γ, Θ for experiments; each must dominate the least admissible value.
struct ParamOverrides {
  std::optional<double> gamma;
  std::optional<double> theta;
};

struct ControlParams {
  int alpha = 0;
  double gamma = 0.0;
  double theta = 0.0;
  double sigma = 0.0;
  double v = 0.0;
  double u = 0.0;
};

/// α, Γ, Θ, σ, v and u = sqrt(σ v). With exact = true, σ and v come from the
/// coefficient-matrix definitions (size caps apply); otherwise from the closed
/// form and the bound.
inline ControlParams control_params(const TensorGueModel& model, const ParamOverrides& overrides = {},
                                    bool exact = false) {
  ControlParams p;
  p.alpha = model.alpha();
  const double g = gamma_param(model);
  const double th = theta_param(model);
  p.gamma = g;
  p.theta = th;
  if (overrides.gamma) {
    if (*overrides.gamma < g * (1.0 - 1e-12)) throw InvalidArgument("control_params: Γ override below ‖Σ B_i²‖");
    p.gamma = *overrides.gamma;
  }
  if (overrides.theta) {
    if (*overrides.theta < th * (1.0 - 1e-12)) throw InvalidArgument("control_params: Θ override below Σ ‖B_i‖_F²");
    p.theta = *overrides.theta;
  }
  p.sigma = exact ? sigma_param_exact(model) : sigma_param_closed(model);
  p.v = exact ? v_param_exact(model) : v_param_bound(model);
  p.u = std::sqrt(p.sigma * p.v);
  return p;
}

/// N^{-α/4} Γ^{1/4} Θ^{1/4} (ln^{3/4}(d N^m) + t): the band width per unit of C.
inline double band_scale(const TensorGueModel& model, double t, const ParamOverrides& overrides = {}) {
  if (t < 0.0) throw InvalidArgument("band: t must be nonnegative");
  const double g = gamma_param(model);
  const double th = theta_param(model);
  if (overrides.gamma && *overrides.gamma < g * (1.0 - 1e-12)) throw InvalidArgument("band: Γ override below ‖Σ B_i²‖");
  if (overrides.theta && *overrides.theta < th * (1.0 - 1e-12)) throw InvalidArgument("band: Θ override below Σ ‖B_i‖_F²");
  const double gamma = overrides.gamma.value_or(g);
  const double theta = overrides.theta.value_or(th);
  const double log_dim = std::log(static_cast<double>(model.dimension()));
  return std::pow(static_cast<double>(model.N()), -0.25 * model.alpha()) * std::pow(gamma, 0.25) *
         std::pow(theta, 0.25) * (std::pow(log_dim, 0.75) + t);
}

/// ε(N, t; C) = C N^{-α/4} Γ^{1/4} Θ^{1/4} (ln^{3/4}(d N^m) + t), natural log.
inline double band_epsilon(const TensorGueModel& model, double t, double C, const ParamOverrides& overrides = {}) {
  if (!(C > 0.0)) throw InvalidArgument("band_epsilon: C must be positive");
  return C * band_scale(model, t, overrides);
}

/// N^{-α} m³ ln³ N, the rate appearing in the polynomial-norm statement.
inline double polynomial_rate(const TensorGueModel& model) {
  const double ln_n = std::log(static_cast<double>(model.N()));
  const double m = model.m();
  return std::pow(static_cast<double>(model.N()), -static_cast<double>(model.alpha())) * m * m * m * ln_n * ln_n * ln_n;
}

}  // namespace tgue
