#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tgue/matrix.hpp"
#include "tgue/rng.hpp"

namespace tgue {

/// Orthonormal basis of n×n Hermitian matrices under ⟨A, B⟩ = Re tr(A* B).
///
/// Order: E_ll for l ascending, then E_rs = (e_r e_s* + e_s e_r*)/√2 for r < s
/// lexicographic, then Ẽ_rs = (i/√2)(e_r e_s* − e_s e_r*) in the same order.
/// Elements are kept as at most two (row, col, value) entries and only
/// materialized on request.
class HermitianBasis {
 public:
  struct Entry {
    Eigen::Index row;
    Eigen::Index col;
    Complex value;
  };

  explicit HermitianBasis(Eigen::Index n) : n_(n) {
    if (n < 1) throw InvalidArgument("hermitian_basis: n must be positive");
    pairs_.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index s = r + 1; s < n; ++s) pairs_.push_back({r, s});
    }
  }

  Eigen::Index n() const noexcept { return n_; }
  Eigen::Index size() const noexcept { return n_ * n_; }

  /// Nonzero entries of element j.
  std::vector<Entry> entries(Eigen::Index j) const {
    const double h = 1.0 / std::sqrt(2.0);
    const auto npairs = static_cast<Eigen::Index>(pairs_.size());
    if (j < 0 || j >= size()) throw InvalidArgument("HermitianBasis: index out of range");
    if (j < n_) return {{j, j, Complex(1.0, 0.0)}};
    if (j < n_ + npairs) {
      const auto [r, s] = pairs_[j - n_];
      return {{r, s, Complex(h, 0.0)}, {s, r, Complex(h, 0.0)}};
    }
    const auto [r, s] = pairs_[j - n_ - npairs];
    return {{r, s, Complex(0.0, h)}, {s, r, Complex(0.0, -h)}};
  }

  ComplexMatrix dense(Eigen::Index j) const {
    ComplexMatrix a = ComplexMatrix::Zero(n_, n_);
    for (const auto& e : entries(j)) a(e.row, e.col) = e.value;
    return a;
  }

  HermitianMatrix element(Eigen::Index j) const { return HermitianMatrix(dense(j)); }

  /// All n² elements as dense matrices.
  std::vector<HermitianMatrix> matrices() const {
    std::vector<HermitianMatrix> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (Eigen::Index j = 0; j < size(); ++j) out.push_back(element(j));
    return out;
  }

 private:
  Eigen::Index n_;
  std::vector<std::array<Eigen::Index, 2>> pairs_;
};

inline HermitianBasis hermitian_basis(Eigen::Index n) { return HermitianBasis(n); }

/// One GUE draw X = n^{-1/2} Σ_j g_j A_j, normalized so that E[X²] = I.
struct GueSample {
  Eigen::Index n = 0;
  RealVector coefficients;  // g_j, basis order
  HermitianMatrix matrix;
  std::uint64_t seed = 0;
};

/// Draws n² standard normals from GaussianSource(seed) in basis order and
/// assembles the matrix entrywise.
inline GueSample sample_gue(Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample_gue: n must be positive");
  GaussianSource gauss(seed);
  const auto count = n * n;
  RealVector g(count);
  for (Eigen::Index j = 0; j < count; ++j) g(j) = gauss();

  const double diag_scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double off_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(n));
  const Eigen::Index npairs = n * (n - 1) / 2;
  ComplexMatrix x(n, n);
  for (Eigen::Index l = 0; l < n; ++l) x(l, l) = Complex(diag_scale * g(l), 0.0);
  Eigen::Index p = 0;
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index s = r + 1; s < n; ++s, ++p) {
      const Complex v(off_scale * g(n + p), off_scale * g(n + npairs + p));
      x(r, s) = v;
      x(s, r) = std::conj(v);
    }
  }
  return GueSample{n, std::move(g), HermitianMatrix(std::move(x)), seed};
}

/// Coefficients c_j = ⟨A_j, X⟩, so that X = Σ_j c_j A_j.
inline RealVector decompose(const ComplexMatrix& x, const HermitianBasis& basis) {
  if (x.rows() != basis.n() || x.cols() != basis.n()) throw InvalidArgument("decompose: dimension mismatch");
  RealVector c(basis.size());
  for (Eigen::Index j = 0; j < basis.size(); ++j) {
    Complex acc(0.0, 0.0);
    for (const auto& e : basis.entries(j)) acc += std::conj(e.value) * x(e.row, e.col);
    c(j) = acc.real();
  }
  return c;
}

/// Σ_j c_j A_j.
inline ComplexMatrix assemble(const RealVector& c, const HermitianBasis& basis) {
  if (c.size() != basis.size()) throw InvalidArgument("assemble: coefficient count mismatch");
  ComplexMatrix x = ComplexMatrix::Zero(basis.n(), basis.n());
  for (Eigen::Index j = 0; j < basis.size(); ++j) {
    for (const auto& e : basis.entries(j)) x(e.row, e.col) += c(j) * e.value;
  }
  return x;
}

/// Matrix with i.i.d. standard complex Gaussian entries (re, im each N(0, 1/2)).
inline ComplexMatrix random_complex_matrix(Eigen::Index rows, Eigen::Index cols, GaussianSource& gauss) {
  ComplexMatrix a(rows, cols);
  const double s = std::sqrt(0.5);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = gauss();
      a(r, c) = Complex(s * re, s * gauss());
    }
  }
  return a;
}

inline HermitianMatrix random_hermitian(Eigen::Index n, GaussianSource& gauss) {
  return HermitianMatrix::hermitian_part(random_complex_matrix(n, n, gauss));
}

}  // namespace tgue
