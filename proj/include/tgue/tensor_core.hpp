#pragma once

// Leg calculus on (C^N)^{⊗m}.
//
// Basis index convention: an index r in [0, N^m) is read as m base-N digits,
// leg 1 being the most significant one. This matches kron(), so the Kronecker
// product X ⊗ Y puts X on legs 1..|J| and Y on the rest.

#include <Eigen/SparseCore>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tgue/errors.hpp"
#include "tgue/matrix.hpp"

namespace tgue {

/// Ascending subset of legs {1..m}.
class LegSubset {
 public:
  LegSubset() = default;

  LegSubset(int m, std::vector<int> legs) : m_(m), legs_(std::move(legs)) {
    if (m_ < 1) throw InvalidArgument("LegSubset: m must be positive");
    if (legs_.empty()) throw InvalidArgument("LegSubset: empty leg set");
    std::sort(legs_.begin(), legs_.end());
    for (std::size_t i = 0; i < legs_.size(); ++i) {
      if (legs_[i] < 1 || legs_[i] > m_) {
        throw InvalidArgument("LegSubset: leg " + std::to_string(legs_[i]) + " outside [1, " +
                              std::to_string(m_) + "]");
      }
      if (i > 0 && legs_[i] == legs_[i - 1]) throw InvalidArgument("LegSubset: repeated leg");
    }
  }

  int m() const noexcept { return m_; }
  int size() const noexcept { return static_cast<int>(legs_.size()); }
  const std::vector<int>& legs() const noexcept { return legs_; }
  bool contains(int leg) const { return std::binary_search(legs_.begin(), legs_.end(), leg); }

  std::vector<int> complement() const {
    std::vector<int> out;
    for (int l = 1; l <= m_; ++l) {
      if (!contains(l)) out.push_back(l);
    }
    return out;
  }

  bool operator==(const LegSubset&) const = default;

 private:
  int m_ = 0;
  std::vector<int> legs_;
};

/// Bijection on {0, ..., size-1}, stored as an index map. As a matrix it sends
/// basis vector e_i to e_{map[i]}.
class IndexPermutation {
 public:
  IndexPermutation() = default;

  explicit IndexPermutation(std::vector<std::int64_t> map) : map_(std::move(map)) {
    inverse_.assign(map_.size(), -1);
    const auto n = static_cast<std::int64_t>(map_.size());
    for (std::int64_t i = 0; i < n; ++i) {
      const auto j = map_[i];
      if (j < 0 || j >= n || inverse_[j] != -1) throw InvalidArgument("IndexPermutation: not a bijection");
      inverse_[j] = i;
    }
  }

  static IndexPermutation identity(std::int64_t n) {
    std::vector<std::int64_t> m(n);
    std::iota(m.begin(), m.end(), 0);
    return IndexPermutation(std::move(m));
  }

  std::int64_t size() const noexcept { return static_cast<std::int64_t>(map_.size()); }
  std::int64_t operator()(std::int64_t i) const { return map_[i]; }
  const std::vector<std::int64_t>& map() const noexcept { return map_; }

  IndexPermutation inverse() const { return IndexPermutation(inverse_); }

  /// (this ∘ other)(i) = this(other(i)).
  IndexPermutation compose(const IndexPermutation& other) const {
    if (other.size() != size()) throw InvalidArgument("IndexPermutation: size mismatch in compose");
    std::vector<std::int64_t> m(map_.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = map_[other.map_[i]];
    return IndexPermutation(std::move(m));
  }

  bool is_identity() const {
    for (std::size_t i = 0; i < map_.size(); ++i) {
      if (map_[i] != static_cast<std::int64_t>(i)) return false;
    }
    return true;
  }

  /// Matrix-vector product P v.
  ComplexVector apply(const ComplexVector& v) const {
    if (v.size() != size()) throw InvalidArgument("IndexPermutation: vector size mismatch");
    ComplexVector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out(map_[i]) = v(i);
    return out;
  }

 private:
  std::vector<std::int64_t> map_;
  std::vector<std::int64_t> inverse_;
};

namespace detail {

inline void check_leg_permutation(std::span<const int> sigma, int m) {
  if (static_cast<int>(sigma.size()) != m) throw InvalidArgument("leg permutation must have m entries");
  std::vector<bool> seen(m + 1, false);
  for (int s : sigma) {
    if (s < 1 || s > m || seen[s]) throw InvalidArgument("leg permutation is not a bijection of {1..m}");
    seen[s] = true;
  }
}

/// offsets[k] = index contribution of the digits of k (|legs| digits, most
/// significant first) placed at the given legs of an m-leg index.
inline std::vector<std::int64_t> digit_offsets(std::span<const int> legs, int N, int m) {
  const int q = static_cast<int>(legs.size());
  const std::int64_t count = ipow(N, q);
  std::vector<std::int64_t> weight(q);
  for (int l = 0; l < q; ++l) weight[l] = ipow(N, m - legs[l]);
  std::vector<std::int64_t> out(count);
  for (std::int64_t k = 0; k < count; ++k) {
    std::int64_t rest = k;
    std::int64_t off = 0;
    for (int l = q - 1; l >= 0; --l) {
      off += (rest % N) * weight[l];
      rest /= N;
    }
    out[k] = off;
  }
  return out;
}

inline void check_square(const ComplexMatrix& x, std::int64_t n, const char* what) {
  if (x.rows() != n || x.cols() != n) {
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(n) + "x" + std::to_string(n) +
                          ", got " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
}

}  // namespace detail

/// Inverse of a 1-based leg permutation.
inline std::vector<int> invert_legs(std::span<const int> sigma) {
  std::vector<int> inv(sigma.size());
  for (std::size_t l = 0; l < sigma.size(); ++l) inv[sigma[l] - 1] = static_cast<int>(l) + 1;
  return inv;
}

/// Index map of A_σ on (C^N)^{⊗m}: A_σ(x_1 ⊗ … ⊗ x_m) = x_σ(1) ⊗ … ⊗ x_σ(m).
/// Output digit at leg l is the input digit at leg σ(l). sigma is 1-based.
inline IndexPermutation leg_index_permutation(std::span<const int> sigma, int N, int m) {
  if (N < 1) throw InvalidArgument("leg_index_permutation: N must be positive");
  detail::check_leg_permutation(sigma, m);
  const std::int64_t n = ipow(N, m);
  std::vector<std::int64_t> map(n);
  std::vector<int> in_digits(m);
  for (std::int64_t r = 0; r < n; ++r) {
    std::int64_t rest = r;
    for (int l = m - 1; l >= 0; --l) {
      in_digits[l] = static_cast<int>(rest % N);
      rest /= N;
    }
    std::int64_t out = 0;
    for (int l = 0; l < m; ++l) out = out * N + in_digits[sigma[l] - 1];
    map[r] = out;
  }
  return IndexPermutation(std::move(map));
}

/// L_σ(X) = A_σ X A_σ^{-1}, by relabeling rows and columns.
inline ComplexMatrix conjugate_legs(const ComplexMatrix& x, std::span<const int> sigma, int N, int m) {
  const auto p = leg_index_permutation(sigma, N, m);
  detail::check_square(x, p.size(), "conjugate_legs");
  ComplexMatrix out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto pc = p(c);
    for (Eigen::Index r = 0; r < x.rows(); ++r) out(p(r), pc) = x(r, c);
  }
  return out;
}

/// σ with σ(l) = a_l for l <= |J|, completed by [m]\J ascending.
inline std::vector<int> leg_placement(const LegSubset& J) {
  std::vector<int> sigma = J.legs();
  for (int l : J.complement()) sigma.push_back(l);
  return sigma;
}

/// X ⊗̃_J Y: X acting on legs J, Y on the complementary legs (both ascending).
///
/// Realized as the leg conjugation of X ⊗ Y that moves factor l to leg a_l,
/// i.e. conjugate_legs with the inverse of leg_placement(J).
inline ComplexMatrix tilde_otimes(const ComplexMatrix& x, const ComplexMatrix& y, const LegSubset& J, int N) {
  const int m = J.m();
  detail::check_square(x, ipow(N, J.size()), "tilde_otimes (X)");
  detail::check_square(y, ipow(N, m - J.size()), "tilde_otimes (Y)");
  const auto inv = invert_legs(leg_placement(J));
  return conjugate_legs(kron(x, y), inv, N, m);
}

/// X ⊗̃_J I, computed entrywise: out(r, c) = X(r_J, c_J) [r_{J^c} = c_{J^c}].
inline ComplexMatrix embed_legs(const ComplexMatrix& x, const LegSubset& J, int N) {
  const int m = J.m();
  const std::int64_t nj = ipow(N, J.size());
  detail::check_square(x, nj, "embed_legs");
  const auto comp = J.complement();
  const auto off_j = detail::digit_offsets(J.legs(), N, m);
  const auto off_c = detail::digit_offsets(comp, N, m);
  const std::int64_t n = ipow(N, m);
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (std::int64_t cj = 0; cj < nj; ++cj) {
    for (std::int64_t rj = 0; rj < nj; ++rj) {
      const Complex v = x(rj, cj);
      if (v == Complex(0.0, 0.0)) continue;
      for (const auto k : off_c) out(off_j[rj] + k, off_j[cj] + k) = v;
    }
  }
  return out;
}

/// Sparse form of embed_legs; nonzeros of X times N^{m-|J|}.
inline Eigen::SparseMatrix<Complex> embed_legs_sparse(const ComplexMatrix& x, const LegSubset& J, int N) {
  const int m = J.m();
  const std::int64_t nj = ipow(N, J.size());
  detail::check_square(x, nj, "embed_legs_sparse");
  const auto off_j = detail::digit_offsets(J.legs(), N, m);
  const auto off_c = detail::digit_offsets(J.complement(), N, m);
  const std::int64_t n = ipow(N, m);
  std::vector<Eigen::Triplet<Complex>> trips;
  for (std::int64_t cj = 0; cj < nj; ++cj) {
    for (std::int64_t rj = 0; rj < nj; ++rj) {
      const Complex v = x(rj, cj);
      if (v == Complex(0.0, 0.0)) continue;
      for (const auto k : off_c) {
        trips.emplace_back(static_cast<int>(off_j[rj] + k), static_cast<int>(off_j[cj] + k), v);
      }
    }
  }
  Eigen::SparseMatrix<Complex> out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

/// Row-major vectorization ι: entry (r, c) goes to position r * cols + c.
inline ComplexVector vectorize(const ComplexMatrix& x) {
  ComplexVector v(x.size());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) v(r * x.cols() + c) = x(r, c);
  }
  return v;
}

/// The permutation U with ι(X ⊗̃_J Y) = U (ι(X) ⊗ ι(Y)).
inline IndexPermutation vectorization_permutation(const LegSubset& J, int N) {
  const int m = J.m();
  const std::int64_t nj = ipow(N, J.size());
  const std::int64_t nc = ipow(N, m - J.size());
  const std::int64_t n = nj * nc;
  const auto off_j = detail::digit_offsets(J.legs(), N, m);
  const auto off_c = detail::digit_offsets(J.complement(), N, m);
  std::vector<std::int64_t> map(n * n);
  for (std::int64_t rx = 0; rx < nj; ++rx) {
    for (std::int64_t cx = 0; cx < nj; ++cx) {
      for (std::int64_t ry = 0; ry < nc; ++ry) {
        for (std::int64_t cy = 0; cy < nc; ++cy) {
          const std::int64_t src = (rx * nj + cx) * nc * nc + (ry * nc + cy);
          const std::int64_t r = off_j[rx] + off_c[ry];
          const std::int64_t c = off_j[cx] + off_c[cy];
          map[src] = r * n + c;
        }
      }
    }
  }
  return IndexPermutation(std::move(map));
}

/// ‖Σ E_i E_i*‖ ‖Σ F_i* F_i‖ − ‖Σ E_i F_i‖², nonnegative up to roundoff.
inline double matrix_cauchy_schwarz_gap(std::span<const ComplexMatrix> e, std::span<const ComplexMatrix> f) {
  if (e.size() != f.size() || e.empty()) throw InvalidArgument("matrix_cauchy_schwarz_gap: lists must match and be nonempty");
  const auto rows = e[0].rows();
  const auto inner = e[0].cols();
  const auto cols = f[0].cols();
  ComplexMatrix ee = ComplexMatrix::Zero(rows, rows);
  ComplexMatrix ff = ComplexMatrix::Zero(cols, cols);
  ComplexMatrix ef = ComplexMatrix::Zero(rows, cols);
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i].rows() != rows || e[i].cols() != inner || f[i].rows() != inner || f[i].cols() != cols) {
      throw InvalidArgument("matrix_cauchy_schwarz_gap: dimension mismatch at index " + std::to_string(i));
    }
    ee += e[i] * e[i].adjoint();
    ff += f[i].adjoint() * f[i];
    ef += e[i] * f[i];
  }
  const double s = spectral_norm(ef);
  return hermitian_norm(ee) * hermitian_norm(ff) - s * s;
}

}  // namespace tgue
