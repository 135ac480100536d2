#pragma once

// Moments of free semicircular families, scalar and operator-valued.
//
// A free semicircular family with covariance maps η_ℓ has word moments given
// by a sum over non-crossing pairings whose blocks join equal letters; each
// block applies its letter's η to the moment of the enclosed subword. The
// first letter of a word pairs with some later equal letter at position r,
// which splits the word into an inner part and an outer part:
//
//   M(∅) = I,   M(ℓ w) = Σ_{r : w_r = ℓ} η_ℓ(M(w_{<r})) · M(w_{>r}).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "tgue/errors.hpp"
#include "tgue/matrix.hpp"

namespace tgue {

/// Letters are 1-based labels of the semicircular elements.
using Word = std::vector<int>;

/// Perfect matching of {1..q}; pairs stored as (a, b) with a < b, sorted by a.
using NCPairing = std::vector<std::pair<int, int>>;

inline constexpr int kMaxPairingLength = 16;
inline constexpr int kMaxOperatorWordLength = 12;
inline constexpr std::size_t kMaxExpandedWords = 1'000'000;

inline std::uint64_t catalan(int n) {
  std::uint64_t c = 1;
  for (int i = 0; i < n; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
  return c;
}

namespace detail {

/// All non-crossing pairings of the positions lo..hi-1 (1-based labels).
inline std::vector<NCPairing> nc_pairings_range(int lo, int hi) {
  if (lo >= hi) return {NCPairing{}};
  std::vector<NCPairing> out;
  for (int r = lo + 1; r < hi; r += 2) {
    const auto inner = nc_pairings_range(lo + 1, r);
    const auto outer = nc_pairings_range(r + 1, hi);
    for (const auto& a : inner) {
      for (const auto& b : outer) {
        NCPairing p;
        p.reserve(a.size() + b.size() + 1);
        p.emplace_back(lo, r);
        p.insert(p.end(), a.begin(), a.end());
        p.insert(p.end(), b.begin(), b.end());
        std::sort(p.begin(), p.end());
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

}  // namespace detail

/// Every non-crossing pairing of {1..q}. Odd q gives an empty list.
inline std::vector<NCPairing> enumerate_nc_pairings(int q) {
  if (q < 0) throw InvalidArgument("enumerate_nc_pairings: q must be nonnegative");
  if (q > kMaxPairingLength) {
    throw SizeLimitError("enumerate_nc_pairings: q = " + std::to_string(q) + " exceeds " +
                         std::to_string(kMaxPairingLength));
  }
  if (q % 2 != 0) return {};
  return detail::nc_pairings_range(1, q + 1);
}

inline bool is_non_crossing(const NCPairing& p) {
  for (const auto& [a, c] : p) {
    for (const auto& [b, d] : p) {
      if (a < b && b < c && c < d) return false;
    }
  }
  return true;
}

/// τ(s_{w_1} … s_{w_q}) for a free standard semicircular family: the number
/// of non-crossing pairings that only join equal letters.
inline double semicircular_word_moment(const Word& w) {
  const int q = static_cast<int>(w.size());
  if (q % 2 != 0) return 0.0;
  // count[i][j]: admissible pairings of the subword [i, j)
  std::vector<std::vector<double>> count(q + 1, std::vector<double>(q + 1, 0.0));
  for (int i = 0; i <= q; ++i) count[i][i] = 1.0;
  for (int len = 2; len <= q; len += 2) {
    for (int i = 0; i + len <= q; ++i) {
      const int j = i + len;
      double acc = 0.0;
      for (int r = i + 1; r < j; r += 2) {
        if (w[r] == w[i]) acc += count[i + 1][r] * count[r + 1][j];
      }
      count[i][j] = acc;
    }
  }
  return count[0][q];
}

/// η(M) = Σ_j K_j M K_j on p×p matrices.
class CovarianceMap {
 public:
  CovarianceMap() = default;

  explicit CovarianceMap(std::vector<ComplexMatrix> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw InvalidArgument("CovarianceMap: no coefficients");
    const auto p = coeffs_[0].rows();
    for (const auto& k : coeffs_) {
      if (k.rows() != p || k.cols() != p) throw InvalidArgument("CovarianceMap: coefficient dimension mismatch");
      if (max_abs_entry(k - k.adjoint()) > HermitianMatrix::kTolerance * std::max(1.0, max_abs_entry(k))) {
        throw InvalidArgument("CovarianceMap: coefficients must be Hermitian");
      }
    }
    eta_identity_ = apply(ComplexMatrix::Identity(p, p));
  }

  explicit CovarianceMap(const std::vector<HermitianMatrix>& coeffs)
      : CovarianceMap([&] {
          std::vector<ComplexMatrix> c;
          c.reserve(coeffs.size());
          for (const auto& h : coeffs) c.push_back(h.matrix());
          return c;
        }()) {}

  Eigen::Index dim() const noexcept { return coeffs_.empty() ? 0 : coeffs_[0].rows(); }
  const std::vector<ComplexMatrix>& coefficients() const noexcept { return coeffs_; }
  const ComplexMatrix& eta_identity() const noexcept { return eta_identity_; }

  ComplexMatrix apply(const ComplexMatrix& m) const {
    ComplexMatrix out = ComplexMatrix::Zero(dim(), dim());
    for (const auto& k : coeffs_) out.noalias() += k * m * k;
    return out;
  }

  ComplexMatrix operator()(const ComplexMatrix& m) const { return apply(m); }

 private:
  std::vector<ComplexMatrix> coeffs_;
  ComplexMatrix eta_identity_;
};

/// Matrix-valued moment E(H_{w_1} … H_{w_q}) of an operator-valued semicircular
/// family whose letter ℓ has covariance etas[ℓ-1].
inline ComplexMatrix opval_word_moment(const Word& w, const std::vector<CovarianceMap>& etas) {
  if (etas.empty()) throw InvalidArgument("opval_word_moment: no covariance maps");
  const int q = static_cast<int>(w.size());
  if (q > kMaxOperatorWordLength) {
    throw SizeLimitError("opval_word_moment: word length " + std::to_string(q) + " exceeds " +
                         std::to_string(kMaxOperatorWordLength));
  }
  const auto p = etas[0].dim();
  for (const auto& e : etas) {
    if (e.dim() != p) throw InvalidArgument("opval_word_moment: covariance maps differ in dimension");
  }
  for (int l : w) {
    if (l < 1 || l > static_cast<int>(etas.size())) throw InvalidArgument("opval_word_moment: letter out of range");
  }
  if (q % 2 != 0) return ComplexMatrix::Zero(p, p);

  // moment[i][j]: the subword [i, j); only even lengths are ever read.
  std::vector<std::vector<ComplexMatrix>> moment(q + 1, std::vector<ComplexMatrix>(q + 1));
  for (int i = 0; i <= q; ++i) moment[i][i] = ComplexMatrix::Identity(p, p);
  for (int len = 2; len <= q; len += 2) {
    for (int i = 0; i + len <= q; ++i) {
      const int j = i + len;
      ComplexMatrix acc = ComplexMatrix::Zero(p, p);
      for (int r = i + 1; r < j; r += 2) {
        if (w[r] != w[i]) continue;
        acc.noalias() += etas[w[i] - 1].apply(moment[i + 1][r]) * moment[r + 1][j];
      }
      moment[i][j] = std::move(acc);
    }
  }
  return moment[0][q];
}

/// (tr̄ ⊗ τ)((Σ_i B_i ⊗ s_i)^p) for a free semicircular family s_i.
inline double xfree_moment(const std::vector<HermitianMatrix>& coeffs, int p) {
  if (p < 0) throw InvalidArgument("xfree_moment: p must be nonnegative");
  if (p > kMaxOperatorWordLength) {
    throw SizeLimitError("xfree_moment: p = " + std::to_string(p) + " exceeds " +
                         std::to_string(kMaxOperatorWordLength));
  }
  if (p % 2 != 0) return 0.0;
  const CovarianceMap eta(coeffs);
  const ComplexMatrix mom = opval_word_moment(Word(p, 1), {eta});
  return normalized_trace(mom).real();
}

// ---------------------------------------------------------------------------
// Non-commutative polynomials in self-adjoint letters

class NCPolynomial {
 public:
  NCPolynomial() = default;

  NCPolynomial(std::initializer_list<std::pair<Complex, Word>> terms) {
    for (const auto& [c, w] : terms) add_term(c, w);
  }

  static NCPolynomial constant(Complex c) { return NCPolynomial{{c, Word{}}}; }
  static NCPolynomial letter(int l) { return NCPolynomial{{Complex(1.0, 0.0), Word{l}}}; }

  void add_term(Complex c, const Word& w) {
    for (int l : w) {
      if (l < 1) throw InvalidArgument("NCPolynomial: letters are 1-based");
    }
    auto [it, inserted] = terms_.try_emplace(w, c);
    if (!inserted) it->second += c;
  }

  const std::map<Word, Complex>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }

  int degree() const {
    int d = 0;
    for (const auto& [w, c] : terms_) d = std::max(d, static_cast<int>(w.size()));
    return d;
  }

  int max_letter() const {
    int l = 0;
    for (const auto& [w, c] : terms_) {
      for (int x : w) l = std::max(l, x);
    }
    return l;
  }

  /// P* : coefficients conjugated, words reversed.
  NCPolynomial adjoint() const {
    NCPolynomial out;
    for (const auto& [w, c] : terms_) out.add_term(std::conj(c), Word(w.rbegin(), w.rend()));
    return out;
  }

  NCPolynomial& operator+=(const NCPolynomial& o) {
    for (const auto& [w, c] : o.terms_) add_term(c, w);
    return *this;
  }

  friend NCPolynomial operator+(NCPolynomial a, const NCPolynomial& b) { return a += b; }

  friend NCPolynomial operator*(Complex s, const NCPolynomial& p) {
    NCPolynomial out;
    for (const auto& [w, c] : p.terms_) out.add_term(s * c, w);
    return out;
  }

  friend NCPolynomial operator*(const NCPolynomial& a, const NCPolynomial& b) {
    if (a.size() * b.size() > kMaxExpandedWords) {
      throw SizeLimitError("NCPolynomial: expansion exceeds " + std::to_string(kMaxExpandedWords) + " words");
    }
    NCPolynomial out;
    for (const auto& [wa, ca] : a.terms_) {
      for (const auto& [wb, cb] : b.terms_) {
        Word w = wa;
        w.insert(w.end(), wb.begin(), wb.end());
        out.add_term(ca * cb, w);
      }
    }
    return out;
  }

  NCPolynomial pow(int e) const {
    if (e < 0) throw InvalidArgument("NCPolynomial: negative power");
    NCPolynomial out = constant(1.0);
    for (int i = 0; i < e; ++i) out = out * *this;
    return out;
  }

  bool is_zero() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const auto& kv) { return kv.second == Complex(0.0, 0.0); });
  }

 private:
  std::map<Word, Complex> terms_;
};

/// τ(P(s_1, …, s_k)) for a free standard semicircular family.
inline Complex polynomial_moment(const NCPolynomial& p) {
  if (p.size() > kMaxExpandedWords) throw SizeLimitError("polynomial_moment: too many words");
  Complex acc(0.0, 0.0);
  for (const auto& [w, c] : p.terms()) {
    if (c == Complex(0.0, 0.0)) continue;
    acc += c * semicircular_word_moment(w);
  }
  return acc;
}

/// τ((P*P)^{r/2})^{1/r}, a lower bound on ‖P(s_1, …, s_k)‖ nondecreasing in r.
inline double polynomial_norm_estimate(const NCPolynomial& p, int r) {
  if (r < 2 || r % 2 != 0) throw InvalidArgument("polynomial_norm_estimate: r must be a positive even integer");
  const NCPolynomial q = p.adjoint() * p;
  const Complex mom = polynomial_moment(q.pow(r / 2));
  return std::pow(std::max(mom.real(), 0.0), 1.0 / r);
}

}  // namespace tgue
