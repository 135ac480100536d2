#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>

#include "tgue/errors.hpp"

namespace tgue {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Integer power for small dimension arithmetic; throws on overflow past 2^62.
inline std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && r > (std::int64_t{1} << 62) / base) {
      throw SizeLimitError("integer power overflow");
    }
    r *= base;
  }
  return r;
}

inline double max_abs_entry(const ComplexMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

/// Dense complex square matrix with A = A*, checked at construction.
///
/// The check is entrywise |A(i,j) - conj(A(j,i))| <= tol * max(1, max|A|), with
/// tol = 1e-12. The stored matrix is exactly Hermitian: the lower triangle is
/// rebuilt from the upper one and the diagonal's imaginary part is dropped.
class HermitianMatrix {
 public:
  static constexpr double kTolerance = 1e-12;

  HermitianMatrix() = default;

  explicit HermitianMatrix(ComplexMatrix a, double tol = kTolerance) : a_(std::move(a)) {
    if (a_.rows() != a_.cols() || a_.rows() == 0) {
      throw InvalidArgument("HermitianMatrix: matrix must be square and nonempty, got " +
                            std::to_string(a_.rows()) + "x" + std::to_string(a_.cols()));
    }
    if (!a_.allFinite()) throw InvalidArgument("HermitianMatrix: non-finite entry");
    const double scale = std::max(1.0, max_abs_entry(a_));
    const double dev = max_abs_entry(a_ - a_.adjoint());
    if (dev > tol * scale) {
      throw InvalidArgument("HermitianMatrix: deviation from self-adjointness " + std::to_string(dev));
    }
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
      a_(i, i) = Complex(a_(i, i).real(), 0.0);
      for (Eigen::Index j = i + 1; j < a_.cols(); ++j) a_(j, i) = std::conj(a_(i, j));
    }
  }

  static HermitianMatrix identity(Eigen::Index n) { return HermitianMatrix(ComplexMatrix::Identity(n, n)); }
  static HermitianMatrix zero(Eigen::Index n) { return HermitianMatrix(ComplexMatrix::Zero(n, n)); }
  static HermitianMatrix scalar(double x) { return HermitianMatrix(ComplexMatrix::Constant(1, 1, x)); }

  /// Hermitian part (A + A*)/2 of an arbitrary square matrix.
  static HermitianMatrix hermitian_part(const ComplexMatrix& a) {
    return HermitianMatrix(ComplexMatrix(0.5 * (a + a.adjoint())));
  }

  Eigen::Index dim() const noexcept { return a_.rows(); }
  const ComplexMatrix& matrix() const noexcept { return a_; }
  operator const ComplexMatrix&() const noexcept { return a_; }
  Complex operator()(Eigen::Index r, Eigen::Index c) const { return a_(r, c); }

 private:
  ComplexMatrix a_;
};

/// Kronecker product with the first factor on the most significant index.
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// Normalized trace tr(A)/n.
inline Complex normalized_trace(const ComplexMatrix& a) {
  return a.trace() / static_cast<double>(a.rows());
}

/// Largest singular value.
inline double spectral_norm(const ComplexMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(a);
  return svd.singularValues()(0);
}

/// Largest |eigenvalue| of a matrix known to be Hermitian up to roundoff.
inline double hermitian_norm(const ComplexMatrix& a) {
  if (a.size() == 0) return 0.0;
  const ComplexMatrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

}  // namespace tgue
