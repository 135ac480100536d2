#include <gtest/gtest.h>

#include <set>

#include "tgue/gue_ensemble.hpp"
#include "tgue/rng.hpp"
#include "tgue/tensor_core.hpp"

using namespace tgue;

TEST(Rng, DeriveSeedSeparatesLabels) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(derive_seed(42, {a, b}));
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_EQ(derive_seed(9, {1}), derive_seed(9, {1}));
}

TEST(Rng, GaussianMoments) {
  GaussianSource g(2024);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g();
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  EXPECT_NEAR(s1 / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  EXPECT_NEAR(s4 / n, 3.0, 0.05);
}

TEST(Rng, SameSeedSameStream) {
  GaussianSource a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(HermitianBasis, OrthonormalUnderRealTraceInnerProduct) {
  for (Eigen::Index n : {1, 2, 3, 5}) {
    const auto basis = hermitian_basis(n);
    ASSERT_EQ(basis.size(), n * n);
    for (Eigen::Index i = 0; i < basis.size(); ++i) {
      for (Eigen::Index j = 0; j < basis.size(); ++j) {
        const double ip = (basis.dense(i).adjoint() * basis.dense(j)).trace().real();
        EXPECT_NEAR(ip, i == j ? 1.0 : 0.0, 1e-15);
      }
    }
  }
}

TEST(HermitianBasis, OrderIsDiagonalSymmetricAntisymmetric) {
  const auto basis = hermitian_basis(3);
  EXPECT_EQ(basis.dense(1)(1, 1), Complex(1.0, 0.0));
  // First symmetric element is E_12.
  EXPECT_NEAR(basis.dense(3)(0, 1).real(), 1.0 / std::sqrt(2.0), 1e-16);
  // First antisymmetric element is (i/√2)(e_1 e_2* − e_2 e_1*).
  EXPECT_NEAR(basis.dense(6)(0, 1).imag(), 1.0 / std::sqrt(2.0), 1e-16);
  EXPECT_NEAR(basis.dense(6)(1, 0).imag(), -1.0 / std::sqrt(2.0), 1e-16);
  EXPECT_THROW(basis.dense(9), InvalidArgument);
}

TEST(HermitianBasis, SquareSumAndVectorizedResolution) {
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
    EXPECT_LT(max_abs_entry(sq - static_cast<double>(n) * ComplexMatrix::Identity(n, n)), 1e-12);
    EXPECT_LT(max_abs_entry(outer - ComplexMatrix::Identity(n * n, n * n)), 1e-12);
  }
}

TEST(HermitianBasis, DecomposeAssembleRoundTrip) {
  GaussianSource g(3);
  const auto basis = hermitian_basis(5);
  const auto h = random_hermitian(5, g);
  EXPECT_LT(max_abs_entry(assemble(decompose(h, basis), basis) - h.matrix()), 1e-14);
}

TEST(SampleGue, MatrixEqualsScaledBasisCombination) {
  const auto s = sample_gue(4, 77);
  const auto basis = hermitian_basis(4);
  EXPECT_LT(max_abs_entry(s.matrix.matrix() - assemble(s.coefficients, basis) / 2.0), 1e-15);
  EXPECT_EQ(s.seed, 77u);
}

TEST(SampleGue, DeterministicPerSeed) {
  EXPECT_EQ(max_abs_entry(sample_gue(6, 9).matrix.matrix() - sample_gue(6, 9).matrix.matrix()), 0.0);
  EXPECT_GT(max_abs_entry(sample_gue(6, 9).matrix.matrix() - sample_gue(6, 10).matrix.matrix()), 0.0);
}

TEST(SampleGue, SecondAndFourthMoments) {
  // E[X²] = I and E tr̄ X⁴ = 2 + n^{-2} under this normalization.
  const Eigen::Index n = 6;
  const int trials = 4000;
  ComplexMatrix m2 = ComplexMatrix::Zero(n, n);
  double m4 = 0.0;
  for (int t = 0; t < trials; ++t) {
    const ComplexMatrix x = sample_gue(n, derive_seed(1, {static_cast<std::uint64_t>(t)})).matrix;
    const ComplexMatrix x2 = x * x;
    m2 += x2;
    m4 += normalized_trace(x2 * x2).real();
  }
  m2 /= trials;
  m4 /= trials;
  EXPECT_LT(max_abs_entry(m2 - ComplexMatrix::Identity(n, n)), 0.06);
  EXPECT_NEAR(m4, 2.0 + 1.0 / (n * n), 0.05);
}

TEST(SampleGue, RejectsNonPositiveSize) { EXPECT_THROW(sample_gue(0, 1), InvalidArgument); }
