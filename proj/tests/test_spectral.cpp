#include <gtest/gtest.h>

#include <numbers>

#include "tgue/gue_ensemble.hpp"
#include "tgue/spectral.hpp"

using namespace tgue;

namespace {

const std::vector<HermitianMatrix> kOne{HermitianMatrix::scalar(1.0)};
const std::vector<HermitianMatrix> kTwo{HermitianMatrix::scalar(1.0), HermitianMatrix::scalar(1.0)};

std::vector<HermitianMatrix> random_block(std::uint64_t seed) {
  GaussianSource g(seed);
  return {random_hermitian(2, g), random_hermitian(2, g)};
}

}  // namespace

TEST(Spectrum, SortedAndNorm) {
  ComplexMatrix a = ComplexMatrix::Zero(3, 3);
  a.diagonal() << 1.0, -3.0, 2.0;
  const auto s = hermitian_spectrum(HermitianMatrix(a));
  EXPECT_EQ(s.eigenvalues, (std::vector<double>{-3.0, 1.0, 2.0}));
  EXPECT_EQ(operator_norm(s), 3.0);
  GaussianSource g(1);
  const auto h = random_hermitian(20, g);
  EXPECT_NEAR(operator_norm(h), hermitian_norm(h.matrix()), 1e-12);
  EXPECT_NEAR(operator_norm(h), spectral_norm(h.matrix()), 1e-12);
}

TEST(Spectrum, SizeCap) {
  // A fake oversize matrix is never materialized: check the cap constant only.
  EXPECT_EQ(kMaxEigenDim, 8192);
}

TEST(Mde, ClosedFormAtTwoI) {
  const auto sol = mde_solve(kOne, Complex(0.0, 2.0));
  EXPECT_NEAR(std::abs(sol.G(0, 0) - Complex(0.0, 1.0 - std::sqrt(2.0))), 0.0, 1e-12);
  EXPECT_LE(sol.residual, 1e-12);
}

TEST(Mde, ZeroCovarianceGivesResolventOfZ) {
  const std::vector<HermitianMatrix> zero{HermitianMatrix::zero(3)};
  const Complex z(0.7, 0.2);
  const auto sol = mde_solve(zero, z);
  EXPECT_LT(max_abs_entry(sol.G - ComplexMatrix::Identity(3, 3) / z), 1e-14);
}

TEST(Mde, MatchesClosedFormAlongRealAxis) {
  for (int i = 0; i < 50; ++i) {
    const Complex z(-3.0 + 6.0 * i / 49.0, 1e-3);
    const auto sol = mde_solve(kOne, z);
    EXPECT_LT(std::abs(sol.G(0, 0) - semicircle_stieltjes(z)), 1e-8) << "x=" << z.real();
  }
}

TEST(Mde, RejectsRealZ) { EXPECT_THROW(mde_solve(kOne, Complex(1.0, 0.0)), InvalidArgument); }

TEST(Mde, SolutionSatisfiesEquationForBlockModel) {
  const auto coeffs = random_block(7);
  const CovarianceMap eta(coeffs);
  const Complex z(0.3, 0.05);
  const auto sol = mde_solve(eta, z);
  ComplexMatrix lhs = -eta.apply(sol.G);
  lhs.diagonal().array() += z;
  EXPECT_LT(max_abs_entry(lhs * sol.G - ComplexMatrix::Identity(2, 2)), 1e-9);
}

TEST(Mde, BudgetExhaustionIsConvergenceFailure) {
  MdeSettings s;
  s.max_iter = 2;
  EXPECT_THROW(mde_solve(kOne, Complex(0.1, 1e-3), s), ConvergenceFailure);
}

TEST(Density, SemicircleShapeSupportAndMass) {
  const auto d = free_spectral_density(kOne);
  EXPECT_NEAR(d.integral, 1.0, 0.03);
  ASSERT_EQ(d.support.size(), 1u);
  EXPECT_NEAR(d.support[0].lo, -2.0, 0.08);
  EXPECT_NEAR(d.support[0].hi, 2.0, 0.08);
  EXPECT_LE(std::abs(d.support_radius() - 2.0), 2.0 * std::sqrt(1e-3) + 1e-2);
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const double x = d.x[i];
    if (std::abs(x) < 1.9) {
      EXPECT_NEAR(d.rho[i], std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi), 2e-3);
    }
  }
  EXPECT_LE(d.max_residual, 1e-12);
}

TEST(Density, SymmetricForSingleScalarTerm) {
  const auto d = free_spectral_density(kOne);
  const std::size_t n = d.x.size();
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(d.rho[i], d.rho[n - 1 - i], 1e-6);
}

TEST(Density, TwoTermSupportAndMoments) {
  const auto d = free_spectral_density(kTwo);
  ASSERT_EQ(d.support.size(), 1u);
  EXPECT_NEAR(d.support[0].hi, 2.0 * std::sqrt(2.0), 0.08);
  for (int p : {2, 4, 6}) EXPECT_NEAR(d.moment(p) / xfree_moment(kTwo, p), 1.0, 0.01) << "p=" << p;
}

TEST(Density, BlockModelMomentsMatchOracle) {
  const auto coeffs = random_block(11);
  const auto d = free_spectral_density(coeffs);
  for (int p : {2, 4, 6}) EXPECT_NEAR(d.moment(p) / xfree_moment(coeffs, p), 1.0, 0.01) << "p=" << p;
}

TEST(Density, IndependentOfThreadCount) {
  const auto coeffs = random_block(12);
  DensityOptions one, four;
  four.threads = 4;
  const auto a = free_spectral_density(coeffs, one);
  const auto b = free_spectral_density(coeffs, four);
  EXPECT_EQ(a.rho, b.rho);
}

TEST(Density, RejectsBadSmoothing) {
  DensityOptions o;
  o.smoothing = 0.5;
  EXPECT_THROW(free_spectral_density(kOne, o), InvalidArgument);
}

TEST(Support, DetectsSeparateIntervals) {
  const std::vector<double> x{0, 1, 2, 3, 4, 5, 6};
  const std::vector<double> rho{0, 1, 1, 0, 0, 1, 0};
  const auto s = detect_support(x, rho, 0.5);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[0].lo, 0.5);
  EXPECT_DOUBLE_EQ(s[0].hi, 2.5);
  EXPECT_DOUBLE_EQ(s[1].lo, 4.5);
  EXPECT_DOUBLE_EQ(s[1].hi, 5.5);
}

TEST(InclusionExcess, DistanceArithmetic) {
  const std::vector<Interval> support{{-2.0, 2.0}};
  EXPECT_EQ(inclusion_excess(Spectrum{{-1.0, 0.0, 1.9}}, support), 0.0);
  EXPECT_NEAR(inclusion_excess(Spectrum{{-1.0, 0.5, 2.3}}, support), 0.3, 1e-15);
  EXPECT_NEAR(inclusion_excess(Spectrum{{-2.5, 2.1}}, support), 0.5, 1e-15);
  EXPECT_THROW(inclusion_excess(Spectrum{{0.0}}, {}), InvalidArgument);
}

TEST(InclusionExcess, MonotoneInSupport) {
  GaussianSource g(3);
  const auto spec = hermitian_spectrum(random_hermitian(30, g));
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double e = inclusion_excess(spec, {{-r, r}});
    EXPECT_LE(e, prev);
    prev = e;
  }
  EXPECT_LE(inclusion_excess(spec, {{-1.0, 1.0}, {5.0, 6.0}}), inclusion_excess(spec, {{-1.0, 1.0}}));
}

TEST(Density, ZeroCovarianceIsPointMass) {
  const auto d = free_spectral_density(std::vector<HermitianMatrix>{HermitianMatrix::zero(2)});
  ASSERT_EQ(d.support.size(), 1u);
  EXPECT_EQ(d.support[0].lo, 0.0);
  EXPECT_EQ(d.support[0].hi, 0.0);
}
