#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "softals/dense.hpp"
#include "support.hpp"

using namespace softals;
using softals::testing::from_eigen;
using softals::testing::to_eigen;

TEST(SoftThreshold, HandArithmetic) {
  EXPECT_EQ(soft_threshold(std::vector<double>{3, 1}, 2), (std::vector<double>{1, 0}));
  EXPECT_EQ(soft_threshold(std::vector<double>{5, 5, 2}, 5), (std::vector<double>{0, 0, 0}));
  const std::vector<double> d{4.5, 2.25, 0.125};
  EXPECT_EQ(soft_threshold(d, 0.0), d);
  EXPECT_THROW(soft_threshold(d, -1.0), std::invalid_argument);
}

TEST(SoftThreshold, LipschitzMonotoneAndOrderPreserving) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int t = 0; t < 500; ++t) {
    const double x = u(rng), y = u(rng), lam = u(rng);
    const double sx = soft_threshold(std::vector<double>{x}, lam)[0];
    const double sy = soft_threshold(std::vector<double>{y}, lam)[0];
    EXPECT_LE(std::abs(sx - sy), std::abs(x - y) + 1e-15);
    if (x <= y) EXPECT_LE(sx, sy);
  }
  std::vector<double> d{9, 7, 7, 3, 1};
  const auto s = soft_threshold(d, 4);
  EXPECT_TRUE(std::is_sorted(s.rbegin(), s.rend()));
}

TEST(RidgeApply, UnitWeightsWithoutPenaltyIsIdentity) {
  std::mt19937_64 rng(1);
  const DenseMatrix p = gaussian_matrix(3, 5, rng);
  EXPECT_EQ(ridge_apply(p, std::vector<double>{1, 1, 1}, 0.0), p);
}

TEST(RidgeApply, MatchesExplicitSmallMatrixAlgebra) {
  std::mt19937_64 rng(2);
  const DenseMatrix u = orthonormalize(gaussian_matrix(8, 3, rng)).q;
  const DenseMatrix x = gaussian_matrix(8, 6, rng);
  const std::vector<double> d{2, 1, 0.5};
  const double lambda = 1.0;
  const DenseMatrix got = ridge_apply(multiply_tn(u, x), d, lambda);

  Eigen::MatrixXd dd = Eigen::MatrixXd::Zero(3, 3);
  for (int k = 0; k < 3; ++k) dd(k, k) = d[k];
  const Eigen::MatrixXd want = (dd * dd + lambda * Eigen::MatrixXd::Identity(3, 3))
                                   .inverse() *
                               dd * to_eigen(u).transpose() * to_eigen(x);
  EXPECT_LT((to_eigen(got) - want).norm(), 1e-12 * want.norm());
}

TEST(RidgeApply, LargePenaltyShrinksToZeroAndStaysFinite) {
  std::mt19937_64 rng(3);
  const DenseMatrix p = gaussian_matrix(4, 4, rng);
  const DenseMatrix out = ridge_apply(p, std::vector<double>{3, 2, 1, 0}, 1e300);
  EXPECT_TRUE(all_finite(out));
  EXPECT_LT(max_abs(out), 1e-290);
}

TEST(RidgeApply, RejectsSingularUnpenalizedSystem) {
  const DenseMatrix p(2, 2, 1.0);
  EXPECT_THROW(ridge_apply(p, std::vector<double>{1, 0}, 0.0), std::domain_error);
  EXPECT_THROW(ridge_apply(p, std::vector<double>{1, 1}, -1.0), std::invalid_argument);
}

TEST(Orthonormalize, AlreadyOrthonormalInput) {
  std::mt19937_64 rng(4);
  const DenseMatrix q0 = orthonormalize(gaussian_matrix(7, 3, rng)).q;
  const QrResult qr = orthonormalize(q0);
  EXPECT_LT(max_abs(qr.q - q0), 1e-14);
  EXPECT_LT(max_abs(qr.r - DenseMatrix::identity(3)), 1e-14);
}

TEST(Orthonormalize, SingleColumn) {
  DenseMatrix m(4, 1);
  m(0, 0) = 2.0;
  const QrResult qr = orthonormalize(m);
  EXPECT_DOUBLE_EQ(qr.q(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(qr.r(0, 0), 2.0);
}

TEST(Orthonormalize, RandomReconstruction) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix m = gaussian_matrix(12, 5, rng);
    const QrResult qr = orthonormalize(m);
    EXPECT_LT(max_abs(multiply(qr.q, qr.r) - m), 1e-10);
    EXPECT_LT(orthonormality_error(qr.q), 1e-10);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(qr.r(i, j), 0.0);
  }
}

TEST(Orthonormalize, CompletesRankDeficientBasis) {
  std::mt19937_64 rng(6);
  DenseMatrix m = gaussian_matrix(9, 4, rng);
  m.set_column(2, m.column(0));
  m.set_column(3, std::vector<double>(9, 0.0));
  const QrResult qr = orthonormalize(m);
  EXPECT_EQ(qr.completed, (std::vector<bool>{false, false, true, true}));
  EXPECT_LT(orthonormality_error(qr.q), 1e-10);
  EXPECT_LT(max_abs(multiply(qr.q, qr.r) - m), 1e-10);
}

TEST(Orthonormalize, NearlyCompleteBasis) {
  // Deficient columns that leave exactly one direction: the completion must find it.
  std::mt19937_64 rng(7);
  DenseMatrix m = gaussian_matrix(5, 5, rng);
  m.set_column(4, m.column(1));
  const QrResult qr = orthonormalize(m);
  EXPECT_TRUE(qr.completed[4]);
  EXPECT_LT(orthonormality_error(qr.q), 1e-10);
}

TEST(SvdSkinny, OrthogonalColumns) {
  DenseMatrix m(3, 2);
  m(0, 0) = 3.0;
  m(1, 1) = -1.0;
  const SmallSvd s = svd_skinny(m);
  EXPECT_NEAR(s.s[0], 3.0, 1e-15);
  EXPECT_NEAR(s.s[1], 1.0, 1e-15);
  EXPECT_NEAR(s.u(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(s.u(1, 1), 1.0, 1e-15);  // sign fixed to the positive largest entry
  EXPECT_NEAR(s.v(1, 1), -1.0, 1e-15);
}

TEST(SvdSkinny, ZeroMatrix) {
  const SmallSvd s = svd_skinny(DenseMatrix(6, 3));
  EXPECT_EQ(s.s, (std::vector<double>{0, 0, 0}));
  EXPECT_LT(orthonormality_error(s.u), 1e-12);
  EXPECT_LT(orthonormality_error(s.v), 1e-12);
}

TEST(SvdSkinny, RejectsNonFinite) {
  DenseMatrix m(3, 2);
  m(1, 1) = std::nan("");
  EXPECT_THROW(svd_skinny(m), std::domain_error);
}

TEST(SvdSkinny, ReconstructionAndEigenOracle) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) {
    const std::size_t p = 4 + rng() % 40;
    const std::size_t q = 1 + rng() % std::min<std::size_t>(p, 12);
    DenseMatrix m = gaussian_matrix(p, q, rng);
    if (t % 3 == 0) m *= 1e-9;  // scale must not matter
    const SmallSvd s = svd_skinny(m);

    DenseMatrix us = s.u;
    scale_columns(us, s.s);
    const double norm = frobenius_norm(m);
    EXPECT_LT(frobenius_norm(multiply_nt(us, s.v) - m), 1e-10 * std::max(1.0, norm));
    EXPECT_LT(orthonormality_error(s.u), 1e-10);
    EXPECT_LT(orthonormality_error(s.v), 1e-10);
    EXPECT_TRUE(std::is_sorted(s.s.rbegin(), s.s.rend()));

    // Square roots of the eigenvalues of M^T M from Eigen's symmetric solver.
    const Eigen::MatrixXd g = to_eigen(m).transpose() * to_eigen(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    for (std::size_t k = 0; k < q; ++k) {
      const double want = std::sqrt(std::max(eig.eigenvalues()(q - 1 - k), 0.0));
      EXPECT_NEAR(s.s[k], want, 1e-8 * s.s[0]);
    }
  }
}

TEST(SvdSkinny, Deterministic) {
  std::mt19937_64 rng(9);
  const DenseMatrix m = gaussian_matrix(30, 6, rng);
  const SmallSvd a = svd_skinny(m);
  const SmallSvd b = svd_skinny(m);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.v, b.v);
  EXPECT_EQ(a.s, b.s);
}

TEST(SvdSmall, WideInput) {
  std::mt19937_64 rng(10);
  const DenseMatrix m = gaussian_matrix(3, 8, rng);
  const SmallSvd s = svd_small(m);
  DenseMatrix us = s.u;
  scale_columns(us, s.s);
  EXPECT_LT(max_abs(multiply_nt(us, s.v) - m), 1e-12);
}

TEST(Cholesky, SolvesSpdSystem) {
  std::mt19937_64 rng(12);
  const DenseMatrix a = gaussian_matrix(6, 4, rng);
  DenseMatrix spd = multiply_tn(a, a);
  for (std::size_t k = 0; k < 4; ++k) spd(k, k) += 0.5;
  std::vector<double> b{1, -2, 3, 0.5};
  const Cholesky chol(spd);
  std::vector<double> x = b;
  chol.solve_in_place(x);
  const Eigen::VectorXd want =
      to_eigen(spd).llt().solve(Eigen::Map<Eigen::VectorXd>(b.data(), 4));
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(x[k], want(k), 1e-12);
  EXPECT_THROW(Cholesky(DenseMatrix(2, 2)), std::domain_error);
}

TEST(CompensatedSum, RecoversSmallTerms) {
  CompensatedSum s;
  s.add(1.0);
  for (int k = 0; k < 1000; ++k) s.add(1e-17);
  s.add(-1.0);
  EXPECT_NEAR(s.value(), 1e-14, 1e-20);
}

TEST(DenseMatrix, Products) {
  std::mt19937_64 rng(13);
  const DenseMatrix a = gaussian_matrix(5, 3, rng);
  const DenseMatrix b = gaussian_matrix(3, 4, rng);
  const DenseMatrix c = gaussian_matrix(5, 4, rng);
  EXPECT_LT((to_eigen(multiply(a, b)) - to_eigen(a) * to_eigen(b)).norm(), 1e-13);
  EXPECT_LT((to_eigen(multiply_tn(a, c)) - to_eigen(a).transpose() * to_eigen(c)).norm(), 1e-13);
  EXPECT_LT((to_eigen(multiply_nt(c, b)) - to_eigen(c) * to_eigen(b).transpose()).norm(), 1e-13);
  FlopCounter fc;
  multiply(a, b, &fc);
  EXPECT_EQ(fc.ops, 5u * 3u * 4u);
  EXPECT_EQ(from_eigen(to_eigen(a)), a);
}
