#include <gtest/gtest.h>

#include <random>

#include "softals/errors.hpp"
#include "softals/factors.hpp"
#include "softals/soft_svd.hpp"
#include "support.hpp"

using namespace softals;
using softals::testing::eigen_soft_svd;
using softals::testing::rel_diff;
using softals::testing::to_eigen;

namespace {

SoftSvdConfig tight(std::size_t r, double lambda) {
  SoftSvdConfig c;
  c.rank = r;
  c.lambda = lambda;
  c.tol = 1e-24;
  c.max_iter = 20000;
  return c;
}

// F_lambda(Z) = 1/2 ||X - Z||^2 + lambda ||Z||_* for the current factors.
double dense_objective(const DenseMatrix& x, const FactorPair& f, double lambda) {
  return 0.5 * frobenius_norm_sq(x - f.model()) + lambda * f.nuclear_norm();
}

}  // namespace

TEST(SoftSvd, ZeroInput) {
  const SoftSvdResult r = soft_svd_solve(DenseMatrix(6, 4), tight(3, 0.5));
  EXPECT_TRUE(r.converged);
  for (double d : r.factors.d) EXPECT_EQ(d, 0.0);
  EXPECT_EQ(max_abs(r.factors.model()), 0.0);
}

TEST(SoftSvd, RecoversExactRankTwo) {
  std::mt19937_64 rng(1);
  const DenseMatrix x = multiply_nt(gaussian_matrix(6, 2, rng), gaussian_matrix(5, 2, rng));
  const SoftSvdResult r = soft_svd_solve(x, tight(3, 0.0));
  EXPECT_LT(frobenius_norm(r.factors.model() - x), 1e-8 * frobenius_norm(x));
  EXPECT_LT(r.factors.d[2], 1e-8);
}

TEST(SoftSvd, MatchesClosedFormOnRandomMatrix) {
  std::mt19937_64 rng(2);
  const DenseMatrix x = gaussian_matrix(30, 20, rng);
  const SoftSvdResult r = soft_svd_solve(x, tight(10, 0.7));
  EXPECT_TRUE(r.converged);
  const Eigen::MatrixXd want = eigen_soft_svd(to_eigen(x), 10, 0.7);
  EXPECT_LT((to_eigen(r.factors.model()) - want).norm(), 1e-6);
  EXPECT_LT(orthonormality_error(r.factors.u), 1e-10);
  EXPECT_LT(orthonormality_error(r.factors.v), 1e-10);
  EXPECT_TRUE(std::is_sorted(r.factors.d.rbegin(), r.factors.d.rend()));
}

TEST(SoftSvd, ObjectiveIsNonincreasing) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const DenseMatrix x = gaussian_matrix(25, 15, rng);
    const double lambda = 0.5 + t;
    std::vector<double> values;
    soft_svd_solve(x, tight(6, lambda), nullptr, [&](const FactorPair& f, HalfStep) {
      values.push_back(dense_objective(x, f, lambda));
    });
    ASSERT_GT(values.size(), 4u);
    for (std::size_t k = 1; k < values.size(); ++k) {
      EXPECT_LE(values[k], values[k - 1] + 1e-10 * std::abs(values[k - 1]));
    }
  }
}

TEST(SoftSvd, CleanupNeverIncreasesRank) {
  std::mt19937_64 rng(4);
  const DenseMatrix x = gaussian_matrix(20, 12, rng);
  SoftSvdConfig c = tight(8, 2.5);
  c.tol = 1e-4;
  c.final_cleanup = false;
  const SoftSvdResult raw = soft_svd_solve(x, c);
  c.final_cleanup = true;
  const SoftSvdResult clean = soft_svd_solve(x, c);
  EXPECT_LE(rank_estimate(clean.factors.d), rank_estimate(raw.factors.d));
}

TEST(SoftSvd, UnregularizedExportRecoversSingularValues) {
  std::mt19937_64 rng(5);
  const DenseMatrix x = multiply_nt(gaussian_matrix(15, 3, rng), gaussian_matrix(10, 3, rng));
  const double lambda = 0.01;
  const SoftSvdResult r = soft_svd_solve(x, tight(5, lambda));
  const FactorPair f = unregularized(r.factors, lambda);
  const SmallSvd truth = svd_skinny(x);
  ASSERT_EQ(f.rank(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(f.d[k], truth.s[k], 1e-6);
}

TEST(SoftSvd, FactoredSolutionMatchesClosedForm) {
  // A = U sqrt(d), B = V sqrt(d) minimizes the factored criterion; its product
  // is the closed-form solution.
  std::mt19937_64 rng(6);
  const DenseMatrix x = gaussian_matrix(12, 9, rng);
  const SoftSvdResult r = soft_svd_solve(x, tight(9, 1.3));
  const DenseMatrix ab = multiply_nt(r.factors.a(), r.factors.b());
  EXPECT_LT(rel_diff(to_eigen(ab), eigen_soft_svd(to_eigen(x), 9, 1.3)), 1e-6);
}

TEST(SoftSvd, SplrInputAndWarmStart) {
  std::mt19937_64 rng(7);
  const DenseMatrix l = gaussian_matrix(18, 2, rng);
  const DenseMatrix rr = gaussian_matrix(14, 2, rng);
  const ObservedMatrix s = softals::testing::random_observed(gaussian_matrix(18, 14, rng), 0.3, rng);
  const SplrMatrix xs(s, l, rr);
  const SoftSvdResult cold = soft_svd_solve(SplrOperator(xs), tight(5, 0.8));
  const Eigen::MatrixXd want = eigen_soft_svd(to_eigen(xs.to_dense()), 5, 0.8);
  EXPECT_LT((to_eigen(cold.factors.model()) - want).norm(), 1e-6 * want.norm());

  SoftSvdConfig warm = tight(5, 0.8);
  warm.warm_start = compact(cold.factors);
  const SoftSvdResult again = soft_svd_solve(SplrOperator(xs), warm);
  EXPECT_LT(again.iterations, cold.iterations);
  EXPECT_LT((to_eigen(again.factors.model()) - want).norm(), 1e-6 * want.norm());
}

TEST(SoftSvd, ValidatesConfig) {
  EXPECT_THROW(soft_svd_solve(DenseMatrix(4, 3), tight(4, 0.0)), ValidationError);
  EXPECT_THROW(soft_svd_solve(DenseMatrix(4, 3), tight(0, 0.0)), ValidationError);
  SoftSvdConfig c = tight(2, -1.0);
  EXPECT_THROW(soft_svd_solve(DenseMatrix(4, 3), c), ValidationError);
  c = tight(2, 0.0);
  c.tol = 0.0;
  EXPECT_THROW(soft_svd_solve(DenseMatrix(4, 3), c), ValidationError);
}

TEST(SoftSvd, NonConvergenceIsFlaggedNotThrown) {
  std::mt19937_64 rng(8);
  SoftSvdConfig c = tight(4, 0.1);
  c.max_iter = 2;
  const SoftSvdResult r = soft_svd_solve(gaussian_matrix(20, 10, rng), c);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2);
}

TEST(OracleSoftSvd, Cases) {
  std::mt19937_64 rng(9);
  const DenseMatrix x = gaussian_matrix(7, 5, rng);
  const double s1 = svd_skinny(x).s[0];
  EXPECT_EQ(max_abs(oracle_soft_svd(x, 3, s1 + 1.0)), 0.0);
  EXPECT_LT(max_abs(oracle_soft_svd(x, 5, 0.0) - x), 1e-12);

  DenseMatrix diag(3, 3);
  diag(0, 0) = 5;
  diag(1, 1) = 3;
  diag(2, 2) = 1;
  DenseMatrix want(3, 3);
  want(0, 0) = 3;
  want(1, 1) = 1;
  EXPECT_LT(max_abs(oracle_soft_svd(diag, 2, 2.0) - want), 1e-14);

  EXPECT_LT(rel_diff(to_eigen(oracle_soft_svd(x, 3, 0.4)), eigen_soft_svd(to_eigen(x), 3, 0.4)),
            1e-12);
  EXPECT_THROW(oracle_soft_svd(DenseMatrix(200, 101), 1, 0.0), ValidationError);
}

TEST(TopSingularValue, MatchesDenseSvd) {
  std::mt19937_64 rng(10);
  const DenseMatrix x = gaussian_matrix(40, 30, rng);
  const double want = svd_skinny(x).s[0];
  EXPECT_NEAR(top_singular_value(DenseOperator(x)), want, 1e-7 * want);
}

TEST(FrobeniusDelta, Cases) {
  std::mt19937_64 rng(11);
  FactorPair a{orthonormalize(gaussian_matrix(9, 3, rng)).q, {3, 2, 1},
               orthonormalize(gaussian_matrix(7, 3, rng)).q};
  EXPECT_LE(frobenius_delta(a, a).value, 1e-28);
  EXPECT_NEAR(frobenius_delta(a, FactorPair::zero(9, 7, 3)).value, 1.0, 1e-15);
  const FrobeniusDelta z = frobenius_delta(FactorPair::zero(9, 7, 2), a);
  EXPECT_TRUE(z.old_zero);
  EXPECT_TRUE(std::isinf(z.value));
  EXPECT_THROW(frobenius_delta(a, FactorPair::zero(8, 7, 3)), DimensionMismatch);
}

TEST(FrobeniusDelta, MatchesDenseDifference) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 60; ++t) {
    const std::size_t m = 3 + rng() % 20, n = 3 + rng() % 20;
    const std::size_t r0 = 1 + rng() % std::min<std::size_t>(5, std::min(m, n));
    const std::size_t r1 = 1 + rng() % std::min<std::size_t>(5, std::min(m, n));
    auto make = [&](std::size_t r, bool orthonormal) {
      FactorPair f{gaussian_matrix(m, r, rng), {}, gaussian_matrix(n, r, rng)};
      if (orthonormal) {
        f.u = orthonormalize(f.u).q;
        f.v = orthonormalize(f.v).q;
      }
      for (std::size_t k = 0; k < r; ++k) f.d.push_back(0.5 + double(rng() % 100) / 10.0);
      return f;
    };
    const FactorPair o = make(r0, t % 2 == 0);
    FactorPair nw = t % 3 == 0 ? o : make(r1, t % 4 != 1);
    if (t % 3 == 0) {
      // A small perturbation, where cancellation would show up first.
      for (double& x : nw.u.values()) x += 1e-6 * std::normal_distribution<double>()(rng);
    }
    const Eigen::MatrixXd mo = to_eigen(o.model());
    const double want = (mo - to_eigen(nw.model())).squaredNorm() / mo.squaredNorm();
    EXPECT_NEAR(frobenius_delta(o, nw).value, want, 1e-10 * std::max(want, 1e-6)) << t;
  }
}

TEST(FactorPair, ConventionAndCompaction) {
  std::mt19937_64 rng(13);
  FactorPair f{orthonormalize(gaussian_matrix(6, 3, rng)).q, {1, 4, 0},
               orthonormalize(gaussian_matrix(5, 3, rng)).q};
  EXPECT_LT(max_abs(multiply_nt(f.a(), f.b()) - f.model()), 1e-14);
  EXPECT_NEAR(frobenius_norm_sq(f.a()), 5.0, 1e-13);
  EXPECT_DOUBLE_EQ(f.nuclear_norm(), 5.0);
  const FactorPair c = compact(f);
  EXPECT_EQ(c.d, (std::vector<double>{4, 1}));
  EXPECT_LT(max_abs(c.model() - f.model()), 1e-14);
  EXPECT_EQ(rank_estimate(std::vector<double>{1, 1e-10, 0}), 1u);
}

TEST(PadFactors, KeepsTheModelAndOrthonormality) {
  std::mt19937_64 rng(14);
  FactorPair f{orthonormalize(gaussian_matrix(10, 2, rng)).q, {3, 1},
               orthonormalize(gaussian_matrix(8, 2, rng)).q};
  const FactorPair p = pad_factors(f, 5, rng, std::nullopt);
  EXPECT_EQ(p.rank(), 5u);
  EXPECT_LT(orthonormality_error(p.u), 1e-10);
  EXPECT_DOUBLE_EQ(p.d[2], 1.0);  // the smallest live value
  const FactorPair q = pad_factors(f, 4, rng, 0.25);
  EXPECT_DOUBLE_EQ(q.d[3], 0.25);
  EXPECT_THROW(pad_factors(f, 9, rng, std::nullopt), ValidationError);
}
