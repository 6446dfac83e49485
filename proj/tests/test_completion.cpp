#include <gtest/gtest.h>

#include <random>

#include "softals/completion.hpp"
#include "softals/errors.hpp"
#include "softals/objectives.hpp"
#include "softals/soft_svd.hpp"
#include "support.hpp"

using namespace softals;
using softals::testing::dense_observed;
using softals::testing::eigen_soft_svd;
using softals::testing::fully_observed;
using softals::testing::low_rank_instance;
using softals::testing::to_eigen;

namespace {

FitConfig tight(Algorithm alg, std::size_t r, double lambda) {
  FitConfig c;
  c.algorithm = alg;
  c.rank = r;
  c.lambda = lambda;
  c.tol = 1e-22;
  c.max_iter = 20000;
  return c;
}

double test_error(const FactorPair& f, const DenseMatrix& truth, const ObservedMatrix& x) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.rows(); ++i) {
    for (std::size_t j = 0; j < truth.cols(); ++j) {
      if (x.pattern().find(i, j) < x.nnz()) continue;
      num += (f.at(i, j) - truth(i, j)) * (f.at(i, j) - truth(i, j));
      den += truth(i, j) * truth(i, j);
    }
  }
  return std::sqrt(num / den);
}

void expect_nonincreasing(const IterTrace& t, bool use_h) {
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double prev = use_h ? t[k - 1].h : t[k - 1].f;
    const double cur = use_h ? t[k].h : t[k].f;
    EXPECT_LE(cur, prev + 1e-10) << "row " << k;
  }
}

}  // namespace

TEST(LambdaMax, SmallCases) {
  const std::vector<Entry> one{{1, 2, 7.0}};
  EXPECT_NEAR(lambda_max(ObservedMatrix::from_entries(3, 4, one)), 7.0, 1e-12);
  const std::vector<Entry> diag{{0, 0, 5.0}, {0, 1, 0.0}, {1, 0, 0.0}, {1, 1, 3.0}};
  EXPECT_NEAR(lambda_max(ObservedMatrix::from_entries(2, 2, diag)), 5.0, 1e-7);
  const std::vector<Entry> zero{{0, 0, 0.0}};
  EXPECT_EQ(lambda_max(ObservedMatrix::from_entries(2, 2, zero)), 0.0);
}

TEST(LambdaMax, MatchesDenseSvd) {
  std::mt19937_64 rng(1);
  const ObservedMatrix x = softals::testing::random_observed(gaussian_matrix(40, 30, rng), 0.3, rng);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense_observed(x));
  EXPECT_NEAR(lambda_max(x), svd.singularValues()(0), 1e-6 * svd.singularValues()(0));
}

TEST(FitConfig, Validation) {
  std::mt19937_64 rng(2);
  const ObservedMatrix x = low_rank_instance(10, 8, 2, 0.6, 0.1, rng);
  EXPECT_THROW(fit(x, tight(Algorithm::softimpute_als, 3, 0.0)), ValidationError);
  EXPECT_THROW(fit(x, tight(Algorithm::als, 3, -1.0)), ValidationError);
  EXPECT_THROW(fit(x, tight(Algorithm::als, 9, 1.0)), ValidationError);
  FitConfig c = tight(Algorithm::softimpute, 3, 0.0);
  c.max_iter = 5;
  EXPECT_NO_THROW(fit(x, c));
  EXPECT_EQ(parse_algorithm("als"), Algorithm::als);
  EXPECT_EQ(to_string(Algorithm::softimpute_als), "softimpute_als");
  EXPECT_THROW(parse_algorithm("svd"), ValidationError);
}

TEST(SoftImputeAls, FullyObservedMatchesSoftSvd) {
  std::mt19937_64 rng(3);
  const DenseMatrix full = gaussian_matrix(20, 15, rng);
  const FitResult r = fit(fully_observed(full), tight(Algorithm::softimpute_als, 8, 1.5));
  EXPECT_TRUE(r.converged);
  const Eigen::MatrixXd want = eigen_soft_svd(to_eigen(full), 8, 1.5);
  EXPECT_LT((to_eigen(r.factors.model()) - want).norm(), 1e-6);
}

TEST(Completion, AboveLambdaMaxGivesTheZeroModel) {
  std::mt19937_64 rng(4);
  const ObservedMatrix x = low_rank_instance(12, 9, 2, 0.5, 0.1, rng);
  const double lmax = lambda_max(x);
  for (Algorithm alg : {Algorithm::softimpute_als, Algorithm::als, Algorithm::softimpute}) {
    const FitResult r = fit(x, tight(alg, 4, lmax * 1.01));
    EXPECT_EQ(compact(r.factors).rank(), 0u);
    EXPECT_LE(r.trace.size(), 2u);
    EXPECT_DOUBLE_EQ(r.final_objective, 0.5 * x.norm_sq());
  }
}

TEST(Completion, RecoversLowRankSignal) {
  std::mt19937_64 rng(5);
  DenseMatrix truth;
  const ObservedMatrix x = low_rank_instance(50, 40, 3, 0.5, 0.0, rng, &truth);
  FitConfig c = tight(Algorithm::softimpute_als, 6, 0.5);
  c.tol = 1e-14;
  const FitResult r = fit(x, c);
  EXPECT_LT(test_error(r.factors, truth, x), 0.1);
  expect_nonincreasing(r.trace, false);
}

TEST(Completion, SolversAgreeWhenTheRankIsNotBinding) {
  std::mt19937_64 rng(6);
  const ObservedMatrix x = low_rank_instance(50, 40, 3, 0.5, 0.5, rng);
  const double lambda = 0.2 * lambda_max(x);
  const FitResult sals = fit(x, tight(Algorithm::softimpute_als, 8, lambda));
  const FitResult als = fit(x, tight(Algorithm::als, 8, lambda));
  const FitResult si = fit(x, tight(Algorithm::softimpute, 8, lambda));
  ASSERT_LT(compact(sals.factors).rank(), 8u);
  const double h = sals.final_objective;
  EXPECT_NEAR(als.trace.back().f, sals.trace.back().f, 1e-4 * h);
  EXPECT_NEAR(si.final_objective, h, 1e-4 * h);
  EXPECT_NEAR(als.final_objective, h, 1e-4 * h);
  expect_nonincreasing(sals.trace, false);
  expect_nonincreasing(als.trace, false);
  expect_nonincreasing(si.trace, true);
}

TEST(Als, OneEntryPerRowAndColumnIsScalarRidge) {
  // Omega is a permutation: every row and column regression has one sample.
  const std::size_t n = 6;
  std::vector<Entry> e;
  for (std::size_t i = 0; i < n; ++i) e.push_back({i, (i * 5 + 1) % n, 1.0 + double(i)});
  const ObservedMatrix x = ObservedMatrix::from_entries(n, n, e);
  const double lambda = 0.5;
  const FitResult r = fit(x, tight(Algorithm::als, 2, lambda));
  const DenseMatrix a = r.factors.a();
  const DenseMatrix b = r.factors.b();
  for (const Entry& en : e) {
    auto bj = b.row(en.col);
    double bb = 0.0;
    for (double v : bj) bb += v * v;
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_NEAR(a(en.row, k), en.value * bj[k] / (bb + lambda), 1e-8);
    }
  }
}

TEST(Als, FullyObservedSatisfiesTheDenseRidgeEquations) {
  std::mt19937_64 rng(7);
  const DenseMatrix full = gaussian_matrix(12, 9, rng);
  const double lambda = 1.0;
  const FitResult r = fit(fully_observed(full), tight(Algorithm::als, 9, lambda));
  const Eigen::MatrixXd x = to_eigen(full);
  const Eigen::MatrixXd a = to_eigen(r.factors.a());
  const Eigen::MatrixXd b = to_eigen(r.factors.b());
  const Eigen::MatrixXd ridge =
      x * b * (b.transpose() * b + lambda * Eigen::MatrixXd::Identity(9, 9)).inverse();
  EXPECT_LT((a - ridge).norm(), 1e-7 * (1.0 + a.norm()));
  EXPECT_LT((a * b.transpose() - eigen_soft_svd(x, 9, lambda)).norm(), 1e-6);
}

TEST(SoftImpute, FullyObservedIsOneSoftSvd) {
  std::mt19937_64 rng(8);
  const DenseMatrix full = gaussian_matrix(15, 10, rng);
  const FitResult r = fit(fully_observed(full), tight(Algorithm::softimpute, 5, 0.9));
  EXPECT_LE(r.iterations, 2);
  EXPECT_LT((to_eigen(r.factors.model()) - eigen_soft_svd(to_eigen(full), 5, 0.9)).norm(), 1e-6);
}

TEST(SoftImputeAls, HalfStepDescentWithIndependentObjective) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 5; ++t) {
    const ObservedMatrix x = low_rank_instance(30, 20, 4, 0.4, 0.3, rng);
    const double lambda = 0.5 + t;
    FitConfig c = tight(Algorithm::softimpute_als, 6, lambda);
    c.seed = 100 + t;
    SoftImputeAlsSolver s(x, c);
    const Eigen::MatrixXd px = dense_observed(x);
    Eigen::MatrixXd mask;
    dense_observed(x, &mask);
    auto f_dense = [&](const FactorPair& p) {
      const Eigen::MatrixXd a = to_eigen(p.a());
      const Eigen::MatrixXd b = to_eigen(p.b());
      return 0.5 * (px - mask.cwiseProduct(a * b.transpose())).squaredNorm() +
             0.5 * lambda * (a.squaredNorm() + b.squaredNorm());
    };
    double prev = f_dense(s.state());
    for (int it = 0; it < 40; ++it) {
      s.half_step_b();
      const double mid = f_dense(s.state());
      s.half_step_a();
      const double next = f_dense(s.state());
      EXPECT_LE(mid, prev + 1e-10 * prev);
      EXPECT_LE(next, mid + 1e-10 * mid);
      prev = next;

      // ||A B^T||_* <= (||A||^2 + ||B||^2) / 2, with equality in SVD form.
      const double nuc = model_nuclear_norm(s.state());
      const double half = 0.5 * (frobenius_norm_sq(s.state().a()) + frobenius_norm_sq(s.state().b()));
      EXPECT_NEAR(nuc, half, 1e-8 * (1.0 + half));
    }
  }
}

TEST(SoftImputeAls, ExportedFactorsGiveFEqualToH) {
  std::mt19937_64 rng(10);
  const ObservedMatrix x = low_rank_instance(30, 25, 3, 0.5, 0.2, rng);
  const double lambda = 0.3 * lambda_max(x);
  const FitResult r = fit(x, tight(Algorithm::softimpute_als, 8, lambda));
  ASSERT_LT(compact(r.factors).rank(), 8u);
  const double f = objective_F(x, r.factors.a(), r.factors.b(), lambda);
  EXPECT_NEAR(f, objective_H(x, r.factors, lambda), 1e-8 * f);
}

TEST(SoftImputeAls, DeterministicAcrossThreads) {
  std::mt19937_64 rng(11);
  const ObservedMatrix x = low_rank_instance(60, 45, 4, 0.3, 0.2, rng);
  FitConfig c = tight(Algorithm::softimpute_als, 6, 2.0);
  c.tol = 1e-8;
  const FitResult one = fit(x, c);
  for (unsigned threads : {2u, 4u}) {
    c.parallel = {threads, true};
    const FitResult many = fit(x, c);
    EXPECT_EQ(many.factors.u, one.factors.u);
    EXPECT_EQ(many.factors.d, one.factors.d);
    EXPECT_EQ(many.iterations, one.iterations);
  }
}

TEST(CostModel, AlsToSoftImputeAlsRatioGrowsWithRank) {
  std::mt19937_64 rng(12);
  const ObservedMatrix x = low_rank_instance(100, 80, 10, 0.3, 0.5, rng);
  std::vector<double> rs, ratios;
  for (std::size_t r : {4u, 8u, 16u, 32u}) {
    FitConfig c = tight(Algorithm::softimpute_als, r, 1.0);
    c.max_iter = 5;
    c.lambda_max = 1e9;
    const FitResult s = fit(x, c);
    c.algorithm = Algorithm::als;
    const FitResult a = fit(x, c);
    rs.push_back(double(r));
    ratios.push_back((double(a.flops) / a.iterations) / (double(s.flops) / s.iterations));
  }
  for (std::size_t k = 1; k < ratios.size(); ++k) EXPECT_GT(ratios[k], ratios[k - 1]);
}

TEST(Path, SingleLargeLambda) {
  std::mt19937_64 rng(13);
  const ObservedMatrix x = low_rank_instance(30, 20, 3, 0.5, 0.3, rng);
  PathConfig pc;
  pc.base = tight(Algorithm::softimpute_als, 6, 1.0);
  pc.lambdas = {0.95 * lambda_max(x)};
  const PathResult p = fit_path(x, pc);
  ASSERT_EQ(p.fits.size(), 1u);
  EXPECT_LE(compact(p.fits[0].factors).rank(), 1u);
}

TEST(Path, RanksGrowAndWarmStartsHelp) {
  std::mt19937_64 rng(14);
  const ObservedMatrix x = low_rank_instance(40, 30, 5, 0.5, 0.5, rng);
  PathConfig pc;
  pc.base = tight(Algorithm::softimpute_als, 12, 1.0);
  pc.base.tol = 1e-16;
  pc.count = 6;
  const PathResult p = fit_path(x, pc);
  ASSERT_EQ(p.fits.size(), 6u);
  EXPECT_EQ(p.lambdas, lambda_grid(p.lambda_max, 6));
  for (std::size_t k = 1; k < p.fits.size(); ++k) {
    EXPECT_LT(p.lambdas[k], p.lambdas[k - 1]);
    EXPECT_GE(compact(p.fits[k].factors).rank(), compact(p.fits[k - 1].factors).rank());
  }

  FitConfig cold = pc.base;
  cold.lambda = p.lambdas[2];
  const FitResult c = fit(x, cold);
  const FitResult& w = p.fits[2];
  EXPECT_NEAR(w.final_objective, c.final_objective, 1e-6 * c.final_objective);
  if (w.iterations >= c.iterations) {
    std::cerr << "note: warm start used " << w.iterations << " iterations, cold "
              << c.iterations << '\n';
  }

  PathConfig bad = pc;
  bad.lambdas = {1.0, 2.0};
  EXPECT_THROW(fit_path(x, bad), ValidationError);
  bad.lambdas.clear();
  bad.count = 0;
  EXPECT_THROW(fit_path(x, bad), ValidationError);
}

TEST(Path, GridEndpoints) {
  const std::vector<double> g = lambda_grid(10.0, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), 9.5);
  EXPECT_NEAR(g.back(), 0.5, 1e-12);
  EXPECT_NEAR(g[1] / g[0], g[2] / g[1], 1e-12);
}
