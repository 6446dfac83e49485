#include <gtest/gtest.h>

#include <random>

#include "softals/errors.hpp"
#include "softals/observed.hpp"
#include "softals/splr.hpp"
#include "support.hpp"

using namespace softals;
using softals::testing::dense_observed;
using softals::testing::random_observed;
using softals::testing::to_eigen;

namespace {

SplrMatrix random_splr(std::size_t m, std::size_t n, std::size_t r, std::mt19937_64& rng) {
  const ObservedMatrix s = random_observed(gaussian_matrix(m, n, rng), 0.4, rng);
  return SplrMatrix(s, gaussian_matrix(m, r, rng), gaussian_matrix(n, r, rng));
}

Eigen::MatrixXd dense_splr(const SplrMatrix& x) {
  return dense_observed(x.sparse_part()) + to_eigen(x.left()) * to_eigen(x.right()).transpose();
}

}  // namespace

TEST(ObservedMatrix, SortsAndIndexesBothWays) {
  const std::vector<Entry> in{{1, 2, 5.0}, {0, 1, 1.0}, {1, 0, 3.0}, {0, 0, 2.0}};
  const ObservedMatrix x = ObservedMatrix::from_entries(2, 3, in);
  ASSERT_EQ(x.nnz(), 4u);
  EXPECT_EQ(x.row_of(0), 0u);
  EXPECT_EQ(x.col_of(0), 0u);
  EXPECT_EQ(x.value(3), 5.0);
  EXPECT_EQ(x.pattern().row_count(1), 2u);
  EXPECT_EQ(x.pattern().col_count(2), 1u);
  EXPECT_EQ(x.pattern().find(1, 2), 3u);
  EXPECT_EQ(x.pattern().find(0, 2), x.nnz());
  EXPECT_DOUBLE_EQ(x.norm_sq(), 4 + 1 + 9 + 25);
  EXPECT_DOUBLE_EQ(x.observed_fraction(), 4.0 / 6.0);
}

TEST(ObservedMatrix, ColumnIndexRebuildsTheSamePattern) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const ObservedMatrix x = random_observed(gaussian_matrix(13, 9, rng), 0.3, rng);
    std::vector<std::pair<std::size_t, std::size_t>> by_rows, by_cols;
    for (std::size_t e = 0; e < x.nnz(); ++e) by_rows.emplace_back(x.row_of(e), x.col_of(e));
    for (std::size_t j = 0; j < x.cols(); ++j)
      for (std::size_t e : x.pattern().col_entries(j)) by_cols.emplace_back(x.row_of(e), j);
    std::sort(by_cols.begin(), by_cols.end());
    EXPECT_EQ(by_rows, by_cols);
  }
}

TEST(ObservedMatrix, RejectsBadInput) {
  const std::vector<Entry> dup{{0, 0, 1.0}, {1, 1, 2.0}, {0, 0, 3.0}};
  try {
    ObservedMatrix::from_entries(2, 2, dup);
    FAIL() << "duplicate accepted";
  } catch (const DuplicateEntry& e) {
    EXPECT_EQ(e.first(), 0u);
    EXPECT_EQ(e.second(), 2u);
  }
  const std::vector<Entry> out{{2, 0, 1.0}};
  EXPECT_THROW(ObservedMatrix::from_entries(2, 2, out), DimensionMismatch);
  const std::vector<Entry> nan{{0, 0, std::nan("")}};
  EXPECT_THROW(ObservedMatrix::from_entries(2, 2, nan), ValidationError);
}

TEST(ProjectOmega, ZeroIdentityAndRankOne) {
  const std::vector<Entry> in{{0, 0, 1.0}, {0, 2, 2.0}, {1, 1, 3.0}, {2, 0, 4.0}};
  const ObservedMatrix x = ObservedMatrix::from_entries(3, 3, in);
  EXPECT_EQ(project_omega([](std::size_t, std::size_t) { return 0.0; }, x),
            (std::vector<double>(4, 0.0)));
  const Eigen::MatrixXd dx = dense_observed(x);
  EXPECT_EQ(project_omega([&](std::size_t i, std::size_t j) { return dx(i, j); }, x),
            (std::vector<double>{1, 2, 3, 4}));

  const double u[3] = {1.0, -2.0, 0.5};
  const double v[3] = {3.0, 0.25, -1.0};
  const auto got = project_omega([&](std::size_t i, std::size_t j) { return u[i] * v[j]; }, x);
  EXPECT_EQ(got, (std::vector<double>{3.0, -1.0, -0.5, 1.5}));
}

TEST(SplrFromResidual, SparsePartAndMaterialization) {
  std::mt19937_64 rng(2);
  const ObservedMatrix x = random_observed(gaussian_matrix(5, 4, rng), 0.5, rng);

  // Zero factors: the sparse part is X and the low-rank part vanishes.
  const DenseMatrix za(5, 2), zb(4, 2);
  const SplrMatrix s0 = splr_from_residual(x, za, zb);
  EXPECT_EQ(std::vector<double>(s0.sparse_part().values().begin(), s0.sparse_part().values().end()),
            std::vector<double>(x.values().begin(), x.values().end()));
  EXPECT_EQ(max_abs(s0.left()), 0.0);

  const DenseMatrix a = gaussian_matrix(5, 2, rng);
  const DenseMatrix b = gaussian_matrix(4, 2, rng);
  // X equal to A B^T on Omega: the residual is exactly zero.
  const Eigen::MatrixXd ab = to_eigen(a) * to_eigen(b).transpose();
  const ObservedMatrix exact = x.with_values(project_low_rank(x.pattern(), a, b));
  const SplrMatrix fitted = splr_from_residual(exact, a, b);
  for (double v : fitted.sparse_part().values()) EXPECT_EQ(v, 0.0);

  // X* = P_Omega(X) + P_Omega^perp(A B^T), built densely.
  Eigen::MatrixXd mask;
  const Eigen::MatrixXd px = dense_observed(x, &mask);
  const Eigen::MatrixXd want =
      px + (Eigen::MatrixXd::Ones(5, 4) - mask).cwiseProduct(ab);
  const SplrMatrix xs = splr_from_residual(x, a, b);
  EXPECT_LT((to_eigen(xs.to_dense()) - want).norm(), 1e-13);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(xs.at(i, j), want(i, j), 1e-13);
  EXPECT_THROW(splr_from_residual(x, gaussian_matrix(6, 2, rng), b), DimensionMismatch);
}

TEST(SplrMultiply, ZeroAndOrthonormalColumnCases) {
  std::mt19937_64 rng(3);
  const SplrMatrix x = random_splr(6, 5, 2, rng);
  EXPECT_EQ(max_abs(splr_right_multiply(x, DenseMatrix(5, 3))), 0.0);
  EXPECT_EQ(max_abs(splr_left_multiply(x, DenseMatrix(6, 3))), 0.0);

  // S = 0 and a unit-norm right factor: X* w = left.
  const ObservedMatrix empty = ObservedMatrix::from_entries(6, 5, std::vector<Entry>{});
  const DenseMatrix left = gaussian_matrix(6, 1, rng);
  DenseMatrix right = orthonormalize(gaussian_matrix(5, 1, rng)).q;
  const SplrMatrix lr(empty, left, right);
  EXPECT_LT(max_abs(splr_right_multiply(lr, right) - left), 1e-14);
}

TEST(SplrMultiply, MatchesDenseOracle) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 40; ++t) {
    const std::size_t m = 2 + rng() % 49, n = 2 + rng() % 49, r = rng() % 4, k = 1 + rng() % 5;
    const SplrMatrix x = random_splr(m, n, r, rng);
    const Eigen::MatrixXd dx = dense_splr(x);
    const DenseMatrix w = gaussian_matrix(n, k, rng);
    const DenseMatrix wl = gaussian_matrix(m, k, rng);
    const double tol_r = 1e-12 * dx.norm() * frobenius_norm(w);
    const double tol_l = 1e-12 * dx.norm() * frobenius_norm(wl);
    EXPECT_LE((to_eigen(splr_right_multiply(x, w)) - dx * to_eigen(w)).norm(), tol_r);
    EXPECT_LE((to_eigen(splr_left_multiply(x, wl)) - dx.transpose() * to_eigen(wl)).norm(), tol_l);
  }
}

TEST(SplrMultiply, LeftIsTheTransposeOfRight) {
  std::mt19937_64 rng(5);
  const SplrMatrix x = random_splr(7, 6, 2, rng);
  std::vector<Entry> t;
  for (const Entry& e : x.sparse_part().entries()) t.push_back({e.col, e.row, e.value});
  const SplrMatrix xt(ObservedMatrix::from_entries(6, 7, t), x.right(), x.left());
  const DenseMatrix w = gaussian_matrix(7, 3, rng);
  EXPECT_LT(max_abs(splr_left_multiply(x, w) - splr_right_multiply(xt, w)), 1e-13);
}

TEST(SplrMultiply, OperationCountFollowsTheCostModel) {
  std::mt19937_64 rng(6);
  for (std::size_t r : {1u, 3u, 8u}) {
    const SplrMatrix x = random_splr(40, 30, r, rng);
    const std::size_t k = 5;
    FlopCounter fc;
    splr_right_multiply(x, gaussian_matrix(30, k, rng), {}, &fc);
    const double model = double(k) * x.sparse_part().nnz() + double(40 + 30) * r * k;
    EXPECT_GE(fc.ops, 0.5 * model);
    EXPECT_LE(fc.ops, 2.0 * model);
  }
}

TEST(SplrMultiply, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(7);
  const SplrMatrix x = random_splr(50, 40, 3, rng);
  const DenseMatrix w = gaussian_matrix(40, 4, rng);
  const DenseMatrix wl = gaussian_matrix(50, 4, rng);
  const DenseMatrix r1 = splr_right_multiply(x, w, {1, true});
  const DenseMatrix l1 = splr_left_multiply(x, wl, {1, true});
  for (unsigned threads : {2u, 3u, 8u}) {
    EXPECT_EQ(splr_right_multiply(x, w, {threads, true}), r1);
    EXPECT_EQ(splr_left_multiply(x, wl, {threads, true}), l1);
    EXPECT_LT(max_abs(splr_left_multiply(x, wl, {threads, false}) - l1), 1e-12);
  }
}

TEST(SplrMatrix, AtAddsOneProductPerTerm) {
  std::mt19937_64 rng(8);
  const SplrMatrix x = random_splr(4, 3, 2, rng);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t e = x.sparse_part().pattern().find(i, j);
      double want = e < x.sparse_part().nnz() ? x.sparse_part().value(e) : 0.0;
      for (std::size_t k = 0; k < 2; ++k) want += x.left()(i, k) * x.right()(j, k);
      EXPECT_EQ(x.at(i, j), want);
    }
  }
}
