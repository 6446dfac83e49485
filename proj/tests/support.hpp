#pragma once

// Shared fixtures: random instances and Eigen-based dense references.

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "softals/dense.hpp"
#include "softals/factors.hpp"
#include "softals/observed.hpp"
#include "softals/splr.hpp"

namespace softals::testing {

inline Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
  Eigen::MatrixXd out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  return out;
}

inline DenseMatrix from_eigen(const Eigen::MatrixXd& a) {
  DenseMatrix out(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  return out;
}

inline DenseMatrix random_dense(std::size_t m, std::size_t n, std::mt19937_64& rng) {
  return gaussian_matrix(m, n, rng);
}

/// Each cell kept with probability `observed`; every row and column keeps at
/// least one entry.
inline ObservedMatrix random_observed(const DenseMatrix& full, double observed,
                                      std::mt19937_64& rng) {
  std::bernoulli_distribution keep(observed);
  const std::size_t m = full.rows();
  const std::size_t n = full.cols();
  std::vector<char> mask(m * n, 0);
  for (auto& c : mask) c = keep(rng) ? 1 : 0;
  for (std::size_t i = 0; i < m; ++i) mask[i * n + (i % n)] = 1;
  for (std::size_t j = 0; j < n; ++j) mask[(j % m) * n + j] = 1;
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (mask[i * n + j]) entries.push_back({i, j, full(i, j)});
  return ObservedMatrix::from_entries(m, n, entries);
}

inline ObservedMatrix fully_observed(const DenseMatrix& full) {
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < full.rows(); ++i)
    for (std::size_t j = 0; j < full.cols(); ++j) entries.push_back({i, j, full(i, j)});
  return ObservedMatrix::from_entries(full.rows(), full.cols(), entries);
}

/// Low-rank signal plus noise, with a random mask.
inline ObservedMatrix low_rank_instance(std::size_t m, std::size_t n, std::size_t rank,
                                        double observed, double noise, std::mt19937_64& rng,
                                        DenseMatrix* truth = nullptr) {
  DenseMatrix full = multiply_nt(gaussian_matrix(m, rank, rng), gaussian_matrix(n, rank, rng));
  if (truth != nullptr) *truth = full;
  std::normal_distribution<double> z(0.0, noise);
  for (double& v : full.values()) v += z(rng);
  return random_observed(full, observed, rng);
}

/// Dense P_Omega(X) with zeros elsewhere, and the 0/1 mask.
inline Eigen::MatrixXd dense_observed(const ObservedMatrix& x, Eigen::MatrixXd* mask = nullptr) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  if (mask != nullptr) *mask = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    out(x.row_of(e), x.col_of(e)) = x.value(e);
    if (mask != nullptr) (*mask)(x.row_of(e), x.col_of(e)) = 1.0;
  }
  return out;
}

/// U_r S_lambda(D_r) V_r^T from Eigen's SVD.
inline Eigen::MatrixXd eigen_soft_svd(const Eigen::MatrixXd& x, std::size_t r, double lambda) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  const auto& s = svd.singularValues();
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(r) && k < s.size(); ++k) {
    const double t = std::max(s(k) - lambda, 0.0);
    out += t * svd.matrixU().col(k) * svd.matrixV().col(k).transpose();
  }
  return out;
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

}  // namespace softals::testing
