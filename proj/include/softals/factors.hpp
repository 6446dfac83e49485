#pragma once

// The model in SVD form: M = U diag(d) V^T with U, V orthonormal and
// d >= 0 nonincreasing. The alternating solvers work with
// A = U diag(sqrt(d)), B = V diag(sqrt(d)), so that A B^T = M and
// ||A||_F^2 = ||B||_F^2 = sum(d) = ||M||_*.

#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "softals/dense.hpp"

namespace softals {

struct FactorPair {
  DenseMatrix u;          // m x r
  std::vector<double> d;  // r
  DenseMatrix v;          // n x r

  static FactorPair zero(std::size_t m, std::size_t n, std::size_t r = 0);

  std::size_t rows() const noexcept { return u.rows(); }
  std::size_t cols() const noexcept { return v.rows(); }
  std::size_t rank() const noexcept { return d.size(); }

  DenseMatrix a() const;
  DenseMatrix b() const;
  /// sum(d)
  double nuclear_norm() const;
  /// M_ij
  double at(std::size_t i, std::size_t j) const;
  /// Test-scale materialization of M.
  DenseMatrix model() const;

  /// Throws DimensionMismatch if the shapes disagree.
  void check_shapes() const;
};

/// Columns of U, V and entries of d reordered so d is nonincreasing, and
/// columns with d == 0 dropped.
FactorPair compact(const FactorPair& f);

/// Count of d_k > 1e-9 * d_1.
std::size_t rank_estimate(std::span<const double> d);

struct FrobeniusDelta {
  double value = 0.0;     // ||M_old - M_new||_F^2 / ||M_old||_F^2
  bool old_zero = false;  // value is +inf
};

/// Relative squared change of the model, computed on small cores so tiny
/// changes do not drown in cancellation; O((m + n) r^2 + r^3). Columns with
/// d == 0 are ignored; orthonormal old bases take a cheaper route than the
/// general thin QR of [U, U~] and [V, V~].
FrobeniusDelta frobenius_delta(const FactorPair& old_pair, const FactorPair& new_pair,
                               FlopCounter* counter = nullptr);

/// Orthonormalized m x r Gaussian.
DenseMatrix random_orthonormal(std::size_t m, std::size_t r, std::mt19937_64& rng);

/// Brings a prior solution to operating rank r. Columns with d == 0 are
/// dropped unless keep_dead is set. Missing columns get random U directions
/// orthogonal to the kept ones, zero V columns (so the product is unchanged)
/// and d = pad_value, defaulting to the smallest positive kept d, or 1.
/// Extra columns beyond r are truncated.
FactorPair pad_factors(const FactorPair& prior, std::size_t r, std::mt19937_64& rng,
                       std::optional<double> pad_value = std::nullopt, bool keep_dead = false);

/// SVD form of A B^T for arbitrary factors: QR of both sides and an r x r SVD
/// of R_A R_B^T; O((m + n) r^2 + r^3).
FactorPair svd_form(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* counter = nullptr);

/// Reduced-rank SVD of the shrunk problem's input: nonzero d shifted up by lambda.
FactorPair unregularized(const FactorPair& f, double lambda);

}  // namespace softals
