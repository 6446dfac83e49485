#pragma once

// Sparse-plus-low-rank matrices X* = S + L R^T with S supported on Omega,
// and the skinny multiplies every solver goes through.

#include <cstddef>
#include <functional>
#include <vector>

#include "softals/dense.hpp"
#include "softals/observed.hpp"
#include "softals/parallel.hpp"

namespace softals {

class SplrMatrix {
 public:
  SplrMatrix() = default;
  /// left is m x r, right is n x r; r may be 0 (pure sparse).
  SplrMatrix(ObservedMatrix sparse, DenseMatrix left, DenseMatrix right);

  /// P_Omega(X) with an empty low-rank part.
  static SplrMatrix sparse_only(ObservedMatrix sparse);

  std::size_t rows() const noexcept { return sparse_.rows(); }
  std::size_t cols() const noexcept { return sparse_.cols(); }
  std::size_t rank() const noexcept { return left_.cols(); }

  const ObservedMatrix& sparse_part() const noexcept { return sparse_; }
  const DenseMatrix& left() const noexcept { return left_; }
  const DenseMatrix& right() const noexcept { return right_; }

  /// s_ij + sum_k left[i,k] right[j,k]
  double at(std::size_t i, std::size_t j) const;
  /// Test-scale materialization.
  DenseMatrix to_dense() const;

 private:
  ObservedMatrix sparse_;
  DenseMatrix left_;
  DenseMatrix right_;
};

/// P_Omega(M) for an arbitrary evaluator of M, aligned with target's entries.
std::vector<double> project_omega(const std::function<double(std::size_t, std::size_t)>& probe,
                                  const ObservedMatrix& target);

/// P_Omega(L R^T) values; r * |Omega| multiply-adds.
std::vector<double> project_low_rank(const SparsityPattern& pattern, const DenseMatrix& left,
                                     const DenseMatrix& right, FlopCounter* counter = nullptr);

/// X* = (P_Omega(X) - P_Omega(A B^T)) + A B^T
SplrMatrix splr_from_residual(const ObservedMatrix& x, const DenseMatrix& a, const DenseMatrix& b,
                              FlopCounter* counter = nullptr);

/// X* W = S W + left (right^T W), m x k.
DenseMatrix splr_right_multiply(const SplrMatrix& x, const DenseMatrix& w,
                                const ParallelOptions& par = {}, FlopCounter* counter = nullptr);

/// X*^T W = S^T W + right (left^T W), n x k. With par.deterministic the sparse
/// part is gathered column by column; otherwise rows are scattered into
/// per-block partial sums added in block order.
DenseMatrix splr_left_multiply(const SplrMatrix& x, const DenseMatrix& w,
                               const ParallelOptions& par = {}, FlopCounter* counter = nullptr);

/// The two products the alternating solvers need from a fully observed matrix.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  /// X W
  virtual DenseMatrix multiply(const DenseMatrix& w, FlopCounter* counter) const = 0;
  /// X^T W
  virtual DenseMatrix multiply_transpose(const DenseMatrix& w, FlopCounter* counter) const = 0;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(const DenseMatrix& x) : x_(x) {}
  std::size_t rows() const override { return x_.rows(); }
  std::size_t cols() const override { return x_.cols(); }
  DenseMatrix multiply(const DenseMatrix& w, FlopCounter* counter) const override;
  DenseMatrix multiply_transpose(const DenseMatrix& w, FlopCounter* counter) const override;

 private:
  const DenseMatrix& x_;
};

class SplrOperator final : public LinearOperator {
 public:
  explicit SplrOperator(const SplrMatrix& x, ParallelOptions par = {}) : x_(x), par_(par) {}
  std::size_t rows() const override { return x_.rows(); }
  std::size_t cols() const override { return x_.cols(); }
  DenseMatrix multiply(const DenseMatrix& w, FlopCounter* counter) const override;
  DenseMatrix multiply_transpose(const DenseMatrix& w, FlopCounter* counter) const override;

 private:
  const SplrMatrix& x_;
  ParallelOptions par_;
};

}  // namespace softals
