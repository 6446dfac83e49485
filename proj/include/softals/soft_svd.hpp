#pragma once

// Rank-restricted soft-thresholded SVD of a fully observed matrix by
// alternating ridge regressions, plus a direct dense reference solver.

#include <cstdint>
#include <functional>
#include <optional>

#include "softals/dense.hpp"
#include "softals/factors.hpp"
#include "softals/splr.hpp"
#include "softals/trace.hpp"

namespace softals {

struct SoftSvdConfig {
  std::size_t rank = 1;
  double lambda = 0.0;
  double tol = 1e-5;
  int max_iter = 300;
  std::uint64_t seed = 1;
  bool final_cleanup = true;
  /// Prior solution; padded to `rank` with pad_factors.
  std::optional<FactorPair> warm_start;
  /// d given to padding columns of a warm start (default: smallest live d).
  std::optional<double> pad_value;
  /// Keep zero columns of the warm start instead of re-seeding them.
  bool exact_warm_start = false;
};

enum class HalfStep { b_update, a_update };

/// Called with the (U, d, V) state after every half-step; U diag(d) V^T is the
/// current A B^T.
using SoftSvdObserver = std::function<void(const FactorPair&, HalfStep)>;

struct SoftSvdResult {
  FactorPair factors;
  int iterations = 0;
  bool converged = false;
  /// The iteration stopped because the current subspace certified a zero model.
  bool zero_model = false;
  IterTrace trace;
};

/// Validates cfg against an m x n input; throws ValidationError.
void validate(const SoftSvdConfig& cfg, std::size_t m, std::size_t n);

/// `objective`, when given, fills the F and H columns of the trace (its cost
/// is excluded from the seconds column).
SoftSvdResult soft_svd_solve(const LinearOperator& x, const SoftSvdConfig& cfg,
                             FlopCounter* counter = nullptr,
                             const SoftSvdObserver& observer = {},
                             const std::function<double(const FactorPair&)>& objective = {});

SoftSvdResult soft_svd_solve(const DenseMatrix& x, const SoftSvdConfig& cfg,
                             FlopCounter* counter = nullptr,
                             const SoftSvdObserver& observer = {});

/// Largest singular value by power iteration on x^T x from a fixed seed,
/// stopped when ||x^T x v - s^2 v|| <= tol * s^2.
double top_singular_value(const LinearOperator& x, double tol = 1e-8, int max_iter = 20000,
                          std::uint64_t seed = 12345, FlopCounter* counter = nullptr);

/// Dense reference: full SVD, top r values
/// soft-thresholded. Only for min(m, n) <= 100.
DenseMatrix oracle_soft_svd(const DenseMatrix& x, std::size_t r, double lambda);

/// Full SVD of a test-scale matrix (min(m, n) <= 100); s nonincreasing.
SmallSvd oracle_svd(const DenseMatrix& x);

/// 1/2 ||X* - U diag(d) V^T||_F^2 + lambda sum(d) without materializing X*.
double soft_svd_objective(const SplrMatrix& x, const FactorPair& f, double lambda);

}  // namespace softals
