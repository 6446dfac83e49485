#pragma once

// Method-of-moments centering and scaling of an incomplete matrix under
//   X_ij ~ (alpha_i + beta_j, (tau_i gamma_j)^2),
// so that the standardized observed rows and columns have mean 0 and
// variance 1.

#include <cstddef>
#include <string>
#include <vector>

#include "softals/observed.hpp"
#include "softals/splr.hpp"

namespace softals {

struct ScalingFlags {
  bool center_rows = false;
  bool center_cols = false;
  bool scale_rows = false;
  bool scale_cols = false;

  bool any() const noexcept { return center_rows || center_cols || scale_rows || scale_cols; }
  /// "rows" | "cols" | "both" | "none" for the centering and scaling halves.
  static ScalingFlags parse(const std::string& center, const std::string& scale);
  static ScalingFlags all() noexcept { return {true, true, true, true}; }
};

struct ScalingParams {
  std::vector<double> alpha;  // row centers
  std::vector<double> beta;   // column centers
  std::vector<double> tau;    // row scales
  std::vector<double> gamma;  // column scales
  ScalingFlags flags;

  /// Zero centers, unit scales.
  static ScalingParams identity(std::size_t m, std::size_t n, ScalingFlags flags = {});
  std::size_t rows() const noexcept { return alpha.size(); }
  std::size_t cols() const noexcept { return beta.size(); }
  /// Throws ValidationError on a size mismatch, a non-finite value or a scale <= 0.
  void check(std::size_t m, std::size_t n) const;
};

struct ScaleReport {
  int iterations = 0;  // sweeps performed
  std::vector<double> residuals;  // R after each sweep
  bool converged = false;
  /// Last ratio R_t / R_{t-1}, NaN with fewer than two positive residuals.
  double observed_rate() const;
};

struct ScalingOptions {
  double tol = 1e-10;
  int max_iter = 100;
};

struct ScalingFit {
  ScalingParams params;
  ScaleReport report;
};

/// Cycles alpha -> beta -> tau -> gamma over the enabled families, each one
/// solving its own moment equations given the others, and monitors
///   R = sum_i mean_i(Xt)^2 + sum_j mean_j(Xt)^2
///     + sum_i log^2 mean_i(Xt^2) + sum_j log^2 mean_j(Xt^2)
/// over the enabled terms. Throws ValidationError naming the first row or
/// column with too few entries (1 for centering, 2 for scaling) or whose
/// spread collapses to zero.
ScalingFit fit_scaling(const ObservedMatrix& x, ScalingFlags flags, const ScalingOptions& opt = {});

/// Same iteration on working standardized values with additive and
/// multiplicative increments; R is the sum of squared increments (log for the
/// scales).
ScalingFit fit_scaling_incremental(const ObservedMatrix& x, ScalingFlags flags,
                                   const ScalingOptions& opt = {});

/// Fully observed matrix S + L R^T (zeros off the sparse pattern count as
/// observed values). Nothing of size m x n is formed.
ScalingFit fit_scaling_incremental(const SplrMatrix& x, ScalingFlags flags,
                                   const ScalingOptions& opt = {});

/// alpha and beta shifted to mean(alpha) = 0 when both centers are enabled;
/// tau and gamma rescaled to mean(log tau) = 0 when both scales are enabled.
void normalize(ScalingParams& p);

/// (X_ij - alpha_i - beta_j) / (tau_i gamma_j) on the same pattern.
ObservedMatrix apply_scaling(const ObservedMatrix& x, const ScalingParams& p);

/// D_tau^{-1} (S + L R^T - alpha 1^T - 1 beta^T) D_gamma^{-1}, kept in
/// sparse-plus-low-rank form with two extra columns.
SplrMatrix apply_scaling(const SplrMatrix& x, const ScalingParams& p);

/// tau_i gamma_j m_ij + alpha_i + beta_j
double invert_scaling(double prediction, std::size_t i, std::size_t j, const ScalingParams& p);

}  // namespace softals
