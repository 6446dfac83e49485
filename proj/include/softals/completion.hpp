#pragma once

// Matrix completion solvers for
//   minimize 1/2 ||P_Omega(X - A B^T)||^2 + lambda/2 (||A||^2 + ||B||^2)
// (equivalently the nuclear-norm problem when the rank is large enough):
// softImpute-ALS, plain ALS and the original softImpute, plus a
// warm-started regularization path.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "softals/factors.hpp"
#include "softals/observed.hpp"
#include "softals/parallel.hpp"
#include "softals/splr.hpp"
#include "softals/trace.hpp"

namespace softals {

enum class Algorithm { softimpute_als, als, softimpute };

std::string to_string(Algorithm a);
/// Accepts "softimpute_als", "als", "softimpute"; throws ValidationError.
Algorithm parse_algorithm(std::string_view name);

struct FitConfig {
  Algorithm algorithm = Algorithm::softimpute_als;
  std::size_t rank = 10;
  double lambda = 1.0;
  double tol = 1e-5;
  int max_iter = 300;
  std::uint64_t seed = 1;
  std::optional<FactorPair> warm_start;
  std::optional<double> pad_value;
  bool final_cleanup = true;
  int trace_every = 1;
  /// softImpute's inner soft SVD: 0 means "same as tol".
  double inner_tol = 0.0;
  int inner_max_iter = 300;
  ParallelOptions parallel;
  /// Reuse a known sigma_1 of P_Omega(X) instead of recomputing it.
  std::optional<double> lambda_max;
};

/// Throws ValidationError; rank is checked against min(m, n).
void validate(const FitConfig& cfg, std::size_t m, std::size_t n);

/// Per-iteration quantities behind the rate analysis. For softImpute-ALS the
/// two ridge half-steps are measured in the parametrization they are solved
/// in; ell_min/ell_max are the extreme eigenvalues of the design Gram
/// matrices A^T A and B^T B used by the half-steps.
struct RateSample {
  double eta = 0.0;               // majorizer gap: exact lower bound on the F decrease
  double step_sq = 0.0;           // ||A - A+||^2 + ||B - B+||^2
  double weighted_step_sq = 0.0;  // ||(A - A+) B^T||^2 + ||A (B - B+)^T||^2
  double grad_sq = 0.0;           // ||grad_A F||^2 + ||grad_B F||^2 at the half-step inputs
  double ell_min = 0.0;
  double ell_max = 0.0;
};

struct FitResult {
  Algorithm algorithm = Algorithm::softimpute_als;
  double lambda = 0.0;
  FactorPair factors;
  IterTrace trace;
  std::vector<RateSample> rates;
  bool converged = false;
  int iterations = 0;
  double lambda_max = 0.0;
  /// H at the returned factors.
  double final_objective = 0.0;
  std::uint64_t flops = 0;
};

/// sigma_1 of P_Omega(X) (zeros elsewhere), power iteration with a fixed seed.
double lambda_max(const ObservedMatrix& x, const ParallelOptions& par = {});

FitResult fit(const ObservedMatrix& x, const FitConfig& cfg);
FitResult fit_softimpute_als(const ObservedMatrix& x, const FitConfig& cfg);
FitResult fit_als(const ObservedMatrix& x, const FitConfig& cfg);
FitResult fit_softimpute(const ObservedMatrix& x, const FitConfig& cfg);

/// One softImpute-ALS run, exposed half-step by half-step.
class SoftImputeAlsSolver {
 public:
  SoftImputeAlsSolver(const ObservedMatrix& x, const FitConfig& cfg);

  /// (U, d, V); A = U diag(sqrt d), B = V diag(sqrt d).
  const FactorPair& state() const noexcept { return state_; }
  /// B <- argmin_B Q_B(B | A, B), then back to SVD form.
  RateSample half_step_b();
  /// A <- argmin_A Q_A(A | A, B), then back to SVD form.
  RateSample half_step_a();
  /// M = X* V = U sigma R^T; returns (U, (sigma - lambda)_+, V R).
  FactorPair cleanup();

  FlopCounter& flops() noexcept { return flops_; }

 private:
  const ObservedMatrix& x_;
  FitConfig cfg_;
  FactorPair state_;
  FlopCounter flops_;
};

struct PathConfig {
  FitConfig base;
  /// Explicit decreasing lambdas; when empty, `count` values are log-spaced
  /// from 0.95 lambda_max down to 0.05 lambda_max.
  std::vector<double> lambdas;
  std::size_t count = 10;
  std::size_t rank_increment = 2;
};

struct PathResult {
  double lambda_max = 0.0;
  std::vector<double> lambdas;
  std::vector<FitResult> fits;
};

/// Each fit warm-starts from the previous solution at operating rank
/// min(base.rank, previous solution rank + rank_increment).
PathResult fit_path(const ObservedMatrix& x, const PathConfig& cfg);

std::vector<double> lambda_grid(double lambda_max, std::size_t count);

}  // namespace softals
