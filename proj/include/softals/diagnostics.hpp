#pragma once

// Convergence-rate bookkeeping for a finished fit and the optimality
// certificate for a candidate solution of the convex problem.

#include <string>
#include <vector>

#include "softals/completion.hpp"
#include "softals/factors.hpp"
#include "softals/observed.hpp"

namespace softals {

/// Checks the sublinear-rate statements for the first K iterations of a fit:
///   min_k eta_k                         <= (F_1 - f_inf) / K
///   min_k ||dA||^2 + ||dB||^2            <= 2 / (ell_L + lambda)       * (F_1 - f_inf) / K
///   min_k ||dA B^T||^2 + ||A+ dB^T||^2   <= 2 ell_U / (ell_U + lambda) * (F_1 - f_inf) / K
///   min_k ||grad_A F||^2 + ||grad_B F||^2 <= c * (F_1 - f_inf) / K
/// For the gradient bound the published constant is c = 2 ell_U^2 / (ell_L + lambda).
/// The Lipschitz constant of the surrogate gradient is ell_U + lambda, not
/// ell_U, which gives c = 2 (ell_U + lambda)^2 / (ell_L + lambda); both are
/// evaluated. f_inf is estimated by the last recorded F.
struct RateReport {
  std::size_t iterations = 0;  // K
  double lambda = 0.0;
  double min_eta = 0.0;
  double sum_eta = 0.0;
  double f_first = 0.0;
  double f_inf = 0.0;
  double ell_lower = 0.0;
  double ell_upper = 0.0;
  /// ell_lower <= 1e-12 (or unknown): the bounds that divide by it are vacuous.
  bool degenerate = false;

  double min_step_sq = 0.0;
  double min_weighted_step_sq = 0.0;
  double min_grad_sq = 0.0;

  double eta_bound = 0.0;
  double step_bound = 0.0;
  double weighted_bound = 0.0;
  double grad_bound_published = 0.0;
  double grad_bound = 0.0;

  bool telescoping_ok = false;  // min_eta * K <= sum_eta <= F_1 - f_inf
  bool eta_ok = false;
  bool step_ok = false;
  bool weighted_ok = false;
  bool grad_published_ok = false;
  bool grad_ok = false;

  /// All applicable statements hold (the published gradient constant included).
  bool all_ok() const noexcept;
};

/// Needs a trace with its first and last rows and one RateSample per
/// iteration. `slack` is an absolute allowance for rounding in each test.
RateReport rate_report(const FitResult& fit, double slack = 1e-10);

std::string to_text(const RateReport& r);

enum class CertificateStatus { pass, fail, inconclusive };

std::string to_string(CertificateStatus s);

struct Certificate {
  CertificateStatus status = CertificateStatus::inconclusive;
  std::size_t solution_rank = 0;
  std::size_t probe_rank = 0;
  int probe_iterations = 0;
  /// ||M - M_probe||_F^2 / ||M||_F^2 (or ||M_probe||_F^2 when M = 0).
  double discrepancy = 0.0;
  double tol = 0.0;
  /// Probe singular values beyond the solution rank, already shrunk by lambda.
  std::vector<double> surplus;
  /// ||P_Omega(A B^T - X) V + lambda U||_F and ||U^T P_Omega(A B^T - X) + lambda V^T||_F.
  double residual_u = 0.0;
  double residual_v = 0.0;
  /// sqrt of the sum of squared observed values.
  double x_norm = 0.0;
};

struct CertifyOptions {
  std::size_t probe_rank_extra = 2;
  double tol = 1e-5;
  double probe_tol = 1e-14;
  int probe_max_iter = 20000;
  std::uint64_t seed = 7;
};

/// Builds X* = P_Omega(X) + P_Omega^perp(M) for M = U diag(d) V^T, solves
/// the fully observed soft SVD of X* at rank q + extra starting from M, and
/// passes when the probe reproduces M. A non-converged probe is inconclusive.
Certificate certify_optimality(const ObservedMatrix& x, const FactorPair& f, double lambda,
                               const CertifyOptions& opt = {});

/// The two stationarity residuals of the certificate, on the live columns.
std::pair<double, double> stationarity_residuals(const ObservedMatrix& x, const FactorPair& f,
                                                 double lambda);

std::string to_text(const Certificate& c);

/// Solver seconds at the first trace row with F <= target + rel * |target|;
/// NaN when no row gets there.
double seconds_to_reach(const IterTrace& trace, double target, double rel);

}  // namespace softals
