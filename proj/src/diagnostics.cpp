#include "softals/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "softals/errors.hpp"
#include "softals/objectives.hpp"
#include "softals/soft_svd.hpp"
#include "softals/splr.hpp"

namespace softals {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* yes_no(bool b) { return b ? "true" : "false"; }

}  // namespace

bool RateReport::all_ok() const noexcept {
  if (!telescoping_ok || !eta_ok) return false;
  if (degenerate) return true;
  return step_ok && weighted_ok && grad_ok && grad_published_ok;
}

RateReport rate_report(const FitResult& fit, double slack) {
  if (fit.trace.size() < 2 || fit.rates.empty()) {
    throw ValidationError("rate_report needs a trace with at least one iteration");
  }
  RateReport r;
  r.iterations = fit.rates.size();
  r.lambda = fit.lambda;
  r.f_first = fit.trace.front().f;
  r.f_inf = fit.trace.back().f;

  const double inf = std::numeric_limits<double>::infinity();
  r.min_eta = r.min_step_sq = r.min_weighted_step_sq = r.min_grad_sq = inf;
  r.ell_lower = inf;
  r.ell_upper = 0.0;
  CompensatedSum sum;
  bool ell_known = true;
  for (const RateSample& s : fit.rates) {
    sum.add(s.eta);
    r.min_eta = std::min(r.min_eta, s.eta);
    r.min_step_sq = std::min(r.min_step_sq, s.step_sq);
    r.min_weighted_step_sq = std::min(r.min_weighted_step_sq, s.weighted_step_sq);
    r.min_grad_sq = std::min(r.min_grad_sq, s.grad_sq);
    if (std::isnan(s.ell_min) || std::isnan(s.ell_max)) {
      ell_known = false;
    } else {
      r.ell_lower = std::min(r.ell_lower, s.ell_min);
      r.ell_upper = std::max(r.ell_upper, s.ell_max);
    }
  }
  r.sum_eta = sum.value();
  if (!ell_known) {
    r.ell_lower = std::numeric_limits<double>::quiet_NaN();
    r.ell_upper = std::numeric_limits<double>::quiet_NaN();
  }
  r.degenerate = !ell_known || !(r.ell_lower > 1e-12);

  const double k = static_cast<double>(r.iterations);
  const double avg_drop = (r.f_first - r.f_inf) / k;
  const double lam = r.lambda;
  r.eta_bound = avg_drop;
  r.telescoping_ok = r.min_eta * k <= r.sum_eta + slack && r.sum_eta <= r.f_first - r.f_inf + slack;
  r.eta_ok = r.min_eta <= r.eta_bound + slack;

  if (ell_known) {
    const double lo = r.ell_lower;
    const double hi = r.ell_upper;
    r.step_bound = 2.0 / (lo + lam) * avg_drop;
    r.weighted_bound = 2.0 * hi / (hi + lam) * avg_drop;
    r.grad_bound_published = 2.0 * hi * hi / (lo + lam) * avg_drop;
    r.grad_bound = 2.0 * (hi + lam) * (hi + lam) / (lo + lam) * avg_drop;
    r.step_ok = r.min_step_sq <= r.step_bound + slack;
    r.weighted_ok = r.min_weighted_step_sq <= r.weighted_bound + slack;
    r.grad_published_ok = r.min_grad_sq <= r.grad_bound_published + slack;
    r.grad_ok = r.min_grad_sq <= r.grad_bound + slack;
  }
  return r;
}

std::string to_text(const RateReport& r) {
  std::ostringstream os;
  os << "iterations = " << r.iterations << '\n'
     << "lambda = " << num(r.lambda) << '\n'
     << "f_first = " << num(r.f_first) << '\n'
     << "f_inf_estimate = " << num(r.f_inf) << '\n'
     << "min_eta = " << num(r.min_eta) << '\n'
     << "sum_eta = " << num(r.sum_eta) << '\n'
     << "ell_lower = " << num(r.ell_lower) << '\n'
     << "ell_upper = " << num(r.ell_upper) << '\n'
     << "degenerate = " << yes_no(r.degenerate) << '\n'
     << "eta_bound = " << num(r.eta_bound) << '\n'
     << "eta_ok = " << yes_no(r.eta_ok) << '\n'
     << "telescoping_ok = " << yes_no(r.telescoping_ok) << '\n'
     << "min_step_sq = " << num(r.min_step_sq) << '\n'
     << "step_bound = " << num(r.step_bound) << '\n'
     << "step_ok = " << yes_no(r.step_ok) << '\n'
     << "min_weighted_step_sq = " << num(r.min_weighted_step_sq) << '\n'
     << "weighted_bound = " << num(r.weighted_bound) << '\n'
     << "weighted_ok = " << yes_no(r.weighted_ok) << '\n'
     << "min_grad_sq = " << num(r.min_grad_sq) << '\n'
     << "grad_bound_published = " << num(r.grad_bound_published) << '\n'
     << "grad_published_ok = " << yes_no(r.grad_published_ok) << '\n'
     << "grad_bound = " << num(r.grad_bound) << '\n'
     << "grad_ok = " << yes_no(r.grad_ok) << '\n';
  return os.str();
}

std::string to_string(CertificateStatus s) {
  switch (s) {
    case CertificateStatus::pass:
      return "PASS";
    case CertificateStatus::fail:
      return "FAIL";
    case CertificateStatus::inconclusive:
      return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

std::pair<double, double> stationarity_residuals(const ObservedMatrix& x, const FactorPair& f,
                                                 double lambda) {
  const FactorPair live = compact(f);
  if (live.rows() != x.rows() || live.cols() != x.cols()) {
    throw DimensionMismatch("factor pair does not match the observed matrix");
  }
  // G = P_Omega(U diag(d) V^T - X), held as a sparse-only splr matrix.
  std::vector<double> g(x.nnz());
  for (std::size_t e = 0; e < x.nnz(); ++e) g[e] = live.at(x.row_of(e), x.col_of(e)) - x.value(e);
  const SplrMatrix gm = SplrMatrix::sparse_only(x.with_values(std::move(g)));
  DenseMatrix gv = splr_right_multiply(gm, live.v);
  DenseMatrix gtu = splr_left_multiply(gm, live.u);
  DenseMatrix lu = live.u;
  lu *= lambda;
  DenseMatrix lv = live.v;
  lv *= lambda;
  return {frobenius_norm(gv + lu), frobenius_norm(gtu + lv)};
}

Certificate certify_optimality(const ObservedMatrix& x, const FactorPair& f, double lambda,
                               const CertifyOptions& opt) {
  f.check_shapes();
  if (f.rows() != x.rows() || f.cols() != x.cols()) {
    throw DimensionMismatch("factor pair does not match the observed matrix");
  }
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  const FactorPair live = compact(f);

  Certificate c;
  c.tol = opt.tol;
  c.solution_rank = live.rank();
  c.probe_rank = std::min(live.rank() + opt.probe_rank_extra, std::min(x.rows(), x.cols()));
  c.x_norm = std::sqrt(x.norm_sq());
  std::tie(c.residual_u, c.residual_v) = stationarity_residuals(x, live, lambda);

  const SplrMatrix xstar = splr_from_residual(x, live.a(), live.b());
  SoftSvdConfig cfg;
  cfg.rank = c.probe_rank;
  cfg.lambda = lambda;
  cfg.tol = opt.probe_tol;
  cfg.max_iter = opt.probe_max_iter;
  cfg.seed = opt.seed;
  if (live.rank() > 0) cfg.warm_start = live;
  const SoftSvdResult probe = soft_svd_solve(SplrOperator(xstar), cfg);
  c.probe_iterations = probe.iterations;

  const FactorPair found = compact(probe.factors);
  for (std::size_t k = c.solution_rank; k < probe.factors.d.size(); ++k) {
    c.surplus.push_back(probe.factors.d[k]);
  }
  if (live.rank() > 0) {
    c.discrepancy = frobenius_delta(live, probe.factors).value;
  } else {
    CompensatedSum s;
    for (double v : found.d) s.add(v * v);
    c.discrepancy = s.value();
  }
  if (!probe.converged) {
    c.status = CertificateStatus::inconclusive;
  } else {
    c.status = c.discrepancy <= opt.tol ? CertificateStatus::pass : CertificateStatus::fail;
  }
  return c;
}

std::string to_text(const Certificate& c) {
  std::ostringstream os;
  os << "status = " << to_string(c.status) << '\n'
     << "solution_rank = " << c.solution_rank << '\n'
     << "probe_rank = " << c.probe_rank << '\n'
     << "probe_iterations = " << c.probe_iterations << '\n'
     << "discrepancy = " << num(c.discrepancy) << '\n'
     << "tol = " << num(c.tol) << '\n'
     << "surplus =";
  for (double v : c.surplus) os << ' ' << num(v);
  os << '\n'
     << "residual_u = " << num(c.residual_u) << '\n'
     << "residual_v = " << num(c.residual_v) << '\n'
     << "x_norm = " << num(c.x_norm) << '\n';
  return os.str();
}

double seconds_to_reach(const IterTrace& trace, double target, double rel) {
  const double level = target + rel * std::fabs(target);
  for (const TraceRow& row : trace) {
    if (row.f <= level) return row.seconds;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace softals
