#include "softals/completion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "softals/errors.hpp"
#include "softals/objectives.hpp"
#include "softals/soft_svd.hpp"

namespace softals {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::softimpute_als:
      return "softimpute_als";
    case Algorithm::als:
      return "als";
    case Algorithm::softimpute:
      return "softimpute";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "softimpute_als" || name == "softimpute-als") return Algorithm::softimpute_als;
  if (name == "als") return Algorithm::als;
  if (name == "softimpute") return Algorithm::softimpute;
  throw ValidationError("unknown algorithm '" + std::string(name) +
                        "' (expected softimpute_als, als or softimpute)");
}

void validate(const FitConfig& cfg, std::size_t m, std::size_t n) {
  if (m == 0 || n == 0) throw ValidationError("the observed matrix is empty");
  if (cfg.rank == 0 || cfg.rank > std::min(m, n)) {
    throw ValidationError("rank must be in [1, " + std::to_string(std::min(m, n)) + "], got " +
                          std::to_string(cfg.rank));
  }
  if (!std::isfinite(cfg.lambda) || cfg.lambda < 0.0) {
    throw ValidationError("lambda must be finite and >= 0");
  }
  // With lambda = 0 the factors can be rescaled without bound.
  if (cfg.algorithm != Algorithm::softimpute && !(cfg.lambda > 0.0)) {
    throw ValidationError(to_string(cfg.algorithm) + " requires lambda > 0");
  }
  if (!(cfg.tol > 0.0)) throw ValidationError("tol must be > 0");
  if (cfg.max_iter < 1) throw ValidationError("max_iter must be >= 1");
  if (cfg.trace_every < 1) throw ValidationError("trace_every must be >= 1");
  if (cfg.inner_tol < 0.0) throw ValidationError("inner_tol must be >= 0");
  if (cfg.inner_max_iter < 1) throw ValidationError("inner_max_iter must be >= 1");
  if (cfg.pad_value && !(*cfg.pad_value >= 0.0)) throw ValidationError("pad_value must be >= 0");
  if (cfg.warm_start) {
    cfg.warm_start->check_shapes();
    if (cfg.warm_start->rows() != m || cfg.warm_start->cols() != n) {
      throw DimensionMismatch("warm start factors do not match the observed matrix");
    }
  }
}

double lambda_max(const ObservedMatrix& x, const ParallelOptions& par) {
  if (x.nnz() == 0) return 0.0;
  const SplrMatrix sparse = SplrMatrix::sparse_only(x);
  return top_singular_value(SplrOperator(sparse, par));
}

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

double resolve_lambda_max(const ObservedMatrix& x, const FitConfig& cfg) {
  return cfg.lambda_max ? *cfg.lambda_max : lambda_max(x, cfg.parallel);
}

FactorPair initial_state(std::size_t m, std::size_t n, const FitConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  if (cfg.warm_start) return pad_factors(*cfg.warm_start, cfg.rank, rng, cfg.pad_value);
  FactorPair s = FactorPair::zero(m, n, cfg.rank);
  s.u = random_orthonormal(m, cfg.rank, rng);
  std::fill(s.d.begin(), s.d.end(), 1.0);
  return s;
}

// Everything is thresholded away: the zero model, reported as rank 0.
FitResult zero_fit(const ObservedMatrix& x, const FitConfig& cfg, double lmax) {
  FitResult r;
  r.algorithm = cfg.algorithm;
  r.lambda = cfg.lambda;
  r.lambda_max = lmax;
  r.factors = FactorPair::zero(x.rows(), x.cols(), 0);
  r.final_objective = 0.5 * x.norm_sq();
  r.converged = true;
  r.iterations = 1;
  TraceRow row;
  row.f = row.h = r.final_objective;
  row.frob_delta = kNaN;
  row.eta = kNaN;
  r.trace.push_back(row);
  row.iter = 1;
  row.frob_delta = 0.0;
  row.eta = 0.0;
  r.trace.push_back(row);
  return r;
}

// Appends trace rows; the clock is paused while diagnostics are evaluated.
class TraceRecorder {
 public:
  TraceRecorder(FitResult& result, Stopwatch& clock, const FlopCounter& flops, int every)
      : result_(result), clock_(clock), flops_(flops), every_(every) {}

  void add_eta(double e) { eta_ += e; }

  template <typename Eval>
  void record(std::size_t iter, double delta, bool force, Eval&& eval) {
    if (!force && iter % static_cast<std::size_t>(every_) != 0) return;
    clock_.pause();
    TraceRow row;
    row.iter = iter;
    row.seconds = clock_.seconds();
    row.frob_delta = delta;
    row.eta = iter == 0 ? kNaN : eta_;
    row.flops = flops_.ops;
    eval(row);
    result_.trace.push_back(row);
    eta_ = 0.0;
    clock_.resume();
  }

 private:
  FitResult& result_;
  Stopwatch& clock_;
  const FlopCounter& flops_;
  int every_;
  double eta_ = 0.0;
};

RateSample combine(const RateSample& first, const RateSample& second) {
  RateSample s;
  s.eta = first.eta + second.eta;
  s.step_sq = first.step_sq + second.step_sq;
  s.weighted_step_sq = first.weighted_step_sq + second.weighted_step_sq;
  s.grad_sq = first.grad_sq + second.grad_sq;
  s.ell_min = std::min(first.ell_min, second.ell_min);
  s.ell_max = std::max(first.ell_max, second.ell_max);
  return s;
}

bool is_zero(const FactorPair& f) {
  return std::all_of(f.d.begin(), f.d.end(), [](double v) { return v == 0.0; });
}

}  // namespace

// ---------------------------------------------------------------------------
// softImpute-ALS

SoftImputeAlsSolver::SoftImputeAlsSolver(const ObservedMatrix& x, const FitConfig& cfg)
    : x_(x), cfg_(cfg) {
  validate(cfg_, x.rows(), x.cols());
  state_ = initial_state(x.rows(), x.cols(), cfg_);
}

namespace {

// One ridge half-step in SVD coordinates. `design` holds the orthonormal
// basis of the fixed side (its Gram matrix is diag(d)), `projected` is
// X*^T U (or X* V), `moving` the current orthonormal basis of the other
// side. On return `moving` holds the new basis, `design` is rotated and d
// replaced, so that the product equals A (B+)^T.
RateSample ridge_half_step(const DenseMatrix& projected, DenseMatrix& design, std::vector<double>& d,
                           DenseMatrix& moving, double lambda, FlopCounter* fc) {
  const std::size_t rows = projected.rows();
  const std::size_t r = d.size();
  RateSample s;
  s.ell_min = r == 0 ? 0.0 : *std::min_element(d.begin(), d.end());
  s.ell_max = r == 0 ? 0.0 : *std::max_element(d.begin(), d.end());

  // Ridge solution B+ = X*^T U diag(sqrt d / (d + lambda)); BD = B+ diag(sqrt d).
  DenseMatrix bd(rows, r);
  std::vector<CompensatedSum> step(r);
  for (std::size_t j = 0; j < rows; ++j) {
    auto p = projected.row(j);
    auto cur = moving.row(j);
    auto out = bd.row(j);
    for (std::size_t k = 0; k < r; ++k) {
      const double sd = std::sqrt(d[k]);
      const double b_new = p[k] * sd / (d[k] + lambda);
      const double diff = cur[k] * sd - b_new;
      step[k].add(diff * diff);
      out[k] = b_new * sd;
    }
  }
  for (std::size_t k = 0; k < r; ++k) {
    const double sq = step[k].value();
    s.step_sq += sq;
    s.weighted_step_sq += d[k] * sq;
    s.grad_sq += (d[k] + lambda) * (d[k] + lambda) * sq;
  }
  s.eta = 0.5 * s.weighted_step_sq + 0.5 * lambda * s.step_sq;
  count(fc, static_cast<std::uint64_t>(rows) * r);

  SmallSvd svd = svd_skinny(bd, fc);
  moving = std::move(svd.u);
  d = std::move(svd.s);
  design = multiply(design, svd.v, fc);
  return s;
}

// S = P_Omega(X - U D V^T) as a sparse-only operator.
SplrMatrix observed_residual(const ObservedMatrix& x, const FactorPair& f, FlopCounter* fc) {
  DenseMatrix ud = f.u;
  for (std::size_t i = 0; i < ud.rows(); ++i) {
    auto row = ud.row(i);
    for (std::size_t k = 0; k < row.size(); ++k) row[k] *= f.d[k];
  }
  std::vector<double> fit = project_low_rank(x.pattern(), ud, f.v, fc);
  for (std::size_t e = 0; e < fit.size(); ++e) fit[e] = x.value(e) - fit[e];
  return SplrMatrix::sparse_only(x.with_values(std::move(fit)));
}

// out += basis diag(d)
void add_scaled_basis(DenseMatrix& out, const DenseMatrix& basis, const std::vector<double>& d,
                      FlopCounter* fc) {
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto o = out.row(i);
    auto b = basis.row(i);
    for (std::size_t k = 0; k < d.size(); ++k) o[k] += b[k] * d[k];
  }
  count(fc, static_cast<std::uint64_t>(out.rows()) * d.size());
}

}  // namespace

// With A B^T = U D V^T and U, V orthonormal, X*^T U = S^T U + V D and
// X* V = S V + U D, so only the sparse residual is multiplied.
RateSample SoftImputeAlsSolver::half_step_b() {
  const SplrMatrix s = observed_residual(x_, state_, &flops_);
  DenseMatrix xtu = splr_left_multiply(s, state_.u, cfg_.parallel, &flops_);
  add_scaled_basis(xtu, state_.v, state_.d, &flops_);
  return ridge_half_step(xtu, state_.u, state_.d, state_.v, cfg_.lambda, &flops_);
}

RateSample SoftImputeAlsSolver::half_step_a() {
  const SplrMatrix s = observed_residual(x_, state_, &flops_);
  DenseMatrix xv = splr_right_multiply(s, state_.v, cfg_.parallel, &flops_);
  add_scaled_basis(xv, state_.u, state_.d, &flops_);
  return ridge_half_step(xv, state_.v, state_.d, state_.u, cfg_.lambda, &flops_);
}

FactorPair SoftImputeAlsSolver::cleanup() {
  const SplrMatrix xstar = splr_from_residual(x_, state_.a(), state_.b(), &flops_);
  SmallSvd s = svd_skinny(splr_right_multiply(xstar, state_.v, cfg_.parallel, &flops_), &flops_);
  FactorPair out;
  out.u = std::move(s.u);
  out.v = multiply(state_.v, s.v, &flops_);
  out.d = soft_threshold(s.s, cfg_.lambda);
  return out;
}

FitResult fit_softimpute_als(const ObservedMatrix& x, const FitConfig& cfg) {
  validate(cfg, x.rows(), x.cols());
  const double lmax = resolve_lambda_max(x, cfg);
  if (cfg.lambda >= lmax) return zero_fit(x, cfg, lmax);

  FitResult result;
  result.algorithm = cfg.algorithm;
  result.lambda = cfg.lambda;
  result.lambda_max = lmax;

  Stopwatch clock;
  clock.resume();
  SoftImputeAlsSolver solver(x, cfg);
  TraceRecorder trace(result, clock, solver.flops(), cfg.trace_every);
  auto eval = [&](TraceRow& row) {
    const FactorPair& s = solver.state();
    row.f = objective_F(x, s.a(), s.b(), cfg.lambda);
    // The cold start has V = 0; H needs the product in SVD form.
    row.h = objective_H(x, row.iter == 0 ? svd_form(s.a(), s.b()) : s, cfg.lambda);
    row.rank = rank_estimate(s.d);
  };
  trace.record(0, kNaN, true, eval);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const FactorPair old = solver.state();
    const RateSample hb = solver.half_step_b();
    const RateSample ha = solver.half_step_a();
    const RateSample sample = combine(hb, ha);
    result.rates.push_back(sample);
    trace.add_eta(sample.eta);
    result.iterations = it;

    const FrobeniusDelta delta = frobenius_delta(old, solver.state(), &solver.flops());
    const bool done = delta.value < cfg.tol || (delta.old_zero && is_zero(solver.state()));
    trace.record(static_cast<std::size_t>(it), delta.value, done || it == cfg.max_iter, eval);
    if (done) {
      result.converged = true;
      break;
    }
  }

  result.factors = cfg.final_cleanup ? solver.cleanup() : solver.state();
  clock.pause();
  result.flops = solver.flops().ops;
  result.final_objective = objective_H(x, result.factors, cfg.lambda);
  return result;
}

// ---------------------------------------------------------------------------
// ALS

namespace {

struct AlsSideStats {
  double step_sq = 0.0;
  double grad_sq = 0.0;
};

// Row-by-row ridge regressions: for every row i of `target`,
//   target_i <- (sum_j f_j f_j^T + lambda I)^{-1} sum_j x_ij f_j
// over the observed j of that row (transposed access when by_column).
AlsSideStats als_update(const ObservedMatrix& x, bool by_column, const DenseMatrix& fixed,
                        DenseMatrix& target, double lambda, const ParallelOptions& par) {
  const SparsityPattern& pat = x.pattern();
  const std::size_t r = fixed.cols();
  const std::size_t count_rows = by_column ? x.cols() : x.rows();
  const unsigned blocks = par.resolved_threads();
  std::vector<double> step(count_rows, 0.0);
  std::vector<double> grad(count_rows, 0.0);

  parallel_blocks(count_rows, blocks, [&](std::size_t begin, std::size_t end, unsigned) {
    DenseMatrix gram(r, r);
    std::vector<double> rhs(r);
    std::vector<double> old(r);
    auto visit = [&](std::size_t row, auto&& each) {
      if (by_column) {
        for (std::size_t e : pat.col_entries(row)) each(e, pat.row_of(e));
      } else {
        const std::size_t first = pat.row_begin(row);
        for (std::size_t e = first; e < first + pat.row_count(row); ++e) each(e, pat.col_of(e));
      }
    };
    for (std::size_t row = begin; row < end; ++row) {
      std::fill(gram.values().begin(), gram.values().end(), 0.0);
      std::fill(rhs.begin(), rhs.end(), 0.0);
      for (std::size_t k = 0; k < r; ++k) gram(k, k) = lambda;
      visit(row, [&](std::size_t e, std::size_t other) {
        auto f = fixed.row(other);
        const double v = x.value(e);
        for (std::size_t k = 0; k < r; ++k) {
          rhs[k] += v * f[k];
          for (std::size_t l = 0; l <= k; ++l) gram(k, l) += f[k] * f[l];
        }
      });
      for (std::size_t k = 0; k < r; ++k) {
        for (std::size_t l = k + 1; l < r; ++l) gram(k, l) = gram(l, k);
      }
      auto t = target.row(row);
      std::copy(t.begin(), t.end(), old.begin());
      // Gradient of the row problem at the old value: G t_old - rhs.
      double g2 = 0.0;
      for (std::size_t k = 0; k < r; ++k) {
        double g = -rhs[k];
        for (std::size_t l = 0; l < r; ++l) g += gram(k, l) * old[l];
        g2 += g * g;
      }
      const Cholesky chol(gram);
      chol.solve_in_place(rhs);
      double s2 = 0.0;
      for (std::size_t k = 0; k < r; ++k) {
        const double diff = old[k] - rhs[k];
        s2 += diff * diff;
        t[k] = rhs[k];
      }
      step[row] = s2;
      grad[row] = g2;
    }
  });

  AlsSideStats s;
  CompensatedSum st;
  CompensatedSum gr;
  for (std::size_t row = 0; row < count_rows; ++row) {
    st.add(step[row]);
    gr.add(grad[row]);
  }
  s.step_sq = st.value();
  s.grad_sq = gr.value();
  return s;
}

std::uint64_t als_side_flops(std::size_t nnz, std::size_t count_rows, std::size_t r) {
  const std::uint64_t rr = r;
  return nnz * (rr * (rr + 1) / 2 + rr) + count_rows * (rr * rr * rr / 6 + rr + rr * rr);
}

// 1/2 ||P_Omega(A (B - B+)^T)||^2 (or the A-side analogue), the fit part of
// the exact decrease of one block update.
double omega_weighted_step(const ObservedMatrix& x, const DenseMatrix& a, const DenseMatrix& b) {
  CompensatedSum s;
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    auto ar = a.row(x.row_of(e));
    auto br = b.row(x.col_of(e));
    double v = 0.0;
    for (std::size_t k = 0; k < ar.size(); ++k) v += ar[k] * br[k];
    s.add(v * v);
  }
  return s.value();
}

}  // namespace

FitResult fit_als(const ObservedMatrix& x, const FitConfig& cfg) {
  validate(cfg, x.rows(), x.cols());
  const double lmax = resolve_lambda_max(x, cfg);
  if (cfg.lambda >= lmax) return zero_fit(x, cfg, lmax);

  FitResult result;
  result.algorithm = cfg.algorithm;
  result.lambda = cfg.lambda;
  result.lambda_max = lmax;
  const std::size_t r = cfg.rank;
  const double lambda = cfg.lambda;

  FlopCounter flops;
  Stopwatch clock;
  clock.resume();
  const FactorPair init = initial_state(x.rows(), x.cols(), cfg);
  DenseMatrix a = init.a();
  DenseMatrix b = init.b();
  FactorPair svd = svd_form(a, b, &flops);

  TraceRecorder trace(result, clock, flops, cfg.trace_every);
  auto eval = [&](TraceRow& row) {
    row.f = objective_F(x, a, b, lambda);
    row.h = objective_H(x, svd, lambda);
    row.rank = rank_estimate(svd.d);
  };
  trace.record(0, kNaN, true, eval);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    RateSample sample;
    sample.ell_min = kNaN;
    sample.ell_max = kNaN;

    const DenseMatrix b_old = b;
    const AlsSideStats sb = als_update(x, true, a, b, lambda, cfg.parallel);
    count(&flops, als_side_flops(x.nnz(), x.cols(), r));
    clock.pause();
    const double wb = omega_weighted_step(x, a, b_old - b);
    clock.resume();

    const DenseMatrix a_old = a;
    const AlsSideStats sa = als_update(x, false, b, a, lambda, cfg.parallel);
    count(&flops, als_side_flops(x.nnz(), x.rows(), r));
    clock.pause();
    const double wa = omega_weighted_step(x, a_old - a, b);
    clock.resume();

    sample.step_sq = sb.step_sq + sa.step_sq;
    sample.weighted_step_sq = wb + wa;
    sample.grad_sq = sb.grad_sq + sa.grad_sq;
    sample.eta = 0.5 * sample.weighted_step_sq + 0.5 * lambda * sample.step_sq;
    result.rates.push_back(sample);
    trace.add_eta(sample.eta);
    result.iterations = it;

    const FactorPair old_svd = std::move(svd);
    svd = svd_form(a, b, &flops);
    const FrobeniusDelta delta = frobenius_delta(old_svd, svd, &flops);
    const bool done = delta.value < cfg.tol || (delta.old_zero && is_zero(svd));
    trace.record(static_cast<std::size_t>(it), delta.value, done || it == cfg.max_iter, eval);
    if (done) {
      result.converged = true;
      break;
    }
  }

  if (cfg.final_cleanup) {
    const SplrMatrix xstar = splr_from_residual(x, a, b, &flops);
    SmallSvd s = svd_skinny(splr_right_multiply(xstar, svd.v, cfg.parallel, &flops), &flops);
    result.factors.u = std::move(s.u);
    result.factors.v = multiply(svd.v, s.v, &flops);
    result.factors.d = soft_threshold(s.s, lambda);
  } else {
    result.factors = svd;
  }
  clock.pause();
  result.flops = flops.ops;
  result.final_objective = objective_H(x, result.factors, lambda);
  return result;
}

// ---------------------------------------------------------------------------
// softImpute

FitResult fit_softimpute(const ObservedMatrix& x, const FitConfig& cfg) {
  validate(cfg, x.rows(), x.cols());
  const double lmax = resolve_lambda_max(x, cfg);
  if (cfg.lambda >= lmax) return zero_fit(x, cfg, lmax);

  FitResult result;
  result.algorithm = cfg.algorithm;
  result.lambda = cfg.lambda;
  result.lambda_max = lmax;

  FlopCounter flops;
  Stopwatch clock;
  clock.resume();
  FactorPair model = cfg.warm_start ? *cfg.warm_start : FactorPair::zero(x.rows(), x.cols(), 0);
  double h_old = objective_H(x, model, cfg.lambda);

  TraceRecorder trace(result, clock, flops, cfg.trace_every);
  auto eval = [&](TraceRow& row) {
    row.f = row.h = objective_H(x, model, cfg.lambda);
    row.eta = kNaN;
    row.rank = rank_estimate(model.d);
  };
  trace.record(0, kNaN, true, eval);

  SoftSvdConfig inner;
  inner.rank = cfg.rank;
  inner.lambda = cfg.lambda;
  inner.tol = cfg.inner_tol > 0.0 ? cfg.inner_tol : cfg.tol;
  inner.max_iter = cfg.inner_max_iter;
  inner.seed = cfg.seed;
  inner.pad_value = cfg.pad_value;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    // Xhat = P_Omega(X) + P_Omega^perp(M) in sparse-plus-low-rank form.
    const SplrMatrix xhat = splr_from_residual(x, model.a(), model.b(), &flops);
    const SplrOperator op(xhat, cfg.parallel);
    inner.warm_start.reset();
    inner.exact_warm_start = false;
    if (model.rank() > 0) inner.warm_start = model;
    FactorPair next = soft_svd_solve(op, inner, &flops).factors;
    double h_new = objective_H(x, next, cfg.lambda);

    // Reseeded padding columns can cost a little objective; restarting from
    // the exact previous model cannot, since the inner solver descends on a
    // majorizer that touches H there.
    if (h_new > h_old && model.rank() > 0) {
      inner.exact_warm_start = true;
      next = soft_svd_solve(op, inner, &flops).factors;
      h_new = objective_H(x, next, cfg.lambda);
    }

    const FrobeniusDelta delta = frobenius_delta(model, next, &flops);
    const bool done = delta.value < cfg.tol || (delta.old_zero && is_zero(next));
    model = std::move(next);
    h_old = h_new;
    result.iterations = it;
    trace.record(static_cast<std::size_t>(it), delta.value, done || it == cfg.max_iter, eval);
    if (done) {
      result.converged = true;
      break;
    }
  }
  clock.pause();
  result.factors = std::move(model);
  result.flops = flops.ops;
  result.final_objective = h_old;
  return result;
}

FitResult fit(const ObservedMatrix& x, const FitConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::softimpute_als:
      return fit_softimpute_als(x, cfg);
    case Algorithm::als:
      return fit_als(x, cfg);
    case Algorithm::softimpute:
      return fit_softimpute(x, cfg);
  }
  throw ValidationError("unknown algorithm");
}

// ---------------------------------------------------------------------------
// Regularization path

std::vector<double> lambda_grid(double lmax, std::size_t count) {
  if (count == 0) throw ValidationError("the lambda path needs at least one value");
  if (!(lmax > 0.0)) throw ValidationError("lambda_max is zero: the observed values are all zero");
  std::vector<double> out(count);
  const double hi = std::log(0.95 * lmax);
  const double lo = std::log(0.05 * lmax);
  for (std::size_t l = 0; l < count; ++l) {
    const double t = count == 1 ? 0.0 : static_cast<double>(l) / static_cast<double>(count - 1);
    out[l] = std::exp(hi + t * (lo - hi));
  }
  return out;
}

PathResult fit_path(const ObservedMatrix& x, const PathConfig& cfg) {
  PathResult path;
  path.lambda_max = lambda_max(x, cfg.base.parallel);
  if (cfg.lambdas.empty()) {
    path.lambdas = lambda_grid(path.lambda_max, cfg.count);
  } else {
    path.lambdas = cfg.lambdas;
    for (std::size_t l = 0; l < path.lambdas.size(); ++l) {
      if (!(path.lambdas[l] > 0.0)) throw ValidationError("path lambdas must be > 0");
      if (l > 0 && !(path.lambdas[l] < path.lambdas[l - 1])) {
        throw ValidationError("path lambdas must be strictly decreasing");
      }
    }
  }
  if (cfg.rank_increment == 0) throw ValidationError("rank_increment must be >= 1");

  std::optional<FactorPair> prev = cfg.base.warm_start;
  for (double lambda : path.lambdas) {
    FitConfig c = cfg.base;
    c.lambda = lambda;
    c.lambda_max = path.lambda_max;
    const std::size_t solution_rank = prev ? rank_estimate(prev->d) : 0;
    c.rank = std::min(cfg.base.rank, solution_rank + cfg.rank_increment);
    c.warm_start = prev;
    FitResult r = fit(x, c);
    prev = r.factors;
    path.fits.push_back(std::move(r));
  }
  return path;
}

}  // namespace softals
