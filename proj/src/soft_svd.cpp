#include "softals/soft_svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "softals/errors.hpp"

namespace softals {

void validate(const SoftSvdConfig& cfg, std::size_t m, std::size_t n) {
  if (cfg.rank == 0 || cfg.rank > std::min(m, n)) {
    throw ValidationError("rank must be in [1, min(m, n)] = [1, " + std::to_string(std::min(m, n)) +
                          "], got " + std::to_string(cfg.rank));
  }
  if (!(cfg.lambda >= 0.0) || !std::isfinite(cfg.lambda)) {
    throw ValidationError("lambda must be finite and >= 0");
  }
  if (!(cfg.tol > 0.0)) throw ValidationError("tol must be > 0");
  if (cfg.max_iter < 1) throw ValidationError("max_iter must be >= 1");
  if (cfg.warm_start) {
    cfg.warm_start->check_shapes();
    if (cfg.warm_start->rows() != m || cfg.warm_start->cols() != n) {
      throw DimensionMismatch("warm start factors do not match the input shape");
    }
  }
}

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// d/(d + lambda): the ridge shrinkage seen by A diag(sqrt d) after
// reparametrization; 1 when lambda = 0.
std::vector<double> shrink_weights(const std::vector<double>& d, double lambda) {
  std::vector<double> w(d.size(), 1.0);
  if (lambda > 0.0) {
    for (std::size_t k = 0; k < d.size(); ++k) w[k] = d[k] / (d[k] + lambda);
  }
  return w;
}

}  // namespace

SoftSvdResult soft_svd_solve(const LinearOperator& x, const SoftSvdConfig& cfg,
                             FlopCounter* counter, const SoftSvdObserver& observer,
                             const std::function<double(const FactorPair&)>& objective) {
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  validate(cfg, m, n);
  const std::size_t r = cfg.rank;
  const double lambda = cfg.lambda;

  FlopCounter local;
  FlopCounter* fc = counter != nullptr ? counter : &local;
  const std::uint64_t ops0 = fc->ops;

  SoftSvdResult result;
  Stopwatch clock;
  clock.resume();

  std::mt19937_64 rng(cfg.seed);
  FactorPair state;
  if (cfg.warm_start) {
    state = pad_factors(*cfg.warm_start, r, rng, cfg.pad_value, cfg.exact_warm_start);
  } else {
    state = FactorPair::zero(m, n, r);
    state.u = random_orthonormal(m, r, rng);
    std::fill(state.d.begin(), state.d.end(), 1.0);
  }

  auto record = [&](std::size_t iter, double delta) {
    clock.pause();
    TraceRow row;
    row.iter = iter;
    row.seconds = clock.seconds();
    row.f = objective ? objective(state) : kNaN;
    row.h = row.f;
    row.frob_delta = delta;
    row.eta = kNaN;
    row.rank = rank_estimate(state.d);
    row.flops = fc->ops - ops0;
    result.trace.push_back(row);
    clock.resume();
  };
  record(0, kNaN);

  bool sigma1_known = false;
  double sigma1 = 0.0;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const FactorPair old = state;

    // B given A: BD = X^T U diag(d/(d+lambda)), then back to SVD form.
    DenseMatrix bd = x.multiply_transpose(state.u, fc);
    scale_columns(bd, shrink_weights(state.d, lambda));
    SmallSvd s = svd_skinny(bd, fc);
    state.v = std::move(s.u);
    state.d = std::move(s.s);
    state.u = multiply(state.u, s.v, fc);
    if (observer) observer(state, HalfStep::b_update);

    // A given B.
    DenseMatrix xv = x.multiply(state.v, fc);
    DenseMatrix ad = xv;
    scale_columns(ad, shrink_weights(state.d, lambda));
    s = svd_skinny(ad, fc);
    state.u = std::move(s.u);
    state.d = std::move(s.s);
    state.v = multiply(state.v, s.v, fc);
    if (observer) observer(state, HalfStep::a_update);

    result.iterations = it;
    const FrobeniusDelta delta = frobenius_delta(old, state, fc);
    const bool both_zero = delta.old_zero && rank_estimate(state.d) == 0;
    record(static_cast<std::size_t>(it), delta.value);
    if (both_zero || delta.value < cfg.tol) {
      result.converged = true;
      break;
    }

    // Below the threshold the iterates only decay geometrically. When every
    // d shrank, test whether the cleanup at this subspace is already zero and,
    // if so, confirm against sigma_1 of the whole matrix.
    bool shrank = true;
    for (std::size_t k = 0; k < r; ++k) shrank = shrank && state.d[k] <= old.d[k];
    if (shrank && !sigma1_known) {
      double top = frobenius_norm(xv);
      if (top > lambda) top = svd_skinny(xv, fc).s.front();
      if (top <= lambda) {
        sigma1 = top_singular_value(x, 1e-8, 20000, cfg.seed, fc);
        sigma1_known = true;
        if (sigma1 <= lambda) {
          std::fill(state.d.begin(), state.d.end(), 0.0);
          result.zero_model = true;
          result.converged = true;
          break;
        }
      }
    }
  }

  if (cfg.final_cleanup && !result.zero_model) {
    // M = X V = U sigma R^T; V <- V R, d <- (sigma - lambda)_+
    SmallSvd s = svd_skinny(x.multiply(state.v, fc), fc);
    state.u = std::move(s.u);
    state.v = multiply(state.v, s.v, fc);
    state.d = soft_threshold(s.s, lambda);
  }
  clock.pause();
  result.factors = std::move(state);
  return result;
}

SoftSvdResult soft_svd_solve(const DenseMatrix& x, const SoftSvdConfig& cfg, FlopCounter* counter,
                             const SoftSvdObserver& observer) {
  DenseOperator op(x);
  auto objective = [&](const FactorPair& f) {
    const DenseMatrix diff = x - f.model();
    return 0.5 * frobenius_norm_sq(diff) + cfg.lambda * f.nuclear_norm();
  };
  return soft_svd_solve(op, cfg, counter, observer, objective);
}

double top_singular_value(const LinearOperator& x, double tol, int max_iter, std::uint64_t seed,
                          FlopCounter* counter) {
  std::mt19937_64 rng(seed);
  DenseMatrix v = gaussian_matrix(x.cols(), 1, rng);
  v *= 1.0 / frobenius_norm(v);
  double s2 = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const DenseMatrix w = x.multiply(v, counter);
    DenseMatrix z = x.multiply_transpose(w, counter);
    s2 = frobenius_norm_sq(w);
    if (s2 == 0.0) return 0.0;
    DenseMatrix res = z;
    DenseMatrix sv = v;
    sv *= s2;
    res -= sv;
    if (frobenius_norm(res) <= tol * s2) break;
    z *= 1.0 / frobenius_norm(z);
    v = std::move(z);
  }
  return std::sqrt(s2);
}

SmallSvd oracle_svd(const DenseMatrix& x) {
  if (std::min(x.rows(), x.cols()) > 100) {
    throw ValidationError("oracle_svd: min(m, n) must be <= 100");
  }
  return svd_small(x);
}

DenseMatrix oracle_soft_svd(const DenseMatrix& x, std::size_t r, double lambda) {
  SmallSvd s = oracle_svd(x);
  r = std::min(r, s.s.size());
  const std::vector<double> d = soft_threshold(std::span<const double>(s.s).first(r), lambda);
  DenseMatrix ud = column_block(s.u, 0, r);
  scale_columns(ud, d);
  return multiply_nt(ud, column_block(s.v, 0, r));
}

double soft_svd_objective(const SplrMatrix& x, const FactorPair& f, double lambda) {
  const ObservedMatrix& s = x.sparse_part();
  const SparsityPattern& pat = s.pattern();
  const std::size_t r = x.rank();

  // <S, L R^T> and <S, Z> on Omega.
  CompensatedSum s_lr;
  CompensatedSum s_z;
  for (std::size_t e = 0; e < s.nnz(); ++e) {
    const std::size_t i = pat.row_of(e);
    const std::size_t j = pat.col_of(e);
    double lr = 0.0;
    auto l = x.left().row(i);
    auto rr = x.right().row(j);
    for (std::size_t k = 0; k < r; ++k) lr += l[k] * rr[k];
    s_lr.add(s.value(e) * lr);
    s_z.add(s.value(e) * f.at(i, j));
  }

  const DenseMatrix ll = multiply_tn(x.left(), x.left());
  const DenseMatrix rr = multiply_tn(x.right(), x.right());
  CompensatedSum lr_sq;
  for (std::size_t k = 0; k < r; ++k) {
    for (std::size_t l = 0; l < r; ++l) lr_sq.add(ll(k, l) * rr(l, k));
  }

  const DenseMatrix uu = multiply_tn(f.u, f.u);
  const DenseMatrix vv = multiply_tn(f.v, f.v);
  CompensatedSum z_sq;
  for (std::size_t k = 0; k < f.rank(); ++k) {
    for (std::size_t l = 0; l < f.rank(); ++l) z_sq.add(uu(k, l) * f.d[l] * vv(l, k) * f.d[k]);
  }

  // <L R^T, U d V^T> = sum_kl (L^T U)_kl d_l (V^T R)_lk
  const DenseMatrix lu = multiply_tn(x.left(), f.u);
  const DenseMatrix vr = multiply_tn(f.v, x.right());
  CompensatedSum lr_z;
  for (std::size_t k = 0; k < r; ++k) {
    for (std::size_t l = 0; l < f.rank(); ++l) lr_z.add(lu(k, l) * f.d[l] * vr(l, k));
  }

  CompensatedSum total;
  total.add(s.norm_sq());
  total.add(lr_sq.value());
  total.add(z_sq.value());
  total.add(2.0 * s_lr.value());
  total.add(-2.0 * s_z.value());
  total.add(-2.0 * lr_z.value());
  return 0.5 * std::max(total.value(), 0.0) + lambda * f.nuclear_norm();
}

}  // namespace softals
