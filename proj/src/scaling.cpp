#include "softals/scaling.hpp"

#include <cmath>
#include <limits>

#include "softals/dense.hpp"
#include "softals/errors.hpp"

namespace softals {

namespace {

void parse_side(const std::string& word, const char* what, bool& rows, bool& cols) {
  if (word == "none") {
    rows = cols = false;
  } else if (word == "rows") {
    rows = true;
    cols = false;
  } else if (word == "cols") {
    rows = false;
    cols = true;
  } else if (word == "both") {
    rows = cols = true;
  } else {
    throw ValidationError(std::string("--") + what + " expects rows, cols, both or none, got '" +
                          word + "'");
  }
}

// Minimum entries per row/column for the enabled families.
void check_counts(const SparsityPattern& pat, ScalingFlags f) {
  const std::size_t row_need = f.scale_rows ? 2 : (f.center_rows ? 1 : 0);
  const std::size_t col_need = f.scale_cols ? 2 : (f.center_cols ? 1 : 0);
  for (std::size_t i = 0; i < pat.rows(); ++i) {
    if (pat.row_count(i) < row_need) {
      throw ValidationError("row " + std::to_string(i) + " has " + std::to_string(pat.row_count(i)) +
                            " observed entries; row " + (f.scale_rows ? "scaling" : "centering") +
                            " needs at least " + std::to_string(row_need));
    }
  }
  for (std::size_t j = 0; j < pat.cols(); ++j) {
    if (pat.col_count(j) < col_need) {
      throw ValidationError("column " + std::to_string(j) + " has " +
                            std::to_string(pat.col_count(j)) + " observed entries; column " +
                            (f.scale_cols ? "scaling" : "centering") + " needs at least " +
                            std::to_string(col_need));
    }
  }
}

[[noreturn]] void collapsed(const char* side, std::size_t index) {
  throw ValidationError(std::string(side) + " " + std::to_string(index) +
                        " has zero spread after centering and cannot be scaled");
}

double checked_scale(double variance, const char* side, std::size_t index) {
  if (!(variance > 0.0) || !std::isfinite(variance)) collapsed(side, index);
  return std::sqrt(variance);
}

double log_sq(double v) {
  const double l = std::log(v);
  return l * l;
}

ScalingFit finish(ScalingFit fit, const ScalingOptions& opt) {
  fit.report.converged = !fit.report.residuals.empty() && fit.report.residuals.back() <= opt.tol;
  normalize(fit.params);
  return fit;
}

void check_options(const ScalingOptions& opt) {
  if (!(opt.tol >= 0.0)) throw ValidationError("scaling tol must be >= 0");
  if (opt.max_iter < 1) throw ValidationError("scaling max_iter must be >= 1");
}

}  // namespace

ScalingFlags ScalingFlags::parse(const std::string& center, const std::string& scale) {
  ScalingFlags f;
  parse_side(center, "center", f.center_rows, f.center_cols);
  parse_side(scale, "scale", f.scale_rows, f.scale_cols);
  return f;
}

ScalingParams ScalingParams::identity(std::size_t m, std::size_t n, ScalingFlags flags) {
  return {std::vector<double>(m, 0.0), std::vector<double>(n, 0.0), std::vector<double>(m, 1.0),
          std::vector<double>(n, 1.0), flags};
}

void ScalingParams::check(std::size_t m, std::size_t n) const {
  if (alpha.size() != m || tau.size() != m || beta.size() != n || gamma.size() != n) {
    throw DimensionMismatch("scaling parameters do not match a " + std::to_string(m) + "x" +
                            std::to_string(n) + " matrix");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(alpha[i]) || !std::isfinite(tau[i]) || !(tau[i] > 0.0)) {
      throw ValidationError("invalid scaling parameters for row " + std::to_string(i));
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(beta[j]) || !std::isfinite(gamma[j]) || !(gamma[j] > 0.0)) {
      throw ValidationError("invalid scaling parameters for column " + std::to_string(j));
    }
  }
}

double ScaleReport::observed_rate() const {
  const std::size_t t = residuals.size();
  if (t < 2 || !(residuals[t - 2] > 0.0) || !(residuals[t - 1] > 0.0)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return residuals[t - 1] / residuals[t - 2];
}

void normalize(ScalingParams& p) {
  if (p.flags.center_rows && p.flags.center_cols && !p.alpha.empty()) {
    CompensatedSum s;
    for (double a : p.alpha) s.add(a);
    const double shift = s.value() / static_cast<double>(p.alpha.size());
    for (double& a : p.alpha) a -= shift;
    for (double& b : p.beta) b += shift;
  }
  if (p.flags.scale_rows && p.flags.scale_cols && !p.tau.empty()) {
    CompensatedSum s;
    for (double t : p.tau) s.add(std::log(t));
    const double g = std::exp(s.value() / static_cast<double>(p.tau.size()));
    for (double& t : p.tau) t /= g;
    for (double& c : p.gamma) c *= g;
  }
}

// ---------------------------------------------------------------------------
// Direct moment equations

ScalingFit fit_scaling(const ObservedMatrix& x, ScalingFlags flags, const ScalingOptions& opt) {
  check_options(opt);
  const SparsityPattern& pat = x.pattern();
  check_counts(pat, flags);
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  ScalingFit fit{ScalingParams::identity(m, n, flags), {}};
  ScalingParams& p = fit.params;
  if (!flags.any()) return finish(std::move(fit), opt);

  auto resid = [&](std::size_t e) {
    return x.value(e) - p.alpha[pat.row_of(e)] - p.beta[pat.col_of(e)];
  };

  for (int sweep = 1; sweep <= opt.max_iter; ++sweep) {
    if (flags.center_rows) {
      for (std::size_t i = 0; i < m; ++i) {
        CompensatedSum num;
        CompensatedSum den;
        for (std::size_t e = pat.row_begin(i); e < pat.row_begin(i + 1); ++e) {
          const double w = 1.0 / p.gamma[pat.col_of(e)];
          num.add(w * (x.value(e) - p.beta[pat.col_of(e)]));
          den.add(w);
        }
        p.alpha[i] = num.value() / den.value();
      }
    }
    if (flags.center_cols) {
      for (std::size_t j = 0; j < n; ++j) {
        CompensatedSum num;
        CompensatedSum den;
        for (std::size_t e : pat.col_entries(j)) {
          const double w = 1.0 / p.tau[pat.row_of(e)];
          num.add(w * (x.value(e) - p.alpha[pat.row_of(e)]));
          den.add(w);
        }
        p.beta[j] = num.value() / den.value();
      }
    }
    if (flags.scale_rows) {
      for (std::size_t i = 0; i < m; ++i) {
        CompensatedSum s;
        for (std::size_t e = pat.row_begin(i); e < pat.row_begin(i + 1); ++e) {
          const double r = resid(e) / p.gamma[pat.col_of(e)];
          s.add(r * r);
        }
        p.tau[i] = checked_scale(s.value() / static_cast<double>(pat.row_count(i)), "row", i);
      }
    }
    if (flags.scale_cols) {
      for (std::size_t j = 0; j < n; ++j) {
        CompensatedSum s;
        for (std::size_t e : pat.col_entries(j)) {
          const double r = resid(e) / p.tau[pat.row_of(e)];
          s.add(r * r);
        }
        p.gamma[j] = checked_scale(s.value() / static_cast<double>(pat.col_count(j)), "column", j);
      }
    }

    // R on the standardized observed values.
    std::vector<double> xt(x.nnz());
    for (std::size_t e = 0; e < x.nnz(); ++e) {
      xt[e] = resid(e) / (p.tau[pat.row_of(e)] * p.gamma[pat.col_of(e)]);
    }
    CompensatedSum r;
    if (flags.center_rows || flags.scale_rows) {
      for (std::size_t i = 0; i < m; ++i) {
        if (pat.row_count(i) == 0) continue;
        CompensatedSum s1;
        CompensatedSum s2;
        for (std::size_t e = pat.row_begin(i); e < pat.row_begin(i + 1); ++e) {
          s1.add(xt[e]);
          s2.add(xt[e] * xt[e]);
        }
        const double cnt = static_cast<double>(pat.row_count(i));
        if (flags.center_rows) r.add((s1.value() / cnt) * (s1.value() / cnt));
        if (flags.scale_rows) r.add(log_sq(s2.value() / cnt));
      }
    }
    if (flags.center_cols || flags.scale_cols) {
      for (std::size_t j = 0; j < n; ++j) {
        if (pat.col_count(j) == 0) continue;
        CompensatedSum s1;
        CompensatedSum s2;
        for (std::size_t e : pat.col_entries(j)) {
          s1.add(xt[e]);
          s2.add(xt[e] * xt[e]);
        }
        const double cnt = static_cast<double>(pat.col_count(j));
        if (flags.center_cols) r.add((s1.value() / cnt) * (s1.value() / cnt));
        if (flags.scale_cols) r.add(log_sq(s2.value() / cnt));
      }
    }
    fit.report.iterations = sweep;
    fit.report.residuals.push_back(r.value());
    if (r.value() <= opt.tol) break;
  }
  return finish(std::move(fit), opt);
}

// ---------------------------------------------------------------------------
// Increments on working standardized values

ScalingFit fit_scaling_incremental(const ObservedMatrix& x, ScalingFlags flags,
                                   const ScalingOptions& opt) {
  check_options(opt);
  const SparsityPattern& pat = x.pattern();
  check_counts(pat, flags);
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  ScalingFit fit{ScalingParams::identity(m, n, flags), {}};
  ScalingParams& p = fit.params;
  if (!flags.any()) return finish(std::move(fit), opt);

  std::vector<double> xt(x.values().begin(), x.values().end());
  auto weight = [&](std::size_t e) { return 1.0 / (p.tau[pat.row_of(e)] * p.gamma[pat.col_of(e)]); };

  for (int sweep = 1; sweep <= opt.max_iter; ++sweep) {
    CompensatedSum r;
    if (flags.center_rows) {
      for (std::size_t i = 0; i < m; ++i) {
        CompensatedSum num;
        CompensatedSum den;
        for (std::size_t e = pat.row_begin(i); e < pat.row_begin(i + 1); ++e) {
          num.add(xt[e]);
          den.add(weight(e));
        }
        const double delta = num.value() / den.value();
        p.alpha[i] += delta;
        for (std::size_t e = pat.row_begin(i); e < pat.row_begin(i + 1); ++e) {
          xt[e] -= delta * weight(e);
        }
        r.add(delta * delta);
      }
    }
    if (flags.center_cols) {
      for (std::size_t j = 0; j < n; ++j) {
        CompensatedSum num;
        CompensatedSum den;
        for (std::size_t e : pat.col_entries(j)) {
          num.add(xt[e]);
          den.add(weight(e));
        }
        const double delta = num.value() / den.value();
        p.beta[j] += delta;
        for (std::size_t e : pat.col_entries(j)) xt[e] -= delta * weight(e);
        r.add(delta * delta);
      }
    }
    if (flags.scale_rows) {
      for (std::size_t i = 0; i < m; ++i) {
        CompensatedSum s;
        for (std::size_t e = pat.row_begin(i); e < pat.row_begin(i + 1); ++e) s.add(xt[e] * xt[e]);
        const double delta =
            checked_scale(s.value() / static_cast<double>(pat.row_count(i)), "row", i);
        p.tau[i] *= delta;
        for (std::size_t e = pat.row_begin(i); e < pat.row_begin(i + 1); ++e) xt[e] /= delta;
        r.add(log_sq(delta));
      }
    }
    if (flags.scale_cols) {
      for (std::size_t j = 0; j < n; ++j) {
        CompensatedSum s;
        for (std::size_t e : pat.col_entries(j)) s.add(xt[e] * xt[e]);
        const double delta =
            checked_scale(s.value() / static_cast<double>(pat.col_count(j)), "column", j);
        p.gamma[j] *= delta;
        for (std::size_t e : pat.col_entries(j)) xt[e] /= delta;
        r.add(log_sq(delta));
      }
    }
    fit.report.iterations = sweep;
    fit.report.residuals.push_back(r.value());
    if (r.value() <= opt.tol) break;
  }
  return finish(std::move(fit), opt);
}

// ---------------------------------------------------------------------------
// Fully observed sparse-plus-low-rank input

SplrMatrix apply_scaling(const SplrMatrix& x, const ScalingParams& p) {
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  p.check(m, n);
  const ObservedMatrix& s = x.sparse_part();
  std::vector<double> vals(s.nnz());
  for (std::size_t e = 0; e < s.nnz(); ++e) {
    vals[e] = s.value(e) / (p.tau[s.row_of(e)] * p.gamma[s.col_of(e)]);
  }
  const std::size_t r = x.rank();
  DenseMatrix left(m, r + 2);
  DenseMatrix right(n, r + 2);
  for (std::size_t i = 0; i < m; ++i) {
    const double w = 1.0 / p.tau[i];
    for (std::size_t k = 0; k < r; ++k) left(i, k) = w * x.left()(i, k);
    left(i, r) = w * p.alpha[i];
    left(i, r + 1) = w;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double w = 1.0 / p.gamma[j];
    for (std::size_t k = 0; k < r; ++k) right(j, k) = w * x.right()(j, k);
    right(j, r) = -w;
    right(j, r + 1) = -w * p.beta[j];
  }
  return SplrMatrix(s.with_values(std::move(vals)), std::move(left), std::move(right));
}

namespace {

struct LineMoments {
  std::vector<double> sum;     // sum over the full line
  std::vector<double> sum_sq;  // sum of squares over the full line
};

// Row (or, with by_column, column) sums and sums of squares of the dense
// matrix S + L R^T, in O(|Omega| q + (m + n) q^2).
LineMoments line_moments(const SplrMatrix& y, bool by_column) {
  const ObservedMatrix& s = y.sparse_part();
  const DenseMatrix& mine = by_column ? y.right() : y.left();
  const DenseMatrix& other = by_column ? y.left() : y.right();
  const std::size_t lines = mine.rows();
  const std::size_t q = mine.cols();

  std::vector<double> other_sum(q, 0.0);
  for (std::size_t t = 0; t < other.rows(); ++t) {
    for (std::size_t k = 0; k < q; ++k) other_sum[k] += other(t, k);
  }
  const DenseMatrix gram = multiply_tn(other, other);

  LineMoments out{std::vector<double>(lines, 0.0), std::vector<double>(lines, 0.0)};
  std::vector<CompensatedSum> sum(lines);
  std::vector<CompensatedSum> sq(lines);
  for (std::size_t e = 0; e < s.nnz(); ++e) {
    const std::size_t line = by_column ? s.col_of(e) : s.row_of(e);
    const std::size_t across = by_column ? s.row_of(e) : s.col_of(e);
    double lr = 0.0;
    for (std::size_t k = 0; k < q; ++k) lr += mine(line, k) * other(across, k);
    const double v = s.value(e);
    sum[line].add(v);
    sq[line].add(v * v + 2.0 * v * lr);
  }
  for (std::size_t l = 0; l < lines; ++l) {
    double lin = 0.0;
    double quad = 0.0;
    for (std::size_t k = 0; k < q; ++k) {
      lin += mine(l, k) * other_sum[k];
      double gk = 0.0;
      for (std::size_t c = 0; c < q; ++c) gk += gram(k, c) * mine(l, c);
      quad += mine(l, k) * gk;
    }
    sum[l].add(lin);
    sq[l].add(quad);
    out.sum[l] = sum[l].value();
    out.sum_sq[l] = sq[l].value();
  }
  return out;
}

}  // namespace

ScalingFit fit_scaling_incremental(const SplrMatrix& x, ScalingFlags flags,
                                   const ScalingOptions& opt) {
  check_options(opt);
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  if ((flags.scale_rows && n < 2) || (flags.scale_cols && m < 2)) {
    throw ValidationError("scaling needs at least two entries per row and column");
  }
  ScalingFit fit{ScalingParams::identity(m, n, flags), {}};
  ScalingParams& p = fit.params;
  if (!flags.any()) return finish(std::move(fit), opt);

  auto inv_sum = [](const std::vector<double>& v) {
    CompensatedSum s;
    for (double t : v) s.add(1.0 / t);
    return s.value();
  };

  for (int sweep = 1; sweep <= opt.max_iter; ++sweep) {
    CompensatedSum r;
    if (flags.center_rows) {
      const LineMoments mo = line_moments(apply_scaling(x, p), false);
      const double g = inv_sum(p.gamma);
      for (std::size_t i = 0; i < m; ++i) {
        const double delta = mo.sum[i] / (g / p.tau[i]);
        p.alpha[i] += delta;
        r.add(delta * delta);
      }
    }
    if (flags.center_cols) {
      const LineMoments mo = line_moments(apply_scaling(x, p), true);
      const double t = inv_sum(p.tau);
      for (std::size_t j = 0; j < n; ++j) {
        const double delta = mo.sum[j] / (t / p.gamma[j]);
        p.beta[j] += delta;
        r.add(delta * delta);
      }
    }
    if (flags.scale_rows) {
      const LineMoments mo = line_moments(apply_scaling(x, p), false);
      for (std::size_t i = 0; i < m; ++i) {
        const double delta = checked_scale(mo.sum_sq[i] / static_cast<double>(n), "row", i);
        p.tau[i] *= delta;
        r.add(log_sq(delta));
      }
    }
    if (flags.scale_cols) {
      const LineMoments mo = line_moments(apply_scaling(x, p), true);
      for (std::size_t j = 0; j < n; ++j) {
        const double delta = checked_scale(mo.sum_sq[j] / static_cast<double>(m), "column", j);
        p.gamma[j] *= delta;
        r.add(log_sq(delta));
      }
    }
    fit.report.iterations = sweep;
    fit.report.residuals.push_back(r.value());
    if (r.value() <= opt.tol) break;
  }
  return finish(std::move(fit), opt);
}

// ---------------------------------------------------------------------------

ObservedMatrix apply_scaling(const ObservedMatrix& x, const ScalingParams& p) {
  p.check(x.rows(), x.cols());
  std::vector<double> vals(x.nnz());
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    const std::size_t i = x.row_of(e);
    const std::size_t j = x.col_of(e);
    vals[e] = (x.value(e) - p.alpha[i] - p.beta[j]) / (p.tau[i] * p.gamma[j]);
  }
  return x.with_values(std::move(vals));
}

double invert_scaling(double prediction, std::size_t i, std::size_t j, const ScalingParams& p) {
  if (i >= p.rows() || j >= p.cols()) {
    throw DimensionMismatch("cell (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") is outside the scaling parameters");
  }
  return p.tau[i] * p.gamma[j] * prediction + p.alpha[i] + p.beta[j];
}

}  // namespace softals
