#include "softals/dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace softals {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("DenseMatrix: value count does not match shape");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

std::vector<double> DenseMatrix::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

void DenseMatrix::set_column(std::size_t j, std::span<const double> values) {
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw std::invalid_argument("DenseMatrix +=: shape mismatch");
  }
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw std::invalid_argument("DenseMatrix -=: shape mismatch");
  }
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) noexcept {
  for (double& x : data_) x *= s;
  return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* counter) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimensions differ");
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  count(counter, static_cast<std::uint64_t>(a.rows()) * a.cols() * b.cols());
  return out;
}

DenseMatrix multiply_tn(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* counter) {
  if (a.rows() != b.rows()) throw std::invalid_argument("multiply_tn: row counts differ");
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
    }
  }
  count(counter, static_cast<std::uint64_t>(a.rows()) * a.cols() * b.cols());
  return out;
}

DenseMatrix multiply_nt(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* counter) {
  if (a.cols() != b.cols()) throw std::invalid_argument("multiply_nt: column counts differ");
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      out(i, j) = s;
    }
  }
  count(counter, static_cast<std::uint64_t>(a.rows()) * a.cols() * b.rows());
  return out;
}

void scale_columns(DenseMatrix& a, std::span<const double> s) {
  if (s.size() != a.cols()) throw std::invalid_argument("scale_columns: length mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) r[j] *= s[j];
  }
}

DenseMatrix column_block(const DenseMatrix& a, std::size_t first, std::size_t count_cols) {
  if (first + count_cols > a.cols()) throw std::invalid_argument("column_block: out of range");
  DenseMatrix out(a.rows(), count_cols);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < count_cols; ++j) out(i, j) = a(i, first + j);
  return out;
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

double frobenius_norm_sq(const DenseMatrix& a) {
  CompensatedSum s;
  for (double x : a.values()) s.add(x * x);
  return s.value();
}

double frobenius_norm(const DenseMatrix& a) { return std::sqrt(frobenius_norm_sq(a)); }

double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double x : a.values()) m = std::max(m, std::abs(x));
  return m;
}

double orthonormality_error(const DenseMatrix& q) {
  DenseMatrix g = multiply_tn(q, q);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return max_abs(g);
}

bool all_finite(const DenseMatrix& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double x) { return std::isfinite(x); });
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix out(rows, cols);
  for (double& x : out.values()) x = normal(rng);
  return out;
}

std::vector<double> soft_threshold(std::span<const double> d, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("soft_threshold: lambda must be >= 0");
  std::vector<double> out(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) out[k] = std::max(d[k] - lambda, 0.0);
  return out;
}

DenseMatrix ridge_apply(const DenseMatrix& projected, std::span<const double> d, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("ridge_apply: lambda must be >= 0");
  if (projected.rows() != d.size()) throw std::invalid_argument("ridge_apply: rank mismatch");
  DenseMatrix out = projected;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double denom = d[k] * d[k] + lambda;
    if (denom == 0.0) {
      throw std::domain_error("ridge_apply: singular ridge (lambda = 0 and d_" +
                              std::to_string(k) + " = 0)");
    }
    const double f = d[k] / denom;
    for (double& x : out.row(k)) x *= f;
  }
  return out;
}

namespace {

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

// Orthogonalizes `v` against the first `k` rows of `basis` twice and returns the
// accumulated coefficients.
std::vector<double> project_out(std::span<double> v, const DenseMatrix& basis, std::size_t k,
                                FlopCounter* counter) {
  std::vector<double> coef(k, 0.0);
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < k; ++j) {
      auto q = basis.row(j);
      const double c = dot(q, v);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * q[i];
      coef[j] += c;
    }
    count(counter, 2ULL * k * v.size());
  }
  return coef;
}

// Fills row k of `basis` (rows are basis vectors) with a unit vector
// orthogonal to rows 0..k-1: the coordinate axis with the largest residual
// after projection, 1 - sum_j basis[j, axis]^2. Some axis always keeps at
// least sqrt((p - k) / p).
void complete_basis_row(DenseMatrix& basis, std::size_t k) {
  const std::size_t p = basis.cols();
  std::vector<double> covered(p, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    auto row = basis.row(j);
    for (std::size_t i = 0; i < p; ++i) covered[i] += row[i] * row[i];
  }
  const std::size_t best = static_cast<std::size_t>(
      std::min_element(covered.begin(), covered.end()) - covered.begin());
  std::vector<double> v(p, 0.0);
  v[best] = 1.0;
  project_out(v, basis, k, nullptr);
  const double nrm = std::sqrt(dot(v, v));
  if (!(nrm > 1e-8)) throw std::logic_error("complete_basis_row: basis is already complete");
  auto row = basis.row(k);
  for (std::size_t i = 0; i < p; ++i) row[i] = v[i] / nrm;
}

}  // namespace

QrResult orthonormalize(const DenseMatrix& m, FlopCounter* counter) {
  const std::size_t p = m.rows();
  const std::size_t q = m.cols();
  if (q > p) throw std::invalid_argument("orthonormalize: more columns than rows");
  // Work on the transpose so each column is contiguous.
  DenseMatrix qt = transpose(m);
  DenseMatrix r(q, q);
  std::vector<bool> completed(q, false);
  for (std::size_t k = 0; k < q; ++k) {
    auto v = qt.row(k);
    const double before = std::sqrt(dot(v, v));
    auto coef = project_out(v, qt, k, counter);
    for (std::size_t j = 0; j < k; ++j) r(j, k) = coef[j];
    const double after = std::sqrt(dot(v, v));
    if (after <= 1e-12 * (before + 1.0)) {
      completed[k] = true;
      r(k, k) = 0.0;
      complete_basis_row(qt, k);
    } else {
      r(k, k) = after;
      for (double& x : v) x /= after;
    }
  }
  return {transpose(qt), std::move(r), std::move(completed)};
}

namespace {

// One-sided Jacobi; U and V come back transposed (rows are vectors).
SmallSvd jacobi_svd(const DenseMatrix& m, FlopCounter* counter) {
  const std::size_t p = m.rows();
  const std::size_t q = m.cols();

  // Rows of wt are the columns of the working matrix W = M V.
  DenseMatrix wt = transpose(m);
  DenseMatrix vt = DenseMatrix::identity(q);
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max<std::size_t>(p, 1));
  constexpr int kMaxSweeps = 80;
  int sweep = 0;
  // Squared column norms, refreshed each sweep and carried through the
  // rotations in between.
  std::vector<double> sq(q);
  for (; sweep < kMaxSweeps; ++sweep) {
    for (std::size_t k = 0; k < q; ++k) sq[k] = dot(wt.row(k), wt.row(k));
    count(counter, static_cast<std::uint64_t>(q) * p);
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < q; ++i) {
      for (std::size_t j = i + 1; j < q; ++j) {
        auto wi = wt.row(i);
        auto wj = wt.row(j);
        const double alpha = sq[i];
        const double beta = sq[j];
        if (alpha == 0.0 || beta == 0.0) continue;
        const double gamma = dot(wi, wj);
        count(counter, p);
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        sq[i] = std::max(alpha - t * gamma, 0.0);
        sq[j] = beta + t * gamma;
        for (std::size_t k = 0; k < p; ++k) {
          const double a = wi[k];
          const double b = wj[k];
          wi[k] = c * a - s * b;
          wj[k] = s * a + c * b;
        }
        auto vi = vt.row(i);
        auto vj = vt.row(j);
        for (std::size_t k = 0; k < q; ++k) {
          const double a = vi[k];
          const double b = vj[k];
          vi[k] = c * a - s * b;
          vj[k] = s * a + c * b;
        }
        count(counter, 2ULL * (p + q));
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(q);
  for (std::size_t k = 0; k < q; ++k) norms[k] = std::sqrt(dot(wt.row(k), wt.row(k)));
  std::vector<std::size_t> order(q);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  SmallSvd out;
  out.s.resize(q);
  out.sweeps = sweep + 1;
  DenseMatrix ut(q, p);
  DenseMatrix vsorted(q, q);  // rows are right singular vectors
  std::size_t live = 0;
  for (std::size_t k = 0; k < q; ++k) {
    const std::size_t src = order[k];
    out.s[k] = norms[src];
    auto vrow = vt.row(src);
    std::copy(vrow.begin(), vrow.end(), vsorted.row(k).begin());
    if (norms[src] > 0.0) {
      auto urow = ut.row(k);
      auto wrow = wt.row(src);
      for (std::size_t i = 0; i < p; ++i) urow[i] = wrow[i] / norms[src];
      ++live;
    }
  }
  // Zero singular values sort last; give them orthonormal completion vectors.
  for (std::size_t k = live; k < q; ++k) complete_basis_row(ut, k);

  out.u = std::move(ut);
  out.v = std::move(vsorted);
  return out;
}

}  // namespace

SmallSvd svd_skinny(const DenseMatrix& m, FlopCounter* counter) {
  const std::size_t p = m.rows();
  const std::size_t q = m.cols();
  if (q > p) throw std::invalid_argument("svd_skinny: requires cols <= rows");
  if (!all_finite(m)) throw std::domain_error("svd_skinny: non-finite input");

  SmallSvd out;
  DenseMatrix ut;
  const double scale = max_abs(m);
  if (p >= 2 * q && scale > 0.0) {
    // Tall: rotate the q x q triangle of a thin QR instead of the p rows.
    QrResult qr = orthonormalize((1.0 / scale) * m, counter);
    out = jacobi_svd(qr.r, counter);
    for (double& x : out.s) x *= scale;
    ut = transpose(multiply_nt(qr.q, out.u, counter));
  } else {
    out = jacobi_svd(m, counter);
    ut = std::move(out.u);
  }
  DenseMatrix vsorted = std::move(out.v);
  for (std::size_t k = 0; k < q; ++k) {
    auto urow = ut.row(k);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < p; ++i)
      if (std::abs(urow[i]) > std::abs(urow[arg])) arg = i;
    if (p > 0 && urow[arg] < 0.0) {
      for (double& x : urow) x = -x;
      for (double& x : vsorted.row(k)) x = -x;
    }
  }
  out.u = transpose(ut);
  out.v = transpose(vsorted);
  return out;
}

SmallSvd svd_small(const DenseMatrix& m, FlopCounter* counter) {
  if (m.cols() <= m.rows()) return svd_skinny(m, counter);
  SmallSvd t = svd_skinny(transpose(m), counter);
  SmallSvd out;
  out.u = std::move(t.v);
  out.v = std::move(t.u);
  out.s = std::move(t.s);
  out.sweeps = t.sweeps;
  return out;
}

Cholesky::Cholesky(const DenseMatrix& spd, FlopCounter* counter) : l_(spd.rows(), spd.rows()) {
  const std::size_t n = spd.rows();
  if (spd.cols() != n) throw std::invalid_argument("Cholesky: matrix not square");
  for (std::size_t j = 0; j < n; ++j) {
    double diag = spd(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l_(j, k) * l_(j, k);
    if (!(diag > 0.0)) throw std::domain_error("Cholesky: matrix not positive definite");
    const double ljj = std::sqrt(diag);
    l_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
      l_(i, j) = s / ljj;
    }
  }
  count(counter, static_cast<std::uint64_t>(n) * n * n / 6 + n);
}

void Cholesky::solve_in_place(std::span<double> b, FlopCounter* counter) const {
  const std::size_t n = l_.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * b[k];
    b[i] = s / l_(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l_(k, i) * b[k];
    b[i] = s / l_(i, i);
  }
  count(counter, static_cast<std::uint64_t>(n) * n);
}

}  // namespace softals
