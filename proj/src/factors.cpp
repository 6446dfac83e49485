#include "softals/factors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "softals/errors.hpp"

namespace softals {

FactorPair FactorPair::zero(std::size_t m, std::size_t n, std::size_t r) {
  return {DenseMatrix(m, r), std::vector<double>(r, 0.0), DenseMatrix(n, r)};
}

DenseMatrix FactorPair::a() const {
  DenseMatrix out = u;
  std::vector<double> s(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) s[k] = std::sqrt(d[k]);
  scale_columns(out, s);
  return out;
}

DenseMatrix FactorPair::b() const {
  DenseMatrix out = v;
  std::vector<double> s(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) s[k] = std::sqrt(d[k]);
  scale_columns(out, s);
  return out;
}

double FactorPair::nuclear_norm() const {
  CompensatedSum s;
  for (double x : d) s.add(x);
  return s.value();
}

double FactorPair::at(std::size_t i, std::size_t j) const {
  auto ur = u.row(i);
  auto vr = v.row(j);
  double s = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) s += ur[k] * d[k] * vr[k];
  return s;
}

DenseMatrix FactorPair::model() const {
  DenseMatrix ud = u;
  scale_columns(ud, d);
  return multiply_nt(ud, v);
}

void FactorPair::check_shapes() const {
  if (u.cols() != d.size() || v.cols() != d.size()) {
    throw DimensionMismatch("factor pair: U has " + std::to_string(u.cols()) + " columns, V has " +
                            std::to_string(v.cols()) + ", d has " + std::to_string(d.size()) +
                            " entries");
  }
}

namespace {

FactorPair select_columns(const FactorPair& f, const std::vector<std::size_t>& keep) {
  FactorPair out = FactorPair::zero(f.rows(), f.cols(), keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const std::size_t k = keep[c];
    out.d[c] = f.d[k];
    for (std::size_t i = 0; i < f.rows(); ++i) out.u(i, c) = f.u(i, k);
    for (std::size_t j = 0; j < f.cols(); ++j) out.v(j, c) = f.v(j, k);
  }
  return out;
}

std::vector<std::size_t> sorted_order(const std::vector<double>& d) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
  return order;
}

}  // namespace

FactorPair compact(const FactorPair& f) {
  f.check_shapes();
  std::vector<std::size_t> keep;
  for (std::size_t k : sorted_order(f.d)) {
    if (f.d[k] > 0.0) keep.push_back(k);
  }
  return select_columns(f, keep);
}

std::size_t rank_estimate(std::span<const double> d) {
  double top = 0.0;
  for (double x : d) top = std::max(top, x);
  if (top <= 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(d.begin(), d.end(), [&](double x) { return x > 1e-9 * top; }));
}

namespace {

DenseMatrix side_by_side(const DenseMatrix& left, const DenseMatrix& right) {
  DenseMatrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t i = 0; i < left.rows(); ++i) {
    auto o = out.row(i);
    auto l = left.row(i);
    auto r = right.row(i);
    std::copy(l.begin(), l.end(), o.begin());
    std::copy(r.begin(), r.end(), o.begin() + static_cast<std::ptrdiff_t>(l.size()));
  }
  return out;
}

// ||R_u[:, cols] diag(w) R_v[:, cols]^T||_F^2 over the given column range.
double core_norm_sq(const DenseMatrix& ru, const std::vector<double>& w, const DenseMatrix& rv,
                    std::size_t first, std::size_t last) {
  CompensatedSum s;
  for (std::size_t i = 0; i < ru.rows(); ++i) {
    for (std::size_t j = 0; j < rv.rows(); ++j) {
      double k = 0.0;
      for (std::size_t c = first; c < last; ++c) k += ru(i, c) * w[c] * rv(j, c);
      s.add(k * k);
    }
  }
  return s.value();
}

}  // namespace

namespace {

FactorPair live_columns(const FactorPair& f) {
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < f.d.size(); ++k) {
    if (f.d[k] != 0.0) keep.push_back(k);
  }
  if (keep.size() == f.d.size()) return f;
  FactorPair out{DenseMatrix(f.rows(), keep.size()), {}, DenseMatrix(f.cols(), keep.size())};
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.u.set_column(c, f.u.column(keep[c]));
    out.v.set_column(c, f.v.column(keep[c]));
    out.d.push_back(f.d[keep[c]]);
  }
  return out;
}

// sum_kl g[k,l] w[k] w[l] h[l,k] = ||E diag(w) F^T||^2 for g = E^T E, h = F^T F.
double weighted_trace(const DenseMatrix& g, std::span<const double> w, const DenseMatrix& h) {
  CompensatedSum s;
  for (std::size_t k = 0; k < w.size(); ++k) {
    for (std::size_t l = 0; l < w.size(); ++l) s.add(g(k, l) * w[k] * w[l] * h(l, k));
  }
  return std::max(s.value(), 0.0);
}

// Both old bases orthonormal: with U~ = U P + E_u and V~ = V Q + E_v,
//   ||M - M~||^2 = ||D - P D~ Q^T||^2 + ||P D~ E_v^T||^2 + ||E_u D~ V~^T||^2,
// every piece a sum of nonnegative terms.
double split_delta_sq(const FactorPair& o, const FactorPair& n, FlopCounter* counter) {
  const DenseMatrix p = multiply_tn(o.u, n.u, counter);
  const DenseMatrix q = multiply_tn(o.v, n.v, counter);
  const DenseMatrix eu = n.u - multiply(o.u, p, counter);
  const DenseMatrix ev = n.v - multiply(o.v, q, counter);

  DenseMatrix pd = p;
  scale_columns(pd, n.d);
  DenseMatrix core = multiply_nt(pd, q, counter);
  for (std::size_t k = 0; k < o.d.size(); ++k) core(k, k) -= o.d[k];

  const DenseMatrix ptp = multiply_tn(p, p, counter);
  const DenseMatrix gv = multiply_tn(n.v, n.v, counter);
  return frobenius_norm_sq(core) +
         weighted_trace(ptp, n.d, multiply_tn(ev, ev, counter)) +
         weighted_trace(multiply_tn(eu, eu, counter), n.d, gv);
}

}  // namespace

FrobeniusDelta frobenius_delta(const FactorPair& old_pair, const FactorPair& new_pair,
                               FlopCounter* counter) {
  old_pair.check_shapes();
  new_pair.check_shapes();
  if (old_pair.rows() != new_pair.rows() || old_pair.cols() != new_pair.cols()) {
    throw DimensionMismatch("frobenius_delta: factor pairs describe different matrix shapes");
  }
  const FactorPair o = live_columns(old_pair);
  const FactorPair n = live_columns(new_pair);
  const std::size_t r0 = o.rank();
  const std::size_t r1 = n.rank();
  if (r0 == 0) return {std::numeric_limits<double>::infinity(), true};

  if (orthonormality_error(o.u) < 1e-10 && orthonormality_error(o.v) < 1e-10) {
    count(counter, 2 * static_cast<std::uint64_t>(o.rows() + o.cols()) * r0 * r1);
    double old_sq = 0.0;
    for (double x : o.d) old_sq += x * x;
    if (r1 == 0) return {1.0, false};
    return {split_delta_sq(o, n, counter) / old_sq, false};
  }

  // General case. With [U, U~] = Q_u R_u and [V, V~] = Q_v R_v,
  //   U diag(d) V^T - U~ diag(d~) V~^T = Q_u (R_u diag(d, -d~) R_v^T) Q_v^T,
  // so both norms in the ratio come from a (r0 + r1)-square core. Expanding
  // tr(D^4) + tr(D~^4) - 2 tr(...) instead would cancel catastrophically
  // once the relative change falls below ~1e-16.
  std::vector<double> w(r0 + r1);
  for (std::size_t k = 0; k < r0; ++k) w[k] = o.d[k];
  for (std::size_t k = 0; k < r1; ++k) w[r0 + k] = -n.d[k];
  const std::size_t cap = std::min(o.rows(), o.cols());
  DenseMatrix ru = side_by_side(o.u, n.u);
  DenseMatrix rv = side_by_side(o.v, n.v);
  // Too wide for a thin QR: the core is then the full m x n difference.
  if (r0 + r1 <= cap) {
    ru = orthonormalize(ru, counter).r;
    rv = orthonormalize(rv, counter).r;
  }
  const double old_sq = core_norm_sq(ru, w, rv, 0, r0);
  if (!(old_sq > 0.0)) return {std::numeric_limits<double>::infinity(), true};
  count(counter, static_cast<std::uint64_t>(ru.rows()) * rv.rows() * (r0 + r1));
  return {core_norm_sq(ru, w, rv, 0, r0 + r1) / old_sq, false};
}

DenseMatrix random_orthonormal(std::size_t m, std::size_t r, std::mt19937_64& rng) {
  return orthonormalize(gaussian_matrix(m, r, rng)).q;
}

FactorPair pad_factors(const FactorPair& prior, std::size_t r, std::mt19937_64& rng,
                       std::optional<double> pad_value, bool keep_dead) {
  prior.check_shapes();
  const std::size_t m = prior.rows();
  const std::size_t n = prior.cols();
  if (r > std::min(m, n)) {
    throw ValidationError("operating rank " + std::to_string(r) + " exceeds min(m, n) = " +
                          std::to_string(std::min(m, n)));
  }
  std::vector<std::size_t> keep;
  for (std::size_t k : sorted_order(prior.d)) {
    if ((keep_dead || prior.d[k] > 0.0) && keep.size() < r) keep.push_back(k);
  }
  FactorPair kept = select_columns(prior, keep);
  if (kept.rank() == r) return kept;

  double fill = 1.0;
  if (pad_value) {
    fill = *pad_value;
  } else {
    double smallest = std::numeric_limits<double>::infinity();
    for (double x : kept.d) {
      if (x > 0.0) smallest = std::min(smallest, x);
    }
    if (std::isfinite(smallest)) fill = smallest;
  }

  // Orthonormalizing [U_kept, G] leaves the kept columns in place and makes
  // the new ones orthogonal to them.
  const std::size_t k0 = kept.rank();
  DenseMatrix basis(m, r);
  DenseMatrix g = gaussian_matrix(m, r - k0, rng);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < k0; ++c) basis(i, c) = kept.u(i, c);
    for (std::size_t c = k0; c < r; ++c) basis(i, c) = g(i, c - k0);
  }
  const DenseMatrix q = orthonormalize(basis).q;

  FactorPair out = FactorPair::zero(m, n, r);
  for (std::size_t c = 0; c < r; ++c) {
    out.d[c] = c < k0 ? kept.d[c] : fill;
    for (std::size_t i = 0; i < m; ++i) out.u(i, c) = c < k0 ? kept.u(i, c) : q(i, c);
    if (c < k0) {
      for (std::size_t j = 0; j < n; ++j) out.v(j, c) = kept.v(j, c);
    }
  }
  return out;
}

FactorPair svd_form(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* counter) {
  if (a.cols() != b.cols()) throw DimensionMismatch("svd_form: A and B have different ranks");
  const QrResult qa = orthonormalize(a, counter);
  const QrResult qb = orthonormalize(b, counter);
  const SmallSvd s = svd_skinny(multiply_nt(qa.r, qb.r, counter), counter);
  return {multiply(qa.q, s.u, counter), s.s, multiply(qb.q, s.v, counter)};
}

FactorPair unregularized(const FactorPair& f, double lambda) {
  FactorPair out = compact(f);
  for (double& x : out.d) x += lambda;
  return out;
}

}  // namespace softals
