#include "softals/objectives.hpp"

#include <string>

#include "softals/errors.hpp"

namespace softals {

namespace {

void check_factors(const ObservedMatrix& x, const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != x.rows() || b.rows() != x.cols() || a.cols() != b.cols()) {
    throw DimensionMismatch("factors " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            " and " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                            " do not fit a " + std::to_string(x.rows()) + "x" +
                            std::to_string(x.cols()) + " matrix");
  }
}

double dot(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += p[k] * q[k];
  return s;
}

// tr(P Q) for square P, Q of equal size.
double trace_product(const DenseMatrix& p, const DenseMatrix& q) {
  CompensatedSum s;
  for (std::size_t k = 0; k < p.rows(); ++k) {
    for (std::size_t l = 0; l < p.cols(); ++l) s.add(p(k, l) * q(l, k));
  }
  return s.value();
}

}  // namespace

std::vector<double> fit_residual(const ObservedMatrix& x, const DenseMatrix& a,
                                 const DenseMatrix& b) {
  check_factors(x, a, b);
  std::vector<double> r(x.nnz());
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    r[e] = dot(a.row(x.row_of(e)), b.row(x.col_of(e))) - x.value(e);
  }
  return r;
}

double training_loss(const ObservedMatrix& x, const DenseMatrix& a, const DenseMatrix& b) {
  check_factors(x, a, b);
  CompensatedSum s;
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    const double r = x.value(e) - dot(a.row(x.row_of(e)), b.row(x.col_of(e)));
    s.add(r * r);
  }
  return 0.5 * s.value();
}

double training_loss(const ObservedMatrix& x, const FactorPair& f) {
  f.check_shapes();
  if (f.rows() != x.rows() || f.cols() != x.cols()) {
    throw DimensionMismatch("factor pair does not match the observed matrix");
  }
  CompensatedSum s;
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    const double r = x.value(e) - f.at(x.row_of(e), x.col_of(e));
    s.add(r * r);
  }
  return 0.5 * s.value();
}

double objective_F(const ObservedMatrix& x, const DenseMatrix& a, const DenseMatrix& b,
                   double lambda) {
  CompensatedSum s;
  s.add(training_loss(x, a, b));
  s.add(0.5 * lambda * frobenius_norm_sq(a));
  s.add(0.5 * lambda * frobenius_norm_sq(b));
  return s.value();
}

double objective_H(const ObservedMatrix& x, const FactorPair& f, double lambda) {
  CompensatedSum s;
  s.add(training_loss(x, f));
  s.add(lambda * f.nuclear_norm());
  return s.value();
}

double surrogate_Q(const DenseMatrix& z, const DenseMatrix& a, const DenseMatrix& b,
                   const ObservedMatrix& x, double lambda, Side side) {
  check_factors(x, a, b);
  if (x.rows() * x.cols() > 250000) {
    throw ValidationError("surrogate_Q is a dense check limited to m * n <= 250000");
  }
  const DenseMatrix& fixed = side == Side::a ? b : a;
  const DenseMatrix& moving = side == Side::a ? a : b;
  if (z.rows() != moving.rows() || z.cols() != moving.cols()) {
    throw DimensionMismatch("surrogate_Q: Z must have the shape of the factor it replaces");
  }
  DenseMatrix xstar = multiply_nt(a, b);
  for (std::size_t e = 0; e < x.nnz(); ++e) xstar(x.row_of(e), x.col_of(e)) = x.value(e);
  const DenseMatrix fit = side == Side::a ? multiply_nt(z, fixed) : multiply_nt(fixed, z);
  CompensatedSum s;
  s.add(0.5 * frobenius_norm_sq(xstar - fit));
  s.add(0.5 * lambda * frobenius_norm_sq(z));
  s.add(0.5 * lambda * frobenius_norm_sq(fixed));
  return s.value();
}

double eta(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& a_next,
           const DenseMatrix& b_next, double lambda) {
  const DenseMatrix da = a - a_next;
  const DenseMatrix db = b - b_next;
  CompensatedSum s;
  s.add(0.5 * trace_product(multiply_tn(da, da), multiply_tn(b, b)));
  s.add(0.5 * trace_product(multiply_tn(a_next, a_next), multiply_tn(db, db)));
  s.add(0.5 * lambda * frobenius_norm_sq(da));
  s.add(0.5 * lambda * frobenius_norm_sq(db));
  return s.value();
}

DenseMatrix ridge_solve(const DenseMatrix& design, const DenseMatrix& response, double lambda) {
  if (design.rows() != response.rows()) {
    throw DimensionMismatch("ridge_solve: design and response have different row counts");
  }
  DenseMatrix gram = multiply_tn(design, design);
  for (std::size_t k = 0; k < gram.rows(); ++k) gram(k, k) += lambda;
  const Cholesky chol(gram);
  DenseMatrix rhs = multiply_tn(design, response);
  DenseMatrix out(rhs.rows(), rhs.cols());
  for (std::size_t c = 0; c < rhs.cols(); ++c) {
    std::vector<double> col = rhs.column(c);
    chol.solve_in_place(col);
    out.set_column(c, col);
  }
  return out;
}

RidgeGap ridge_gap(const DenseMatrix& design, const DenseMatrix& response, double lambda,
                   const DenseMatrix& beta, const DenseMatrix& beta_star) {
  auto objective = [&](const DenseMatrix& b) {
    CompensatedSum s;
    s.add(0.5 * frobenius_norm_sq(response - multiply(design, b)));
    s.add(0.5 * lambda * frobenius_norm_sq(b));
    return s.value();
  };
  const DenseMatrix diff = beta - beta_star;
  RidgeGap gap;
  gap.direct = objective(beta) - objective(beta_star);
  gap.identity = 0.5 * frobenius_norm_sq(multiply(design, diff)) +
                 0.5 * lambda * frobenius_norm_sq(diff);
  return gap;
}

Gradient gradient_F(const ObservedMatrix& x, const DenseMatrix& a, const DenseMatrix& b,
                    double lambda) {
  const std::vector<double> r = fit_residual(x, a, b);
  Gradient g{a, b};
  g.da *= lambda;
  g.db *= lambda;
  const std::size_t k = a.cols();
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    const std::size_t i = x.row_of(e);
    const std::size_t j = x.col_of(e);
    auto gai = g.da.row(i);
    auto gbj = g.db.row(j);
    auto ai = a.row(i);
    auto bj = b.row(j);
    for (std::size_t c = 0; c < k; ++c) {
      gai[c] += r[e] * bj[c];
      gbj[c] += r[e] * ai[c];
    }
  }
  return g;
}

double model_nuclear_norm(const FactorPair& f) {
  f.check_shapes();
  if (f.rank() == 0) return 0.0;
  DenseMatrix vd = f.v;
  scale_columns(vd, f.d);
  CompensatedSum s;
  for (double x : svd_small(vd).s) s.add(x);
  return s.value();
}

}  // namespace softals
