#pragma once

// Objective values and the quantities of the majorization analysis. All
// evaluations touch only the observed entries, except surrogate_Q which is a
// dense test-scale check.

#include "softals/dense.hpp"
#include "softals/factors.hpp"
#include "softals/observed.hpp"

namespace softals {

/// 1/2 ||P_Omega(X - A B^T)||_F^2
double training_loss(const ObservedMatrix& x, const DenseMatrix& a, const DenseMatrix& b);
double training_loss(const ObservedMatrix& x, const FactorPair& f);

/// F(A, B) = 1/2 ||P_Omega(X - A B^T)||_F^2 + lambda/2 (||A||_F^2 + ||B||_F^2)
double objective_F(const ObservedMatrix& x, const DenseMatrix& a, const DenseMatrix& b,
                   double lambda);

/// H(M) = 1/2 ||P_Omega(X - M)||_F^2 + lambda sum(d) for M = U diag(d) V^T.
double objective_H(const ObservedMatrix& x, const FactorPair& f, double lambda);

enum class Side { a, b };

/// Q_A(Z | A, B) = 1/2 ||X*_{A,B} - Z B^T||^2 + lambda/2 (||Z||^2 + ||B||^2) and
/// the mirror Q_B(Z | A, B). Dense; refuses m * n > 250000.
double surrogate_Q(const DenseMatrix& z, const DenseMatrix& a, const DenseMatrix& b,
                   const ObservedMatrix& x, double lambda, Side side);

/// Delta((A, B), (A+, B+)) = 1/2 (||(A - A+) B^T||^2 + ||A+ (B - B+)^T||^2)
///                         + lambda/2 (||A - A+||^2 + ||B - B+||^2)
/// via r x r Gram matrices.
double eta(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& a_next,
           const DenseMatrix& b_next, double lambda);

struct RidgeGap {
  double direct = 0.0;    // G(beta) - G(beta*)
  double identity = 0.0;  // 1/2 ||M (beta - beta*)||^2 + lambda/2 ||beta - beta*||^2
  double difference() const noexcept { return direct - identity; }
};

/// For G(beta) = 1/2 ||y - M beta||^2 + lambda/2 ||beta||^2 with minimizer
/// beta_star, evaluates both sides of the gap identity independently.
RidgeGap ridge_gap(const DenseMatrix& design, const DenseMatrix& response, double lambda,
                   const DenseMatrix& beta, const DenseMatrix& beta_star);

/// Exact ridge minimizer (M^T M + lambda I)^{-1} M^T y.
DenseMatrix ridge_solve(const DenseMatrix& design, const DenseMatrix& response, double lambda);

struct Gradient {
  DenseMatrix da;  // P_Omega(A B^T - X) B + lambda A
  DenseMatrix db;  // P_Omega(A B^T - X)^T A + lambda B
};

Gradient gradient_F(const ObservedMatrix& x, const DenseMatrix& a, const DenseMatrix& b,
                    double lambda);

/// Residual values P_Omega(A B^T - X), aligned with x's entries.
std::vector<double> fit_residual(const ObservedMatrix& x, const DenseMatrix& a,
                                 const DenseMatrix& b);

/// sum of singular values of U diag(d) V^T, exact for any U with orthonormal
/// columns (V arbitrary).
double model_nuclear_norm(const FactorPair& f);

}  // namespace softals
