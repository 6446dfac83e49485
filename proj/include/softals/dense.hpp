#pragma once

// Small and skinny dense linear algebra: the row-major matrix type used
// for factors, plus the handful of kernels the solvers need (ridge
// shrinkage, Gram-Schmidt QR, one-sided Jacobi SVD, Cholesky).

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace softals {

/// Counts multiply-add operations. A fused a += b*c counts as one.
struct FlopCounter {
  std::uint64_t ops = 0;
  void add(std::uint64_t n) noexcept { ops += n; }
};

inline void count(FlopCounter* counter, std::uint64_t n) noexcept {
  if (counter != nullptr) counter->add(n);
}

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  std::vector<double> column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> values);

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double s) noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

DenseMatrix transpose(const DenseMatrix& a);

/// a * b
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b, FlopCounter* counter = nullptr);
/// a^T * b
DenseMatrix multiply_tn(const DenseMatrix& a, const DenseMatrix& b,
                        FlopCounter* counter = nullptr);
/// a * b^T
DenseMatrix multiply_nt(const DenseMatrix& a, const DenseMatrix& b,
                        FlopCounter* counter = nullptr);

/// Multiplies column k by s[k] in place.
void scale_columns(DenseMatrix& a, std::span<const double> s);
DenseMatrix column_block(const DenseMatrix& a, std::size_t first, std::size_t count);

double frobenius_norm_sq(const DenseMatrix& a);
double frobenius_norm(const DenseMatrix& a);
/// max |a_ij|, 0 for an empty matrix.
double max_abs(const DenseMatrix& a);
/// ||Q^T Q - I||_max
double orthonormality_error(const DenseMatrix& q);
bool all_finite(const DenseMatrix& a);

/// Error-compensated (Neumaier) summation.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

/// Elementwise (d_i - lambda)_+. Throws std::invalid_argument for lambda < 0.
std::vector<double> soft_threshold(std::span<const double> d, double lambda);

/// Multiresponse ridge solve with an orthonormal design U D:
/// given the projection U^T X (r x n), returns (D^2 + lambda I)^{-1} D U^T X,
/// i.e. row k scaled by d_k / (d_k^2 + lambda). Throws when lambda == 0 and
/// some d_k == 0, or lambda < 0.
DenseMatrix ridge_apply(const DenseMatrix& projected, std::span<const double> d, double lambda);

/// U diag(s) V^T factorization of a p x q matrix.
struct SmallSvd {
  DenseMatrix u;          // p x q, orthonormal columns
  std::vector<double> s;  // q values, nonincreasing
  DenseMatrix v;          // q x q, orthogonal
  int sweeps = 0;
};

/// One-sided (Hestenes) Jacobi SVD for q <= p. Singular vectors are sign-fixed
/// so the largest-magnitude entry of every U column is positive; columns of U
/// for zero singular values complete an orthonormal basis.
SmallSvd svd_skinny(const DenseMatrix& m, FlopCounter* counter = nullptr);

/// Any shape; wide inputs are handled through the transpose. U is p x k,
/// V is q x k with k = min(p, q).
SmallSvd svd_small(const DenseMatrix& m, FlopCounter* counter = nullptr);

struct QrResult {
  DenseMatrix q;                // p x q, orthonormal columns
  DenseMatrix r;                // q x q upper triangular
  std::vector<bool> completed;  // columns replaced to complete the basis
};

/// Gram-Schmidt with reorthogonalization. A column whose norm after
/// projection is <= 1e-12 * (norm before + 1) is treated as dependent: its
/// R diagonal is 0 and Q gets an arbitrary orthonormal completion column.
QrResult orthonormalize(const DenseMatrix& m, FlopCounter* counter = nullptr);

/// Dense Cholesky of a small SPD matrix.
class Cholesky {
 public:
  /// Throws std::domain_error if `spd` is not numerically positive definite.
  explicit Cholesky(const DenseMatrix& spd, FlopCounter* counter = nullptr);
  /// Solves (L L^T) x = b in place.
  void solve_in_place(std::span<double> b, FlopCounter* counter = nullptr) const;
  std::size_t size() const noexcept { return l_.rows(); }

 private:
  DenseMatrix l_;
};

}  // namespace softals
