#pragma once

// Incomplete matrices: the observed index set Omega, stored once in
// row-major entry order with a column index that points back into it.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace softals {

struct Entry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

class SparsityPattern {
 public:
  /// `rows_of`/`cols_of` must already be sorted row-major without duplicates.
  SparsityPattern(std::size_t m, std::size_t n, std::vector<std::size_t> rows_of,
                  std::vector<std::size_t> cols_of);

  std::size_t rows() const noexcept { return m_; }
  std::size_t cols() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return col_of_.size(); }

  std::size_t row_of(std::size_t e) const noexcept { return row_of_[e]; }
  std::size_t col_of(std::size_t e) const noexcept { return col_of_[e]; }

  /// Entries of row i are positions [row_begin(i), row_begin(i + 1)).
  std::size_t row_begin(std::size_t i) const noexcept { return row_ptr_[i]; }
  std::size_t row_count(std::size_t i) const noexcept { return row_ptr_[i + 1] - row_ptr_[i]; }

  /// Entry positions of column j, in increasing row order.
  std::span<const std::size_t> col_entries(std::size_t j) const noexcept {
    return {col_pos_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }
  std::size_t col_count(std::size_t j) const noexcept { return col_ptr_[j + 1] - col_ptr_[j]; }

  /// Position of (i, j), or nnz() when unobserved.
  std::size_t find(std::size_t i, std::size_t j) const noexcept;

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<std::size_t> row_of_;
  std::vector<std::size_t> col_of_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::size_t> col_pos_;
};

/// X restricted to Omega. Immutable; copies share the pattern.
class ObservedMatrix {
 public:
  ObservedMatrix() = default;

  /// Validates bounds, finiteness and uniqueness. Throws DimensionMismatch for
  /// an index outside m x n, ValidationError for a non-finite value and
  /// DuplicateEntry (with both input positions) for a repeated cell.
  static ObservedMatrix from_entries(std::size_t m, std::size_t n, std::span<const Entry> entries);

  /// Same pattern, new values (aligned with entry order).
  ObservedMatrix with_values(std::vector<double> values) const;

  std::size_t rows() const noexcept { return pattern_ ? pattern_->rows() : 0; }
  std::size_t cols() const noexcept { return pattern_ ? pattern_->cols() : 0; }
  std::size_t nnz() const noexcept { return values_.size(); }

  const SparsityPattern& pattern() const noexcept { return *pattern_; }
  std::shared_ptr<const SparsityPattern> shared_pattern() const noexcept { return pattern_; }
  bool same_pattern(const ObservedMatrix& other) const noexcept;

  std::span<const double> values() const noexcept { return values_; }
  double value(std::size_t e) const noexcept { return values_[e]; }
  std::size_t row_of(std::size_t e) const noexcept { return pattern_->row_of(e); }
  std::size_t col_of(std::size_t e) const noexcept { return pattern_->col_of(e); }

  std::vector<Entry> entries() const;
  /// ||P_Omega(X)||_F^2
  double norm_sq() const;
  double observed_fraction() const;

 private:
  ObservedMatrix(std::shared_ptr<const SparsityPattern> pattern, std::vector<double> values)
      : pattern_(std::move(pattern)), values_(std::move(values)) {}

  std::shared_ptr<const SparsityPattern> pattern_;
  std::vector<double> values_;
};

}  // namespace softals
