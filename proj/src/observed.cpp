#include "softals/observed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "softals/dense.hpp"
#include "softals/errors.hpp"

namespace softals {

SparsityPattern::SparsityPattern(std::size_t m, std::size_t n, std::vector<std::size_t> rows_of,
                                 std::vector<std::size_t> cols_of)
    : m_(m), n_(n), row_of_(std::move(rows_of)), col_of_(std::move(cols_of)) {
  const std::size_t nnz = col_of_.size();
  row_ptr_.assign(m_ + 1, 0);
  col_ptr_.assign(n_ + 1, 0);
  for (std::size_t e = 0; e < nnz; ++e) {
    ++row_ptr_[row_of_[e] + 1];
    ++col_ptr_[col_of_[e] + 1];
  }
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  std::partial_sum(col_ptr_.begin(), col_ptr_.end(), col_ptr_.begin());
  // Entries are row-major, so filling columns in entry order keeps each
  // column's positions sorted by row.
  col_pos_.resize(nnz);
  std::vector<std::size_t> next(col_ptr_.begin(), col_ptr_.end() - 1);
  for (std::size_t e = 0; e < nnz; ++e) col_pos_[next[col_of_[e]]++] = e;
}

std::size_t SparsityPattern::find(std::size_t i, std::size_t j) const noexcept {
  if (i >= m_) return nnz();
  const auto first = col_of_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = col_of_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return nnz();
  return static_cast<std::size_t>(it - col_of_.begin());
}

ObservedMatrix ObservedMatrix::from_entries(std::size_t m, std::size_t n,
                                            std::span<const Entry> entries) {
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Entry& e = entries[k];
    if (e.row >= m || e.col >= n) {
      throw DimensionMismatch("entry " + std::to_string(k) + " at (" + std::to_string(e.row) +
                              ", " + std::to_string(e.col) + ") lies outside the " +
                              std::to_string(m) + " x " + std::to_string(n) + " matrix");
    }
    if (!std::isfinite(e.value)) {
      throw ValidationError("entry " + std::to_string(k) + " has a non-finite value");
    }
  }
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (entries[a].row != entries[b].row) return entries[a].row < entries[b].row;
    return entries[a].col < entries[b].col;
  });
  std::vector<std::size_t> rows(order.size());
  std::vector<std::size_t> cols(order.size());
  std::vector<double> values(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Entry& e = entries[order[k]];
    if (k > 0) {
      const Entry& prev = entries[order[k - 1]];
      if (prev.row == e.row && prev.col == e.col) {
        throw DuplicateEntry(order[k - 1], order[k],
                             "duplicate entry (" + std::to_string(e.row) + ", " +
                                 std::to_string(e.col) + ") at input positions " +
                                 std::to_string(order[k - 1]) + " and " +
                                 std::to_string(order[k]));
      }
    }
    rows[k] = e.row;
    cols[k] = e.col;
    values[k] = e.value;
  }
  auto pattern = std::make_shared<const SparsityPattern>(m, n, std::move(rows), std::move(cols));
  return ObservedMatrix(std::move(pattern), std::move(values));
}

ObservedMatrix ObservedMatrix::with_values(std::vector<double> values) const {
  if (values.size() != nnz()) {
    throw DimensionMismatch("with_values: expected " + std::to_string(nnz()) + " values");
  }
  return ObservedMatrix(pattern_, std::move(values));
}

bool ObservedMatrix::same_pattern(const ObservedMatrix& other) const noexcept {
  if (pattern_ == other.pattern_) return true;
  if (!pattern_ || !other.pattern_) return false;
  if (rows() != other.rows() || cols() != other.cols() || nnz() != other.nnz()) return false;
  for (std::size_t e = 0; e < nnz(); ++e) {
    if (row_of(e) != other.row_of(e) || col_of(e) != other.col_of(e)) return false;
  }
  return true;
}

std::vector<Entry> ObservedMatrix::entries() const {
  std::vector<Entry> out(nnz());
  for (std::size_t e = 0; e < nnz(); ++e) out[e] = {row_of(e), col_of(e), values_[e]};
  return out;
}

double ObservedMatrix::norm_sq() const {
  CompensatedSum s;
  for (double v : values_) s.add(v * v);
  return s.value();
}

double ObservedMatrix::observed_fraction() const {
  const double cells = static_cast<double>(rows()) * static_cast<double>(cols());
  return cells > 0 ? static_cast<double>(nnz()) / cells : 0.0;
}

}  // namespace softals
