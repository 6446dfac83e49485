#include "softals/splr.hpp"

#include <string>

#include "softals/errors.hpp"

namespace softals {

SplrMatrix::SplrMatrix(ObservedMatrix sparse, DenseMatrix left, DenseMatrix right)
    : sparse_(std::move(sparse)), left_(std::move(left)), right_(std::move(right)) {
  if (left_.cols() != right_.cols()) {
    throw DimensionMismatch("SplrMatrix: left and right factors have different ranks");
  }
  if (left_.rows() != sparse_.rows() || right_.rows() != sparse_.cols()) {
    throw DimensionMismatch("SplrMatrix: factor rows do not match the sparse part");
  }
}

SplrMatrix SplrMatrix::sparse_only(ObservedMatrix sparse) {
  const std::size_t m = sparse.rows();
  const std::size_t n = sparse.cols();
  return SplrMatrix(std::move(sparse), DenseMatrix(m, 0), DenseMatrix(n, 0));
}

double SplrMatrix::at(std::size_t i, std::size_t j) const {
  double s = 0.0;
  const std::size_t e = sparse_.pattern().find(i, j);
  if (e < sparse_.nnz()) s = sparse_.value(e);
  auto l = left_.row(i);
  auto r = right_.row(j);
  for (std::size_t k = 0; k < l.size(); ++k) s += l[k] * r[k];
  return s;
}

DenseMatrix SplrMatrix::to_dense() const {
  DenseMatrix out = multiply_nt(left_, right_);
  for (std::size_t e = 0; e < sparse_.nnz(); ++e) {
    out(sparse_.row_of(e), sparse_.col_of(e)) += sparse_.value(e);
  }
  return out;
}

std::vector<double> project_omega(const std::function<double(std::size_t, std::size_t)>& probe,
                                  const ObservedMatrix& target) {
  std::vector<double> out(target.nnz());
  for (std::size_t e = 0; e < target.nnz(); ++e) out[e] = probe(target.row_of(e), target.col_of(e));
  return out;
}

std::vector<double> project_low_rank(const SparsityPattern& pattern, const DenseMatrix& left,
                                     const DenseMatrix& right, FlopCounter* counter) {
  if (left.rows() != pattern.rows() || right.rows() != pattern.cols() ||
      left.cols() != right.cols()) {
    throw DimensionMismatch("project_low_rank: factor shapes do not match the pattern");
  }
  std::vector<double> out(pattern.nnz());
  for (std::size_t e = 0; e < pattern.nnz(); ++e) {
    auto l = left.row(pattern.row_of(e));
    auto r = right.row(pattern.col_of(e));
    double s = 0.0;
    for (std::size_t k = 0; k < l.size(); ++k) s += l[k] * r[k];
    out[e] = s;
  }
  count(counter, static_cast<std::uint64_t>(pattern.nnz()) * left.cols());
  return out;
}

SplrMatrix splr_from_residual(const ObservedMatrix& x, const DenseMatrix& a, const DenseMatrix& b,
                              FlopCounter* counter) {
  if (a.rows() != x.rows() || b.rows() != x.cols() || a.cols() != b.cols()) {
    throw DimensionMismatch("splr_from_residual: factors are " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()) + " for a " + std::to_string(x.rows()) +
                            "x" + std::to_string(x.cols()) + " matrix");
  }
  std::vector<double> fit = project_low_rank(x.pattern(), a, b, counter);
  for (std::size_t e = 0; e < fit.size(); ++e) fit[e] = x.value(e) - fit[e];
  return SplrMatrix(x.with_values(std::move(fit)), a, b);
}

namespace {

void check_rows(std::size_t expected, const DenseMatrix& w, const char* what) {
  if (w.rows() != expected) {
    throw DimensionMismatch(std::string(what) + ": W has " + std::to_string(w.rows()) +
                            " rows, expected " + std::to_string(expected));
  }
}

// out[i, :] += left[i, :] * t for rows in [begin, end); t = right^T W (r x k).
void add_low_rank_rows(DenseMatrix& out, const DenseMatrix& left, const DenseMatrix& t,
                       std::size_t begin, std::size_t end) {
  const std::size_t r = left.cols();
  const std::size_t k = t.cols();
  for (std::size_t i = begin; i < end; ++i) {
    auto orow = out.row(i);
    auto lrow = left.row(i);
    for (std::size_t q = 0; q < r; ++q) {
      const double l = lrow[q];
      auto trow = t.row(q);
      for (std::size_t c = 0; c < k; ++c) orow[c] += l * trow[c];
    }
  }
}

}  // namespace

DenseMatrix splr_right_multiply(const SplrMatrix& x, const DenseMatrix& w,
                                const ParallelOptions& par, FlopCounter* counter) {
  check_rows(x.cols(), w, "splr_right_multiply");
  const std::size_t k = w.cols();
  const ObservedMatrix& s = x.sparse_part();
  const SparsityPattern& pat = s.pattern();
  DenseMatrix out(x.rows(), k);
  const DenseMatrix t = multiply_tn(x.right(), w, counter);
  parallel_blocks(x.rows(), par.resolved_threads(), [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t i = begin; i < end; ++i) {
      auto orow = out.row(i);
      const std::size_t first = pat.row_begin(i);
      const std::size_t last = first + pat.row_count(i);
      for (std::size_t e = first; e < last; ++e) {
        const double v = s.value(e);
        auto wrow = w.row(pat.col_of(e));
        for (std::size_t c = 0; c < k; ++c) orow[c] += v * wrow[c];
      }
    }
    add_low_rank_rows(out, x.left(), t, begin, end);
  });
  count(counter, static_cast<std::uint64_t>(s.nnz()) * k +
                     static_cast<std::uint64_t>(x.rows()) * x.rank() * k);
  return out;
}

DenseMatrix splr_left_multiply(const SplrMatrix& x, const DenseMatrix& w,
                               const ParallelOptions& par, FlopCounter* counter) {
  check_rows(x.rows(), w, "splr_left_multiply");
  const std::size_t k = w.cols();
  const std::size_t n = x.cols();
  const ObservedMatrix& s = x.sparse_part();
  const SparsityPattern& pat = s.pattern();
  DenseMatrix out(n, k);
  const DenseMatrix t = multiply_tn(x.left(), w, counter);
  const unsigned blocks = par.resolved_threads();

  if (par.deterministic || blocks == 1) {
    parallel_blocks(n, blocks, [&](std::size_t begin, std::size_t end, unsigned) {
      for (std::size_t j = begin; j < end; ++j) {
        auto orow = out.row(j);
        for (std::size_t e : pat.col_entries(j)) {
          const double v = s.value(e);
          auto wrow = w.row(pat.row_of(e));
          for (std::size_t c = 0; c < k; ++c) orow[c] += v * wrow[c];
        }
      }
      add_low_rank_rows(out, x.right(), t, begin, end);
    });
  } else {
    std::vector<DenseMatrix> partial(blocks);
    parallel_blocks(x.rows(), blocks, [&](std::size_t begin, std::size_t end, unsigned b) {
      DenseMatrix acc(n, k);
      for (std::size_t i = begin; i < end; ++i) {
        auto wrow = w.row(i);
        const std::size_t first = pat.row_begin(i);
        const std::size_t last = first + pat.row_count(i);
        for (std::size_t e = first; e < last; ++e) {
          const double v = s.value(e);
          auto arow = acc.row(pat.col_of(e));
          for (std::size_t c = 0; c < k; ++c) arow[c] += v * wrow[c];
        }
      }
      partial[b] = std::move(acc);
    });
    for (const auto& p : partial) {
      if (!p.empty()) out += p;
    }
    add_low_rank_rows(out, x.right(), t, 0, n);
  }
  count(counter, static_cast<std::uint64_t>(s.nnz()) * k +
                     static_cast<std::uint64_t>(n) * x.rank() * k);
  return out;
}

DenseMatrix DenseOperator::multiply(const DenseMatrix& w, FlopCounter* counter) const {
  return softals::multiply(x_, w, counter);
}

DenseMatrix DenseOperator::multiply_transpose(const DenseMatrix& w, FlopCounter* counter) const {
  return multiply_tn(x_, w, counter);
}

DenseMatrix SplrOperator::multiply(const DenseMatrix& w, FlopCounter* counter) const {
  return splr_right_multiply(x_, w, par_, counter);
}

DenseMatrix SplrOperator::multiply_transpose(const DenseMatrix& w, FlopCounter* counter) const {
  return splr_left_multiply(x_, w, par_, counter);
}

}  // namespace softals
