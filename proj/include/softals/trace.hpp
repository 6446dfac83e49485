#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace softals {

/// One row of a convergence trace. Row 0 describes the starting point.
struct TraceRow {
  std::size_t iter = 0;
  double seconds = 0.0;     // cumulative solver time, excluding diagnostics
  double f = 0.0;           // biconvex objective F(A, B)
  double h = 0.0;           // convex objective H(A B^T)
  double frob_delta = 0.0;  // relative squared change of the model
  double eta = 0.0;         // proximity measure of the step into this row
  std::size_t rank = 0;
  std::uint64_t flops = 0;  // cumulative multiply-adds
};

using IterTrace = std::vector<TraceRow>;

/// Accumulates solver time across resume/pause pairs so that diagnostic
/// evaluations between them are not billed to the algorithm.
class Stopwatch {
 public:
  void resume() { start_ = std::chrono::steady_clock::now(); }
  void pause() {
    total_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  double seconds() const noexcept { return total_; }

 private:
  std::chrono::steady_clock::time_point start_{};
  double total_ = 0.0;
};

}  // namespace softals
