#pragma once

// Files in and out: observed matrices (MatrixMarket coordinate or delimited
// triplets), simulated instances, model directories, traces, predictions.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "softals/completion.hpp"
#include "softals/factors.hpp"
#include "softals/observed.hpp"
#include "softals/scaling.hpp"
#include "softals/trace.hpp"

namespace softals {

enum class InputFormat { matrixmarket, csv };

/// "mm" / "matrixmarket" / "csv"; "auto" picks by extension (.mtx -> mm).
InputFormat parse_format(const std::string& name, const std::filesystem::path& path = {});

/// MatrixMarket "coordinate real|integer general", 1-based, bounds from the
/// size line. Triplets: "row col value [ignored...]" separated by commas,
/// tabs or spaces, 1-based, one optional header line; dimensions are the
/// largest indices unless given. Errors carry 1-based line and column;
/// a repeated cell is a DuplicateEntry whose positions are the two lines.
ObservedMatrix read_observed(std::istream& in, InputFormat format,
                             std::optional<std::size_t> rows = {},
                             std::optional<std::size_t> cols = {});
ObservedMatrix load_observed(const std::filesystem::path& path, InputFormat format,
                             std::optional<std::size_t> rows = {},
                             std::optional<std::size_t> cols = {});

/// Cells to predict: "row col [value]" per line, 1-based, one optional
/// header line. `has_values` reports whether every line carried a value.
std::vector<Entry> read_cells(std::istream& in, bool& has_values);

/// MatrixMarket coordinate real general, 1-based, values at 17 digits.
void write_matrixmarket(std::ostream& out, const ObservedMatrix& x);

struct SimulatedInstance {
  ObservedMatrix observed;
  std::vector<Entry> held_out;  // the masked cells with their values
};

/// X = G H^T + noise_sd * E with standard Gaussian G (m x rank), H (n x rank)
/// and E; exactly round(missing_frac * m * n) cells, drawn uniformly, are
/// held out.
SimulatedInstance simulate_instance(std::size_t m, std::size_t n, std::size_t rank,
                                    double missing_frac, double noise_sd, std::uint64_t seed);

struct ModelBundle {
  static constexpr int kFormatVersion = 1;
  std::string algorithm;
  double lambda = 0.0;
  double lambda_max = 0.0;
  std::uint64_t seed = 0;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  FactorPair factors;
  std::optional<ScalingParams> scaling;

  /// Prediction at (i, j), on the original scale when scaling is present.
  double predict(std::size_t i, std::size_t j) const;
};

ModelBundle make_bundle(const FitResult& fit, std::uint64_t seed,
                        std::optional<ScalingParams> scaling = {});

/// Writes meta.txt, U.csv, d.csv, V.csv and (when present) scaling.csv.
void save_model(const std::filesystem::path& dir, const ModelBundle& model);
/// Validates payload shapes against meta.txt.
ModelBundle load_model(const std::filesystem::path& dir);

void write_scaling(std::ostream& out, const ScalingParams& p);
ScalingParams read_scaling(std::istream& in);

/// Header "iter,seconds,F,H,frob_delta,eta,rank,flops", then one row per
/// trace row. `extra` appends one more named column holding a fixed label.
void write_trace(std::ostream& out, const IterTrace& trace, bool header = true,
                 const std::string& extra_name = {}, const std::string& extra_value = {});

/// "row,col,prediction" rows, 1-based.
void write_predictions(std::ostream& out, const ModelBundle& model,
                       const std::vector<Entry>& cells);

/// Root mean squared error of the model over the probe cells' values.
double rmse(const ModelBundle& model, const std::vector<Entry>& probe);

/// %.17g
std::string format_double(double v);

}  // namespace softals
