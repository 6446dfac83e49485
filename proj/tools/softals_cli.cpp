// softals: matrix completion by softImpute-ALS, ALS and softImpute.
//
// Exit codes: 0 success, 1 certificate FAIL or unexpected error,
// 2 invalid input or flags, 3 a result flagged as not converged.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "softals/completion.hpp"
#include "softals/diagnostics.hpp"
#include "softals/errors.hpp"
#include "softals/io.hpp"
#include "softals/objectives.hpp"
#include "softals/scaling.hpp"
#include "softals/soft_svd.hpp"

namespace fs = std::filesystem;
using namespace softals;

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kInvalid = 2;
constexpr int kNotConverged = 3;

struct InputOpts {
  std::string path;
  std::string format = "auto";

  ObservedMatrix load() const {
    if (path.empty()) throw ValidationError("--input is required");
    return load_observed(path, parse_format(format, path));
  }
};

struct SolverOpts {
  std::string algorithm = "softimpute_als";
  std::size_t rank = 10;
  double lambda = 1.0;
  double tol = 1e-5;
  int max_iter = 300;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool deterministic = false;
  bool timing = false;
  int trace_every = 1;
  std::string center = "none";
  std::string scale = "none";

  FitConfig config() const {
    FitConfig c;
    c.algorithm = parse_algorithm(algorithm);
    c.rank = rank;
    c.lambda = lambda;
    c.tol = tol;
    c.max_iter = max_iter;
    c.seed = seed;
    c.trace_every = trace_every;
    c.parallel.threads = threads;
    c.parallel.deterministic = deterministic;
    return c;
  }
};

void add_input(CLI::App* cmd, InputOpts& in) {
  cmd->add_option("--input", in.path, "Observed entries (MatrixMarket or row,col,value triplets)");
  cmd->add_option("--format", in.format, "auto | mm | csv")->capture_default_str();
}

void add_solver(CLI::App* cmd, SolverOpts& s, bool with_algorithm) {
  if (with_algorithm) {
    cmd->add_option("--algorithm", s.algorithm, "softimpute_als | als | softimpute")
        ->capture_default_str();
  }
  cmd->add_option("--rank", s.rank, "Operating rank")->capture_default_str();
  cmd->add_option("--tol", s.tol, "Relative squared change of the model that stops the solver")
      ->capture_default_str();
  cmd->add_option("--max-iter", s.max_iter, "Iteration limit")->capture_default_str();
  cmd->add_option("--seed", s.seed, "Seed of the random starting basis")->capture_default_str();
  cmd->add_option("--threads", s.threads, "Worker threads for the sparse multiplies (0 = auto)")
      ->capture_default_str();
  cmd->add_flag("--deterministic", s.deterministic,
                "Fixed reduction order: results do not depend on --threads");
  cmd->add_flag("--timing", s.timing,
                "Record solver seconds in the trace (otherwise 0, so files are reproducible)");
  cmd->add_option("--trace-every", s.trace_every, "Iterations between trace rows")
      ->capture_default_str();
  cmd->add_option("--center", s.center, "rows | cols | both | none")->capture_default_str();
  cmd->add_option("--scale", s.scale, "rows | cols | both | none")->capture_default_str();
}

void strip_time(IterTrace& t, bool timing) {
  if (timing) return;
  for (TraceRow& r : t) r.seconds = 0.0;
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) return;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  body(out);
}

struct Prepared {
  ObservedMatrix x;
  std::optional<ScalingParams> scaling;
  bool scaling_converged = true;
};

Prepared prepare(const ObservedMatrix& raw, const SolverOpts& s) {
  const ScalingFlags flags = ScalingFlags::parse(s.center, s.scale);
  if (!flags.any()) return {raw, std::nullopt, true};
  const ScalingFit sf = fit_scaling(raw, flags);
  return {apply_scaling(raw, sf.params), sf.params, sf.report.converged};
}

void print_fit(const FitResult& r) {
  std::cout << "algorithm = " << to_string(r.algorithm) << '\n'
            << "lambda = " << format_double(r.lambda) << '\n'
            << "lambda_max = " << format_double(r.lambda_max) << '\n'
            << "iterations = " << r.iterations << '\n'
            << "converged = " << (r.converged ? "true" : "false") << '\n'
            << "rank = " << compact(r.factors).rank() << '\n'
            << "objective = " << format_double(r.final_objective) << '\n';
}

// ---------------------------------------------------------------------------

int run_fit(const InputOpts& in, const SolverOpts& s, const std::string& out,
            const std::string& trace) {
  if (out.empty()) throw ValidationError("--out is required");
  const Prepared p = prepare(in.load(), s);
  FitConfig cfg = s.config();
  FitResult r = fit(p.x, cfg);
  strip_time(r.trace, s.timing);
  save_model(out, make_bundle(r, s.seed, p.scaling));
  write_file(trace, [&](std::ostream& os) { write_trace(os, r.trace); });
  print_fit(r);
  return r.converged && p.scaling_converged ? kOk : kNotConverged;
}

int run_path(const InputOpts& in, const SolverOpts& s, const std::string& lambdas,
             std::size_t n_lambdas, std::size_t increment, const std::string& out,
             const std::string& trace) {
  if (out.empty()) throw ValidationError("--out is required");
  const Prepared p = prepare(in.load(), s);
  PathConfig pc;
  pc.base = s.config();
  pc.count = n_lambdas;
  pc.rank_increment = increment;
  if (!lambdas.empty()) {
    std::stringstream ss(lambdas);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        pc.lambdas.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ValidationError("--lambdas: '" + item + "' is not a number");
      }
    }
  }
  PathResult path = fit_path(p.x, pc);

  fs::create_directories(out);
  bool all_converged = p.scaling_converged;
  {
    std::ofstream sum(fs::path(out) / "path.csv");
    sum << "fit,lambda,rank,iterations,converged,objective\n";
    for (std::size_t k = 0; k < path.fits.size(); ++k) {
      FitResult& r = path.fits[k];
      strip_time(r.trace, s.timing);
      all_converged = all_converged && r.converged;
      sum << k << ',' << format_double(r.lambda) << ',' << compact(r.factors).rank() << ','
          << r.iterations << ',' << (r.converged ? 1 : 0) << ','
          << format_double(r.final_objective) << '\n';
      char name[32];
      std::snprintf(name, sizeof name, "fit_%02zu", k);
      save_model(fs::path(out) / name, make_bundle(r, s.seed, p.scaling));
    }
  }
  write_file(trace, [&](std::ostream& os) {
    for (std::size_t k = 0; k < path.fits.size(); ++k) {
      write_trace(os, path.fits[k].trace, k == 0, "fit", std::to_string(k));
    }
  });
  std::cout << "lambda_max = " << format_double(path.lambda_max) << '\n'
            << "fits = " << path.fits.size() << '\n';
  for (std::size_t k = 0; k < path.fits.size(); ++k) {
    const FitResult& r = path.fits[k];
    std::cout << "fit " << k << ": lambda = " << format_double(r.lambda)
              << ", rank = " << compact(r.factors).rank() << ", iterations = " << r.iterations
              << (r.converged ? "" : " (not converged)") << '\n';
  }
  return all_converged ? kOk : kNotConverged;
}

int run_svd(const InputOpts& in, const SolverOpts& s, const std::string& out,
            const std::string& trace) {
  if (out.empty()) throw ValidationError("--out is required");
  const ObservedMatrix x = in.load();
  const SplrMatrix xs = SplrMatrix::sparse_only(x);
  ParallelOptions par;
  par.threads = s.threads;
  par.deterministic = s.deterministic;
  SoftSvdConfig cfg;
  cfg.rank = s.rank;
  cfg.lambda = s.lambda;
  cfg.tol = s.tol;
  cfg.max_iter = s.max_iter;
  cfg.seed = s.seed;
  SoftSvdResult r = soft_svd_solve(SplrOperator(xs, par), cfg, nullptr, {},
                                   [&](const FactorPair& f) {
                                     return soft_svd_objective(xs, f, s.lambda);
                                   });
  strip_time(r.trace, s.timing);
  ModelBundle b;
  b.algorithm = "soft_svd";
  b.lambda = s.lambda;
  b.seed = s.seed;
  b.converged = r.converged;
  b.iterations = r.iterations;
  b.objective = soft_svd_objective(xs, r.factors, s.lambda);
  b.factors = compact(r.factors);
  save_model(out, b);
  write_file(trace, [&](std::ostream& os) { write_trace(os, r.trace); });
  std::cout << "iterations = " << r.iterations << '\n'
            << "converged = " << (r.converged ? "true" : "false") << '\n'
            << "rank = " << b.factors.rank() << '\n'
            << "singular_values =";
  for (double d : b.factors.d) std::cout << ' ' << format_double(d);
  std::cout << '\n';
  return r.converged ? kOk : kNotConverged;
}

int run_scale(const InputOpts& in, const std::string& center, const std::string& scale,
              double tol, int max_iter, bool incremental, const std::string& out) {
  const ObservedMatrix x = in.load();
  const ScalingFlags flags = ScalingFlags::parse(center, scale);
  ScalingOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  const ScalingFit sf =
      incremental ? fit_scaling_incremental(x, flags, opt) : fit_scaling(x, flags, opt);
  write_file(out, [&](std::ostream& os) { write_scaling(os, sf.params); });
  std::cout << "iterations = " << sf.report.iterations << '\n'
            << "residual = "
            << format_double(sf.report.residuals.empty() ? 0.0 : sf.report.residuals.back())
            << '\n'
            << "observed_rate = " << format_double(sf.report.observed_rate()) << '\n'
            << "converged = " << (sf.report.converged ? "true" : "false") << '\n';
  return sf.report.converged || !flags.any() ? kOk : kNotConverged;
}

int run_predict(const std::string& model_dir, const std::string& cells_path,
                const std::string& out) {
  if (model_dir.empty() || cells_path.empty()) {
    throw ValidationError("--model and --input are required");
  }
  const ModelBundle model = load_model(model_dir);
  std::ifstream in(cells_path);
  if (!in) throw ValidationError("cannot open '" + cells_path + "'");
  bool has_values = false;
  const std::vector<Entry> cells = read_cells(in, has_values);
  if (out.empty()) {
    write_predictions(std::cout, model, cells);
  } else {
    write_file(out, [&](std::ostream& os) { write_predictions(os, model, cells); });
  }
  if (has_values) {
    (out.empty() ? std::cerr : std::cout) << "rmse = " << format_double(rmse(model, cells)) << '\n';
  }
  return kOk;
}

int run_certify(const InputOpts& in, const std::string& model_dir, std::optional<double> lambda,
                const CertifyOptions& opt) {
  if (model_dir.empty()) throw ValidationError("--model is required");
  const ModelBundle model = load_model(model_dir);
  ObservedMatrix x = in.load();
  if (model.scaling) x = apply_scaling(x, *model.scaling);
  const Certificate c = certify_optimality(x, model.factors, lambda.value_or(model.lambda), opt);
  std::cout << to_text(c);
  switch (c.status) {
    case CertificateStatus::pass:
      return kOk;
    case CertificateStatus::fail:
      return kFail;
    case CertificateStatus::inconclusive:
      return kNotConverged;
  }
  return kFail;
}

struct BenchOpts {
  std::size_t m = 300;
  std::size_t n = 200;
  std::size_t true_rank = 50;
  double missing = 0.7;
  double noise = 1.0;
  std::uint64_t data_seed = 1;
  std::string algorithms = "softimpute_als,als,softimpute";
  double rel = 1e-3;
};

int run_bench(const InputOpts& in, const SolverOpts& s, const BenchOpts& b,
              const std::string& trace) {
  const ObservedMatrix x =
      in.path.empty()
          ? simulate_instance(b.m, b.n, b.true_rank, b.missing, b.noise, b.data_seed).observed
          : in.load();
  const Prepared p = prepare(x, s);
  const double lmax = lambda_max(p.x, s.config().parallel);

  std::vector<FitResult> runs;
  std::stringstream ss(b.algorithms);
  std::string name;
  while (std::getline(ss, name, ',')) {
    FitConfig cfg = s.config();
    cfg.algorithm = parse_algorithm(name);
    cfg.lambda_max = lmax;
    runs.push_back(fit(p.x, cfg));
  }
  if (runs.empty()) throw ValidationError("--algorithms lists nothing");

  double best = runs.front().trace.back().f;
  for (const FitResult& r : runs) best = std::min(best, r.trace.back().f);
  write_file(trace, [&](std::ostream& os) {
    for (std::size_t k = 0; k < runs.size(); ++k) {
      write_trace(os, runs[k].trace, k == 0, "algorithm", to_string(runs[k].algorithm));
    }
  });
  std::cout << "m = " << p.x.rows() << ", n = " << p.x.cols() << ", observed = " << p.x.nnz()
            << ", lambda = " << format_double(s.lambda) << ", lambda_max = "
            << format_double(lmax) << ", rank = " << s.rank << '\n'
            << "target = " << format_double(best) << " (+" << b.rel << " relative)\n"
            << "algorithm,iterations,converged,final_F,seconds,seconds_to_target,flops,"
               "solution_rank\n";
  bool ok = true;
  for (const FitResult& r : runs) {
    ok = ok && r.converged;
    std::cout << to_string(r.algorithm) << ',' << r.iterations << ',' << (r.converged ? 1 : 0)
              << ',' << format_double(r.trace.back().f) << ','
              << format_double(r.trace.back().seconds) << ','
              << format_double(seconds_to_reach(r.trace, best, b.rel)) << ',' << r.flops << ','
              << compact(r.factors).rank() << '\n';
  }
  return ok ? kOk : kNotConverged;
}

int run_simulate(const BenchOpts& b, const std::string& out, const std::string& held_out) {
  if (out.empty()) throw ValidationError("--out is required");
  const SimulatedInstance sim = simulate_instance(b.m, b.n, b.true_rank, b.missing, b.noise, b.data_seed);
  write_file(out, [&](std::ostream& os) { write_matrixmarket(os, sim.observed); });
  write_file(held_out, [&](std::ostream& os) {
    os << "row,col,value\n";
    for (const Entry& e : sim.held_out) {
      os << e.row + 1 << ',' << e.col + 1 << ',' << format_double(e.value) << '\n';
    }
  });
  std::cout << "observed = " << sim.observed.nnz() << ", held_out = " << sim.held_out.size()
            << '\n';
  return kOk;
}

void add_sim(CLI::App* cmd, BenchOpts& b) {
  cmd->add_option("--m", b.m, "Rows of the simulated matrix")->capture_default_str();
  cmd->add_option("--n", b.n, "Columns of the simulated matrix")->capture_default_str();
  cmd->add_option("--true-rank", b.true_rank, "Rank of the Gaussian factor model")
      ->capture_default_str();
  cmd->add_option("--missing", b.missing, "Fraction of cells held out")->capture_default_str();
  cmd->add_option("--noise", b.noise, "Noise standard deviation")->capture_default_str();
  cmd->add_option("--data-seed", b.data_seed, "Seed of the simulated instance")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix completion with softImpute-ALS, ALS and softImpute"};
  app.require_subcommand(1);

  InputOpts in;
  SolverOpts s;
  BenchOpts b;
  std::string out;
  std::string trace;
  std::string model;
  std::string lambdas;
  std::size_t n_lambdas = 10;
  std::size_t increment = 2;
  double scale_tol = 1e-10;
  int scale_iter = 100;
  bool incremental = false;
  std::string center = "both";
  std::string scale = "both";
  std::optional<double> certify_lambda;
  CertifyOptions cert;

  auto* fit_cmd = app.add_subcommand("fit", "Fit one model and write its directory and trace");
  add_input(fit_cmd, in);
  add_solver(fit_cmd, s, true);
  fit_cmd->add_option("--lambda", s.lambda, "Nuclear-norm penalty")->capture_default_str();
  fit_cmd->add_option("--out", out, "Model directory");
  fit_cmd->add_option("--trace", trace, "Trace CSV");

  auto* path_cmd = app.add_subcommand(
      "path", "Warm-started fits along decreasing lambdas (default: n values from 0.95 to "
              "0.05 lambda_max, log-spaced)");
  add_input(path_cmd, in);
  add_solver(path_cmd, s, true);
  path_cmd->add_option("--lambdas", lambdas, "Comma-separated decreasing lambdas");
  path_cmd->add_option("--n-lambdas", n_lambdas, "Number of automatic lambdas")
      ->capture_default_str();
  path_cmd->add_option("--rank-increment", increment,
                       "Operating rank = previous solution rank + this (capped by --rank)")
      ->capture_default_str();
  path_cmd->add_option("--out", out, "Directory for path.csv and one model per fit");
  path_cmd->add_option("--trace", trace, "Combined trace CSV (extra column: fit)");

  auto* svd_cmd = app.add_subcommand(
      "svd", "Soft-thresholded rank-r SVD of the input read as a complete matrix");
  add_input(svd_cmd, in);
  add_solver(svd_cmd, s, false);
  svd_cmd->add_option("--lambda", s.lambda, "Threshold (0 for a plain truncated SVD)");
  svd_cmd->add_option("--out", out, "Model directory");
  svd_cmd->add_option("--trace", trace, "Trace CSV");

  auto* scale_cmd = app.add_subcommand("scale", "Estimate row/column centers and scales");
  add_input(scale_cmd, in);
  scale_cmd->add_option("--center", center, "rows | cols | both | none")->capture_default_str();
  scale_cmd->add_option("--scale", scale, "rows | cols | both | none")->capture_default_str();
  scale_cmd->add_option("--tol", scale_tol, "Threshold on the moment residual")
      ->capture_default_str();
  scale_cmd->add_option("--max-iter", scale_iter, "Sweep limit")->capture_default_str();
  scale_cmd->add_flag("--incremental", incremental, "Use the increment form of the updates");
  scale_cmd->add_option("--out", out, "Parameter file");

  auto* predict_cmd = app.add_subcommand("predict", "Predict cells from a saved model");
  predict_cmd->add_option("--model", model, "Model directory");
  predict_cmd->add_option("--input", in.path, "Cells: row,col[,value] (values give an RMSE)");
  predict_cmd->add_option("--out", out, "Predictions CSV (default stdout)");

  auto* certify_cmd =
      app.add_subcommand("certify", "Check a saved model against the convex problem");
  add_input(certify_cmd, in);
  certify_cmd->add_option("--model", model, "Model directory");
  certify_cmd->add_option("--lambda", certify_lambda, "Penalty (default: the model's)");
  certify_cmd->add_option("--extra", cert.probe_rank_extra, "Probe rank beyond the solution rank")
      ->capture_default_str();
  certify_cmd->add_option("--tol", cert.tol, "Pass threshold on the relative squared change")
      ->capture_default_str();

  auto* bench_cmd = app.add_subcommand(
      "bench", "Run several algorithms from the same start and write one combined trace");
  add_input(bench_cmd, in);
  add_solver(bench_cmd, s, false);
  add_sim(bench_cmd, b);
  bench_cmd->add_option("--lambda", s.lambda, "Nuclear-norm penalty")->capture_default_str();
  bench_cmd->add_option("--algorithms", b.algorithms, "Comma-separated algorithms")
      ->capture_default_str();
  bench_cmd->add_option("--target-rel", b.rel, "Relative gap to the best final F")
      ->capture_default_str();
  bench_cmd->add_option("--trace", trace, "Combined trace CSV (extra column: algorithm)");

  auto* sim_cmd = app.add_subcommand("simulate", "Write a simulated Gaussian factor instance");
  add_sim(sim_cmd, b);
  sim_cmd->add_option("--out", out, "MatrixMarket file of the observed entries");
  sim_cmd->add_option("--held-out", trace, "CSV of the held-out cells");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*fit_cmd) return run_fit(in, s, out, trace);
    if (*path_cmd) return run_path(in, s, lambdas, n_lambdas, increment, out, trace);
    if (*svd_cmd) {
      if (svd_cmd->count("--lambda") == 0) s.lambda = 0.0;
      return run_svd(in, s, out, trace);
    }
    if (*scale_cmd) return run_scale(in, center, scale, scale_tol, scale_iter, incremental, out);
    if (*predict_cmd) return run_predict(model, in.path, out);
    if (*certify_cmd) return run_certify(in, model, certify_lambda, cert);
    if (*bench_cmd) {
      s.timing = true;
      return run_bench(in, s, b, trace);
    }
    if (*sim_cmd) return run_simulate(b, out, trace);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kInvalid;
}
