#include "softals/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "softals/dense.hpp"
#include "softals/errors.hpp"

namespace softals {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

struct Token {
  std::string_view text;
  std::size_t column = 0;  // 1-based
};

std::vector<Token> split(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r' || c == ';'; };
  while (i < line.size()) {
    while (i < line.size() && sep(line[i])) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && !sep(line[i])) ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

bool parse_index(std::string_view s, std::size_t& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
  std::size_t line;
};

std::size_t read_index(const Token& t, std::size_t line, const char* what,
                       std::optional<std::size_t> bound) {
  std::size_t v = 0;
  if (!parse_index(t.text, v)) {
    throw ParseError(line, t.column, std::string("expected a ") + what + " index, got '" +
                                         std::string(t.text) + "'");
  }
  if (v == 0 || (bound && v > *bound)) {
    throw ParseError(line, t.column,
                     std::string(what) + " index " + std::to_string(v) + " is outside 1.." +
                         (bound ? std::to_string(*bound) : std::string("inf")));
  }
  return v - 1;
}

double read_value(const Token& t, std::size_t line) {
  double v = 0.0;
  if (!parse_number(t.text, v)) {
    throw ParseError(line, t.column, "expected a finite value, got '" + std::string(t.text) + "'");
  }
  return v;
}

ObservedMatrix assemble(std::size_t m, std::size_t n, const std::vector<Triplet>& ts) {
  std::vector<Entry> entries;
  entries.reserve(ts.size());
  for (const Triplet& t : ts) entries.push_back({t.row, t.col, t.value});
  try {
    return ObservedMatrix::from_entries(m, n, entries);
  } catch (const DuplicateEntry& e) {
    const Triplet& a = ts[e.first()];
    const Triplet& b = ts[e.second()];
    throw DuplicateEntry(a.line, b.line,
                         "cell (" + std::to_string(a.row + 1) + ", " + std::to_string(a.col + 1) +
                             ") appears on lines " + std::to_string(a.line) + " and " +
                             std::to_string(b.line));
  }
}

ObservedMatrix read_matrixmarket(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, 1, "empty MatrixMarket file");
  ++lineno;
  const std::vector<Token> head = split(line);
  if (head.size() < 5 || lower(head[0].text) != "%%matrixmarket" || lower(head[1].text) != "matrix" ||
      lower(head[2].text) != "coordinate") {
    throw ParseError(1, 1, "expected '%%MatrixMarket matrix coordinate real general'");
  }
  const std::string field = lower(head[3].text);
  if (field != "real" && field != "integer" && field != "double") {
    throw ParseError(1, head[3].column, "unsupported field '" + std::string(head[3].text) + "'");
  }
  if (lower(head[4].text) != "general") {
    throw ParseError(1, head[4].column, "unsupported symmetry '" + std::string(head[4].text) + "'");
  }

  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t nnz = 0;
  bool have_size = false;
  std::vector<Triplet> ts;
  while (std::getline(in, line)) {
    ++lineno;
    const std::vector<Token> tok = split(line);
    if (tok.empty() || tok[0].text.front() == '%') continue;
    if (!have_size) {
      if (tok.size() != 3 || !parse_index(tok[0].text, m) || !parse_index(tok[1].text, n) ||
          !parse_index(tok[2].text, nnz)) {
        throw ParseError(lineno, 1, "expected the size line 'rows cols entries'");
      }
      have_size = true;
      ts.reserve(nnz);
      continue;
    }
    if (tok.size() != 3) {
      throw ParseError(lineno, tok.size() < 3 ? line.size() + 1 : tok[3].column,
                       "expected 'row col value'");
    }
    if (ts.size() == nnz) {
      throw ParseError(lineno, 1, "more entries than the " + std::to_string(nnz) + " declared");
    }
    const std::size_t i = read_index(tok[0], lineno, "row", m);
    const std::size_t j = read_index(tok[1], lineno, "column", n);
    ts.push_back({i, j, read_value(tok[2], lineno), lineno});
  }
  if (!have_size) throw ParseError(lineno + 1, 1, "missing size line");
  if (ts.size() != nnz) {
    throw ParseError(lineno + 1, 1, "found " + std::to_string(ts.size()) + " entries, " +
                                        std::to_string(nnz) + " declared");
  }
  return assemble(m, n, ts);
}

ObservedMatrix read_triplets(std::istream& in, std::optional<std::size_t> rows,
                             std::optional<std::size_t> cols) {
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  std::vector<Triplet> ts;
  std::size_t m = 0;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::vector<Token> tok = split(line);
    if (tok.empty() || tok[0].text.front() == '#') continue;
    std::size_t probe = 0;
    if (first && !parse_index(tok[0].text, probe)) {
      first = false;  // header
      continue;
    }
    first = false;
    if (tok.size() < 3) {
      throw ParseError(lineno, line.size() + 1, "expected 'row col value'");
    }
    const std::size_t i = read_index(tok[0], lineno, "row", rows);
    const std::size_t j = read_index(tok[1], lineno, "column", cols);
    ts.push_back({i, j, read_value(tok[2], lineno), lineno});
    m = std::max(m, i + 1);
    n = std::max(n, j + 1);
  }
  if (ts.empty() && !(rows && cols)) throw ParseError(lineno + 1, 1, "no entries");
  return assemble(rows.value_or(m), cols.value_or(n), ts);
}

}  // namespace

InputFormat parse_format(const std::string& name, const fs::path& path) {
  const std::string s = lower(name);
  if (s == "mm" || s == "matrixmarket" || s == "mtx") return InputFormat::matrixmarket;
  if (s == "csv" || s == "triplets" || s == "tsv") return InputFormat::csv;
  if (s == "auto") {
    const std::string ext = lower(path.extension().string());
    return ext == ".mtx" || ext == ".mm" ? InputFormat::matrixmarket : InputFormat::csv;
  }
  throw ValidationError("unknown format '" + name + "' (expected auto, mm or csv)");
}

ObservedMatrix read_observed(std::istream& in, InputFormat format, std::optional<std::size_t> rows,
                             std::optional<std::size_t> cols) {
  if (format == InputFormat::matrixmarket) return read_matrixmarket(in);
  return read_triplets(in, rows, cols);
}

ObservedMatrix load_observed(const fs::path& path, InputFormat format,
                             std::optional<std::size_t> rows, std::optional<std::size_t> cols) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return read_observed(in, format, rows, cols);
}

std::vector<Entry> read_cells(std::istream& in, bool& has_values) {
  std::vector<Entry> cells;
  has_values = true;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::vector<Token> tok = split(line);
    if (tok.empty() || tok[0].text.front() == '#') continue;
    std::size_t probe = 0;
    if (first && !parse_index(tok[0].text, probe)) {
      first = false;
      continue;
    }
    first = false;
    if (tok.size() < 2) throw ParseError(lineno, line.size() + 1, "expected 'row col [value]'");
    Entry c{read_index(tok[0], lineno, "row", {}), read_index(tok[1], lineno, "column", {}), 0.0};
    if (tok.size() >= 3) {
      c.value = read_value(tok[2], lineno);
    } else {
      has_values = false;
    }
    cells.push_back(c);
  }
  if (cells.empty()) has_values = false;
  return cells;
}

void write_matrixmarket(std::ostream& out, const ObservedMatrix& x) {
  out << "%%MatrixMarket matrix coordinate real general\n"
      << x.rows() << ' ' << x.cols() << ' ' << x.nnz() << '\n';
  for (std::size_t e = 0; e < x.nnz(); ++e) {
    out << x.row_of(e) + 1 << ' ' << x.col_of(e) + 1 << ' ' << format_double(x.value(e)) << '\n';
  }
}

SimulatedInstance simulate_instance(std::size_t m, std::size_t n, std::size_t rank,
                                    double missing_frac, double noise_sd, std::uint64_t seed) {
  if (m == 0 || n == 0) throw ValidationError("simulated matrix must be nonempty");
  if (!(missing_frac >= 0.0 && missing_frac < 1.0)) {
    throw ValidationError("missing fraction must be in [0, 1)");
  }
  if (!(noise_sd >= 0.0)) throw ValidationError("noise_sd must be >= 0");
  std::mt19937_64 rng(seed);
  const DenseMatrix g = gaussian_matrix(m, rank, rng);
  const DenseMatrix h = gaussian_matrix(n, rank, rng);
  const DenseMatrix noise = gaussian_matrix(m, n, rng);
  const DenseMatrix x = multiply_nt(g, h);

  const std::size_t cells = m * n;
  const auto missing = static_cast<std::size_t>(std::llround(missing_frac * static_cast<double>(cells)));
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates with explicit draws, so the mask does not depend on
  // the standard library's shuffle.
  for (std::size_t k = 0; k < missing; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng() % (cells - k));
    std::swap(order[k], order[pick]);
  }
  std::vector<bool> held(cells, false);
  for (std::size_t k = 0; k < missing; ++k) held[order[k]] = true;

  SimulatedInstance out;
  std::vector<Entry> obs;
  obs.reserve(cells - missing);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Entry e{i, j, x(i, j) + noise_sd * noise(i, j)};
      (held[i * n + j] ? out.held_out : obs).push_back(e);
    }
  }
  out.observed = ObservedMatrix::from_entries(m, n, obs);
  return out;
}

// ---------------------------------------------------------------------------
// Model directories

double ModelBundle::predict(std::size_t i, std::size_t j) const {
  if (i >= factors.rows() || j >= factors.cols()) {
    throw DimensionMismatch("cell (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                            ") is outside the " + std::to_string(factors.rows()) + "x" +
                            std::to_string(factors.cols()) + " model");
  }
  const double v = factors.at(i, j);
  return scaling ? invert_scaling(v, i, j, *scaling) : v;
}

ModelBundle make_bundle(const FitResult& fit, std::uint64_t seed,
                        std::optional<ScalingParams> scaling) {
  ModelBundle b;
  b.algorithm = to_string(fit.algorithm);
  b.lambda = fit.lambda;
  b.lambda_max = fit.lambda_max;
  b.seed = seed;
  b.converged = fit.converged;
  b.iterations = fit.iterations;
  b.objective = fit.final_objective;
  b.factors = compact(fit.factors);
  b.scaling = std::move(scaling);
  return b;
}

namespace {

void write_matrix(const fs::path& file, const DenseMatrix& a) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write '" + file.string() + "'");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (k) out << ',';
      out << format_double(a(i, k));
    }
    out << '\n';
  }
}

std::vector<std::vector<double>> read_rows(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open '" + file.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<double> row;
    for (const Token& t : split(line)) row.push_back(read_value(t, lineno));
    rows.push_back(std::move(row));
  }
  return rows;
}

DenseMatrix read_matrix(const fs::path& file, std::size_t rows, std::size_t cols) {
  DenseMatrix a(rows, cols);
  if (cols == 0) return a;
  const auto data = read_rows(file);
  if (data.size() != rows) {
    throw ValidationError(file.string() + ": expected " + std::to_string(rows) + " rows, found " +
                          std::to_string(data.size()));
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (data[i].size() != cols) {
      throw ValidationError(file.string() + ": row " + std::to_string(i + 1) + " has " +
                            std::to_string(data[i].size()) + " values, expected " +
                            std::to_string(cols));
    }
    std::copy(data[i].begin(), data[i].end(), a.row(i).begin());
  }
  return a;
}

std::map<std::string, std::string> read_meta(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open '" + file.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ValidationError("meta.txt lacks '" + key + "'");
  return it->second;
}

double meta_number(const std::map<std::string, std::string>& kv, const std::string& key) {
  const std::string& s = need(kv, key);
  double v = 0.0;
  std::string_view sv(s);
  if (!sv.empty() && sv.front() == '+') sv.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
  if (ec != std::errc() || ptr != sv.data() + sv.size()) {
    throw ValidationError("meta.txt: '" + key + "' is not a number");
  }
  return v;
}

std::size_t meta_count(const std::map<std::string, std::string>& kv, const std::string& key) {
  std::size_t v = 0;
  if (!parse_index(need(kv, key), v)) throw ValidationError("meta.txt: '" + key + "' is not a count");
  return v;
}

}  // namespace

void write_scaling(std::ostream& out, const ScalingParams& p) {
  auto line = [&](const char* name, const std::vector<double>& v) {
    out << name;
    for (double x : v) out << ',' << format_double(x);
    out << '\n';
  };
  line("alpha", p.alpha);
  line("beta", p.beta);
  line("tau", p.tau);
  line("gamma", p.gamma);
  out << "flags," << p.flags.center_rows << ',' << p.flags.center_cols << ','
      << p.flags.scale_rows << ',' << p.flags.scale_cols << '\n';
}

ScalingParams read_scaling(std::istream& in) {
  ScalingParams p;
  std::string line;
  std::size_t lineno = 0;
  bool seen[5] = {false, false, false, false, false};
  while (std::getline(in, line)) {
    ++lineno;
    const std::vector<Token> tok = split(line);
    if (tok.empty()) continue;
    const std::string name(tok[0].text);
    std::vector<double> v;
    for (std::size_t k = 1; k < tok.size(); ++k) v.push_back(read_value(tok[k], lineno));
    if (name == "alpha") {
      p.alpha = std::move(v), seen[0] = true;
    } else if (name == "beta") {
      p.beta = std::move(v), seen[1] = true;
    } else if (name == "tau") {
      p.tau = std::move(v), seen[2] = true;
    } else if (name == "gamma") {
      p.gamma = std::move(v), seen[3] = true;
    } else if (name == "flags" && v.size() == 4) {
      p.flags = {v[0] != 0.0, v[1] != 0.0, v[2] != 0.0, v[3] != 0.0};
      seen[4] = true;
    } else {
      throw ParseError(lineno, 1, "unexpected scaling line '" + name + "'");
    }
  }
  if (!std::all_of(std::begin(seen), std::end(seen), [](bool b) { return b; })) {
    throw ValidationError("scaling file lacks one of alpha, beta, tau, gamma, flags");
  }
  p.check(p.alpha.size(), p.beta.size());
  return p;
}

void save_model(const fs::path& dir, const ModelBundle& model) {
  model.factors.check_shapes();
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "meta.txt");
    if (!out) throw ValidationError("cannot write to '" + dir.string() + "'");
    out << "format_version = " << ModelBundle::kFormatVersion << '\n'
        << "algorithm = " << model.algorithm << '\n'
        << "rows = " << model.factors.rows() << '\n'
        << "cols = " << model.factors.cols() << '\n'
        << "rank = " << model.factors.rank() << '\n'
        << "lambda = " << format_double(model.lambda) << '\n'
        << "lambda_max = " << format_double(model.lambda_max) << '\n'
        << "seed = " << model.seed << '\n'
        << "converged = " << (model.converged ? "true" : "false") << '\n'
        << "iterations = " << model.iterations << '\n'
        << "objective = " << format_double(model.objective) << '\n'
        << "scaling = " << (model.scaling ? "true" : "false") << '\n';
  }
  write_matrix(dir / "U.csv", model.factors.u);
  write_matrix(dir / "V.csv", model.factors.v);
  {
    std::ofstream out(dir / "d.csv");
    for (double v : model.factors.d) out << format_double(v) << '\n';
  }
  if (model.scaling) {
    std::ofstream out(dir / "scaling.csv");
    write_scaling(out, *model.scaling);
  } else {
    fs::remove(dir / "scaling.csv");
  }
}

ModelBundle load_model(const fs::path& dir) {
  const auto kv = read_meta(dir / "meta.txt");
  if (meta_count(kv, "format_version") != static_cast<std::size_t>(ModelBundle::kFormatVersion)) {
    throw ValidationError("unsupported model format version " + need(kv, "format_version"));
  }
  ModelBundle b;
  b.algorithm = need(kv, "algorithm");
  b.lambda = meta_number(kv, "lambda");
  b.lambda_max = meta_number(kv, "lambda_max");
  b.seed = meta_count(kv, "seed");
  b.converged = need(kv, "converged") == "true";
  b.iterations = static_cast<int>(meta_count(kv, "iterations"));
  b.objective = meta_number(kv, "objective");
  const std::size_t m = meta_count(kv, "rows");
  const std::size_t n = meta_count(kv, "cols");
  const std::size_t r = meta_count(kv, "rank");
  b.factors.u = read_matrix(dir / "U.csv", m, r);
  b.factors.v = read_matrix(dir / "V.csv", n, r);
  b.factors.d.clear();
  if (r > 0) {
    for (const auto& row : read_rows(dir / "d.csv")) {
      if (row.size() != 1) throw ValidationError("d.csv must hold one value per line");
      b.factors.d.push_back(row[0]);
    }
  }
  if (b.factors.d.size() != r) {
    throw ValidationError("d.csv holds " + std::to_string(b.factors.d.size()) +
                          " values, meta.txt says rank " + std::to_string(r));
  }
  if (need(kv, "scaling") == "true") {
    std::ifstream in(dir / "scaling.csv");
    if (!in) throw ValidationError("meta.txt announces scaling but scaling.csv is missing");
    b.scaling = read_scaling(in);
    b.scaling->check(m, n);
  }
  return b;
}

// ---------------------------------------------------------------------------

void write_trace(std::ostream& out, const IterTrace& trace, bool header,
                 const std::string& extra_name, const std::string& extra_value) {
  if (header) {
    out << "iter,seconds,F,H,frob_delta,eta,rank,flops";
    if (!extra_name.empty()) out << ',' << extra_name;
    out << '\n';
  }
  for (const TraceRow& r : trace) {
    out << r.iter << ',' << format_double(r.seconds) << ',' << format_double(r.f) << ','
        << format_double(r.h) << ',' << format_double(r.frob_delta) << ',' << format_double(r.eta)
        << ',' << r.rank << ',' << r.flops;
    if (!extra_name.empty()) out << ',' << extra_value;
    out << '\n';
  }
}

void write_predictions(std::ostream& out, const ModelBundle& model,
                       const std::vector<Entry>& cells) {
  out << "row,col,prediction\n";
  for (const Entry& c : cells) {
    out << c.row + 1 << ',' << c.col + 1 << ',' << format_double(model.predict(c.row, c.col))
        << '\n';
  }
}

double rmse(const ModelBundle& model, const std::vector<Entry>& probe) {
  if (probe.empty()) throw ValidationError("RMSE needs a nonempty probe set");
  CompensatedSum s;
  for (const Entry& c : probe) {
    const double r = model.predict(c.row, c.col) - c.value;
    s.add(r * r);
  }
  return std::sqrt(s.value() / static_cast<double>(probe.size()));
}

}  // namespace softals
