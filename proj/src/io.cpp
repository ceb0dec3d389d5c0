// Copyright 2026 The TagComplete Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tagcomplete/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace tagcomplete::io {

std::string format_double(double v) {
  char buf[64];
  auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

namespace {

class LineReader {
 public:
  LineReader(std::istream& in, std::string source)
      : in_(in), source_(std::move(source)) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  // Next line that is neither blank nor a comment starting with `comment`.
  bool next_content(std::string& line, char comment) {
    while (next(line)) {
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      if (line[first] == comment) continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_, line_no_, what);
  }

  long line() const { return line_no_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  long line_no_ = 0;
};

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> try_double(std::string_view token) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    return std::nullopt;
  }
  return v;
}

double parse_double(const LineReader& r, std::string_view token) {
  const auto v = try_double(token);
  if (!v) r.fail("not a number: '" + std::string(token) + "'");
  if (!std::isfinite(*v)) r.fail("non-finite value '" + std::string(token) + "'");
  return *v;
}

long long parse_int(const LineReader& r, std::string_view token) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    r.fail("not an integer: '" + std::string(token) + "'");
  }
  return v;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

void expect_keyword(const LineReader& r, const std::vector<std::string_view>& tokens,
                    std::string_view keyword, size_t arity) {
  if (tokens.empty() || tokens[0] != keyword) {
    r.fail("expected '" + std::string(keyword) + "'");
  }
  if (tokens.size() != arity + 1) {
    r.fail("'" + std::string(keyword) + "' expects " + std::to_string(arity) +
           " value(s)");
  }
}

}  // namespace

void write_atomically(const fs::path& path,
                      const std::function<void(std::ostream&)>& writer) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    writer(out);
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into '" + path.string() + "'");
  }
}

// MatrixMarket ---------------------------------------------------------------

SparseMatrix read_sparse_matrix(std::istream& in, const std::string& source) {
  LineReader r(in, source);
  std::string line;
  if (!r.next(line)) r.fail("empty file");
  const auto header = split_ws(line);
  if (header.size() != 5 || lower(header[0]) != "%%matrixmarket" ||
      lower(header[1]) != "matrix" || lower(header[2]) != "coordinate") {
    r.fail("expected '%%MatrixMarket matrix coordinate <field> general'");
  }
  const std::string field = lower(header[3]);
  if (field != "real" && field != "integer" && field != "pattern") {
    r.fail("unsupported field '" + std::string(header[3]) + "'");
  }
  if (lower(header[4]) != "general") {
    r.fail("unsupported symmetry '" + std::string(header[4]) + "'");
  }
  const bool pattern = field == "pattern";

  if (!r.next_content(line, '%')) r.fail("missing size line");
  const auto size = split_ws(line);
  if (size.size() != 3) r.fail("size line must be '<rows> <cols> <entries>'");
  const long long rows = parse_int(r, size[0]);
  const long long cols = parse_int(r, size[1]);
  const long long entries = parse_int(r, size[2]);
  if (rows < 0 || cols < 0 || entries < 0) r.fail("negative size");

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(entries));
  for (long long e = 0; e < entries; ++e) {
    if (!r.next_content(line, '%')) {
      r.fail("expected " + std::to_string(entries) + " entries, found " +
             std::to_string(e));
    }
    const auto tok = split_ws(line);
    if (tok.size() != (pattern ? 2u : 3u)) r.fail("malformed entry");
    const long long i = parse_int(r, tok[0]);
    const long long j = parse_int(r, tok[1]);
    if (i < 1 || i > rows || j < 1 || j > cols) {
      r.fail("index (" + std::to_string(i) + ", " + std::to_string(j) +
             ") outside " + std::to_string(rows) + " x " + std::to_string(cols));
    }
    const double v = pattern ? 1.0 : parse_double(r, tok[2]);
    triplets.emplace_back(static_cast<Index>(i - 1), static_cast<Index>(j - 1), v);
  }
  if (r.next_content(line, '%')) r.fail("unexpected trailing entry");
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

SparseMatrix read_sparse_matrix(const fs::path& path) {
  auto in = open_in(path);
  return read_sparse_matrix(in, path.string());
}

void write_sparse_matrix(std::ostream& out, const SparseMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' '
          << format_double(it.value()) << '\n';
    }
  }
}

void write_sparse_matrix(const fs::path& path, const SparseMatrix& m) {
  write_atomically(path, [&](std::ostream& out) { write_sparse_matrix(out, m); });
}

// CSV ------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (;;) {
    const size_t comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

DenseMatrix read_dense_matrix(std::istream& in, const std::string& source) {
  LineReader r(in, source);
  std::string line;
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  bool first = true;
  while (r.next_content(line, '#')) {
    const auto cells = split_commas(line);
    if (first) {
      first = false;
      const bool numeric = std::all_of(cells.begin(), cells.end(), [](auto c) {
        return try_double(c).has_value();
      });
      if (!numeric) continue;  // header
    }
    if (cols < 0) cols = static_cast<Index>(cells.size());
    if (static_cast<Index>(cells.size()) != cols) {
      r.fail("row has " + std::to_string(cells.size()) + " values, expected " +
             std::to_string(cols));
    }
    for (auto c : cells) values.push_back(parse_double(r, c));
    ++rows;
  }
  if (cols < 0) cols = 0;
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = values[static_cast<size_t>(i * cols + j)];
    }
  }
  return m;
}

DenseMatrix read_dense_matrix(const fs::path& path) {
  auto in = open_in(path);
  return read_dense_matrix(in, path.string());
}

void write_dense_matrix(std::ostream& out, const DenseMatrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_dense_matrix(const fs::path& path, const DenseMatrix& m) {
  write_atomically(path, [&](std::ostream& out) { write_dense_matrix(out, m); });
}

// Key = value ----------------------------------------------------------------

std::map<std::string, std::string> read_key_values(std::istream& in,
                                                   const std::string& source) {
  LineReader r(in, source);
  std::map<std::string, std::string> kv;
  std::string line;
  while (r.next(line)) {
    std::string_view view(line);
    const auto hash = view.find('#');
    if (hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) r.fail("expected 'key = value'");
    const std::string key(trim(view.substr(0, eq)));
    const std::string value(trim(view.substr(eq + 1)));
    if (key.empty()) r.fail("empty key");
    if (kv.count(key)) r.fail("duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  auto in = open_in(path);
  return read_key_values(in, path.string());
}

namespace {

double kv_double(const std::string& key, const std::string& value) {
  const auto v = try_double(value);
  if (!v || !std::isfinite(*v)) {
    throw InvalidArgument("'" + key + "' needs a finite number, got '" + value + "'");
  }
  return *v;
}

long long kv_int(const std::string& key, const std::string& value) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw InvalidArgument("'" + key + "' needs an integer, got '" + value + "'");
  }
  return v;
}

Init kv_init(const std::string& key, const std::string& value) {
  const std::string v = lower(value);
  if (v == "spectral") return Init::kSpectral;
  if (v == "random") return Init::kRandom;
  throw InvalidArgument("'" + key + "' must be 'spectral' or 'random', got '" +
                        value + "'");
}

bool kv_bool(const std::string& key, const std::string& value) {
  const std::string v = lower(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InvalidArgument("'" + key + "' needs a boolean, got '" + value + "'");
}

}  // namespace

std::vector<std::string> apply_hyperparams(
    const std::map<std::string, std::string>& kv, Hyperparams& hp) {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : kv) {
    if (key == "alpha") hp.alpha = kv_double(key, value);
    else if (key == "mu") hp.mu = kv_double(key, value);
    else if (key == "beta") hp.beta = kv_double(key, value);
    else if (key == "gamma") hp.gamma = kv_double(key, value);
    else if (key == "lambda") hp.lambda = kv_double(key, value);
    else if (key == "eta") hp.eta = kv_double(key, value);
    else if (key == "K") hp.K = kv_int(key, value);
    else if (key == "knn") hp.knn_k = kv_int(key, value);
    else if (key == "max_outer_iters") hp.max_outer_iters = kv_int(key, value);
    else if (key == "rel_tol") hp.rel_tol = kv_double(key, value);
    else if (key == "seed") hp.rng_seed = static_cast<std::uint64_t>(kv_int(key, value));
    else if (key == "sweeps_per_block") hp.sweeps_per_block = kv_int(key, value);
    else if (key == "lasso_tol") hp.lasso_tol = kv_double(key, value);
    else if (key == "lasso_max_iters") hp.lasso_max_iters = kv_int(key, value);
    else if (key == "normalize_features") hp.normalize_features = kv_bool(key, value);
    else if (key == "tags_as_features") hp.tags_as_features = kv_bool(key, value);
    else if (key == "init") hp.init = kv_init(key, value);
    else unknown.push_back(key);
  }
  return unknown;
}

std::vector<std::string> apply_synth_config(
    const std::map<std::string, std::string>& kv, synth::SynthConfig& cfg) {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : kv) {
    if (key == "n_images") cfg.n_images = kv_int(key, value);
    else if (key == "n_tags") cfg.n_tags = kv_int(key, value);
    else if (key == "n_topics") cfg.n_topics = kv_int(key, value);
    else if (key == "tags_per_image") cfg.tags_per_image = kv_int(key, value);
    else if (key == "feature_dim") cfg.feature_dim = kv_int(key, value);
    else if (key == "feature_noise") cfg.feature_noise = kv_double(key, value);
    else if (key == "delete_fraction") cfg.delete_fraction = kv_double(key, value);
    else if (key == "popularity_exponent") cfg.popularity_exponent = kv_double(key, value);
    else if (key == "off_topic_prob") cfg.off_topic_prob = kv_double(key, value);
    else if (key == "synth_seed") cfg.rng_seed = static_cast<std::uint64_t>(kv_int(key, value));
    else unknown.push_back(key);
  }
  return unknown;
}

// Manifest -------------------------------------------------------------------

Manifest read_manifest(const fs::path& path) {
  const auto kv = read_key_values(path);
  const fs::path base = path.parent_path();
  Manifest m;
  auto get = [&](const char* key) -> std::optional<fs::path> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    fs::path p = it->second;
    if (p.is_relative()) p = base / p;
    if (!fs::exists(p)) {
      throw IoError("manifest '" + path.string() + "' references missing file '" +
                    p.string() + "'");
    }
    return p;
  };
  auto version = kv.find("version");
  if (version == kv.end()) throw InvalidArgument("manifest has no 'version'");
  m.version = static_cast<int>(kv_int("version", version->second));
  if (m.version != kManifestVersion) {
    throw InvalidArgument("unsupported manifest version " +
                          std::to_string(m.version));
  }
  auto tags = get("tags");
  if (!tags) throw InvalidArgument("manifest has no 'tags'");
  m.tags = *tags;
  m.features = get("features");
  m.s = get("s");
  m.t = get("t");
  m.overrides = get("overrides");
  for (const auto& [key, value] : kv) {
    if (key != "version" && key != "tags" && key != "features" && key != "s" &&
        key != "t" && key != "overrides") {
      throw InvalidArgument("unknown manifest key '" + key + "'");
    }
  }
  return m;
}

// Model container ------------------------------------------------------------

namespace {

const std::vector<std::pair<const char*, double Hyperparams::*>> kRealParams = {
    {"alpha", &Hyperparams::alpha},   {"mu", &Hyperparams::mu},
    {"beta", &Hyperparams::beta},     {"gamma", &Hyperparams::gamma},
    {"lambda", &Hyperparams::lambda}, {"eta", &Hyperparams::eta},
    {"rel_tol", &Hyperparams::rel_tol}, {"lasso_tol", &Hyperparams::lasso_tol},
};

const std::vector<std::pair<const char*, Index Hyperparams::*>> kIntParams = {
    {"K", &Hyperparams::K},
    {"knn", &Hyperparams::knn_k},
    {"max_outer_iters", &Hyperparams::max_outer_iters},
    {"sweeps_per_block", &Hyperparams::sweeps_per_block},
    {"lasso_max_iters", &Hyperparams::lasso_max_iters},
};

void write_coords(std::ostream& out, const char* name, const SparseMatrix& m) {
  out << name << ' ' << m.nonZeros() << '\n';
  for (Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << format_double(it.value())
          << '\n';
    }
  }
}

SparseMatrix read_coords(LineReader& r, const char* name, Index rows,
                         Index cols) {
  std::string line;
  if (!r.next(line)) r.fail(std::string("truncated: missing '") + name + "'");
  const auto head = split_ws(line);
  expect_keyword(r, head, name, 1);
  const long long count = parse_int(r, head[1]);
  if (count < 0) r.fail("negative entry count");
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(count));
  for (long long e = 0; e < count; ++e) {
    if (!r.next(line)) r.fail(std::string("truncated in '") + name + "' entries");
    const auto tok = split_ws(line);
    if (tok.size() != 3) r.fail("malformed coordinate entry");
    const long long i = parse_int(r, tok[0]);
    const long long j = parse_int(r, tok[1]);
    if (i < 0 || i >= rows || j < 0 || j >= cols) r.fail("coordinate out of range");
    triplets.emplace_back(static_cast<Index>(i), static_cast<Index>(j),
                          parse_double(r, tok[2]));
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

void write_model(std::ostream& out, const ModelFile& file) {
  const FactorModel& model = file.model;
  model.validate();
  out << "%%TagCompleteModel " << kModelVersion << '\n';
  out << "dims " << model.n_images() << ' ' << model.n_tags() << ' '
      << model.rank() << '\n';
  out << "hyperparams " << kRealParams.size() + kIntParams.size() + 2 << '\n';
  for (const auto& [name, member] : kRealParams) {
    out << name << ' ' << format_double(file.hp.*member) << '\n';
  }
  for (const auto& [name, member] : kIntParams) {
    out << name << ' ' << file.hp.*member << '\n';
  }
  out << "seed " << file.hp.rng_seed << '\n';
  out << "init " << (file.hp.init == Init::kRandom ? "random" : "spectral")
      << '\n';
  out << "trace " << file.trace.size() << '\n';
  for (double v : file.trace) out << format_double(v) << '\n';
  out << "status " << (file.converged ? 1 : 0) << ' ' << file.iterations << '\n';
  out << "U\n";
  for (Index i = 0; i < model.U.rows(); ++i) {
    for (Index k = 0; k < model.U.cols(); ++k) {
      if (k) out << ' ';
      out << format_double(model.U(i, k));
    }
    out << '\n';
  }
  write_coords(out, "V", model.V);
  write_coords(out, "E", model.E);
  out << "end\n";
}

void write_model(const fs::path& path, const ModelFile& file) {
  write_atomically(path, [&](std::ostream& out) { write_model(out, file); });
}

ModelFile read_model(std::istream& in, const std::string& source) {
  LineReader r(in, source);
  std::string line;
  auto need = [&](const char* what) {
    if (!r.next(line)) r.fail(std::string("truncated: missing ") + what);
    return split_ws(line);
  };

  auto tok = need("header");
  if (tok.size() != 2 || tok[0] != "%%TagCompleteModel") {
    r.fail("not a model file");
  }
  if (parse_int(r, tok[1]) != kModelVersion) {
    r.fail("unsupported model version " + std::string(tok[1]));
  }
  tok = need("dims");
  expect_keyword(r, tok, "dims", 3);
  const long long n = parse_int(r, tok[1]);
  const long long m = parse_int(r, tok[2]);
  const long long k = parse_int(r, tok[3]);
  if (n < 0 || m < 0 || k < 0) r.fail("negative dimensions");

  ModelFile file;
  tok = need("hyperparams");
  expect_keyword(r, tok, "hyperparams", 1);
  const long long count = parse_int(r, tok[1]);
  for (long long p = 0; p < count; ++p) {
    tok = need("hyperparameter");
    if (tok.size() != 2) r.fail("malformed hyperparameter line");
    bool known = false;
    for (const auto& [name, member] : kRealParams) {
      if (tok[0] == name) {
        file.hp.*member = parse_double(r, tok[1]);
        known = true;
      }
    }
    for (const auto& [name, member] : kIntParams) {
      if (tok[0] == name) {
        file.hp.*member = static_cast<Index>(parse_int(r, tok[1]));
        known = true;
      }
    }
    if (tok[0] == "seed") {
      std::uint64_t seed = 0;
      auto [ptr, ec] = std::from_chars(tok[1].data(), tok[1].data() + tok[1].size(), seed);
      if (ec != std::errc() || ptr != tok[1].data() + tok[1].size()) r.fail("bad seed");
      file.hp.rng_seed = seed;
      known = true;
    }
    if (tok[0] == "init") {
      if (tok[1] == "random") file.hp.init = Init::kRandom;
      else if (tok[1] == "spectral") file.hp.init = Init::kSpectral;
      else r.fail("bad init '" + std::string(tok[1]) + "'");
      known = true;
    }
    if (!known) r.fail("unknown hyperparameter '" + std::string(tok[0]) + "'");
  }

  tok = need("trace");
  expect_keyword(r, tok, "trace", 1);
  const long long trace_len = parse_int(r, tok[1]);
  if (trace_len < 0) r.fail("negative trace length");
  for (long long t = 0; t < trace_len; ++t) {
    tok = need("trace value");
    if (tok.size() != 1) r.fail("malformed trace value");
    file.trace.push_back(parse_double(r, tok[0]));
  }
  tok = need("status");
  expect_keyword(r, tok, "status", 2);
  file.converged = parse_int(r, tok[1]) != 0;
  file.iterations = static_cast<Index>(parse_int(r, tok[2]));

  tok = need("U");
  expect_keyword(r, tok, "U", 0);
  file.model.U.resize(n, k);
  for (long long i = 0; i < n; ++i) {
    tok = need("U row");
    if (static_cast<long long>(tok.size()) != k) r.fail("U row has wrong width");
    for (long long c = 0; c < k; ++c) file.model.U(i, c) = parse_double(r, tok[c]);
  }
  file.model.V = read_coords(r, "V", k, m);
  file.model.E = read_coords(r, "E", n, m);
  tok = need("end marker");
  expect_keyword(r, tok, "end", 0);
  return file;
}

ModelFile read_model(const fs::path& path) {
  auto in = open_in(path);
  return read_model(in, path.string());
}

// Split ----------------------------------------------------------------------

void write_split(std::ostream& out, const metrics::EvalSplit& split) {
  const auto observed = split.observed.tags_per_image();
  std::vector<char> is_test(observed.size(), 0);
  for (Index i : split.test_images) is_test[static_cast<size_t>(i)] = 1;
  out << "%%TagCompleteSplit " << kSplitVersion << '\n';
  out << "dims " << split.observed.n_images() << ' ' << split.observed.n_tags()
      << '\n';
  for (size_t i = 0; i < observed.size(); ++i) {
    out << "image " << i << ' ' << int(is_test[i]) << " observed "
        << observed[i].size();
    for (Index t : observed[i]) out << ' ' << t;
    out << " deleted " << split.deleted[i].size();
    for (Index t : split.deleted[i]) out << ' ' << t;
    out << '\n';
  }
}

void write_split(const fs::path& path, const metrics::EvalSplit& split) {
  write_atomically(path, [&](std::ostream& out) { write_split(out, split); });
}

metrics::EvalSplit read_split(std::istream& in, const std::string& source) {
  LineReader r(in, source);
  std::string line;
  if (!r.next(line)) r.fail("empty file");
  auto tok = split_ws(line);
  if (tok.size() != 2 || tok[0] != "%%TagCompleteSplit") r.fail("not a split file");
  if (parse_int(r, tok[1]) != kSplitVersion) {
    r.fail("unsupported split version " + std::string(tok[1]));
  }
  if (!r.next(line)) r.fail("truncated: missing dims");
  tok = split_ws(line);
  expect_keyword(r, tok, "dims", 2);
  const long long n = parse_int(r, tok[1]);
  const long long m = parse_int(r, tok[2]);
  if (n < 0 || m < 0) r.fail("negative dimensions");

  metrics::EvalSplit split;
  split.deleted.resize(static_cast<size_t>(n));
  std::vector<std::pair<Index, Index>> pairs;
  for (long long i = 0; i < n; ++i) {
    if (!r.next(line)) r.fail("truncated: expected " + std::to_string(n) + " images");
    tok = split_ws(line);
    size_t at = 0;
    auto take = [&]() -> std::string_view {
      if (at >= tok.size()) r.fail("image line ends early");
      return tok[at++];
    };
    auto tag = [&]() {
      const long long t = parse_int(r, take());
      if (t < 0 || t >= m) r.fail("tag index out of range");
      return static_cast<Index>(t);
    };
    if (take() != "image") r.fail("expected 'image'");
    if (parse_int(r, take()) != i) r.fail("images must be listed in order");
    const long long test = parse_int(r, take());
    if (test != 0 && test != 1) r.fail("test flag must be 0 or 1");
    if (take() != "observed") r.fail("expected 'observed'");
    const long long n_obs = parse_int(r, take());
    for (long long o = 0; o < n_obs; ++o) pairs.emplace_back(static_cast<Index>(i), tag());
    if (take() != "deleted") r.fail("expected 'deleted'");
    const long long n_del = parse_int(r, take());
    auto& del = split.deleted[static_cast<size_t>(i)];
    for (long long d = 0; d < n_del; ++d) del.push_back(tag());
    if (at != tok.size()) r.fail("trailing tokens on image line");
    std::sort(del.begin(), del.end());
    if (std::adjacent_find(del.begin(), del.end()) != del.end()) {
      r.fail("duplicate deleted tag");
    }
    if (test) split.test_images.push_back(static_cast<Index>(i));
  }
  split.observed = TaggingMatrix::from_pairs(static_cast<Index>(n),
                                             static_cast<Index>(m), pairs);
  split.validate();
  return split;
}

metrics::EvalSplit read_split(const fs::path& path) {
  auto in = open_in(path);
  return read_split(in, path.string());
}

}  // namespace tagcomplete::io
