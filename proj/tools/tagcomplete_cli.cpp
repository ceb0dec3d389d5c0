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

// Command-line front end. Talks to the library exclusively through the C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tagcomplete/tagcomplete.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct Failure {
  int code;
};

int exit_code_for(tc_status status) {
  switch (status) {
    case TC_OK:
      return kExitOk;
    case TC_ERR_NONCONVERGENCE:
    case TC_ERR_NUMERICAL:
      return kExitNumerical;
    case TC_ERR_INTERNAL:
      return kExitInternal;
    default:
      return kExitUsage;
  }
}

void check(tc_status status, const char* context) {
  if (status == TC_OK) return;
  std::cerr << "error: " << context << ": " << tc_last_error() << '\n';
  throw Failure{exit_code_for(status)};
}

[[noreturn]] void usage_error(const std::string& what) {
  std::cerr << "error: " << what << '\n';
  throw Failure{kExitUsage};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Sparse = std::unique_ptr<tc_sparse, Deleter<tc_sparse, tc_sparse_free>>;
using Dense = std::unique_ptr<tc_dense, Deleter<tc_dense, tc_dense_free>>;
using Model = std::unique_ptr<tc_model, Deleter<tc_model, tc_model_free>>;
using Split = std::unique_ptr<tc_split, Deleter<tc_split, tc_split_free>>;
using Manifest =
    std::unique_ptr<tc_manifest, Deleter<tc_manifest, tc_manifest_free>>;

Sparse read_sparse(const std::string& path) {
  tc_sparse* m = nullptr;
  check(tc_sparse_read(path.c_str(), &m), path.c_str());
  return Sparse(m);
}

Dense read_dense(const std::string& path) {
  tc_dense* m = nullptr;
  check(tc_dense_read(path.c_str(), &m), path.c_str());
  return Dense(m);
}

// Scores may be dense CSV or MatrixMarket.
Dense read_scores(const std::string& path) {
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  if (first.rfind("%%MatrixMarket", 0) != 0) return read_dense(path);
  Sparse sparse = read_sparse(path);
  const int64_t rows = tc_sparse_rows(sparse.get());
  const int64_t cols = tc_sparse_cols(sparse.get());
  const auto nnz = static_cast<size_t>(tc_sparse_nnz(sparse.get()));
  std::vector<int64_t> r(nnz), c(nnz);
  std::vector<double> v(nnz);
  tc_sparse_triplets(sparse.get(), nnz, r.data(), c.data(), v.data());
  std::vector<double> dense(static_cast<size_t>(rows * cols), 0.0);
  for (size_t e = 0; e < nnz; ++e) {
    dense[static_cast<size_t>(r[e] * cols + c[e])] = v[e];
  }
  tc_dense* out = nullptr;
  check(tc_dense_from_rows(rows, cols, dense.data(), &out), path.c_str());
  return Dense(out);
}

unsigned threads_from_env() {
  const char* env = std::getenv("TAGCOMPLETE_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 0) usage_error("TAGCOMPLETE_THREADS must be >= 0");
  return static_cast<unsigned>(v);
}

void print_structure_summary(const char* kind, const tc_structure_summary& s) {
  std::cout << "structure=" << kind << '\n'
            << "items=" << s.items << '\n'
            << "nnz=" << s.nnz << '\n'
            << "max_item_nnz=" << s.max_item_nnz << '\n'
            << "skipped=" << s.skipped << '\n'
            << "kkt_max=" << s.max_kkt << '\n'
            << "kkt_mean=" << s.mean_kkt << '\n';
}

std::string metric_lines(const tc_metrics& m, int64_t n,
                         const std::string& prefix = "") {
  std::ostringstream os;
  os.precision(6);
  os << prefix << "AP@" << n << '=' << m.ap << '\n'
     << prefix << "AR@" << n << '=' << m.ar << '\n'
     << prefix << "C@" << n << '=' << m.c << '\n';
  return os.str();
}

void write_file(const std::string& text, const std::string& out_path) {
  const std::string tmp = out_path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) usage_error("cannot write " + out_path);
    out << text;
  }
  if (std::rename(tmp.c_str(), out_path.c_str()) != 0) {
    usage_error("cannot write " + out_path);
  }
}

void emit(const std::string& text, const std::string& out_path) {
  std::cout << text;
  if (!out_path.empty()) write_file(text, out_path);
}

// build-structure -------------------------------------------------------------

struct BuildArgs {
  std::string features;
  std::string tags;
  std::string mode;
  std::string out;
  int64_t knn = 200;
  double alpha = 1.0;
  double mu = 1.0;
  bool tags_as_features = false;
  bool no_normalize = false;
};

int run_build(const BuildArgs& a) {
  tc_hyperparams hp;
  tc_hyperparams_default(&hp);
  hp.knn_k = a.knn;
  hp.alpha = a.alpha;
  hp.mu = a.mu;
  hp.tags_as_features = a.tags_as_features ? 1 : 0;
  hp.normalize_features = a.no_normalize ? 0 : 1;
  hp.threads = threads_from_env();

  tc_sparse* out = nullptr;
  tc_structure_summary summary{};
  if (a.mode == "s") {
    if (a.features.empty()) usage_error("--mode s needs --features");
    Dense x = read_dense(a.features);
    Sparse tags;
    if (a.tags_as_features) {
      if (a.tags.empty()) usage_error("--tags-as-features needs --tags");
      tags = read_sparse(a.tags);
    }
    check(tc_build_s(x.get(), tags.get(), &hp, &out, &summary), "build S");
  } else {
    if (a.tags.empty()) usage_error("--mode t needs --tags");
    Sparse d = read_sparse(a.tags);
    check(tc_build_t(d.get(), &hp, &out, &summary), "build T");
  }
  Sparse result(out);
  check(tc_sparse_write(result.get(), a.out.c_str()), a.out.c_str());
  print_structure_summary(a.mode == "s" ? "S" : "T", summary);
  return kExitOk;
}

// complete --------------------------------------------------------------------

struct CompleteArgs {
  std::string manifest;
  std::string config;
  std::string tags;
  std::string s;
  std::string t;
  std::string out_model;
  std::string out_scores;
  std::string out_trace;
  int64_t K = 100;
  double lambda = 0.5;
  double gamma = 1.0;
  double beta = 0.7;
  double eta = 1.0;
  bool reinit = true;
  uint64_t seed = 0;
  int64_t max_iters = 500;
  double rel_tol = 1e-5;
  int64_t sweeps = 1;
  std::string init = "spectral";
  bool sparse_out = false;
};

void print_trace(const std::vector<double>& trace, size_t tail) {
  const size_t start = trace.size() > tail ? trace.size() - tail : 0;
  for (size_t i = start; i < trace.size(); ++i) {
    std::cout << "trace[" << i + 1 << "]=" << trace[i] << '\n';
  }
}

int run_complete(const CompleteArgs& a, const CLI::App& cmd) {
  tc_hyperparams hp;
  tc_hyperparams_default(&hp);
  hp.threads = threads_from_env();

  std::string tags_path = a.tags;
  std::string s_path = a.s;
  std::string t_path = a.t;
  if (!a.manifest.empty()) {
    tc_manifest* raw = nullptr;
    check(tc_manifest_read(a.manifest.c_str(), &raw), a.manifest.c_str());
    Manifest m(raw);
    auto pick = [&](std::string& dst, const char* key) {
      const char* p = tc_manifest_path(m.get(), key);
      if (dst.empty() && p) dst = p;
    };
    pick(tags_path, "tags");
    pick(s_path, "s");
    pick(t_path, "t");
    check(tc_manifest_apply_overrides(m.get(), &hp), "manifest overrides");
  }
  if (!a.config.empty()) {
    check(tc_config_read(a.config.c_str(), &hp, nullptr), a.config.c_str());
  }
  // Explicit flags win over manifest and config values.
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--K")) hp.K = a.K;
  if (given("--lambda")) hp.lambda = a.lambda;
  if (given("--gamma")) hp.gamma = a.gamma;
  if (given("--beta")) hp.beta = a.beta;
  if (given("--eta")) hp.eta = a.eta;
  if (given("--seed")) hp.rng_seed = a.seed;
  if (given("--max-iters")) hp.max_outer_iters = a.max_iters;
  if (given("--rel-tol")) hp.rel_tol = a.rel_tol;
  if (given("--sweeps")) hp.sweeps_per_block = a.sweeps;
  if (given("--init")) {
    hp.init = a.init == "random" ? TC_INIT_RANDOM : TC_INIT_SPECTRAL;
  }

  if (tags_path.empty() || s_path.empty() || t_path.empty()) {
    usage_error("complete needs --tags, --s and --t (or a --manifest)");
  }
  Sparse d = read_sparse(tags_path);
  Sparse s = read_sparse(s_path);
  Sparse t = read_sparse(t_path);
  if (a.reinit) {
    tc_sparse* re = nullptr;
    check(tc_reinitialize(d.get(), s.get(), t.get(), &re), "re-initialize");
    d.reset(re);
  }

  tc_model* raw_model = nullptr;
  tc_fit_summary summary{};
  const tc_status status =
      tc_fit(d.get(), s.get(), t.get(), &hp, &raw_model, &summary);
  if (status == TC_ERR_NUMERICAL) {
    const double* values = nullptr;
    const size_t n = tc_last_error_trace(&values);
    std::cerr << "error: " << tc_last_error() << '\n';
    for (size_t i = 0; i < n; ++i) {
      std::cerr << "trace[" << i + 1 << "]=" << values[i] << '\n';
    }
    return kExitNumerical;
  }
  check(status, "fit");
  Model model(raw_model);

  std::vector<double> trace(tc_model_trace(model.get(), 0, nullptr));
  tc_model_trace(model.get(), trace.size(), trace.data());

  if (!a.out_model.empty()) {
    check(tc_model_write(model.get(), a.out_model.c_str()), a.out_model.c_str());
  }
  if (!a.out_scores.empty()) {
    tc_dense* raw_scores = nullptr;
    check(tc_model_scores(model.get(), &raw_scores), "scores");
    Dense scores(raw_scores);
    if (a.sparse_out) {
      const int64_t rows = tc_dense_rows(scores.get());
      const int64_t cols = tc_dense_cols(scores.get());
      std::vector<double> values(static_cast<size_t>(rows * cols));
      tc_dense_copy(scores.get(), values.data());
      std::vector<int64_t> r, c;
      std::vector<double> v;
      for (int64_t i = 0; i < rows; ++i) {
        for (int64_t j = 0; j < cols; ++j) {
          const double x = values[static_cast<size_t>(i * cols + j)];
          if (x == 0.0) continue;
          r.push_back(i);
          c.push_back(j);
          v.push_back(x);
        }
      }
      tc_sparse* raw = nullptr;
      check(tc_sparse_from_triplets(rows, cols, v.size(), r.data(), c.data(),
                                    v.data(), &raw),
            "sparse scores");
      Sparse sparse(raw);
      check(tc_sparse_write(sparse.get(), a.out_scores.c_str()),
            a.out_scores.c_str());
    } else {
      check(tc_dense_write(scores.get(), a.out_scores.c_str()),
            a.out_scores.c_str());
    }
  }
  if (!a.out_trace.empty()) {
    std::ostringstream os;
    os.precision(17);
    for (double v : trace) os << v << '\n';
    write_file(os.str(), a.out_trace);
  }

  std::cout.precision(10);
  std::cout << "converged=" << summary.converged << '\n'
            << "iterations=" << summary.iterations << '\n'
            << "initial_objective=" << summary.initial_objective << '\n'
            << "final_objective=" << summary.final_objective << '\n'
            << "relative_residual=" << summary.relative_residual << '\n'
            << "max_column_norm=" << summary.max_column_norm << '\n'
            << "skipped_coordinates=" << summary.skipped_coordinates << '\n';
  print_trace(trace, 5);
  return kExitOk;
}

// evaluate --------------------------------------------------------------------

struct EvaluateArgs {
  std::string scores;
  std::string split;
  std::string out;
  int64_t n = 2;
  bool include_observed = false;
};

int run_evaluate(const EvaluateArgs& a) {
  Dense scores = read_scores(a.scores);
  tc_split* raw = nullptr;
  check(tc_split_read(a.split.c_str(), &raw), a.split.c_str());
  Split split(raw);
  tc_metrics m{};
  check(tc_evaluate(scores.get(), split.get(), a.n, a.include_observed ? 0 : 1, &m),
        "evaluate");
  if (m.truncated) {
    std::cerr << "warning: some images had fewer than " << a.n
              << " candidate tags\n";
  }
  emit(metric_lines(m, a.n), a.out);
  return kExitOk;
}

// synth-bench -----------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::string out;
  std::string out_dir;
  uint64_t seed = 0;
  bool reinit = true;
};

int run_bench(const BenchArgs& a, const CLI::App& cmd) {
  tc_hyperparams hp;
  tc_hyperparams_default(&hp);
  tc_synth_config cfg;
  tc_synth_config_default(&cfg);
  if (!a.config.empty()) {
    check(tc_config_read(a.config.c_str(), &hp, &cfg), a.config.c_str());
  }
  if (cmd.count("--seed")) {
    hp.rng_seed = a.seed;
    cfg.rng_seed = a.seed;
  }
  hp.threads = threads_from_env();

  tc_sparse* raw_truth = nullptr;
  tc_dense* raw_features = nullptr;
  check(tc_synth_generate(&cfg, &raw_truth, &raw_features), "generate");
  Sparse truth(raw_truth);
  Dense features(raw_features);

  tc_split* raw_split = nullptr;
  check(tc_synth_delete(truth.get(), cfg.delete_fraction, cfg.rng_seed + 1,
                        &raw_split),
        "delete tags");
  Split split(raw_split);
  tc_sparse* raw_observed = nullptr;
  check(tc_split_observed(split.get(), &raw_observed), "observed");
  Sparse observed(raw_observed);

  tc_sparse* raw = nullptr;
  check(tc_build_s(features.get(), observed.get(), &hp, &raw, nullptr), "build S");
  Sparse s(raw);
  check(tc_build_t(observed.get(), &hp, &raw, nullptr), "build T");
  Sparse t(raw);
  Sparse d;
  if (a.reinit) {
    check(tc_reinitialize(observed.get(), s.get(), t.get(), &raw), "re-initialize");
    d.reset(raw);
  }
  const tc_sparse* fed = a.reinit ? d.get() : observed.get();

  tc_model* raw_model = nullptr;
  tc_fit_summary summary{};
  check(tc_fit(fed, s.get(), t.get(), &hp, &raw_model, &summary), "fit");
  Model model(raw_model);
  tc_dense* raw_scores = nullptr;
  check(tc_model_scores(model.get(), &raw_scores), "scores");
  Dense scores(raw_scores);

  tc_metrics completed{};
  tc_metrics baseline{};
  double chance = 0.0;
  check(tc_evaluate(scores.get(), split.get(), cfg.eval_n, 1, &completed),
        "evaluate");
  check(tc_evaluate_permuted(scores.get(), split.get(), cfg.eval_n, 1,
                             cfg.rng_seed + 2, &baseline),
        "baseline");
  check(tc_chance_recall(split.get(), cfg.eval_n, 1, &chance), "chance");

  if (!a.out_dir.empty()) {
    const std::string dir = a.out_dir + "/";
    auto path = [&](const char* name) { return dir + name; };
    check(tc_sparse_write(truth.get(), path("truth.mtx").c_str()), "write");
    check(tc_sparse_write(observed.get(), path("observed.mtx").c_str()), "write");
    check(tc_dense_write(features.get(), path("features.csv").c_str()), "write");
    check(tc_split_write(split.get(), path("split.txt").c_str()), "write");
    check(tc_sparse_write(s.get(), path("S.mtx").c_str()), "write");
    check(tc_sparse_write(t.get(), path("T.mtx").c_str()), "write");
    check(tc_model_write(model.get(), path("model.txt").c_str()), "write");
    check(tc_dense_write(scores.get(), path("scores.csv").c_str()), "write");
  }

  std::ostringstream os;
  os.precision(6);
  os << "n_images=" << cfg.n_images << '\n'
     << "n_tags=" << cfg.n_tags << '\n'
     << "K=" << hp.K << '\n'
     << "converged=" << summary.converged << '\n'
     << "iterations=" << summary.iterations << '\n'
     << "final_objective=" << summary.final_objective << '\n'
     << metric_lines(completed, cfg.eval_n)
     << metric_lines(baseline, cfg.eval_n, "baseline_")
     << "chance_AR@" << cfg.eval_n << '=' << chance << '\n';
  emit(os.str(), a.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tag completion by low-rank factorization with local "
               "reconstruction structure"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tc_version()));

  BuildArgs build;
  auto* build_cmd = app.add_subcommand(
      "build-structure", "Learn the S (feature) or T (tag) structure matrix");
  build_cmd->add_option("--features", build.features, "Feature CSV (mode s)");
  build_cmd->add_option("--tags", build.tags, "Tagging MatrixMarket file");
  build_cmd->add_option("--mode", build.mode, "s or t")
      ->required()
      ->check(CLI::IsMember({"s", "t"}));
  build_cmd->add_option("--knn", build.knn, "Neighbors per item")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  build_cmd->add_option("--alpha", build.alpha, "L1 weight for S")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  build_cmd->add_option("--mu", build.mu, "L1 weight for T")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  build_cmd->add_flag("--tags-as-features", build.tags_as_features,
                      "Append tag indicators to the features (mode s)");
  build_cmd->add_flag("--no-normalize", build.no_normalize,
                      "Skip L2 row normalization of the features");
  build_cmd->add_option("--out", build.out, "Output MatrixMarket file")
      ->required();

  CompleteArgs complete;
  auto* complete_cmd =
      app.add_subcommand("complete", "Fit the factor model and write scores");
  complete_cmd->add_option("--manifest", complete.manifest,
                           "Manifest naming tags/s/t and overrides");
  complete_cmd->add_option("--config", complete.config,
                           "key=value hyperparameter file");
  complete_cmd->add_option("--tags", complete.tags, "Tagging MatrixMarket file");
  complete_cmd->add_option("--s", complete.s, "S MatrixMarket file");
  complete_cmd->add_option("--t", complete.t, "T MatrixMarket file");
  complete_cmd->add_option("--K", complete.K, "Basis count")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  complete_cmd->add_option("--lambda", complete.lambda, "Tag-structure weight")
      ->capture_default_str();
  complete_cmd->add_option("--gamma", complete.gamma, "Feature-structure weight")
      ->capture_default_str();
  complete_cmd->add_option("--beta", complete.beta, "L1 weight on E")
      ->capture_default_str();
  complete_cmd->add_option("--eta", complete.eta, "L1 weight on V")
      ->capture_default_str();
  complete_cmd->add_option("--reinit", complete.reinit,
                           "Replace D by (SD + DT)/2 before fitting")
      ->capture_default_str();
  complete_cmd->add_option("--seed", complete.seed, "Initialization seed")
      ->capture_default_str();
  complete_cmd->add_option("--max-iters", complete.max_iters, "Outer iterations")
      ->capture_default_str();
  complete_cmd->add_option("--rel-tol", complete.rel_tol,
                           "Relative objective decrease for convergence")
      ->capture_default_str();
  complete_cmd->add_option("--sweeps", complete.sweeps,
                           "Coordinate sweeps per block")
      ->capture_default_str();
  complete_cmd->add_option("--init", complete.init,
                           "Starting basis: spectral or random")
      ->check(CLI::IsMember({"spectral", "random"}))
      ->capture_default_str();
  complete_cmd->add_option("--out-model", complete.out_model, "Model file");
  complete_cmd->add_option("--out-scores", complete.out_scores,
                           "Completed scores UV (CSV)");
  complete_cmd->add_option("--out-trace", complete.out_trace,
                           "Objective trace, one value per line");
  complete_cmd->add_flag("--sparse-out", complete.sparse_out,
                         "Write scores as MatrixMarket");

  EvaluateArgs evaluate;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "AP@N, AR@N and C@N against a split");
  evaluate_cmd->add_option("--scores", evaluate.scores, "Score matrix")
      ->required();
  evaluate_cmd->add_option("--split", evaluate.split, "Split file")->required();
  evaluate_cmd->add_option("--n", evaluate.n, "Cutoff N")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  evaluate_cmd->add_option("--out", evaluate.out, "Also write the report here");
  evaluate_cmd->add_flag("--include-observed", evaluate.include_observed,
                         "Rank observed tags as candidates too");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand(
      "synth-bench", "Generate a planted instance and run the full pipeline");
  bench_cmd->add_option("--config", bench.config,
                        "key=value synth and hyperparameter file");
  bench_cmd->add_option("--seed", bench.seed, "Seed for data and solver");
  bench_cmd->add_option("--out", bench.out, "Also write the report here");
  bench_cmd->add_option("--out-dir", bench.out_dir,
                        "Existing directory to dump the instance and results");
  bench_cmd->add_option("--reinit", bench.reinit,
                        "Re-initialize D before fitting")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*build_cmd) return run_build(build);
    if (*complete_cmd) return run_complete(complete, *complete_cmd);
    if (*evaluate_cmd) return run_evaluate(evaluate);
    if (*bench_cmd) return run_bench(bench, *bench_cmd);
  } catch (const Failure& f) {
    return f.code;
  }
  return kExitUsage;
}
