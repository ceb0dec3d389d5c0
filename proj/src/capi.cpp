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

#include "tagcomplete/tagcomplete.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include "tagcomplete/core.hpp"
#include "tagcomplete/io.hpp"
#include "tagcomplete/metrics.hpp"
#include "tagcomplete/solver.hpp"
#include "tagcomplete/structure.hpp"
#include "tagcomplete/synth.hpp"

using namespace tagcomplete;

struct tc_sparse {
  SparseMatrix m;
};
struct tc_dense {
  DenseMatrix m;
};
struct tc_model {
  io::ModelFile file;
};
struct tc_split {
  metrics::EvalSplit split;
};
struct tc_manifest {
  io::Manifest manifest;
  std::string tags, features, s, t, overrides;
};

namespace {

thread_local std::string last_error;
thread_local std::vector<double> last_trace;

template <typename Fn>
tc_status guarded(Fn&& fn) {
  last_error.clear();
  last_trace.clear();
  try {
    fn();
    return TC_OK;
  } catch (const NumericalError& e) {
    last_error = e.what();
    last_trace = e.trace();
    return TC_ERR_NUMERICAL;
  } catch (const NonConvergence& e) {
    last_error = e.what();
    return TC_ERR_NONCONVERGENCE;
  } catch (const DimensionError& e) {
    last_error = e.what();
    return TC_ERR_DIMENSION;
  } catch (const ParseError& e) {
    last_error = e.what();
    return TC_ERR_PARSE;
  } catch (const IoError& e) {
    last_error = e.what();
    return TC_ERR_IO;
  } catch (const Error& e) {
    last_error = e.what();
    return TC_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    last_error = e.what();
    return TC_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return TC_ERR_INTERNAL;
  }
}

template <typename T>
const T& deref(const T* p, const char* what) {
  if (p == nullptr) throw InvalidArgument(std::string(what) + " is NULL");
  return *p;
}

void require_out(const void* p, const char* what) {
  if (p == nullptr) throw InvalidArgument(std::string(what) + " is NULL");
}

Hyperparams to_cpp(const tc_hyperparams* c) {
  const tc_hyperparams& h = deref(c, "hyperparams");
  Hyperparams hp;
  hp.alpha = h.alpha;
  hp.mu = h.mu;
  hp.beta = h.beta;
  hp.gamma = h.gamma;
  hp.lambda = h.lambda;
  hp.eta = h.eta;
  hp.K = h.K;
  hp.knn_k = h.knn_k;
  hp.max_outer_iters = h.max_outer_iters;
  hp.rel_tol = h.rel_tol;
  hp.rng_seed = h.rng_seed;
  hp.sweeps_per_block = h.sweeps_per_block;
  hp.lasso_tol = h.lasso_tol;
  hp.lasso_max_iters = h.lasso_max_iters;
  hp.normalize_features = h.normalize_features != 0;
  hp.tags_as_features = h.tags_as_features != 0;
  hp.threads = h.threads;
  if (h.init != TC_INIT_SPECTRAL && h.init != TC_INIT_RANDOM) {
    throw InvalidArgument("init must be TC_INIT_SPECTRAL or TC_INIT_RANDOM");
  }
  hp.init = h.init == TC_INIT_RANDOM ? Init::kRandom : Init::kSpectral;
  return hp;
}

void from_cpp(const Hyperparams& hp, tc_hyperparams* out) {
  out->alpha = hp.alpha;
  out->mu = hp.mu;
  out->beta = hp.beta;
  out->gamma = hp.gamma;
  out->lambda = hp.lambda;
  out->eta = hp.eta;
  out->K = hp.K;
  out->knn_k = hp.knn_k;
  out->max_outer_iters = hp.max_outer_iters;
  out->rel_tol = hp.rel_tol;
  out->rng_seed = hp.rng_seed;
  out->sweeps_per_block = hp.sweeps_per_block;
  out->lasso_tol = hp.lasso_tol;
  out->lasso_max_iters = hp.lasso_max_iters;
  out->normalize_features = hp.normalize_features ? 1 : 0;
  out->tags_as_features = hp.tags_as_features ? 1 : 0;
  out->threads = hp.threads;
  out->init = hp.init == Init::kRandom ? TC_INIT_RANDOM : TC_INIT_SPECTRAL;
}

synth::SynthConfig to_cpp(const tc_synth_config* c) {
  const tc_synth_config& s = deref(c, "synth config");
  synth::SynthConfig cfg;
  cfg.n_images = s.n_images;
  cfg.n_tags = s.n_tags;
  cfg.n_topics = s.n_topics;
  cfg.tags_per_image = s.tags_per_image;
  cfg.feature_dim = s.feature_dim;
  cfg.feature_noise = s.feature_noise;
  cfg.delete_fraction = s.delete_fraction;
  cfg.off_topic_prob = s.off_topic_prob;
  cfg.popularity_exponent = s.popularity_exponent;
  cfg.rng_seed = s.rng_seed;
  return cfg;
}

void from_cpp(const synth::SynthConfig& cfg, tc_synth_config* out) {
  out->n_images = cfg.n_images;
  out->n_tags = cfg.n_tags;
  out->n_topics = cfg.n_topics;
  out->tags_per_image = cfg.tags_per_image;
  out->feature_dim = cfg.feature_dim;
  out->feature_noise = cfg.feature_noise;
  out->delete_fraction = cfg.delete_fraction;
  out->off_topic_prob = cfg.off_topic_prob;
  out->popularity_exponent = cfg.popularity_exponent;
  out->rng_seed = cfg.rng_seed;
}

StructureMatrix as_structure(const tc_sparse* p, Orientation orientation,
                             const char* what) {
  StructureMatrix s;
  s.coeffs = deref(p, what).m;
  s.orientation = orientation;
  s.validate();
  return s;
}

tc_structure_summary summarize(const structure::BuildReport& report,
                               bool by_column) {
  tc_structure_summary out{};
  const SparseMatrix& m = report.matrix.coeffs;
  out.items = m.rows();
  out.nnz = m.nonZeros();
  out.skipped = static_cast<int64_t>(report.skipped.size());
  std::vector<int64_t> counts(static_cast<size_t>(m.rows()), 0);
  for (Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      ++counts[static_cast<size_t>(by_column ? it.col() : it.row())];
    }
  }
  for (int64_t c : counts) out.max_item_nnz = std::max(out.max_item_nnz, c);
  double sum = 0.0;
  for (double r : report.kkt_residuals) {
    out.max_kkt = std::max(out.max_kkt, r);
    sum += r;
  }
  out.mean_kkt = report.kkt_residuals.empty()
                     ? 0.0
                     : sum / static_cast<double>(report.kkt_residuals.size());
  return out;
}

}  // namespace

extern "C" {

TC_API const char* tc_version(void) { return "1.0.0"; }

TC_API const char* tc_last_error(void) { return last_error.c_str(); }

TC_API size_t tc_last_error_trace(const double** values) {
  if (values) *values = last_trace.data();
  return last_trace.size();
}

TC_API void tc_hyperparams_default(tc_hyperparams* hp) {
  if (hp) from_cpp(Hyperparams{}, hp);
}

TC_API void tc_synth_config_default(tc_synth_config* cfg) {
  if (!cfg) return;
  from_cpp(synth::SynthConfig{}, cfg);
  cfg->eval_n = 2;
}

// Sparse ---------------------------------------------------------------------

TC_API tc_status tc_sparse_read(const char* path, tc_sparse** out) {
  return guarded([&] {
    require_out(path, "path");
    require_out(out, "out");
    *out = new tc_sparse{io::read_sparse_matrix(path)};
  });
}

TC_API tc_status tc_sparse_write(const tc_sparse* m, const char* path) {
  return guarded([&] {
    require_out(path, "path");
    io::write_sparse_matrix(path, deref(m, "matrix").m);
  });
}

TC_API tc_status tc_sparse_from_triplets(int64_t rows, int64_t cols,
                                         size_t count, const int64_t* row_idx,
                                         const int64_t* col_idx,
                                         const double* values,
                                         tc_sparse** out) {
  return guarded([&] {
    require_out(out, "out");
    if (rows < 0 || cols < 0) throw InvalidArgument("negative dimensions");
    if (count > 0) {
      require_out(row_idx, "row_idx");
      require_out(col_idx, "col_idx");
      require_out(values, "values");
    }
    std::vector<Triplet> triplets;
    triplets.reserve(count);
    for (size_t e = 0; e < count; ++e) {
      if (row_idx[e] < 0 || row_idx[e] >= rows || col_idx[e] < 0 ||
          col_idx[e] >= cols) {
        throw InvalidArgument("triplet " + std::to_string(e) + " out of range");
      }
      if (!std::isfinite(values[e])) {
        throw InvalidArgument("triplet " + std::to_string(e) + " is not finite");
      }
      triplets.emplace_back(row_idx[e], col_idx[e], values[e]);
    }
    SparseMatrix m(rows, cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    *out = new tc_sparse{std::move(m)};
  });
}

TC_API int64_t tc_sparse_rows(const tc_sparse* m) { return m ? m->m.rows() : 0; }
TC_API int64_t tc_sparse_cols(const tc_sparse* m) { return m ? m->m.cols() : 0; }
TC_API int64_t tc_sparse_nnz(const tc_sparse* m) {
  return m ? m->m.nonZeros() : 0;
}

TC_API size_t tc_sparse_triplets(const tc_sparse* m, size_t capacity,
                                 int64_t* row_idx, int64_t* col_idx,
                                 double* values) {
  if (!m) return 0;
  size_t at = 0;
  for (Index k = 0; k < m->m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m->m, k); it; ++it, ++at) {
      if (at >= capacity) continue;
      if (row_idx) row_idx[at] = it.row();
      if (col_idx) col_idx[at] = it.col();
      if (values) values[at] = it.value();
    }
  }
  return static_cast<size_t>(m->m.nonZeros());
}

TC_API void tc_sparse_free(tc_sparse* m) { delete m; }

// Dense ----------------------------------------------------------------------

TC_API tc_status tc_dense_read(const char* path, tc_dense** out) {
  return guarded([&] {
    require_out(path, "path");
    require_out(out, "out");
    *out = new tc_dense{io::read_dense_matrix(path)};
  });
}

TC_API tc_status tc_dense_write(const tc_dense* m, const char* path) {
  return guarded([&] {
    require_out(path, "path");
    io::write_dense_matrix(path, deref(m, "matrix").m);
  });
}

TC_API tc_status tc_dense_from_rows(int64_t rows, int64_t cols,
                                   const double* row_major, tc_dense** out) {
  return guarded([&] {
    require_out(out, "out");
    if (rows < 0 || cols < 0) throw InvalidArgument("negative dimensions");
    if (rows * cols > 0) require_out(row_major, "row_major");
    DenseMatrix m(rows, cols);
    for (int64_t i = 0; i < rows; ++i) {
      for (int64_t j = 0; j < cols; ++j) m(i, j) = row_major[i * cols + j];
    }
    *out = new tc_dense{FeatureMatrix(std::move(m)).data()};
  });
}

TC_API int64_t tc_dense_rows(const tc_dense* m) { return m ? m->m.rows() : 0; }
TC_API int64_t tc_dense_cols(const tc_dense* m) { return m ? m->m.cols() : 0; }

TC_API void tc_dense_copy(const tc_dense* m, double* row_major) {
  if (!m || !row_major) return;
  for (Index i = 0; i < m->m.rows(); ++i) {
    for (Index j = 0; j < m->m.cols(); ++j) {
      row_major[i * m->m.cols() + j] = m->m(i, j);
    }
  }
}

TC_API void tc_dense_free(tc_dense* m) { delete m; }

// Structure ------------------------------------------------------------------

TC_API tc_status tc_build_s(const tc_dense* features, const tc_sparse* tags,
                            const tc_hyperparams* hp, tc_sparse** out,
                            tc_structure_summary* summary) {
  return guarded([&] {
    require_out(out, "out");
    const Hyperparams params = to_cpp(hp);
    const FeatureMatrix x(deref(features, "features").m);
    structure::BuildReport report;
    if (params.tags_as_features) {
      const TaggingMatrix d(deref(tags, "tags (needed for tags_as_features)").m);
      report = structure::build_S(x, d, params);
    } else {
      report = structure::build_S(x, params);
    }
    if (summary) *summary = summarize(report, false);
    *out = new tc_sparse{std::move(report.matrix.coeffs)};
  });
}

TC_API tc_status tc_build_t(const tc_sparse* tags, const tc_hyperparams* hp,
                            tc_sparse** out, tc_structure_summary* summary) {
  return guarded([&] {
    require_out(out, "out");
    const Hyperparams params = to_cpp(hp);
    const TaggingMatrix d(deref(tags, "tags").m);
    auto report = structure::build_T(d, params);
    if (summary) *summary = summarize(report, true);
    *out = new tc_sparse{std::move(report.matrix.coeffs)};
  });
}

TC_API tc_status tc_reinitialize(const tc_sparse* tags, const tc_sparse* s,
                                 const tc_sparse* t, tc_sparse** out) {
  return guarded([&] {
    require_out(out, "out");
    const TaggingMatrix d(deref(tags, "tags").m);
    const auto S = as_structure(s, Orientation::kRowReconstructs, "S");
    const auto T = as_structure(t, Orientation::kColumnReconstructs, "T");
    *out = new tc_sparse{structure::reinitialize(d, S, T).entries()};
  });
}

// Solver ---------------------------------------------------------------------

TC_API tc_status tc_fit(const tc_sparse* tags, const tc_sparse* s,
                        const tc_sparse* t, const tc_hyperparams* hp,
                        tc_model** out, tc_fit_summary* summary) {
  return guarded([&] {
    require_out(out, "out");
    const Hyperparams params = to_cpp(hp);
    const TaggingMatrix d(deref(tags, "tags").m);
    const auto S = as_structure(s, Orientation::kRowReconstructs, "S");
    const auto T = as_structure(t, Orientation::kColumnReconstructs, "T");
    auto report = solver::fit(d, S, T, params);
    if (summary) {
      tc_fit_summary sum{};
      sum.converged = report.converged ? 1 : 0;
      sum.iterations = report.iterations;
      sum.skipped_coordinates = report.skipped_coordinates;
      sum.initial_objective = report.initial_objective;
      sum.final_objective =
          report.trace.empty() ? report.initial_objective : report.trace.back();
      const DenseMatrix dense = d.to_dense();
      const double norm = dense.norm();
      sum.relative_residual =
          norm > 0.0 ? (dense - report.model.completed()).norm() / norm : 0.0;
      sum.max_column_norm = report.model.max_column_norm();
      *summary = sum;
    }
    auto* model = new tc_model;
    model->file.model = std::move(report.model);
    model->file.hp = params;
    model->file.trace = std::move(report.trace);
    model->file.converged = report.converged;
    model->file.iterations = report.iterations;
    *out = model;
  });
}

TC_API tc_status tc_objective(const tc_sparse* tags, const tc_sparse* s,
                              const tc_sparse* t, const tc_model* model,
                              const tc_hyperparams* hp, double* value) {
  return guarded([&] {
    require_out(value, "value");
    const TaggingMatrix d(deref(tags, "tags").m);
    const auto S = as_structure(s, Orientation::kRowReconstructs, "S");
    const auto T = as_structure(t, Orientation::kColumnReconstructs, "T");
    *value = objective(d, S, T, deref(model, "model").file.model, to_cpp(hp));
  });
}

TC_API tc_status tc_model_read(const char* path, tc_model** out) {
  return guarded([&] {
    require_out(path, "path");
    require_out(out, "out");
    auto* model = new tc_model{io::read_model(path)};
    try {
      model->file.model.validate();
    } catch (...) {
      delete model;
      throw;
    }
    *out = model;
  });
}

TC_API tc_status tc_model_write(const tc_model* model, const char* path) {
  return guarded([&] {
    require_out(path, "path");
    io::write_model(path, deref(model, "model").file);
  });
}

TC_API tc_status tc_model_scores(const tc_model* model, tc_dense** out) {
  return guarded([&] {
    require_out(out, "out");
    *out = new tc_dense{deref(model, "model").file.model.completed()};
  });
}

TC_API void tc_model_dims(const tc_model* model, int64_t* n_images,
                          int64_t* n_tags, int64_t* rank) {
  if (!model) return;
  if (n_images) *n_images = model->file.model.n_images();
  if (n_tags) *n_tags = model->file.model.n_tags();
  if (rank) *rank = model->file.model.rank();
}

TC_API int tc_model_converged(const tc_model* model) {
  return model && model->file.converged ? 1 : 0;
}

TC_API size_t tc_model_trace(const tc_model* model, size_t capacity,
                             double* values) {
  if (!model) return 0;
  const auto& trace = model->file.trace;
  if (values) {
    std::copy_n(trace.begin(), std::min(capacity, trace.size()), values);
  }
  return trace.size();
}

TC_API void tc_model_free(tc_model* model) { delete model; }

// Evaluation -----------------------------------------------------------------

TC_API tc_status tc_split_read(const char* path, tc_split** out) {
  return guarded([&] {
    require_out(path, "path");
    require_out(out, "out");
    *out = new tc_split{io::read_split(path)};
  });
}

TC_API tc_status tc_split_write(const tc_split* split, const char* path) {
  return guarded([&] {
    require_out(path, "path");
    io::write_split(path, deref(split, "split").split);
  });
}

TC_API tc_status tc_split_observed(const tc_split* split, tc_sparse** out) {
  return guarded([&] {
    require_out(out, "out");
    *out = new tc_sparse{deref(split, "split").split.observed.entries()};
  });
}

TC_API void tc_split_free(tc_split* split) { delete split; }

TC_API tc_status tc_evaluate(const tc_dense* scores, const tc_split* split,
                             int64_t n, int exclude_observed,
                             tc_metrics* out) {
  return guarded([&] {
    require_out(out, "out");
    const auto& sp = deref(split, "split").split;
    const auto predictions = metrics::rank_predictions(
        deref(scores, "scores").m, sp, n, {exclude_observed != 0});
    const auto m = metrics::evaluate(predictions, sp, n);
    *out = {m.ap, m.ar, m.c, predictions.truncated ? 1 : 0};
  });
}

TC_API tc_status tc_evaluate_permuted(const tc_dense* scores,
                                      const tc_split* split, int64_t n,
                                      int exclude_observed, uint64_t seed,
                                      tc_metrics* out) {
  return guarded([&] {
    require_out(out, "out");
    const auto& sp = deref(split, "split").split;
    const DenseMatrix shuffled =
        metrics::permute_scores(deref(scores, "scores").m, seed);
    const auto predictions =
        metrics::rank_predictions(shuffled, sp, n, {exclude_observed != 0});
    const auto m = metrics::evaluate(predictions, sp, n);
    *out = {m.ap, m.ar, m.c, predictions.truncated ? 1 : 0};
  });
}

TC_API tc_status tc_chance_recall(const tc_split* split, int64_t n,
                                  int exclude_observed, double* out) {
  return guarded([&] {
    require_out(out, "out");
    *out = metrics::chance_recall(deref(split, "split").split, n,
                                  {exclude_observed != 0});
  });
}

// Synthetic instances --------------------------------------------------------

TC_API tc_status tc_synth_generate(const tc_synth_config* cfg,
                                   tc_sparse** truth, tc_dense** features) {
  return guarded([&] {
    require_out(truth, "truth");
    auto inst = synth::generate(to_cpp(cfg));
    auto* t = new tc_sparse{inst.truth.entries()};
    if (features) *features = new tc_dense{inst.features.data()};
    *truth = t;
  });
}

TC_API tc_status tc_synth_delete(const tc_sparse* truth, double fraction,
                                 uint64_t seed, tc_split** out) {
  return guarded([&] {
    require_out(out, "out");
    const TaggingMatrix d(deref(truth, "truth").m);
    *out = new tc_split{synth::delete_tags(d, fraction, seed)};
  });
}

// Configuration --------------------------------------------------------------

TC_API tc_status tc_config_read(const char* path, tc_hyperparams* hp,
                                tc_synth_config* synth_cfg) {
  return guarded([&] {
    require_out(path, "path");
    auto kv = io::read_key_values(path);
    std::map<std::string, std::string> leftover;
    if (hp) {
      Hyperparams params = to_cpp(hp);
      for (const auto& key : io::apply_hyperparams(kv, params)) {
        leftover[key] = kv[key];
      }
      params.validate();
      from_cpp(params, hp);
    } else {
      leftover = kv;
    }
    if (synth_cfg) {
      auto eval = leftover.find("eval_n");
      if (eval != leftover.end()) {
        const std::string& text = eval->second;
        long long n = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
        if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
          throw InvalidArgument("'eval_n' needs an integer, got '" + text + "'");
        }
        synth_cfg->eval_n = n;
        if (synth_cfg->eval_n < 1) throw InvalidArgument("eval_n must be >= 1");
        leftover.erase(eval);
      }
      synth::SynthConfig cfg = to_cpp(synth_cfg);
      auto unknown = io::apply_synth_config(leftover, cfg);
      cfg.validate();
      from_cpp(cfg, synth_cfg);
      std::map<std::string, std::string> rest;
      for (const auto& key : unknown) rest[key] = leftover[key];
      leftover = std::move(rest);
    }
    if (!leftover.empty()) {
      throw InvalidArgument("unknown configuration key '" +
                            leftover.begin()->first + "' in " + path);
    }
  });
}

TC_API tc_status tc_manifest_read(const char* path, tc_manifest** out) {
  return guarded([&] {
    require_out(path, "path");
    require_out(out, "out");
    auto* m = new tc_manifest;
    m->manifest = io::read_manifest(path);
    m->tags = m->manifest.tags.string();
    if (m->manifest.features) m->features = m->manifest.features->string();
    if (m->manifest.s) m->s = m->manifest.s->string();
    if (m->manifest.t) m->t = m->manifest.t->string();
    if (m->manifest.overrides) m->overrides = m->manifest.overrides->string();
    *out = m;
  });
}

TC_API const char* tc_manifest_path(const tc_manifest* manifest,
                                    const char* key) {
  if (!manifest || !key) return nullptr;
  const std::string k = key;
  const std::string* value = nullptr;
  if (k == "tags") value = &manifest->tags;
  else if (k == "features") value = &manifest->features;
  else if (k == "s") value = &manifest->s;
  else if (k == "t") value = &manifest->t;
  else if (k == "overrides") value = &manifest->overrides;
  if (!value || value->empty()) return nullptr;
  return value->c_str();
}

TC_API tc_status tc_manifest_apply_overrides(const tc_manifest* manifest,
                                             tc_hyperparams* hp) {
  return guarded([&] {
    const auto& m = deref(manifest, "manifest");
    require_out(hp, "hp");
    if (m.overrides.empty()) return;
    auto kv = io::read_key_values(m.overrides);
    Hyperparams params = to_cpp(hp);
    const auto unknown = io::apply_hyperparams(kv, params);
    if (!unknown.empty()) {
      throw InvalidArgument("unknown override key '" + unknown.front() + "'");
    }
    params.validate();
    from_cpp(params, hp);
  });
}

TC_API void tc_manifest_free(tc_manifest* manifest) { delete manifest; }

}  // extern "C"
