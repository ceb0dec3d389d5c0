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

/*
 * C interface to the tag completion library.
 *
 * Every function that can fail returns a tc_status. On failure the message
 * is available from tc_last_error() on the same thread until the next call
 * into the library. Objects are opaque handles owned by the caller and
 * released with the matching tc_*_free function; passing NULL to a free
 * function is a no-op. Output handles are only written on success.
 */
#ifndef TAGCOMPLETE_TAGCOMPLETE_H_
#define TAGCOMPLETE_TAGCOMPLETE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(TAGCOMPLETE_BUILDING_LIBRARY)
#define TC_API __attribute__((visibility("default")))
#else
#define TC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tc_status {
  TC_OK = 0,
  TC_ERR_INVALID_ARGUMENT = 1,
  TC_ERR_DIMENSION = 2,
  TC_ERR_PARSE = 3,
  TC_ERR_IO = 4,
  TC_ERR_NONCONVERGENCE = 5,
  TC_ERR_NUMERICAL = 6,
  TC_ERR_INTERNAL = 7
} tc_status;

typedef struct tc_sparse tc_sparse;     /* sparse real matrix: D, S or T */
typedef struct tc_dense tc_dense;       /* dense real matrix: X or scores */
typedef struct tc_model tc_model;       /* fitted U, V, E with its trace */
typedef struct tc_split tc_split;       /* observed / deleted evaluation split */
typedef struct tc_manifest tc_manifest;

enum { TC_INIT_SPECTRAL = 0, TC_INIT_RANDOM = 1 };

typedef struct tc_hyperparams {
  double alpha;  /* L1 weight for S */
  double mu;     /* L1 weight for T */
  double beta;   /* L1 weight on E */
  double gamma;  /* feature-structure weight */
  double lambda; /* tag-structure weight */
  double eta;    /* L1 weight on V (the objective uses 2 * eta) */
  int64_t K;
  int64_t knn_k;
  int64_t max_outer_iters;
  double rel_tol;
  uint64_t rng_seed;
  int64_t sweeps_per_block;
  double lasso_tol;
  int64_t lasso_max_iters;
  int normalize_features;
  int tags_as_features;
  unsigned threads; /* 0 = one per hardware thread */
  int init;         /* TC_INIT_SPECTRAL or TC_INIT_RANDOM */
} tc_hyperparams;

typedef struct tc_synth_config {
  int64_t n_images;
  int64_t n_tags;
  int64_t n_topics;
  int64_t tags_per_image;
  int64_t feature_dim;
  double feature_noise;
  double delete_fraction;
  double off_topic_prob;
  double popularity_exponent; /* within-topic popularity decay, 0 = uniform */
  uint64_t rng_seed;
  int64_t eval_n; /* cutoff used by benchmark drivers */
} tc_synth_config;

typedef struct tc_structure_summary {
  int64_t items;        /* rows of S or columns of T */
  int64_t nnz;
  int64_t max_item_nnz;
  int64_t skipped;      /* all-zero tag columns left empty */
  double max_kkt;
  double mean_kkt;
} tc_structure_summary;

typedef struct tc_fit_summary {
  int converged;
  int64_t iterations;
  int64_t skipped_coordinates;
  double initial_objective;
  double final_objective;
  double relative_residual; /* ||D - UV||_F / ||D||_F, 0 when D = 0 */
  double max_column_norm;   /* largest column norm of U */
} tc_fit_summary;

typedef struct tc_metrics {
  double ap;
  double ar;
  double c;
  int truncated; /* some image had fewer than N candidates */
} tc_metrics;

TC_API const char* tc_version(void);
TC_API const char* tc_last_error(void);
/* Objective trace attached to the last TC_ERR_NUMERICAL failure. */
TC_API size_t tc_last_error_trace(const double** values);

TC_API void tc_hyperparams_default(tc_hyperparams* hp);
TC_API void tc_synth_config_default(tc_synth_config* cfg);

/* Sparse matrices (MatrixMarket coordinate files). */
TC_API tc_status tc_sparse_read(const char* path, tc_sparse** out);
TC_API tc_status tc_sparse_write(const tc_sparse* m, const char* path);
TC_API tc_status tc_sparse_from_triplets(int64_t rows, int64_t cols,
                                         size_t count, const int64_t* row_idx,
                                         const int64_t* col_idx,
                                         const double* values, tc_sparse** out);
TC_API int64_t tc_sparse_rows(const tc_sparse* m);
TC_API int64_t tc_sparse_cols(const tc_sparse* m);
TC_API int64_t tc_sparse_nnz(const tc_sparse* m);
/* Copies up to `capacity` entries in column-major order; returns nnz. */
TC_API size_t tc_sparse_triplets(const tc_sparse* m, size_t capacity,
                                 int64_t* row_idx, int64_t* col_idx,
                                 double* values);
TC_API void tc_sparse_free(tc_sparse* m);

/* Dense matrices (CSV files). */
TC_API tc_status tc_dense_read(const char* path, tc_dense** out);
TC_API tc_status tc_dense_write(const tc_dense* m, const char* path);
TC_API tc_status tc_dense_from_rows(int64_t rows, int64_t cols,
                                    const double* row_major, tc_dense** out);
TC_API int64_t tc_dense_rows(const tc_dense* m);
TC_API int64_t tc_dense_cols(const tc_dense* m);
TC_API void tc_dense_copy(const tc_dense* m, double* row_major);
TC_API void tc_dense_free(tc_dense* m);

/* Structure matrices. `tags` may be NULL unless tags_as_features is set. */
TC_API tc_status tc_build_s(const tc_dense* features, const tc_sparse* tags,
                            const tc_hyperparams* hp, tc_sparse** out,
                            tc_structure_summary* summary);
TC_API tc_status tc_build_t(const tc_sparse* tags, const tc_hyperparams* hp,
                            tc_sparse** out, tc_structure_summary* summary);
/* (SD + DT) / 2 */
TC_API tc_status tc_reinitialize(const tc_sparse* tags, const tc_sparse* s,
                                 const tc_sparse* t, tc_sparse** out);

/* Completion. */
TC_API tc_status tc_fit(const tc_sparse* tags, const tc_sparse* s,
                        const tc_sparse* t, const tc_hyperparams* hp,
                        tc_model** out, tc_fit_summary* summary);
TC_API tc_status tc_objective(const tc_sparse* tags, const tc_sparse* s,
                              const tc_sparse* t, const tc_model* model,
                              const tc_hyperparams* hp, double* value);
TC_API tc_status tc_model_read(const char* path, tc_model** out);
TC_API tc_status tc_model_write(const tc_model* model, const char* path);
/* Completed score matrix UV. */
TC_API tc_status tc_model_scores(const tc_model* model, tc_dense** out);
TC_API void tc_model_dims(const tc_model* model, int64_t* n_images,
                          int64_t* n_tags, int64_t* rank);
TC_API int tc_model_converged(const tc_model* model);
/* Copies up to `capacity` trace values; returns the trace length. */
TC_API size_t tc_model_trace(const tc_model* model, size_t capacity,
                             double* values);
TC_API void tc_model_free(tc_model* model);

/* Evaluation. */
TC_API tc_status tc_split_read(const char* path, tc_split** out);
TC_API tc_status tc_split_write(const tc_split* split, const char* path);
TC_API tc_status tc_split_observed(const tc_split* split, tc_sparse** out);
TC_API void tc_split_free(tc_split* split);
TC_API tc_status tc_evaluate(const tc_dense* scores, const tc_split* split,
                             int64_t n, int exclude_observed,
                             tc_metrics* out);
/* Same metrics after shuffling every score row (chance baseline). */
TC_API tc_status tc_evaluate_permuted(const tc_dense* scores,
                                      const tc_split* split, int64_t n,
                                      int exclude_observed, uint64_t seed,
                                      tc_metrics* out);
TC_API tc_status tc_chance_recall(const tc_split* split, int64_t n,
                                  int exclude_observed, double* out);

/* Synthetic instances. */
TC_API tc_status tc_synth_generate(const tc_synth_config* cfg,
                                   tc_sparse** truth, tc_dense** features);
TC_API tc_status tc_synth_delete(const tc_sparse* truth, double fraction,
                                 uint64_t seed, tc_split** out);

/* Configuration. Keys not recognized by either target are an error. */
TC_API tc_status tc_config_read(const char* path, tc_hyperparams* hp,
                                tc_synth_config* synth);
TC_API tc_status tc_manifest_read(const char* path, tc_manifest** out);
/* key is one of "tags", "features", "s", "t", "overrides"; NULL if unset. */
TC_API const char* tc_manifest_path(const tc_manifest* manifest,
                                    const char* key);
TC_API tc_status tc_manifest_apply_overrides(const tc_manifest* manifest,
                                             tc_hyperparams* hp);
TC_API void tc_manifest_free(tc_manifest* manifest);

#ifdef __cplusplus
}
#endif

#endif /* TAGCOMPLETE_TAGCOMPLETE_H_ */
