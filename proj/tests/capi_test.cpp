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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "tagcomplete/tagcomplete.h"

namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() /
             ("tc_capi_" + std::to_string(std::random_device{}()));
    fs::create_directories(d);
    return d;
  }();
  return dir / name;
}

tc_sparse* identity_tags(int64_t n) {
  std::vector<int64_t> r, c;
  std::vector<double> v;
  for (int64_t i = 0; i < n; ++i) {
    r.push_back(i);
    c.push_back(i);
    v.push_back(1.0);
  }
  tc_sparse* out = nullptr;
  EXPECT_EQ(tc_sparse_from_triplets(n, n, r.size(), r.data(), c.data(), v.data(), &out),
            TC_OK);
  return out;
}

tc_sparse* empty(int64_t rows, int64_t cols) {
  tc_sparse* out = nullptr;
  EXPECT_EQ(tc_sparse_from_triplets(rows, cols, 0, nullptr, nullptr, nullptr, &out), TC_OK);
  return out;
}

TEST(CApiTest, VersionAndDefaults) {
  EXPECT_STREQ(tc_version(), "1.0.0");
  tc_hyperparams hp;
  tc_hyperparams_default(&hp);
  EXPECT_EQ(hp.lambda, 0.5);
  EXPECT_EQ(hp.gamma, 1.0);
  EXPECT_EQ(hp.beta, 0.7);
  EXPECT_EQ(hp.eta, 1.0);
  EXPECT_EQ(hp.K, 100);
  EXPECT_EQ(hp.knn_k, 200);
  EXPECT_EQ(hp.init, TC_INIT_SPECTRAL);
  tc_synth_config cfg;
  tc_synth_config_default(&cfg);
  EXPECT_EQ(cfg.n_images, 1000);
  EXPECT_EQ(cfg.eval_n, 2);
}

TEST(CApiTest, NullArgumentsReportInvalidArgument) {
  EXPECT_EQ(tc_sparse_read(nullptr, nullptr), TC_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::strlen(tc_last_error()), 0u);
  tc_sparse* out = nullptr;
  EXPECT_EQ(tc_fit(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr),
            TC_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(out, nullptr);
  tc_sparse_free(nullptr);
  tc_dense_free(nullptr);
  tc_model_free(nullptr);
}

TEST(CApiTest, TripletValidation) {
  const int64_t r[] = {0, 5};
  const int64_t c[] = {0, 0};
  const double v[] = {1.0, 1.0};
  tc_sparse* out = nullptr;
  EXPECT_EQ(tc_sparse_from_triplets(2, 2, 2, r, c, v, &out), TC_ERR_INVALID_ARGUMENT);
  const double nan[] = {NAN, 1.0};
  const int64_t ok_r[] = {0, 1};
  EXPECT_EQ(tc_sparse_from_triplets(2, 2, 2, ok_r, c, nan, &out), TC_ERR_INVALID_ARGUMENT);
}

TEST(CApiTest, SparseRoundTripThroughFile) {
  const int64_t r[] = {0, 2, 1};
  const int64_t c[] = {1, 0, 2};
  const double v[] = {0.5, -2.25, 1e-9};
  tc_sparse* m = nullptr;
  ASSERT_EQ(tc_sparse_from_triplets(3, 3, 3, r, c, v, &m), TC_OK);
  const auto path = temp_path("m.mtx").string();
  ASSERT_EQ(tc_sparse_write(m, path.c_str()), TC_OK);
  tc_sparse* back = nullptr;
  ASSERT_EQ(tc_sparse_read(path.c_str(), &back), TC_OK);
  EXPECT_EQ(tc_sparse_nnz(back), 3);
  int64_t rr[3], cc[3];
  double vv[3];
  EXPECT_EQ(tc_sparse_triplets(back, 3, rr, cc, vv), 3u);
  EXPECT_EQ(rr[0], 2);
  EXPECT_EQ(vv[0], -2.25);
  tc_sparse_free(m);
  tc_sparse_free(back);
}

TEST(CApiTest, ParseErrorsMapToStatus) {
  const auto path = temp_path("bad.mtx");
  std::ofstream(path) << "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 x\n";
  tc_sparse* m = nullptr;
  EXPECT_EQ(tc_sparse_read(path.string().c_str(), &m), TC_ERR_PARSE);
  EXPECT_NE(std::string(tc_last_error()).find(":3:"), std::string::npos);
  EXPECT_EQ(tc_sparse_read(temp_path("absent.mtx").string().c_str(), &m), TC_ERR_IO);
}

TEST(CApiTest, DenseRoundTrip) {
  const double data[] = {1, 2, 3, 4, 5, 6};
  tc_dense* d = nullptr;
  ASSERT_EQ(tc_dense_from_rows(2, 3, data, &d), TC_OK);
  const auto path = temp_path("d.csv").string();
  ASSERT_EQ(tc_dense_write(d, path.c_str()), TC_OK);
  tc_dense* back = nullptr;
  ASSERT_EQ(tc_dense_read(path.c_str(), &back), TC_OK);
  double copy[6];
  tc_dense_copy(back, copy);
  EXPECT_EQ(std::vector<double>(copy, copy + 6), std::vector<double>(data, data + 6));
  tc_dense_free(d);
  tc_dense_free(back);
}

TEST(CApiTest, DimensionMismatchStatus) {
  tc_sparse* d = identity_tags(3);
  tc_sparse* s = empty(4, 4);
  tc_sparse* t = empty(3, 3);
  tc_hyperparams hp;
  tc_hyperparams_default(&hp);
  hp.K = 2;
  tc_model* model = nullptr;
  EXPECT_EQ(tc_fit(d, s, t, &hp, &model, nullptr), TC_ERR_DIMENSION);
  EXPECT_EQ(model, nullptr);
  tc_sparse_free(d);
  tc_sparse_free(s);
  tc_sparse_free(t);
}

TEST(CApiTest, ZeroDataFitsToZeroScores) {
  tc_sparse* d = empty(5, 4);
  tc_sparse* s = empty(5, 5);
  tc_sparse* t = empty(4, 4);
  tc_hyperparams hp;
  tc_hyperparams_default(&hp);
  hp.K = 3;
  tc_model* model = nullptr;
  tc_fit_summary sum{};
  ASSERT_EQ(tc_fit(d, s, t, &hp, &model, &sum), TC_OK);
  EXPECT_EQ(sum.converged, 1);
  EXPECT_EQ(sum.iterations, 1);
  EXPECT_EQ(sum.final_objective, 0.0);
  tc_dense* scores = nullptr;
  ASSERT_EQ(tc_model_scores(model, &scores), TC_OK);
  std::vector<double> values(20);
  tc_dense_copy(scores, values.data());
  for (double v : values) EXPECT_EQ(v, 0.0);
  tc_dense_free(scores);
  tc_model_free(model);
  tc_sparse_free(d);
  tc_sparse_free(s);
  tc_sparse_free(t);
}

TEST(CApiTest, OverflowReportsNumericalErrorWithTrace) {
  const int64_t r[] = {0, 1};
  const int64_t c[] = {0, 1};
  const double v[] = {1e200, 1e200};
  tc_sparse* d = nullptr;
  ASSERT_EQ(tc_sparse_from_triplets(2, 2, 2, r, c, v, &d), TC_OK);
  tc_sparse* s = empty(2, 2);
  tc_sparse* t = empty(2, 2);
  tc_hyperparams hp;
  tc_hyperparams_default(&hp);
  hp.K = 1;
  tc_model* model = nullptr;
  EXPECT_EQ(tc_fit(d, s, t, &hp, &model, nullptr), TC_ERR_NUMERICAL);
  const double* trace = nullptr;
  const size_t len = tc_last_error_trace(&trace);
  ASSERT_GE(len, 1u);
  EXPECT_FALSE(std::isfinite(trace[len - 1]));
  tc_sparse_free(d);
  tc_sparse_free(s);
  tc_sparse_free(t);
}

TEST(CApiTest, PipelineOnSyntheticInstance) {
  tc_synth_config cfg;
  tc_synth_config_default(&cfg);
  cfg.n_images = 200;
  cfg.n_tags = 40;
  cfg.n_topics = 4;
  tc_sparse* truth = nullptr;
  tc_dense* features = nullptr;
  ASSERT_EQ(tc_synth_generate(&cfg, &truth, &features), TC_OK);
  tc_split* split = nullptr;
  ASSERT_EQ(tc_synth_delete(truth, 0.4, 1, &split), TC_OK);
  tc_sparse* observed = nullptr;
  ASSERT_EQ(tc_split_observed(split, &observed), TC_OK);

  tc_hyperparams hp;
  tc_hyperparams_default(&hp);
  hp.K = 8;
  hp.knn_k = 20;
  tc_sparse* s = nullptr;
  tc_sparse* t = nullptr;
  tc_structure_summary ss{}, ts{};
  ASSERT_EQ(tc_build_s(features, nullptr, &hp, &s, &ss), TC_OK);
  ASSERT_EQ(tc_build_t(observed, &hp, &t, &ts), TC_OK);
  EXPECT_EQ(ss.items, 200);
  EXPECT_LE(ss.max_item_nnz, 20);
  EXPECT_LE(ss.max_kkt, hp.lasso_tol);
  EXPECT_EQ(ts.items, 40);

  tc_sparse* re = nullptr;
  ASSERT_EQ(tc_reinitialize(observed, s, t, &re), TC_OK);
  tc_model* model = nullptr;
  tc_fit_summary sum{};
  ASSERT_EQ(tc_fit(re, s, t, &hp, &model, &sum), TC_OK);
  EXPECT_LE(sum.max_column_norm, 1.0 + 1e-12);
  EXPECT_LE(sum.final_objective, sum.initial_objective);

  double check = 0.0;
  ASSERT_EQ(tc_objective(re, s, t, model, &hp, &check), TC_OK);
  EXPECT_NEAR(check, sum.final_objective, 1e-9 * sum.final_objective);

  tc_dense* scores = nullptr;
  ASSERT_EQ(tc_model_scores(model, &scores), TC_OK);
  tc_metrics m{}, base{};
  ASSERT_EQ(tc_evaluate(scores, split, 2, 1, &m), TC_OK);
  ASSERT_EQ(tc_evaluate_permuted(scores, split, 2, 1, 7, &base), TC_OK);
  EXPECT_GT(m.ar, 2.0 * base.ar);
  double chance = 0.0;
  ASSERT_EQ(tc_chance_recall(split, 2, 1, &chance), TC_OK);
  EXPECT_GT(chance, 0.0);

  const auto model_path = temp_path("model.tcm").string();
  ASSERT_EQ(tc_model_write(model, model_path.c_str()), TC_OK);
  tc_model* back = nullptr;
  ASSERT_EQ(tc_model_read(model_path.c_str(), &back), TC_OK);
  int64_t n = 0, mm = 0, k = 0;
  tc_model_dims(back, &n, &mm, &k);
  EXPECT_EQ(n, 200);
  EXPECT_EQ(mm, 40);
  EXPECT_EQ(k, 8);
  EXPECT_EQ(tc_model_converged(back), sum.converged);
  std::vector<double> trace(tc_model_trace(back, 0, nullptr));
  tc_model_trace(back, trace.size(), trace.data());
  EXPECT_EQ(static_cast<int64_t>(trace.size()), sum.iterations);

  const auto split_path = temp_path("split.txt").string();
  ASSERT_EQ(tc_split_write(split, split_path.c_str()), TC_OK);
  tc_split* split_back = nullptr;
  ASSERT_EQ(tc_split_read(split_path.c_str(), &split_back), TC_OK);
  tc_metrics again{};
  ASSERT_EQ(tc_evaluate(scores, split_back, 2, 1, &again), TC_OK);
  EXPECT_EQ(again.ap, m.ap);
  EXPECT_EQ(again.c, m.c);

  tc_split_free(split_back);
  tc_model_free(back);
  tc_dense_free(scores);
  tc_model_free(model);
  tc_sparse_free(re);
  tc_sparse_free(s);
  tc_sparse_free(t);
  tc_sparse_free(observed);
  tc_split_free(split);
  tc_sparse_free(truth);
  tc_dense_free(features);
}

TEST(CApiTest, ConfigAndManifest) {
  const auto cfg_path = temp_path("run.cfg");
  std::ofstream(cfg_path) << "K = 7\nn_images = 30\neval_n = 4\n";
  tc_hyperparams hp;
  tc_hyperparams_default(&hp);
  tc_synth_config cfg;
  tc_synth_config_default(&cfg);
  ASSERT_EQ(tc_config_read(cfg_path.string().c_str(), &hp, &cfg), TC_OK);
  EXPECT_EQ(hp.K, 7);
  EXPECT_EQ(cfg.n_images, 30);
  EXPECT_EQ(cfg.eval_n, 4);
  EXPECT_EQ(tc_config_read(cfg_path.string().c_str(), &hp, nullptr), TC_ERR_INVALID_ARGUMENT);

  std::ofstream(temp_path("tags.mtx")) << "%%MatrixMarket matrix coordinate real general\n1 1 0\n";
  std::ofstream(temp_path("hp.cfg")) << "lambda = 0.125\n";
  const auto manifest_path = temp_path("run.manifest");
  std::ofstream(manifest_path) << "version = 1\ntags = tags.mtx\noverrides = hp.cfg\n";
  tc_manifest* manifest = nullptr;
  ASSERT_EQ(tc_manifest_read(manifest_path.string().c_str(), &manifest), TC_OK);
  EXPECT_EQ(fs::path(tc_manifest_path(manifest, "tags")), temp_path("tags.mtx"));
  EXPECT_EQ(tc_manifest_path(manifest, "s"), nullptr);
  ASSERT_EQ(tc_manifest_apply_overrides(manifest, &hp), TC_OK);
  EXPECT_EQ(hp.lambda, 0.125);
  tc_manifest_free(manifest);
}

TEST(CApiTest, InvalidHyperparamsRejected) {
  tc_sparse* d = identity_tags(2);
  tc_sparse* s = empty(2, 2);
  tc_hyperparams hp;
  tc_hyperparams_default(&hp);
  hp.beta = -1.0;
  tc_model* model = nullptr;
  EXPECT_EQ(tc_fit(d, s, s, &hp, &model, nullptr), TC_ERR_INVALID_ARGUMENT);
  tc_hyperparams_default(&hp);
  hp.init = 9;
  EXPECT_EQ(tc_fit(d, s, s, &hp, &model, nullptr), TC_ERR_INVALID_ARGUMENT);
  tc_sparse_free(d);
  tc_sparse_free(s);
}

}  // namespace
