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

#include "tagcomplete/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

namespace tagcomplete::metrics {

void EvalSplit::validate() const {
  const Index n = observed.n_images();
  if (static_cast<Index>(deleted.size()) != n) {
    throw DimensionError("split has " + std::to_string(deleted.size()) +
                         " deleted lists for " + std::to_string(n) +
                         " images");
  }
  const auto observed_tags = observed.tags_per_image();
  for (Index i = 0; i < n; ++i) {
    const auto& del = deleted[static_cast<size_t>(i)];
    const auto& obs = observed_tags[static_cast<size_t>(i)];
    for (Index t : del) {
      if (t < 0 || t >= observed.n_tags()) {
        throw InvalidArgument("deleted tag " + std::to_string(t) +
                              " out of range for image " + std::to_string(i));
      }
      if (std::binary_search(obs.begin(), obs.end(), t)) {
        throw InvalidArgument("tag " + std::to_string(t) +
                              " is both observed and deleted for image " +
                              std::to_string(i));
      }
    }
  }
  for (Index i : test_images) {
    if (i < 0 || i >= n) {
      throw InvalidArgument("test image " + std::to_string(i) + " out of range");
    }
    if (deleted[static_cast<size_t>(i)].empty() ||
        observed_tags[static_cast<size_t>(i)].empty()) {
      throw InvalidArgument("test image " + std::to_string(i) +
                            " needs at least one observed and one deleted tag");
    }
  }
}

Predictions rank_predictions(const DenseMatrix& scores, const EvalSplit& split,
                             Index n, const RankOptions& options) {
  if (n < 1) throw InvalidArgument("N must be >= 1");
  require_same(scores.rows(), split.observed.n_images(), "score rows",
               "split images");
  require_same(scores.cols(), split.observed.n_tags(), "score columns",
               "split tags");
  const auto observed = split.observed.tags_per_image();

  Predictions out;
  out.top.reserve(split.test_images.size());
  std::vector<Index> candidates;
  for (Index image : split.test_images) {
    const auto& obs = observed[static_cast<size_t>(image)];
    candidates.clear();
    for (Index t = 0; t < scores.cols(); ++t) {
      if (options.exclude_observed &&
          std::binary_search(obs.begin(), obs.end(), t)) {
        continue;
      }
      candidates.push_back(t);
    }
    const auto keep = static_cast<size_t>(
        std::min<Index>(n, static_cast<Index>(candidates.size())));
    if (static_cast<Index>(keep) < n) out.truncated = true;
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(), [&](Index a, Index b) {
                        const double sa = scores(image, a);
                        const double sb = scores(image, b);
                        if (sa != sb) return sa > sb;
                        return a < b;
                      });
    candidates.resize(keep);
    out.top.push_back(candidates);
  }
  return out;
}

Metrics evaluate(const Predictions& predictions, const EvalSplit& split,
                 Index n) {
  if (n < 1) throw InvalidArgument("N must be >= 1");
  if (split.test_images.empty()) {
    throw InvalidArgument("cannot evaluate an empty test set");
  }
  if (predictions.top.size() != split.test_images.size()) {
    throw DimensionError("predictions cover " +
                         std::to_string(predictions.top.size()) +
                         " images but the split tests " +
                         std::to_string(split.test_images.size()));
  }
  Metrics m;
  for (size_t t = 0; t < split.test_images.size(); ++t) {
    const auto& del = split.deleted[static_cast<size_t>(split.test_images[t])];
    Index hits = 0;
    for (Index tag : predictions.top[t]) {
      if (std::binary_search(del.begin(), del.end(), tag)) ++hits;
    }
    m.ap += static_cast<double>(hits) / static_cast<double>(n);
    if (!del.empty()) {
      m.ar += static_cast<double>(hits) / static_cast<double>(del.size());
    }
    if (hits > 0) m.c += 1.0;
  }
  const auto count = static_cast<double>(split.test_images.size());
  m.ap /= count;
  m.ar /= count;
  m.c /= count;
  return m;
}

DenseMatrix permute_scores(const DenseMatrix& scores, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DenseMatrix out(scores.rows(), scores.cols());
  std::vector<Index> order(static_cast<size_t>(scores.cols()));
  for (Index i = 0; i < scores.rows(); ++i) {
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (Index j = 0; j < scores.cols(); ++j) {
      out(i, j) = scores(i, order[static_cast<size_t>(j)]);
    }
  }
  return out;
}

double chance_recall(const EvalSplit& split, Index n,
                     const RankOptions& options) {
  if (split.test_images.empty()) {
    throw InvalidArgument("cannot evaluate an empty test set");
  }
  const auto observed = split.observed.tags_per_image();
  double total = 0.0;
  for (Index image : split.test_images) {
    Index candidates = split.observed.n_tags();
    if (options.exclude_observed) {
      candidates -= static_cast<Index>(observed[static_cast<size_t>(image)].size());
    }
    if (candidates > 0) {
      total += static_cast<double>(std::min(n, candidates)) /
               static_cast<double>(candidates);
    }
  }
  return total / static_cast<double>(split.test_images.size());
}

}  // namespace tagcomplete::metrics
