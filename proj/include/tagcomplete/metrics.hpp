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

#pragma once

#include <cstdint>
#include <vector>

#include "tagcomplete/core.hpp"

namespace tagcomplete::metrics {

// What the solver saw (observed), what was held out (deleted), and which
// images are scored.
struct EvalSplit {
  TaggingMatrix observed;
  std::vector<std::vector<Index>> deleted;  // per image, sorted ascending
  std::vector<Index> test_images;

  // Throws InvalidArgument if a deleted tag is also observed or a test image
  // lacks an observed or a deleted tag.
  void validate() const;
};

struct Predictions {
  // One ranked list per entry of EvalSplit::test_images.
  std::vector<std::vector<Index>> top;
  // Set when some image had fewer than N candidates.
  bool truncated = false;
};

struct RankOptions {
  // Observed tags are not candidates by default.
  bool exclude_observed = true;
};

// Top-N tags per test image by descending score, ties by ascending index.
Predictions rank_predictions(const DenseMatrix& scores, const EvalSplit& split,
                             Index n, const RankOptions& options = {});

struct Metrics {
  double ap = 0.0;  // mean |top ∩ deleted| / N
  double ar = 0.0;  // mean |top ∩ deleted| / |deleted|
  double c = 0.0;   // fraction of images with at least one hit
};

Metrics evaluate(const Predictions& predictions, const EvalSplit& split,
                 Index n);

// Each row of `scores` shuffled independently (seeded). Ranking the result
// gives the chance baseline.
DenseMatrix permute_scores(const DenseMatrix& scores, std::uint64_t seed);

// Expected AR@N of a uniformly random ranking: mean of min(N, c) / c over
// test images, where c is the candidate count.
double chance_recall(const EvalSplit& split, Index n,
                     const RankOptions& options = {});

}  // namespace tagcomplete::metrics
