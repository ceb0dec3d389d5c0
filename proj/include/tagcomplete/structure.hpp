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

#include <string>
#include <vector>

#include "tagcomplete/core.hpp"

namespace tagcomplete::structure {

enum class Metric { kEuclidean, kCosine };

struct Neighbor {
  Index index;
  double distance;
};

// Exact k nearest neighbors, self excluded. Lists are sorted by ascending
// distance with ties broken by ascending index, and hold min(k, n - 1) items.
struct NeighborIndex {
  Index k = 0;
  std::vector<std::vector<Neighbor>> lists;
};

// Rows of `vectors` are the items. Under the cosine metric a zero vector is
// at distance 1 from everything.
NeighborIndex knn_index(const DenseMatrix& vectors, Index k, Metric metric,
                        unsigned threads = 1);

// Neighbors from a precomputed Gram matrix of the items, using
// d(i, j)^2 = g_ii + g_jj - 2 g_ij. Exact for integer-valued data.
NeighborIndex knn_from_gram(const DenseMatrix& gram, Index k,
                            unsigned threads = 1);

struct BuildReport {
  StructureMatrix matrix;
  // One entry per row (S) or column (T).
  std::vector<double> kkt_residuals;
  std::vector<Index> lasso_sweeps;
  // Items left at zero without solving (all-zero tag columns for T).
  std::vector<Index> skipped;
  std::vector<std::string> warnings;
};

// Feature-space structure: row n of S reconstructs the (optionally
// normalized) feature row n from its knn_k nearest rows with an L1 penalty
// alpha.
BuildReport build_S(const FeatureMatrix& X, const Hyperparams& hp);

// As above; when hp.tags_as_features is set, the tag indicators of D are
// appended to X before normalization and neighbor search.
BuildReport build_S(const FeatureMatrix& X, const TaggingMatrix& D,
                    const Hyperparams& hp);

// Tag-space structure: column m of T reconstructs tag column m of D from its
// knn_k nearest tag columns with an L1 penalty mu.
BuildReport build_T(const TaggingMatrix& D, const Hyperparams& hp);

// (SD + DT) / 2. D itself is left untouched.
TaggingMatrix reinitialize(const TaggingMatrix& D, const StructureMatrix& S,
                           const StructureMatrix& T);

unsigned resolve_threads(unsigned requested);

}  // namespace tagcomplete::structure
