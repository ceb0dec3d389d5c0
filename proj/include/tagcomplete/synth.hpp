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

#include "tagcomplete/core.hpp"
#include "tagcomplete/metrics.hpp"

namespace tagcomplete::synth {

struct SynthConfig {
  Index n_images = 1000;
  Index n_tags = 100;
  Index n_topics = 10;
  Index tags_per_image = 5;
  Index feature_dim = 32;
  double feature_noise = 0.1;
  double delete_fraction = 0.4;
  double off_topic_prob = 0.1;
  // Within-topic tag popularity decays as rank^-exponent (0 = uniform).
  double popularity_exponent = 1.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SynthInstance {
  TaggingMatrix truth;
  FeatureMatrix features;
  std::vector<Index> topic_of_image;
  // Unit-norm topic indicator columns (N x n_topics) and the matching
  // coefficients (n_topics x M) so that planted_U * planted_V holds the
  // per-topic tag frequencies.
  DenseMatrix planted_U;
  DenseMatrix planted_V;
};

// Topic-block instance: tags are split into n_topics contiguous blocks, each
// image draws one topic and fills tags_per_image slots without replacement,
// each slot going off-topic with probability off_topic_prob. Features are
// the topic indicator times a random projection plus gaussian noise.
// Deterministic in rng_seed.
SynthInstance generate(const SynthConfig& cfg);

// Per image, deletes round(fraction * |tags|) tags clamped to
// [1, |tags| - 1]. Every image becomes a test image.
metrics::EvalSplit delete_tags(const TaggingMatrix& truth, double fraction,
                               std::uint64_t seed);

struct PlantedFactorization {
  TaggingMatrix D;  // exactly U * V
  DenseMatrix U;    // unit-norm columns
  DenseMatrix V;
};

// Real-valued D = U*V* of exact rank `rank`, for realizability checks.
// Entries of V* are nonzero with probability `density`.
PlantedFactorization planted_factorization(Index n_images, Index n_tags,
                                           Index rank, double density,
                                           std::uint64_t seed);

}  // namespace tagcomplete::synth
