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

#include "tagcomplete/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace tagcomplete::synth {

void SynthConfig::validate() const {
  if (n_images < 1 || n_tags < 1 || n_topics < 1 || feature_dim < 1) {
    throw InvalidArgument("synth counts must be >= 1");
  }
  if (tags_per_image < 2) {
    throw InvalidArgument("tags_per_image must be >= 2");
  }
  if (n_topics > std::min(n_images, n_tags)) {
    throw InvalidArgument("n_topics must not exceed min(n_images, n_tags)");
  }
  if (n_tags / n_topics < tags_per_image) {
    throw InvalidArgument("topic tag block (" +
                          std::to_string(n_tags / n_topics) +
                          " tags) is smaller than tags_per_image");
  }
  if (!(feature_noise >= 0.0)) {
    throw InvalidArgument("feature_noise must be >= 0");
  }
  if (!(delete_fraction > 0.0 && delete_fraction < 1.0)) {
    throw InvalidArgument("delete_fraction must be in (0, 1)");
  }
  if (!(popularity_exponent >= 0.0) || !std::isfinite(popularity_exponent)) {
    throw InvalidArgument("popularity_exponent must be finite and >= 0");
  }
  if (!(off_topic_prob >= 0.0 && off_topic_prob <= 1.0)) {
    throw InvalidArgument("off_topic_prob must be in [0, 1]");
  }
}

SynthInstance generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  const Index block = cfg.n_tags / cfg.n_topics;

  SynthInstance inst;
  inst.topic_of_image.resize(static_cast<size_t>(cfg.n_images));
  for (Index i = 0; i < cfg.n_images; ++i) {
    inst.topic_of_image[static_cast<size_t>(i)] = i % cfg.n_topics;
  }
  std::shuffle(inst.topic_of_image.begin(), inst.topic_of_image.end(), rng);

  // Popularity of every tag inside its own block: the tag at rank r (a
  // seeded per-topic order) has weight (r + 1)^-exponent.
  std::vector<double> popularity(static_cast<size_t>(cfg.n_tags), 1.0);
  for (Index topic = 0; topic < cfg.n_topics; ++topic) {
    std::vector<Index> order(static_cast<size_t>(block));
    std::iota(order.begin(), order.end(), topic * block);
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t r = 0; r < order.size(); ++r) {
      popularity[static_cast<size_t>(order[r])] =
          std::pow(static_cast<double>(r + 1), -cfg.popularity_exponent);
    }
  }

  std::bernoulli_distribution off_topic(cfg.off_topic_prob);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<Index, Index>> pairs;
  std::vector<Index> on_pool;
  std::vector<Index> off_pool;
  for (Index i = 0; i < cfg.n_images; ++i) {
    const Index topic = inst.topic_of_image[static_cast<size_t>(i)];
    on_pool.resize(static_cast<size_t>(block));
    std::iota(on_pool.begin(), on_pool.end(), topic * block);
    off_pool.clear();
    for (Index t = 0; t < cfg.n_tags; ++t) {
      if (t < topic * block || t >= (topic + 1) * block) off_pool.push_back(t);
    }
    for (Index slot = 0; slot < cfg.tags_per_image; ++slot) {
      const bool go_off = !off_pool.empty() && (off_topic(rng) || on_pool.empty());
      size_t at = 0;
      if (go_off) {
        std::uniform_int_distribution<size_t> pick(0, off_pool.size() - 1);
        at = pick(rng);
      } else {
        double total = 0.0;
        for (Index t : on_pool) total += popularity[static_cast<size_t>(t)];
        double target = unit(rng) * total;
        at = on_pool.size() - 1;
        for (size_t c = 0; c < on_pool.size(); ++c) {
          target -= popularity[static_cast<size_t>(on_pool[c])];
          if (target < 0.0) {
            at = c;
            break;
          }
        }
      }
      auto& pool = go_off ? off_pool : on_pool;
      pairs.emplace_back(i, pool[at]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
    }
  }
  inst.truth = TaggingMatrix::from_pairs(cfg.n_images, cfg.n_tags, pairs);

  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseMatrix projection(cfg.n_topics, cfg.feature_dim);
  for (Index r = 0; r < cfg.n_topics; ++r) {
    for (Index c = 0; c < cfg.feature_dim; ++c) projection(r, c) = gauss(rng);
  }
  DenseMatrix features(cfg.n_images, cfg.feature_dim);
  for (Index i = 0; i < cfg.n_images; ++i) {
    features.row(i) = projection.row(inst.topic_of_image[static_cast<size_t>(i)]);
    if (cfg.feature_noise > 0.0) {
      for (Index c = 0; c < cfg.feature_dim; ++c) {
        features(i, c) += cfg.feature_noise * gauss(rng);
      }
    }
  }
  inst.features = FeatureMatrix(std::move(features));

  std::vector<Index> topic_size(static_cast<size_t>(cfg.n_topics), 0);
  for (Index t : inst.topic_of_image) ++topic_size[static_cast<size_t>(t)];
  inst.planted_U = DenseMatrix::Zero(cfg.n_images, cfg.n_topics);
  for (Index i = 0; i < cfg.n_images; ++i) {
    const Index t = inst.topic_of_image[static_cast<size_t>(i)];
    inst.planted_U(i, t) =
        1.0 / std::sqrt(static_cast<double>(topic_size[static_cast<size_t>(t)]));
  }
  // Column sums of the truth within each topic, scaled so that U*V gives
  // per-topic frequencies.
  const DenseMatrix dense_truth = inst.truth.to_dense();
  inst.planted_V = DenseMatrix::Zero(cfg.n_topics, cfg.n_tags);
  for (Index i = 0; i < cfg.n_images; ++i) {
    const Index t = inst.topic_of_image[static_cast<size_t>(i)];
    inst.planted_V.row(t) += dense_truth.row(i);
  }
  for (Index t = 0; t < cfg.n_topics; ++t) {
    const auto size = static_cast<double>(topic_size[static_cast<size_t>(t)]);
    if (size > 0) inst.planted_V.row(t) /= std::sqrt(size);
  }
  return inst;
}

metrics::EvalSplit delete_tags(const TaggingMatrix& truth, double fraction,
                               std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidArgument("delete fraction must be in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  const auto tags = truth.tags_per_image();
  metrics::EvalSplit split;
  split.deleted.resize(tags.size());
  std::vector<std::pair<Index, Index>> kept;
  for (size_t i = 0; i < tags.size(); ++i) {
    auto own = tags[i];
    const auto count = static_cast<Index>(own.size());
    if (count < 2) {
      throw InvalidArgument("image " + std::to_string(i) + " has " +
                            std::to_string(count) +
                            " tags; deletion needs at least 2");
    }
    const Index remove = std::clamp<Index>(
        static_cast<Index>(std::llround(fraction * static_cast<double>(count))),
        1, count - 1);
    std::shuffle(own.begin(), own.end(), rng);
    std::vector<Index> removed(own.begin(), own.begin() + remove);
    std::sort(removed.begin(), removed.end());
    split.deleted[i] = std::move(removed);
    for (auto it = own.begin() + remove; it != own.end(); ++it) {
      kept.emplace_back(static_cast<Index>(i), *it);
    }
    split.test_images.push_back(static_cast<Index>(i));
  }
  split.observed =
      TaggingMatrix::from_pairs(truth.n_images(), truth.n_tags(), kept);
  return split;
}

PlantedFactorization planted_factorization(Index n_images, Index n_tags,
                                           Index rank, double density,
                                           std::uint64_t seed) {
  if (n_images < 1 || n_tags < 1 || rank < 1) {
    throw InvalidArgument("planted factorization sizes must be >= 1");
  }
  if (!(density > 0.0 && density <= 1.0)) {
    throw InvalidArgument("density must be in (0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution keep(density);
  PlantedFactorization out;
  out.U.resize(n_images, rank);
  for (Index k = 0; k < rank; ++k) {
    for (Index n = 0; n < n_images; ++n) out.U(n, k) = gauss(rng);
    out.U.col(k).normalize();
  }
  out.V = DenseMatrix::Zero(rank, n_tags);
  for (Index m = 0; m < n_tags; ++m) {
    for (Index k = 0; k < rank; ++k) {
      if (keep(rng)) out.V(k, m) = 1.0 + 2.0 * std::abs(gauss(rng));
    }
  }
  DenseMatrix product = out.U * out.V;
  out.D = TaggingMatrix(SparseMatrix(product.sparseView(0.0, 0.0)));
  return out;
}

}  // namespace tagcomplete::synth
