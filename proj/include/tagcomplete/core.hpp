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
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "tagcomplete/error.hpp"

namespace tagcomplete {

using Index = Eigen::Index;
using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// N x M image/tag score matrix. Starts binary (stored values are all 1) and
// becomes real valued after re-initialization. Absent entries mean 0.
class TaggingMatrix {
 public:
  TaggingMatrix() = default;
  TaggingMatrix(Index n_images, Index n_tags);
  // Rejects non-finite values. Explicit zeros are pruned.
  explicit TaggingMatrix(SparseMatrix entries);

  static TaggingMatrix from_pairs(
      Index n_images, Index n_tags,
      const std::vector<std::pair<Index, Index>>& image_tag_pairs);

  Index n_images() const { return entries_.rows(); }
  Index n_tags() const { return entries_.cols(); }
  Index nnz() const { return entries_.nonZeros(); }

  // True when every stored value equals exactly 1.
  bool is_binary() const;

  const SparseMatrix& entries() const { return entries_; }
  DenseMatrix to_dense() const { return DenseMatrix(entries_); }

  // Sorted tag indices with a nonzero score, one list per image.
  std::vector<std::vector<Index>> tags_per_image() const;

 private:
  SparseMatrix entries_;
};

// Dense N x L feature matrix, one row per image.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(DenseMatrix data);

  Index n_images() const { return data_.rows(); }
  Index n_dims() const { return data_.cols(); }
  const DenseMatrix& data() const { return data_; }

  // Every nonzero row scaled to unit L2 norm; zero rows stay zero.
  FeatureMatrix row_normalized() const;

  // Appends the 0/1 tag indicators of `tags` as extra feature columns.
  FeatureMatrix with_tags(const TaggingMatrix& tags) const;

 private:
  DenseMatrix data_;
};

enum class Orientation {
  kRowReconstructs,     // S: row n reconstructs item n from other rows
  kColumnReconstructs,  // T: column m reconstructs tag m from other columns
};

// Local linear reconstruction coefficients. The diagonal is never stored.
struct StructureMatrix {
  SparseMatrix coeffs;
  Orientation orientation = Orientation::kRowReconstructs;

  Index size() const { return coeffs.rows(); }

  static StructureMatrix zeros(Index size, Orientation orientation);

  // Throws InvalidArgument unless square, finite and free of stored
  // diagonal entries.
  void validate() const;
};

// D = UV + E. The completed matrix A = UV is derived on demand.
struct FactorModel {
  DenseMatrix U;  // N x K basis, columns in the unit ball
  SparseMatrix V; // K x M coefficients
  SparseMatrix E; // N x M error

  Index n_images() const { return U.rows(); }
  Index n_tags() const { return V.cols(); }
  Index rank() const { return U.cols(); }

  DenseMatrix completed() const { return U * V; }

  // Largest column L2 norm of U (0 for an empty basis).
  double max_column_norm() const;

  void validate() const;
};

// Starting basis for the solver.
enum class Init {
  kSpectral,  // leading left singular vectors of the data matrix
  kRandom,    // seeded uniform [-1, 1] entries, columns scaled to unit norm
};

struct Hyperparams {
  double alpha = 1.0;   // L1 weight for S
  double mu = 1.0;      // L1 weight for T
  double beta = 0.7;    // L1 weight on E
  double gamma = 1.0;   // feature-structure weight
  double lambda = 0.5;  // tag-structure weight
  double eta = 1.0;     // L1 weight on V (multiplied by 2 in the objective)
  Index K = 100;
  Index knn_k = 200;
  Index max_outer_iters = 500;
  double rel_tol = 1e-5;
  std::uint64_t rng_seed = 0;
  Index sweeps_per_block = 1;
  double lasso_tol = 1e-8;
  Index lasso_max_iters = 10000;
  bool normalize_features = true;
  bool tags_as_features = false;
  unsigned threads = 0;  // 0 = hardware concurrency
  Init init = Init::kSpectral;

  void validate() const;
};

struct ObjectiveTerms {
  double residual = 0.0;        // ||D - E - UV||_F^2
  double feature_structure = 0.0;  // gamma ||U - SU||_F^2
  double tag_structure = 0.0;   // lambda ||V - VT||_F^2
  double coefficient_l1 = 0.0;  // 2 eta ||V||_1
  double error_l1 = 0.0;        // beta ||E||_1

  double total() const {
    return residual + feature_structure + tag_structure + coefficient_l1 +
           error_l1;
  }
};

ObjectiveTerms objective_terms(const TaggingMatrix& D, const StructureMatrix& S,
                               const StructureMatrix& T,
                               const FactorModel& model, const Hyperparams& hp);

// The full tag completion objective. Throws DimensionError on shape mismatch.
double objective(const TaggingMatrix& D, const StructureMatrix& S,
                 const StructureMatrix& T, const FactorModel& model,
                 const Hyperparams& hp);

// Entrywise absolute sum.
double l1_norm(const SparseMatrix& m);

void require_same(Index a, Index b, const char* what_a, const char* what_b);

}  // namespace tagcomplete
