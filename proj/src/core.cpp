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

#include "tagcomplete/core.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace tagcomplete {

namespace {

void require_finite(const SparseMatrix& m, const char* what) {
  for (Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      if (!std::isfinite(it.value())) {
        std::ostringstream os;
        os << what << " has a non-finite value at (" << it.row() << ", "
           << it.col() << ")";
        throw InvalidArgument(os.str());
      }
    }
  }
}

}  // namespace

void require_same(Index a, Index b, const char* what_a, const char* what_b) {
  if (a != b) {
    std::ostringstream os;
    os << "dimension mismatch: " << what_a << " = " << a << " but " << what_b
       << " = " << b;
    throw DimensionError(os.str());
  }
}

TaggingMatrix::TaggingMatrix(Index n_images, Index n_tags)
    : entries_(n_images, n_tags) {
  if (n_images < 0 || n_tags < 0) {
    throw InvalidArgument("tagging matrix dimensions must be non-negative");
  }
}

TaggingMatrix::TaggingMatrix(SparseMatrix entries)
    : entries_(std::move(entries)) {
  require_finite(entries_, "tagging matrix");
  entries_.prune(0.0, 0.0);
  entries_.makeCompressed();
}

TaggingMatrix TaggingMatrix::from_pairs(
    Index n_images, Index n_tags,
    const std::vector<std::pair<Index, Index>>& image_tag_pairs) {
  std::vector<Triplet> triplets;
  triplets.reserve(image_tag_pairs.size());
  for (const auto& [i, j] : image_tag_pairs) {
    if (i < 0 || i >= n_images || j < 0 || j >= n_tags) {
      std::ostringstream os;
      os << "tag assignment (" << i << ", " << j << ") outside " << n_images
         << " x " << n_tags;
      throw InvalidArgument(os.str());
    }
    triplets.emplace_back(i, j, 1.0);
  }
  SparseMatrix m(n_images, n_tags);
  // Repeated pairs collapse to a single assignment.
  m.setFromTriplets(triplets.begin(), triplets.end(),
                    [](double, double) { return 1.0; });
  return TaggingMatrix(std::move(m));
}

bool TaggingMatrix::is_binary() const {
  const double* v = entries_.valuePtr();
  for (Index k = 0; k < entries_.nonZeros(); ++k) {
    if (v[k] != 1.0) return false;
  }
  return true;
}

std::vector<std::vector<Index>> TaggingMatrix::tags_per_image() const {
  std::vector<std::vector<Index>> out(static_cast<size_t>(n_images()));
  // Column-major traversal visits tags in ascending order.
  for (Index j = 0; j < entries_.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(entries_, j); it; ++it) {
      if (it.value() != 0.0) out[static_cast<size_t>(it.row())].push_back(j);
    }
  }
  return out;
}

FeatureMatrix::FeatureMatrix(DenseMatrix data) : data_(std::move(data)) {
  if (!data_.allFinite()) {
    for (Index i = 0; i < data_.rows(); ++i) {
      for (Index j = 0; j < data_.cols(); ++j) {
        if (!std::isfinite(data_(i, j))) {
          std::ostringstream os;
          os << "feature matrix has a non-finite value at (" << i << ", " << j
             << ")";
          throw InvalidArgument(os.str());
        }
      }
    }
  }
}

FeatureMatrix FeatureMatrix::row_normalized() const {
  DenseMatrix out = data_;
  for (Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return FeatureMatrix(std::move(out));
}

FeatureMatrix FeatureMatrix::with_tags(const TaggingMatrix& tags) const {
  require_same(n_images(), tags.n_images(), "feature rows", "tag rows");
  DenseMatrix out(n_images(), n_dims() + tags.n_tags());
  out.leftCols(n_dims()) = data_;
  out.rightCols(tags.n_tags()) =
      (tags.to_dense().array() != 0.0).cast<double>().matrix();
  return FeatureMatrix(std::move(out));
}

StructureMatrix StructureMatrix::zeros(Index size, Orientation orientation) {
  StructureMatrix s;
  s.coeffs = SparseMatrix(size, size);
  s.coeffs.makeCompressed();
  s.orientation = orientation;
  return s;
}

void StructureMatrix::validate() const {
  if (coeffs.rows() != coeffs.cols()) {
    throw InvalidArgument("structure matrix must be square");
  }
  require_finite(coeffs, "structure matrix");
  for (Index k = 0; k < coeffs.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(coeffs, k); it; ++it) {
      if (it.row() == it.col()) {
        throw InvalidArgument("structure matrix stores a diagonal entry at " +
                              std::to_string(it.row()));
      }
    }
  }
}

double FactorModel::max_column_norm() const {
  double best = 0.0;
  for (Index k = 0; k < U.cols(); ++k) best = std::max(best, U.col(k).norm());
  return best;
}

void FactorModel::validate() const {
  require_same(U.cols(), V.rows(), "U columns", "V rows");
  require_same(U.rows(), E.rows(), "U rows", "E rows");
  require_same(V.cols(), E.cols(), "V columns", "E columns");
  if (!U.allFinite()) throw InvalidArgument("U has non-finite values");
  require_finite(V, "V");
  require_finite(E, "E");
}

void Hyperparams::validate() const {
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string(name) + " must be finite and >= 0");
    }
  };
  non_negative(alpha, "alpha");
  non_negative(mu, "mu");
  non_negative(beta, "beta");
  non_negative(gamma, "gamma");
  non_negative(lambda, "lambda");
  non_negative(eta, "eta");
  if (K < 1) throw InvalidArgument("K must be >= 1");
  if (knn_k < 1) throw InvalidArgument("knn_k must be >= 1");
  if (max_outer_iters < 1) {
    throw InvalidArgument("max_outer_iters must be >= 1");
  }
  if (!(rel_tol > 0.0)) throw InvalidArgument("rel_tol must be > 0");
  if (sweeps_per_block < 1) {
    throw InvalidArgument("sweeps_per_block must be >= 1");
  }
  if (!(lasso_tol > 0.0)) throw InvalidArgument("lasso_tol must be > 0");
  if (lasso_max_iters < 1) {
    throw InvalidArgument("lasso_max_iters must be >= 1");
  }
}

double l1_norm(const SparseMatrix& m) {
  double sum = 0.0;
  const double* v = m.valuePtr();
  if (m.isCompressed()) {
    for (Index k = 0; k < m.nonZeros(); ++k) sum += std::abs(v[k]);
    return sum;
  }
  for (Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      sum += std::abs(it.value());
    }
  }
  return sum;
}

ObjectiveTerms objective_terms(const TaggingMatrix& D, const StructureMatrix& S,
                               const StructureMatrix& T,
                               const FactorModel& model,
                               const Hyperparams& hp) {
  const Index n = D.n_images();
  const Index m = D.n_tags();
  require_same(S.coeffs.rows(), n, "S rows", "D rows");
  require_same(S.coeffs.cols(), n, "S columns", "D rows");
  require_same(T.coeffs.rows(), m, "T rows", "D columns");
  require_same(T.coeffs.cols(), m, "T columns", "D columns");
  require_same(model.U.rows(), n, "U rows", "D rows");
  require_same(model.V.cols(), m, "V columns", "D columns");
  require_same(model.U.cols(), model.V.rows(), "U columns", "V rows");
  require_same(model.E.rows(), n, "E rows", "D rows");
  require_same(model.E.cols(), m, "E columns", "D columns");

  ObjectiveTerms terms;
  DenseMatrix residual = D.to_dense();
  residual -= DenseMatrix(model.E);
  residual.noalias() -= model.U * model.V;
  terms.residual = residual.squaredNorm();

  if (hp.gamma != 0.0) {
    DenseMatrix su = S.coeffs * model.U;
    terms.feature_structure = hp.gamma * (model.U - su).squaredNorm();
  }
  if (hp.lambda != 0.0) {
    SparseMatrix vt = model.V * T.coeffs;
    terms.tag_structure =
        hp.lambda * (DenseMatrix(model.V) - DenseMatrix(vt)).squaredNorm();
  }
  terms.coefficient_l1 = 2.0 * hp.eta * l1_norm(model.V);
  terms.error_l1 = hp.beta * l1_norm(model.E);
  return terms;
}

double objective(const TaggingMatrix& D, const StructureMatrix& S,
                 const StructureMatrix& T, const FactorModel& model,
                 const Hyperparams& hp) {
  return objective_terms(D, S, T, model, hp).total();
}

}  // namespace tagcomplete
