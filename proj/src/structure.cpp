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

#include "tagcomplete/structure.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "tagcomplete/lasso.hpp"

namespace tagcomplete::structure {

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace {

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any worker is rethrown on the calling thread.
void parallel_for(Index count, unsigned threads,
                  const std::function<void(Index)>& body) {
  threads = std::min<unsigned>(resolve_threads(threads),
                               static_cast<unsigned>(std::max<Index>(count, 1)));
  if (threads <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const Index i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

bool closer(const Neighbor& a, const Neighbor& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  return a.index < b.index;
}

std::vector<Neighbor> select_nearest(std::vector<Neighbor> candidates,
                                     Index k) {
  const auto keep = static_cast<size_t>(
      std::min<Index>(k, static_cast<Index>(candidates.size())));
  std::partial_sort(candidates.begin(), candidates.begin() + keep,
                    candidates.end(), closer);
  candidates.resize(keep);
  return candidates;
}

void check_knn_args(Index n, Index k) {
  if (n < 2) throw InvalidArgument("knn needs at least 2 items");
  if (k < 1) throw InvalidArgument("knn k must be >= 1");
}

}  // namespace

NeighborIndex knn_index(const DenseMatrix& vectors, Index k, Metric metric,
                        unsigned threads) {
  const Index n = vectors.rows();
  check_knn_args(n, k);
  if (!vectors.allFinite()) {
    throw InvalidArgument("knn input has non-finite values");
  }
  DenseVector norms(n);
  for (Index i = 0; i < n; ++i) norms[i] = vectors.row(i).norm();

  NeighborIndex index;
  index.k = k;
  index.lists.resize(static_cast<size_t>(n));
  parallel_for(n, threads, [&](Index i) {
    std::vector<Neighbor> candidates;
    candidates.reserve(static_cast<size_t>(n - 1));
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double d;
      if (metric == Metric::kEuclidean) {
        d = (vectors.row(i) - vectors.row(j)).norm();
      } else if (norms[i] == 0.0 || norms[j] == 0.0) {
        d = 1.0;
      } else {
        d = 1.0 - vectors.row(i).dot(vectors.row(j)) / (norms[i] * norms[j]);
      }
      candidates.push_back({j, d});
    }
    index.lists[static_cast<size_t>(i)] = select_nearest(std::move(candidates), k);
  });
  return index;
}

NeighborIndex knn_from_gram(const DenseMatrix& gram, Index k,
                            unsigned threads) {
  const Index n = gram.rows();
  check_knn_args(n, k);
  require_same(gram.cols(), n, "gram columns", "gram rows");
  NeighborIndex index;
  index.k = k;
  index.lists.resize(static_cast<size_t>(n));
  parallel_for(n, threads, [&](Index i) {
    std::vector<Neighbor> candidates;
    candidates.reserve(static_cast<size_t>(n - 1));
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double sq = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
      candidates.push_back({j, std::sqrt(std::max(sq, 0.0))});
    }
    index.lists[static_cast<size_t>(i)] = select_nearest(std::move(candidates), k);
  });
  return index;
}

namespace {

struct ItemSolution {
  std::vector<Index> support;
  std::vector<double> weights;
  double kkt = 0.0;
  Index sweeps = 0;
};

// Solves one reconstruction problem given the item's neighbor list and
// accessors into a Gram matrix over all items.
template <typename GramAt>
ItemSolution solve_item(Index item, const std::vector<Neighbor>& neighbors,
                        GramAt gram_at, double l1_weight,
                        const Hyperparams& hp, const char* kind) {
  const auto p = static_cast<Index>(neighbors.size());
  lasso::LassoProblem problem;
  problem.gram.resize(p, p);
  problem.corr.resize(p);
  for (Index a = 0; a < p; ++a) {
    const Index ia = neighbors[static_cast<size_t>(a)].index;
    problem.corr[a] = gram_at(ia, item);
    for (Index b = a; b < p; ++b) {
      const double g = gram_at(ia, neighbors[static_cast<size_t>(b)].index);
      problem.gram(a, b) = g;
      problem.gram(b, a) = g;
    }
  }
  problem.target_sq_norm = gram_at(item, item);
  problem.l1_weight = l1_weight;

  ItemSolution out;
  try {
    const auto solution = lasso::solve_lasso(
        problem, {hp.lasso_tol, hp.lasso_max_iters});
    out.kkt = solution.kkt_residual;
    out.sweeps = solution.iterations;
    for (Eigen::SparseVector<double>::InnerIterator it(solution.weights); it;
         ++it) {
      out.support.push_back(neighbors[static_cast<size_t>(it.index())].index);
      out.weights.push_back(it.value());
    }
  } catch (const NonConvergence& e) {
    std::ostringstream os;
    os << kind << " " << item << ": " << e.what();
    throw NonConvergence(os.str(), e.residual());
  }
  return out;
}

}  // namespace

BuildReport build_S(const FeatureMatrix& X, const Hyperparams& hp) {
  hp.validate();
  const FeatureMatrix features = hp.normalize_features ? X.row_normalized() : X;
  const DenseMatrix& x = features.data();
  const Index n = x.rows();
  const unsigned threads = resolve_threads(hp.threads);
  const NeighborIndex neighbors =
      knn_index(x, hp.knn_k, Metric::kEuclidean, threads);

  std::vector<ItemSolution> rows(static_cast<size_t>(n));
  parallel_for(n, threads, [&](Index i) {
    auto gram_at = [&](Index a, Index b) { return x.row(a).dot(x.row(b)); };
    rows[static_cast<size_t>(i)] = solve_item(
        i, neighbors.lists[static_cast<size_t>(i)], gram_at, hp.alpha, hp,
        "S row");
  });

  BuildReport report;
  std::vector<Triplet> triplets;
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<size_t>(i)];
    for (size_t t = 0; t < row.support.size(); ++t) {
      triplets.emplace_back(i, row.support[t], row.weights[t]);
    }
    report.kkt_residuals.push_back(row.kkt);
    report.lasso_sweeps.push_back(row.sweeps);
  }
  report.matrix.orientation = Orientation::kRowReconstructs;
  report.matrix.coeffs = SparseMatrix(n, n);
  report.matrix.coeffs.setFromTriplets(triplets.begin(), triplets.end());
  report.matrix.coeffs.makeCompressed();
  return report;
}

BuildReport build_S(const FeatureMatrix& X, const TaggingMatrix& D,
                    const Hyperparams& hp) {
  if (!hp.tags_as_features) return build_S(X, hp);
  return build_S(X.with_tags(D), hp);
}

BuildReport build_T(const TaggingMatrix& D, const Hyperparams& hp) {
  hp.validate();
  const Index m = D.n_tags();
  const unsigned threads = resolve_threads(hp.threads);
  const SparseMatrix& d = D.entries();
  const DenseMatrix gram = DenseMatrix(SparseMatrix(d.transpose() * d));
  const NeighborIndex neighbors = knn_from_gram(gram, hp.knn_k, threads);

  BuildReport report;
  std::vector<char> skip(static_cast<size_t>(m), 0);
  for (Index j = 0; j < m; ++j) {
    if (gram(j, j) == 0.0) {
      skip[static_cast<size_t>(j)] = 1;
      report.skipped.push_back(j);
      report.warnings.push_back("tag " + std::to_string(j) +
                                " is never used; its T column is zero");
    }
  }

  std::vector<ItemSolution> cols(static_cast<size_t>(m));
  parallel_for(m, threads, [&](Index j) {
    if (skip[static_cast<size_t>(j)]) return;
    auto gram_at = [&](Index a, Index b) { return gram(a, b); };
    cols[static_cast<size_t>(j)] = solve_item(
        j, neighbors.lists[static_cast<size_t>(j)], gram_at, hp.mu, hp,
        "T column");
  });

  std::vector<Triplet> triplets;
  for (Index j = 0; j < m; ++j) {
    const auto& col = cols[static_cast<size_t>(j)];
    for (size_t t = 0; t < col.support.size(); ++t) {
      triplets.emplace_back(col.support[t], j, col.weights[t]);
    }
    report.kkt_residuals.push_back(col.kkt);
    report.lasso_sweeps.push_back(col.sweeps);
  }
  report.matrix.orientation = Orientation::kColumnReconstructs;
  report.matrix.coeffs = SparseMatrix(m, m);
  report.matrix.coeffs.setFromTriplets(triplets.begin(), triplets.end());
  report.matrix.coeffs.makeCompressed();
  return report;
}

TaggingMatrix reinitialize(const TaggingMatrix& D, const StructureMatrix& S,
                           const StructureMatrix& T) {
  require_same(S.coeffs.rows(), D.n_images(), "S rows", "D rows");
  require_same(S.coeffs.cols(), D.n_images(), "S columns", "D rows");
  require_same(T.coeffs.rows(), D.n_tags(), "T rows", "D columns");
  require_same(T.coeffs.cols(), D.n_tags(), "T columns", "D columns");
  SparseMatrix sd = S.coeffs * D.entries();
  SparseMatrix dt = D.entries() * T.coeffs;
  SparseMatrix sum = 0.5 * (sd + dt);
  return TaggingMatrix(std::move(sum));
}

}  // namespace tagcomplete::structure
