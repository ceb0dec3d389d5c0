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

#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tagcomplete/structure.hpp"

namespace tagcomplete::structure {
namespace {

DenseMatrix gaussian(std::mt19937_64& rng, Index r, Index c) {
  std::normal_distribution<double> g(0.0, 1.0);
  DenseMatrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

TaggingMatrix random_binary(std::mt19937_64& rng, Index n, Index m, double p) {
  std::bernoulli_distribution on(p);
  std::vector<std::pair<Index, Index>> pairs;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j)
      if (on(rng)) pairs.emplace_back(i, j);
  return TaggingMatrix::from_pairs(n, m, pairs);
}

std::vector<Index> ids(const std::vector<Neighbor>& list) {
  std::vector<Index> out;
  for (const auto& n : list) out.push_back(n.index);
  return out;
}

bool diagonal_absent(const SparseMatrix& m) {
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      if (it.row() == it.col()) return false;
  return true;
}

Hyperparams small_hp(Index k, double l1) {
  Hyperparams hp;
  hp.knn_k = k;
  hp.alpha = l1;
  hp.mu = l1;
  hp.threads = 1;
  return hp;
}

TEST(KnnTest, PointsOnALine) {
  DenseMatrix x(3, 1);
  x << 0, 1, 10;
  const auto idx = knn_index(x, 1, Metric::kEuclidean);
  EXPECT_EQ(ids(idx.lists[0]), std::vector<Index>({1}));
  EXPECT_EQ(ids(idx.lists[1]), std::vector<Index>({0}));
  EXPECT_EQ(ids(idx.lists[2]), std::vector<Index>({1}));
}

TEST(KnnTest, LargeKReturnsFullComplement) {
  std::mt19937_64 rng(1);
  const auto idx = knn_index(gaussian(rng, 6, 2), 50, Metric::kEuclidean);
  for (size_t i = 0; i < 6; ++i) {
    auto got = ids(idx.lists[i]);
    std::sort(got.begin(), got.end());
    std::vector<Index> expected;
    for (Index j = 0; j < 6; ++j)
      if (j != static_cast<Index>(i)) expected.push_back(j);
    EXPECT_EQ(got, expected);
  }
}

TEST(KnnTest, MatchesBruteForce) {
  std::mt19937_64 rng(2);
  const DenseMatrix x = gaussian(rng, 50, 5);
  const auto idx = knn_index(x, 5, Metric::kEuclidean, 3);
  const auto brute = oracle::knn_brute(x, 5);
  for (size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(ids(idx.lists[i]), brute[i]);
    for (size_t t = 1; t < idx.lists[i].size(); ++t) {
      EXPECT_LE(idx.lists[i][t - 1].distance, idx.lists[i][t].distance);
    }
  }
}

TEST(KnnTest, TiesBrokenByIndex) {
  DenseMatrix x(4, 1);
  x << 0, 1, -1, 1;
  const auto idx = knn_index(x, 2, Metric::kEuclidean);
  EXPECT_EQ(ids(idx.lists[0]), std::vector<Index>({1, 2}));
}

TEST(KnnTest, CosineTreatsZeroVectorAsDistanceOne) {
  DenseMatrix x(3, 2);
  x << 1, 0, 0, 0, 2, 0;
  const auto idx = knn_index(x, 2, Metric::kCosine);
  EXPECT_EQ(ids(idx.lists[0]), std::vector<Index>({2, 1}));
  EXPECT_NEAR(idx.lists[0][1].distance, 1.0, 1e-15);
  EXPECT_NEAR(idx.lists[1][0].distance, 1.0, 1e-15);
}

TEST(KnnTest, GramAgreesWithDirectDistances) {
  std::mt19937_64 rng(3);
  const DenseMatrix x = gaussian(rng, 8, 20);  // columns are the items
  const auto from_gram = knn_from_gram(x.transpose() * x, 3);
  const auto direct = oracle::knn_brute(x.transpose(), 3);
  for (size_t i = 0; i < 20; ++i) EXPECT_EQ(ids(from_gram.lists[i]), direct[i]);
}

TEST(KnnTest, RejectsTooFewItems) {
  EXPECT_THROW(knn_index(DenseMatrix(1, 3), 1, Metric::kEuclidean),
               InvalidArgument);
  EXPECT_THROW(knn_index(DenseMatrix::Zero(4, 3), 0, Metric::kEuclidean),
               InvalidArgument);
}

TEST(BuildSTest, DuplicateRowsReconstructEachOther) {
  DenseMatrix x(3, 3);
  x << 1, 2, 3, 1, 2, 3, -3, 0, 1;
  const auto report = build_S(FeatureMatrix(x), small_hp(1, 1e-6));
  const SparseMatrix& s = report.matrix.coeffs;
  EXPECT_NEAR(s.coeff(0, 1), 1.0, 1e-5);
  EXPECT_NEAR(s.coeff(1, 0), 1.0, 1e-5);
}

TEST(BuildSTest, LargePenaltyGivesZeroMatrix) {
  std::mt19937_64 rng(4);
  const auto report = build_S(FeatureMatrix(gaussian(rng, 12, 4)), small_hp(4, 1e3));
  EXPECT_EQ(report.matrix.coeffs.nonZeros(), 0);
}

TEST(BuildSTest, RowsMatchEnumerationOracle) {
  std::mt19937_64 rng(5);
  const DenseMatrix x = gaussian(rng, 10, 4);
  const auto hp = small_hp(3, 0.1);
  const auto report = build_S(FeatureMatrix(x), hp);
  const DenseMatrix xn = FeatureMatrix(x).row_normalized().data();
  const auto nbrs = oracle::knn_brute(xn, 3);
  for (Index i = 0; i < 10; ++i) {
    const auto& nb = nbrs[static_cast<size_t>(i)];
    DenseMatrix a(xn.cols(), static_cast<Index>(nb.size()));
    for (size_t c = 0; c < nb.size(); ++c) a.col(static_cast<Index>(c)) = xn.row(nb[c]).transpose();
    const DenseVector b = xn.row(i).transpose();
    const auto best = oracle::lasso_enumerate(a.transpose() * a, a.transpose() * b,
                                              b.squaredNorm(), hp.alpha);
    DenseVector row = DenseMatrix(report.matrix.coeffs).row(i).transpose();
    const double got = (b - xn.transpose() * row).squaredNorm() + hp.alpha * row.lpNorm<1>();
    EXPECT_NEAR(got, best.value, 1e-6) << "row " << i;
  }
}

TEST(BuildSTest, InvariantsHold) {
  std::mt19937_64 rng(6);
  const auto hp = small_hp(5, 0.05);
  const auto report = build_S(FeatureMatrix(gaussian(rng, 40, 6)), hp);
  const SparseMatrix rows = SparseMatrix(report.matrix.coeffs.transpose());
  EXPECT_TRUE(diagonal_absent(report.matrix.coeffs));
  for (Index i = 0; i < rows.outerSize(); ++i) {
    Index count = 0;
    for (SparseMatrix::InnerIterator it(rows, i); it; ++it) ++count;
    EXPECT_LE(count, hp.knn_k);
  }
  for (double r : report.kkt_residuals) EXPECT_LE(r, hp.lasso_tol);
}

TEST(BuildSTest, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(7);
  const FeatureMatrix x(gaussian(rng, 60, 5));
  auto hp = small_hp(8, 0.05);
  const SparseMatrix one = build_S(x, hp).matrix.coeffs;
  hp.threads = 4;
  const SparseMatrix four = build_S(x, hp).matrix.coeffs;
  EXPECT_EQ(DenseMatrix(one), DenseMatrix(four));
  EXPECT_EQ(one.nonZeros(), four.nonZeros());
}

TEST(BuildSTest, AboveThresholdRowIsZero) {
  std::mt19937_64 rng(8);
  const DenseMatrix x = gaussian(rng, 6, 3);
  const DenseMatrix xn = FeatureMatrix(x).row_normalized().data();
  // Threshold for row 0: max_j |2 <x_0, x_j>| over all other rows.
  double threshold = 0.0;
  for (Index j = 1; j < 6; ++j) threshold = std::max(threshold, 2.0 * std::abs(xn.row(0).dot(xn.row(j))));
  const auto report = build_S(FeatureMatrix(x), small_hp(5, threshold * 1.0001));
  EXPECT_EQ(DenseMatrix(report.matrix.coeffs).row(0).cwiseAbs().sum(), 0.0);
}

TEST(BuildSTest, TagsAsFeaturesAppendsIndicators) {
  DenseMatrix x = DenseMatrix::Zero(3, 1);
  x << 1, 1, 1;
  const auto d = TaggingMatrix::from_pairs(3, 2, {{0, 0}, {1, 0}, {2, 1}});
  auto hp = small_hp(1, 1e-6);
  hp.tags_as_features = true;
  hp.normalize_features = false;
  const auto report = build_S(FeatureMatrix(x), d, hp);
  // Rows 0 and 1 are identical once tags are appended; row 2 differs.
  EXPECT_NEAR(report.matrix.coeffs.coeff(0, 1), 1.0, 1e-5);
  hp.tags_as_features = false;
  const auto plain = build_S(FeatureMatrix(x), d, hp);
  EXPECT_NEAR(plain.matrix.coeffs.coeff(2, 0), 1.0, 1e-5);
}

TEST(BuildTTest, DuplicateColumnsReconstructEachOther) {
  const auto d = TaggingMatrix::from_pairs(
      4, 3, {{0, 0}, {0, 1}, {2, 0}, {2, 1}, {1, 2}, {3, 2}, {3, 0}, {3, 1}});
  const auto report = build_T(d, small_hp(1, 1e-6));
  EXPECT_NEAR(report.matrix.coeffs.coeff(0, 1), 1.0, 1e-5);
  EXPECT_NEAR(report.matrix.coeffs.coeff(1, 0), 1.0, 1e-5);
}

TEST(BuildTTest, LargePenaltyGivesZeroMatrix) {
  std::mt19937_64 rng(9);
  const auto report = build_T(random_binary(rng, 10, 6, 0.4), small_hp(3, 1e3));
  EXPECT_EQ(report.matrix.coeffs.nonZeros(), 0);
}

TEST(BuildTTest, ColumnsMatchEnumerationOracle) {
  std::mt19937_64 rng(10);
  const auto d = random_binary(rng, 8, 6, 0.45);
  const auto hp = small_hp(3, 0.1);
  const auto report = build_T(d, hp);
  const DenseMatrix dd = d.to_dense();
  const auto nbrs = oracle::knn_brute(dd.transpose(), 3);
  const DenseMatrix t = DenseMatrix(report.matrix.coeffs);
  for (Index m = 0; m < 6; ++m) {
    const DenseVector b = dd.col(m);
    if (b.squaredNorm() == 0.0) continue;
    const auto& nb = nbrs[static_cast<size_t>(m)];
    DenseMatrix a(dd.rows(), static_cast<Index>(nb.size()));
    for (size_t c = 0; c < nb.size(); ++c) a.col(static_cast<Index>(c)) = dd.col(nb[c]);
    const auto best = oracle::lasso_enumerate(a.transpose() * a, a.transpose() * b,
                                              b.squaredNorm(), hp.mu);
    const double got = (b - dd * t.col(m)).squaredNorm() + hp.mu * t.col(m).lpNorm<1>();
    EXPECT_NEAR(got, best.value, 1e-6) << "column " << m;
  }
}

TEST(BuildTTest, UnusedTagIsSkippedWithWarning) {
  const auto d = TaggingMatrix::from_pairs(3, 3, {{0, 0}, {1, 1}, {2, 0}});
  const auto report = build_T(d, small_hp(2, 0.01));
  EXPECT_EQ(report.skipped, std::vector<Index>({2}));
  EXPECT_FALSE(report.warnings.empty());
  EXPECT_EQ(DenseMatrix(report.matrix.coeffs).col(2).cwiseAbs().sum(), 0.0);
}

TEST(BuildTTest, InvariantsHold) {
  std::mt19937_64 rng(11);
  const auto hp = small_hp(4, 0.05);
  const auto report = build_T(random_binary(rng, 50, 20, 0.2), hp);
  const SparseMatrix& t = report.matrix.coeffs;
  EXPECT_TRUE(diagonal_absent(t));
  for (Index j = 0; j < t.outerSize(); ++j) {
    Index count = 0;
    for (SparseMatrix::InnerIterator it(t, j); it; ++it) ++count;
    EXPECT_LE(count, hp.knn_k);
  }
}

TEST(ReinitializeTest, ZeroStructureGivesZero) {
  const auto d = TaggingMatrix::from_pairs(2, 2, {{0, 0}, {1, 1}});
  const auto r = reinitialize(d, StructureMatrix::zeros(2, Orientation::kRowReconstructs),
                              StructureMatrix::zeros(2, Orientation::kColumnReconstructs));
  EXPECT_EQ(r.nnz(), 0);
}

TEST(ReinitializeTest, HandExample) {
  const auto d = TaggingMatrix::from_pairs(2, 2, {{0, 0}, {1, 1}});
  SparseMatrix swap(2, 2);
  swap.insert(0, 1) = 1.0;
  swap.insert(1, 0) = 1.0;
  const auto r = reinitialize(d, {swap, Orientation::kRowReconstructs},
                              {swap, Orientation::kColumnReconstructs});
  DenseMatrix expected(2, 2);
  expected << 0, 1, 1, 0;
  EXPECT_EQ(r.to_dense(), expected);
  EXPECT_EQ(d.to_dense(), DenseMatrix::Identity(2, 2));
}

TEST(ReinitializeTest, AgreesWithDenseOracle) {
  std::mt19937_64 rng(12);
  const auto d = random_binary(rng, 7, 5, 0.4);
  DenseMatrix s = gaussian(rng, 7, 7), t = gaussian(rng, 5, 5);
  s.diagonal().setZero();
  t.diagonal().setZero();
  const auto r = reinitialize(d, {s.sparseView(), Orientation::kRowReconstructs},
                              {t.sparseView(), Orientation::kColumnReconstructs});
  const DenseMatrix dd = d.to_dense();
  const DenseMatrix expected =
      0.5 * (oracle::multiply(s, dd) + oracle::multiply(dd, t));
  EXPECT_LE((r.to_dense() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ReinitializeTest, DimensionMismatchThrows) {
  const auto d = TaggingMatrix::from_pairs(2, 3, {{0, 0}});
  EXPECT_THROW(reinitialize(d, StructureMatrix::zeros(3, Orientation::kRowReconstructs),
                            StructureMatrix::zeros(3, Orientation::kColumnReconstructs)),
               DimensionError);
}

}  // namespace
}  // namespace tagcomplete::structure
