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

#include <optional>

#include <Eigen/SparseCore>

#include "tagcomplete/core.hpp"

namespace tagcomplete::lasso {

// min_w ||b - Aw||^2 + l1_weight * ||w||_1 expressed through the Gram matrix
// A'A, the correlation A'b and ||b||^2. The design matrix itself is never
// needed by the solver.
struct LassoProblem {
  DenseMatrix gram;
  DenseVector corr;
  double target_sq_norm = 0.0;
  double l1_weight = 0.0;
  // Coefficient pinned to zero (realizes a zero-diagonal constraint).
  std::optional<Index> excluded;

  Index size() const { return corr.size(); }

  // Objective value at w.
  double value(const DenseVector& w) const;

  // Shape, symmetry and finiteness checks. Positive semidefiniteness is not
  // verified here since it costs a factorization.
  void validate() const;
};

struct LassoSolution {
  Eigen::SparseVector<double> weights;
  double objective_value = 0.0;
  double kkt_residual = 0.0;
  Index iterations = 0;  // full coordinate sweeps
};

struct LassoOptions {
  double tol = 1e-8;
  Index max_iters = 10000;
};

double soft_threshold(double x, double threshold);

// Largest violation of the subgradient optimality conditions at w:
//   w_j != 0:  |2 (Gw - c)_j + l1 sign(w_j)|
//   w_j == 0:  max(0, |2 (Gw - c)_j| - l1)
// The excluded coordinate contributes only if it is nonzero (reported as
// infinity).
double kkt_residual(const LassoProblem& problem, const DenseVector& w);

// Cyclic coordinate descent with soft-thresholding. Throws NonConvergence
// carrying the last KKT residual when max_iters sweeps are not enough, and
// InvalidArgument on non-finite or unbounded problems.
LassoSolution solve_lasso(const LassoProblem& problem,
                          const LassoOptions& options = {});

bool verify_kkt(const LassoProblem& problem, const LassoSolution& solution,
                double tol);

}  // namespace tagcomplete::lasso
