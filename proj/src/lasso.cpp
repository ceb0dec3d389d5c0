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

#include "tagcomplete/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace tagcomplete::lasso {

double soft_threshold(double x, double threshold) {
  if (x > threshold) return x - threshold;
  if (x < -threshold) return x + threshold;
  return 0.0;
}

double LassoProblem::value(const DenseVector& w) const {
  return target_sq_norm - 2.0 * corr.dot(w) + w.dot(gram * w) +
         l1_weight * w.lpNorm<1>();
}

void LassoProblem::validate() const {
  const Index p = corr.size();
  if (gram.rows() != p || gram.cols() != p) {
    std::ostringstream os;
    os << "lasso gram is " << gram.rows() << " x " << gram.cols()
       << " but corr has " << p << " entries";
    throw DimensionError(os.str());
  }
  if (!gram.allFinite() || !corr.allFinite() ||
      !std::isfinite(target_sq_norm) || !std::isfinite(l1_weight)) {
    throw InvalidArgument("lasso problem has non-finite inputs");
  }
  if (l1_weight < 0.0) throw InvalidArgument("lasso l1_weight must be >= 0");
  if (excluded && (*excluded < 0 || *excluded >= p)) {
    throw InvalidArgument("lasso excluded index out of range");
  }
  const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw InvalidArgument("lasso gram is not symmetric");
  }
  for (Index j = 0; j < p; ++j) {
    if (gram(j, j) < 0.0) {
      throw InvalidArgument("lasso gram has a negative diagonal entry");
    }
  }
}

namespace {

double kkt_from_gradient(const LassoProblem& problem, const DenseVector& w,
                         const DenseVector& smooth_grad) {
  double worst = 0.0;
  for (Index j = 0; j < w.size(); ++j) {
    if (problem.excluded && *problem.excluded == j) {
      if (w[j] != 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    const double g = 2.0 * smooth_grad[j];
    double violation;
    if (w[j] > 0.0) {
      violation = std::abs(g + problem.l1_weight);
    } else if (w[j] < 0.0) {
      violation = std::abs(g - problem.l1_weight);
    } else {
      violation = std::max(0.0, std::abs(g) - problem.l1_weight);
    }
    worst = std::max(worst, violation);
  }
  return worst;
}

}  // namespace

double kkt_residual(const LassoProblem& problem, const DenseVector& w) {
  const DenseVector grad = problem.gram * w - problem.corr;
  return kkt_from_gradient(problem, w, grad);
}

LassoSolution solve_lasso(const LassoProblem& problem,
                          const LassoOptions& options) {
  problem.validate();
  if (!(options.tol > 0.0)) throw InvalidArgument("lasso tol must be > 0");

  const Index p = problem.size();
  const double half_l1 = 0.5 * problem.l1_weight;
  const auto& G = problem.gram;
  const auto& c = problem.corr;

  std::vector<char> frozen(static_cast<size_t>(p), 0);
  for (Index j = 0; j < p; ++j) {
    if (problem.excluded && *problem.excluded == j) {
      frozen[j] = 1;
    } else if (G(j, j) == 0.0) {
      // A zero column of the design: bounded only if its correlation is
      // inside the L1 ball.
      if (2.0 * std::abs(c[j]) > problem.l1_weight) {
        throw InvalidArgument(
            "lasso problem is unbounded: zero gram diagonal with nonzero "
            "correlation at index " + std::to_string(j));
      }
      frozen[j] = 1;
    }
  }

  DenseVector w = DenseVector::Zero(p);
  DenseVector grad = -c;  // G w - c
  std::vector<Index> active;

  // Returns the largest scaled coordinate move.
  auto update = [&](Index j) {
    const double gjj = G(j, j);
    const double r = gjj * w[j] - grad[j];
    const double next = soft_threshold(r, half_l1) / gjj;
    const double delta = next - w[j];
    if (delta != 0.0) {
      w[j] = next;
      grad.noalias() += delta * G.col(j);
    }
    return std::abs(delta) * gjj;
  };

  LassoSolution solution;
  double residual = std::numeric_limits<double>::infinity();
  Index sweeps = 0;
  while (sweeps < options.max_iters) {
    ++sweeps;
    for (Index j = 0; j < p; ++j) {
      if (!frozen[j]) update(j);
    }
    active.clear();
    for (Index j = 0; j < p; ++j) {
      if (w[j] != 0.0) active.push_back(j);
    }
    // Polish the active set before paying for another full sweep.
    for (Index inner = 0; inner < options.max_iters && !active.empty();
         ++inner) {
      double move = 0.0;
      for (Index j : active) move = std::max(move, update(j));
      if (move <= 0.05 * options.tol) break;
    }
    grad.noalias() = G * w - c;
    residual = kkt_from_gradient(problem, w, grad);
    if (residual <= options.tol) break;
  }

  if (!(residual <= options.tol)) {
    std::ostringstream os;
    os << "lasso did not converge in " << options.max_iters
       << " sweeps (kkt residual " << residual << ")";
    throw NonConvergence(os.str(), residual);
  }

  solution.weights = w.sparseView(0.0, 0.0);
  solution.objective_value = problem.value(w);
  solution.kkt_residual = residual;
  solution.iterations = sweeps;
  return solution;
}

bool verify_kkt(const LassoProblem& problem, const LassoSolution& solution,
                double tol) {
  if (solution.weights.size() != problem.size()) return false;
  const DenseVector w(solution.weights);
  return kkt_residual(problem, w) <= tol;
}

}  // namespace tagcomplete::lasso
