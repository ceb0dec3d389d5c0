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

#include <vector>

#include "tagcomplete/core.hpp"

namespace tagcomplete::solver {

// Closed-form scalar updates. All three are exact minimizers of their
// one-dimensional restrictions of the objective.

// argmin_v  denom v^2 - 2 P v + 2 eta |v|, written as
// (max{P, eta} + min{P, -eta}) / denom.
double v_coordinate(double p, double eta, double denom);

// Same minimizer written as sign(P) max(|P| - eta, 0) / denom.
double v_coordinate_soft(double p, double eta, double denom);

// argmin_u  denom u^2 - 2 Q u, i.e. Q / denom, before any projection.
double u_coordinate(double q, double denom);

// argmin_e  (r - e)^2 + beta |e| = sign(r) max(|r| - beta / 2, 0).
double e_entry(double residual, double beta);

// Mutable state of one fit. Holds dense working copies of U, V, E and the
// fixed quadratic forms
//   H = lambda (T - I)(T - I)'   (M x M)
//   G = gamma  (S - I)'(S - I)   (N x N)
// Each block update recomputes the products it reads (U'D~, U'U, D~V', VV')
// on entry and keeps them consistent incrementally during its sweep, so the
// workspace is consistent after every block update.
class SolverWorkspace {
 public:
  SolverWorkspace(const TaggingMatrix& D, const StructureMatrix& S,
                  const StructureMatrix& T, const FactorModel& model,
                  const Hyperparams& hp);

  Index n_images() const { return data_.rows(); }
  Index n_tags() const { return data_.cols(); }
  Index rank() const { return U_.cols(); }

  const DenseMatrix& U() const { return U_; }
  const DenseMatrix& V() const { return V_; }
  const DenseMatrix& E() const { return E_; }
  const SparseMatrix& H() const { return H_; }
  const SparseMatrix& G() const { return G_; }
  // D - E.
  DenseMatrix d_tilde() const { return data_ - E_; }

  FactorModel model() const;

  // Objective value of the current state. Agrees with core::objective.
  double objective() const;

  // Saves U, V and E; rollback() restores the last checkpoint.
  void checkpoint();
  void rollback();

 private:
  friend struct BlockUpdates;

  const Hyperparams hp_;
  DenseMatrix data_;
  SparseMatrix S_;
  SparseMatrix T_;
  SparseMatrix H_;
  SparseMatrix G_;
  DenseVector h_diag_;
  DenseVector g_diag_;
  DenseMatrix U_;
  DenseMatrix V_;
  DenseMatrix E_;
  DenseMatrix saved_U_;
  DenseMatrix saved_V_;
  DenseMatrix saved_E_;
};

struct BlockStats {
  Index updated = 0;   // coordinates whose value changed
  Index skipped = 0;   // coordinates with a zero denominator
  Index rescaled = 0;  // U only: columns projected back onto the unit sphere
  Index clipped = 0;   // U only: coordinates clipped to stay in the ball
};

// One or more cyclic sweeps over every V_km (row by row).
BlockStats update_V(SolverWorkspace& ws, const Hyperparams& hp);

// One or more cyclic sweeps over every U_nk (column by column). After each
// scalar update that leaves the column outside the unit ball the column is
// rescaled to unit norm; if rescaling would raise the objective the
// coordinate is instead clipped to the ball.
BlockStats update_U(SolverWorkspace& ws, const Hyperparams& hp);

// E = soft-threshold(D - UV, beta / 2), the exact minimizer in E.
BlockStats update_E(SolverWorkspace& ws, const Hyperparams& hp);

// Pure form of the E update on a model.
SparseMatrix update_E(const TaggingMatrix& D, const FactorModel& model,
                      const Hyperparams& hp);

// U uniform in [-1, 1] with unit-norm columns (seeded by hp.rng_seed),
// V = 0, E = 0.
// Random start (hp.init is ignored).
FactorModel initialize(Index n_images, Index n_tags, const Hyperparams& hp);

// Start selected by hp.init. The spectral start takes the leading K left
// singular vectors of D, each signed so its largest-magnitude entry is
// positive; columns beyond the rank of D are filled randomly.
FactorModel initialize(const TaggingMatrix& D, const Hyperparams& hp);

struct SolverReport {
  double initial_objective = 0.0;
  // Objective after each outer iteration.
  std::vector<double> trace;
  // Initial objective followed by the value after every block update
  // (V, U, E per outer iteration).
  std::vector<double> block_trace;
  bool converged = false;
  Index iterations = 0;
  Index skipped_coordinates = 0;
  // Block updates whose evaluated objective came out above the previous
  // value (floating-point rounding near a fixed point). They are undone, and
  // the largest such relative increase is kept for diagnostics.
  Index rejected_blocks = 0;
  double max_rejected_increase = 0.0;
  FactorModel model;
};

// Alternates V, U and E updates until the relative objective decrease drops
// below hp.rel_tol or hp.max_outer_iters is reached. Throws NumericalError
// with the trace so far if the objective stops being finite.
SolverReport fit(const TaggingMatrix& D, const StructureMatrix& S,
                 const StructureMatrix& T, const Hyperparams& hp);

// As above, starting from `initial` instead of the seeded initialization.
SolverReport fit(const TaggingMatrix& D, const StructureMatrix& S,
                 const StructureMatrix& T, const Hyperparams& hp,
                 const FactorModel& initial);

}  // namespace tagcomplete::solver
