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

#include "tagcomplete/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SVD>
#include <sstream>

namespace tagcomplete::solver {

double v_coordinate(double p, double eta, double denom) {
  return (std::max(p, eta) + std::min(p, -eta)) / denom;
}

double v_coordinate_soft(double p, double eta, double denom) {
  const double shrunk = std::max(std::abs(p) - eta, 0.0);
  return (p < 0.0 ? -shrunk : shrunk) / denom;
}

double u_coordinate(double q, double denom) { return q / denom; }

double e_entry(double residual, double beta) {
  const double t = 0.5 * beta;
  if (residual > t) return residual - t;
  if (residual < -t) return residual + t;
  return 0.0;
}

namespace {

SparseMatrix identity(Index n) {
  SparseMatrix eye(n, n);
  eye.setIdentity();
  return eye;
}

DenseVector diagonal_of(const SparseMatrix& m) {
  DenseVector d = DenseVector::Zero(m.rows());
  for (Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      if (it.row() == it.col()) d[k] = it.value();
    }
  }
  return d;
}

}  // namespace

SolverWorkspace::SolverWorkspace(const TaggingMatrix& D,
                                 const StructureMatrix& S,
                                 const StructureMatrix& T,
                                 const FactorModel& model,
                                 const Hyperparams& hp)
    : hp_(hp), data_(D.to_dense()), S_(S.coeffs), T_(T.coeffs) {
  const Index n = D.n_images();
  const Index m = D.n_tags();
  require_same(S.coeffs.rows(), n, "S rows", "D rows");
  require_same(S.coeffs.cols(), n, "S columns", "D rows");
  require_same(T.coeffs.rows(), m, "T rows", "D columns");
  require_same(T.coeffs.cols(), m, "T columns", "D columns");
  require_same(model.U.rows(), n, "U rows", "D rows");
  require_same(model.V.cols(), m, "V columns", "D columns");
  require_same(model.E.rows(), n, "E rows", "D rows");
  require_same(model.E.cols(), m, "E columns", "D columns");
  model.validate();

  if (hp.lambda != 0.0) {
    SparseMatrix tmi = T_ - identity(m);
    H_ = hp.lambda * SparseMatrix(tmi * SparseMatrix(tmi.transpose()));
  } else {
    H_ = SparseMatrix(m, m);
  }
  if (hp.gamma != 0.0) {
    SparseMatrix smi = S_ - identity(n);
    G_ = hp.gamma * SparseMatrix(SparseMatrix(smi.transpose()) * smi);
  } else {
    G_ = SparseMatrix(n, n);
  }
  H_.makeCompressed();
  G_.makeCompressed();
  h_diag_ = diagonal_of(H_);
  g_diag_ = diagonal_of(G_);
  U_ = model.U;
  V_ = DenseMatrix(model.V);
  E_ = DenseMatrix(model.E);
}

FactorModel SolverWorkspace::model() const {
  FactorModel out;
  out.U = U_;
  out.V = V_.sparseView(0.0, 0.0);
  out.E = E_.sparseView(0.0, 0.0);
  out.V.makeCompressed();
  out.E.makeCompressed();
  return out;
}

double SolverWorkspace::objective() const {
  DenseMatrix residual = data_ - E_;
  residual.noalias() -= U_ * V_;
  double total = residual.squaredNorm();
  if (hp_.gamma != 0.0) {
    DenseMatrix su = S_ * U_;
    total += hp_.gamma * (U_ - su).squaredNorm();
  }
  if (hp_.lambda != 0.0) {
    DenseMatrix vt = V_ * T_;
    total += hp_.lambda * (V_ - vt).squaredNorm();
  }
  total += 2.0 * hp_.eta * V_.lpNorm<1>();
  total += hp_.beta * E_.lpNorm<1>();
  return total;
}

void SolverWorkspace::checkpoint() {
  saved_U_ = U_;
  saved_V_ = V_;
  saved_E_ = E_;
}

void SolverWorkspace::rollback() {
  U_ = saved_U_;
  V_ = saved_V_;
  E_ = saved_E_;
}

struct BlockUpdates {
  static BlockStats V(SolverWorkspace& ws, const Hyperparams& hp) {
    BlockStats stats;
    const Index K = ws.rank();
    const Index M = ws.n_tags();
    const DenseMatrix d_tilde = ws.d_tilde();
    const DenseMatrix corr = ws.U_.transpose() * d_tilde;   // (U'D~), K x M
    const DenseMatrix gram = ws.U_.transpose() * ws.U_;     // U'U
    DenseMatrix coupled = gram * ws.V_;                     // (U'U) V
    const bool use_h = hp.lambda != 0.0;
    DenseVector hv(M);

    for (Index sweep = 0; sweep < hp.sweeps_per_block; ++sweep) {
      for (Index k = 0; k < K; ++k) {
        if (use_h) hv.noalias() = ws.H_ * ws.V_.row(k).transpose();
        const double gkk = gram(k, k);
        for (Index m = 0; m < M; ++m) {
          const double hmm = use_h ? ws.h_diag_[m] : 0.0;
          const double denom = gkk + hmm;
          if (!(denom > 0.0)) {
            ++stats.skipped;
            continue;
          }
          const double vkm = ws.V_(k, m);
          double p = corr(k, m) - (coupled(k, m) - gkk * vkm);
          if (use_h) p -= hv[m] - hmm * vkm;
          const double next = v_coordinate(p, hp.eta, denom);
          const double delta = next - vkm;
          if (delta == 0.0) continue;
          ws.V_(k, m) = next;
          coupled.col(m).noalias() += delta * gram.col(k);
          if (use_h) {
            for (SparseMatrix::InnerIterator it(ws.H_, m); it; ++it) {
              hv[it.row()] += delta * it.value();
            }
          }
          ++stats.updated;
        }
      }
    }
    return stats;
  }

  static BlockStats U(SolverWorkspace& ws, const Hyperparams& hp) {
    BlockStats stats;
    const Index N = ws.n_images();
    const Index K = ws.rank();
    const DenseMatrix d_tilde = ws.d_tilde();
    const DenseMatrix corr = d_tilde * ws.V_.transpose();   // (D~V'), N x K
    const DenseMatrix gram = ws.V_ * ws.V_.transpose();     // VV'
    const bool use_g = hp.gamma != 0.0;
    DenseVector gu(N);
    DenseVector b(N);

    for (Index sweep = 0; sweep < hp.sweeps_per_block; ++sweep) {
      for (Index k = 0; k < K; ++k) {
        auto u = ws.U_.col(k);
        const double a = gram(k, k);
        // Linear coefficient of column k with every other column fixed.
        b.noalias() = corr.col(k) - ws.U_ * gram.col(k);
        b.noalias() += a * u;
        if (use_g) {
          gu.noalias() = ws.G_ * u;
        } else {
          gu.setZero();
        }
        double nn = u.squaredNorm();
        double ugu = u.dot(gu);
        double bu = b.dot(u);

        auto apply = [&](Index n, double delta, double gnn) {
          nn += delta * (2.0 * u[n] + delta);
          ugu += delta * (2.0 * gu[n] + delta * gnn);
          bu += delta * b[n];
          u[n] += delta;
          if (use_g) {
            for (SparseMatrix::InnerIterator it(ws.G_, n); it; ++it) {
              gu[it.row()] += delta * it.value();
            }
          }
        };

        for (Index n = 0; n < N; ++n) {
          const double gnn = use_g ? ws.g_diag_[n] : 0.0;
          const double denom = a + gnn;
          if (!(denom > 0.0)) {
            ++stats.skipped;
            continue;
          }
          const double un = u[n];
          const double q = b[n] - (gu[n] - gnn * un);
          const double next = u_coordinate(q, denom);
          const double delta = next - un;
          if (delta == 0.0) continue;
          ++stats.updated;

          const double nn_next = nn + delta * (2.0 * un + delta);
          if (nn_next <= 1.0) {
            apply(n, delta, gnn);
            continue;
          }
          // Column leaves the unit ball. Candidate: project by rescaling.
          const double before = a * nn + ugu - 2.0 * bu;
          const double ugu_next = ugu + delta * (2.0 * gu[n] + delta * gnn);
          const double bu_next = bu + delta * b[n];
          const double c = 1.0 / std::sqrt(nn_next);
          const double rescaled = c * c * (a * nn_next + ugu_next) - 2.0 * c * bu_next;
          if (rescaled <= before) {
            apply(n, delta, gnn);
            u *= c;
            gu *= c;
            nn *= c * c;
            ugu *= c * c;
            bu *= c;
            ++stats.rescaled;
          } else {
            // Exact minimizer of the coordinate restricted to the ball.
            const double bound = std::sqrt(std::max(0.0, 1.0 - (nn - un * un)));
            const double clipped = std::clamp(next, -bound, bound);
            apply(n, clipped - un, gnn);
            ++stats.clipped;
          }
        }
        // Absorb rounding drift in the running norm.
        const double norm = u.norm();
        if (norm > 1.0) u /= norm;
      }
    }
    return stats;
  }

  static BlockStats E(SolverWorkspace& ws, const Hyperparams& hp) {
    BlockStats stats;
    DenseMatrix residual = ws.data_;
    residual.noalias() -= ws.U_ * ws.V_;
    for (Index j = 0; j < residual.cols(); ++j) {
      for (Index i = 0; i < residual.rows(); ++i) {
        const double e = e_entry(residual(i, j), hp.beta);
        if (e != ws.E_(i, j)) ++stats.updated;
        ws.E_(i, j) = e;
      }
    }
    return stats;
  }
};

BlockStats update_V(SolverWorkspace& ws, const Hyperparams& hp) {
  return BlockUpdates::V(ws, hp);
}

BlockStats update_U(SolverWorkspace& ws, const Hyperparams& hp) {
  return BlockUpdates::U(ws, hp);
}

BlockStats update_E(SolverWorkspace& ws, const Hyperparams& hp) {
  return BlockUpdates::E(ws, hp);
}

SparseMatrix update_E(const TaggingMatrix& D, const FactorModel& model,
                      const Hyperparams& hp) {
  require_same(model.U.rows(), D.n_images(), "U rows", "D rows");
  require_same(model.V.cols(), D.n_tags(), "V columns", "D columns");
  DenseMatrix residual = D.to_dense();
  residual.noalias() -= model.U * model.V;
  DenseMatrix e = residual.unaryExpr(
      [beta = hp.beta](double r) { return e_entry(r, beta); });
  SparseMatrix out = e.sparseView(0.0, 0.0);
  out.makeCompressed();
  return out;
}

FactorModel initialize(Index n_images, Index n_tags, const Hyperparams& hp) {
  hp.validate();
  std::mt19937_64 rng(hp.rng_seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  FactorModel model;
  model.U.resize(n_images, hp.K);
  for (Index k = 0; k < hp.K; ++k) {
    for (Index n = 0; n < n_images; ++n) model.U(n, k) = uniform(rng);
    const double norm = model.U.col(k).norm();
    if (norm > 0.0) {
      model.U.col(k) /= norm;
    } else if (n_images > 0) {
      model.U(k % n_images, k) = 1.0;
    }
  }
  model.V = SparseMatrix(hp.K, n_tags);
  model.E = SparseMatrix(n_images, n_tags);
  model.V.makeCompressed();
  model.E.makeCompressed();
  return model;
}

FactorModel initialize(const TaggingMatrix& D, const Hyperparams& hp) {
  FactorModel model = initialize(D.n_images(), D.n_tags(), hp);
  if (hp.init == Init::kRandom || D.nnz() == 0) return model;
  const DenseMatrix dense = D.to_dense();
  Eigen::BDCSVD<DenseMatrix> svd(dense, Eigen::ComputeThinU);
  const auto& sigma = svd.singularValues();
  const double cutoff = sigma.size() > 0 ? sigma[0] * 1e-12 : 0.0;
  const Index usable = std::min<Index>(hp.K, sigma.size());
  for (Index k = 0; k < usable && sigma[k] > cutoff; ++k) {
    auto col = model.U.col(k);
    col = svd.matrixU().col(k);
    Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col[arg] < 0.0) col = -col;
  }
  return model;
}

SolverReport fit(const TaggingMatrix& D, const StructureMatrix& S,
                 const StructureMatrix& T, const Hyperparams& hp) {
  hp.validate();
  return fit(D, S, T, hp, initialize(D, hp));
}

SolverReport fit(const TaggingMatrix& D, const StructureMatrix& S,
                 const StructureMatrix& T, const Hyperparams& hp,
                 const FactorModel& initial) {
  hp.validate();
  require_same(initial.rank(), initial.V.rows(), "U columns", "V rows");
  SolverWorkspace ws(D, S, T, initial, hp);

  SolverReport report;
  report.initial_objective = ws.objective();
  report.block_trace.push_back(report.initial_objective);

  double value = report.initial_objective;
  auto run_block = [&](auto&& update) {
    ws.checkpoint();
    report.skipped_coordinates += update(ws, hp).skipped;
    const double next = ws.objective();
    if (!std::isfinite(next)) {
      std::ostringstream os;
      os << "objective became non-finite at outer iteration "
         << report.iterations + 1;
      std::vector<double> trace = report.trace;
      trace.push_back(next);
      throw NumericalError(os.str(), std::move(trace));
    }
    if (next > value) {
      ws.rollback();
      ++report.rejected_blocks;
      report.max_rejected_increase =
          std::max(report.max_rejected_increase, (next - value) / value);
    } else {
      value = next;
    }
    report.block_trace.push_back(value);
  };

  double previous = report.initial_objective;
  for (Index iter = 0; iter < hp.max_outer_iters; ++iter) {
    run_block([](SolverWorkspace& w, const Hyperparams& h) { return update_V(w, h); });
    run_block([](SolverWorkspace& w, const Hyperparams& h) { return update_U(w, h); });
    run_block([](SolverWorkspace& w, const Hyperparams& h) { return update_E(w, h); });
    const double current = value;
    report.trace.push_back(current);
    report.iterations = iter + 1;
    if (current == 0.0 ||
        previous - current < hp.rel_tol * std::abs(previous)) {
      report.converged = true;
      break;
    }
    previous = current;
  }
  report.model = ws.model();
  return report;
}

}  // namespace tagcomplete::solver
