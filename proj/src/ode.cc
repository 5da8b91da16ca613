// Copyright 2026 The Potentia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "potentia/ode.h"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "potentia/errors.h"

namespace potentia {
namespace {

using Eigen::MatrixXd;

// Coefficient sampled at nodes and step midpoints, addressed by RK4 stage.
struct StageSamples {
  std::vector<MatrixXd> node;  // M + 1
  std::vector<MatrixXd> mid;   // M

  // Backward step m (t_{m+1} -> t_m): stage 0 at t_{m+1}, 1-2 mid, 3 at t_m.
  const MatrixXd& Backward(int m, int stage) const {
    if (stage == 0) return node[m + 1];
    if (stage == 3) return node[m];
    return mid[m];
  }
  // Forward step m (t_m -> t_{m+1}).
  const MatrixXd& Forward(int m, int stage) const {
    if (stage == 0) return node[m];
    if (stage == 3) return node[m + 1];
    return mid[m];
  }
};

template <typename F>
StageSamples Sample(int steps, F&& at_node, F&& at_mid) {
  StageSamples s;
  s.node.reserve(steps + 1);
  s.mid.reserve(steps);
  for (int m = 0; m <= steps; ++m) s.node.push_back(at_node(m));
  for (int m = 0; m < steps; ++m) s.mid.push_back(at_mid(m));
  return s;
}

StageSamples ClosedLoop(const LqGameSpec& spec, const PolicyProfile& K) {
  const int M = spec.grid.steps();
  auto node = [&](int m) -> MatrixXd { return ClosedLoopAt(spec, K, m); };
  auto mid = [&](int m) -> MatrixXd { return ClosedLoopMid(spec, K, m); };
  return Sample<std::function<MatrixXd(int)>>(M, node, mid);
}

// B_h K'_h at nodes and midpoints.
StageSamples DirectedDrift(const LqGameSpec& spec, const PolicyDirection& d) {
  const int M = spec.grid.steps();
  const int off = spec.control_offset(d.agent);
  const int kh = spec.control_dims[d.agent];
  std::function<MatrixXd(int)> node = [&](int m) -> MatrixXd {
    return spec.B.at(m).middleCols(off, kh) * d.gain.at(m);
  };
  std::function<MatrixXd(int)> mid = [&](int m) -> MatrixXd {
    return spec.B.mid(m).middleCols(off, kh) * d.gain.mid(m);
  };
  return Sample(M, node, mid);
}

void CheckDirection(const LqGameSpec& spec, const PolicyDirection& d) {
  if (d.agent < 0 || d.agent >= spec.agents()) {
    throw DimensionError("direction agent index out of range");
  }
  if (d.gain.rows() != spec.control_dims[d.agent] ||
      d.gain.cols() != spec.state_dim() ||
      (d.gain.size() != 1 && d.gain.size() != spec.nodes())) {
    throw DimensionError("direction for agent " + std::to_string(d.agent + 1) +
                         " has the wrong shape");
  }
}

double TraceProduct(const MatrixXd& a, const MatrixXd& b) {
  return a.cwiseProduct(b).sum();
}

// Classical RK4 from t_M down to t_0. `rhs(m, stage, X)` returns dX/dt.
template <typename Rhs>
QuadraticPath IntegrateBackward(const TimeGrid& grid, const MatrixXd& terminal,
                                const MatrixXd& noise_cov, Rhs&& rhs,
                                const char* what) {
  const int M = grid.steps();
  const double h = -grid.dt();
  QuadraticPath out;
  out.grid = grid;
  out.matrix.resize(M + 1);
  out.scalar.resize(M + 1);
  out.stages.resize(M);
  MatrixXd X = terminal;
  out.matrix[M] = X;
  out.scalar[M] = 0.0;
  const bool has_noise = noise_cov.cwiseAbs().maxCoeff() > 0.0;
  for (int m = M - 1; m >= 0; --m) {
    auto& st = out.stages[m];
    st[0] = X;
    const MatrixXd k1 = rhs(m, 0, st[0]);
    st[1] = X + (0.5 * h) * k1;
    const MatrixXd k2 = rhs(m, 1, st[1]);
    st[2] = X + (0.5 * h) * k2;
    const MatrixXd k3 = rhs(m, 2, st[2]);
    st[3] = X + h * k3;
    const MatrixXd k4 = rhs(m, 3, st[3]);
    X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    X = (0.5 * (X + X.transpose())).eval();
    if (!X.allFinite()) {
      std::ostringstream os;
      os << what << ": non-finite value at node " << m << " (t=" << grid.node(m)
         << ")";
      throw DivergenceError(os.str());
    }
    out.matrix[m] = X;
    double increment = 0.0;
    if (has_noise) {
      // Simpson with a cubic Hermite midpoint; trapezoid would cap the
      // scalar at second order while the matrix is fourth order. The end
      // slopes are RK4 stages, so the scalars of the derivative ODEs stay
      // exact derivatives of the discrete scalars.
      const MatrixXd mid = 0.5 * (X + out.matrix[m + 1]) +
                           (grid.dt() / 8.0) * (k4 - k1);
      increment = (grid.dt() / 12.0) *
                  (TraceProduct(noise_cov, X) + 4.0 * TraceProduct(noise_cov, mid) +
                   TraceProduct(noise_cov, out.matrix[m + 1]));
    }
    out.scalar[m] = out.scalar[m + 1] + increment;
  }
  return out;
}

MatrixXd Symmetrised(const MatrixXd& a) { return a + a.transpose(); }

}  // namespace

MatrixXd ClosedLoopAt(const LqGameSpec& spec, const PolicyProfile& K, int m) {
  return spec.A.at(m) + spec.B.at(m) * K.Joint(m);
}

MatrixXd ClosedLoopMid(const LqGameSpec& spec, const PolicyProfile& K, int m) {
  return spec.A.mid(m) + spec.B.mid(m) * K.JointMid(m);
}

double QuadraticPath::Evaluate(double t, const Eigen::VectorXd& x) const {
  auto [m, w] = grid.Locate(t);
  const MatrixXd X = (1.0 - w) * matrix[m] + w * matrix[m + 1];
  const double c = (1.0 - w) * scalar[m] + w * scalar[m + 1];
  return 0.5 * x.dot(X * x) + c;
}

double QuadraticPath::EvaluateMoment(int node, const MatrixXd& moment) const {
  return 0.5 * TraceProduct(matrix[node], moment) + scalar[node];
}

double EvalQuadratic(const QuadraticPath& q, double t,
                     const Eigen::VectorXd& x) {
  if (x.size() != q.matrix.front().rows()) {
    throw DimensionError("eval_quadratic: state has the wrong dimension");
  }
  return q.Evaluate(t, x);
}

QuadraticPath SolvePsiWithCost(const LqGameSpec& spec, const PolicyProfile& K,
                               const AgentCost& cost) {
  K.CheckAgainst(spec);
  const int M = spec.grid.steps();
  const StageSamples acl = ClosedLoop(spec, K);
  std::function<MatrixXd(int)> node = [&](int m) -> MatrixXd {
    const MatrixXd k = K.Joint(m);
    return cost.Q.at(m) + k.transpose() * cost.R.at(m) * k;
  };
  std::function<MatrixXd(int)> mid = [&](int m) -> MatrixXd {
    const MatrixXd k = K.JointMid(m);
    return cost.Q.mid(m) + k.transpose() * cost.R.mid(m) * k;
  };
  const StageSamples forcing = Sample(M, node, mid);
  const MatrixXd noise = spec.sigma * spec.sigma.transpose();
  return IntegrateBackward(
      spec.grid, cost.G, noise,
      [&](int m, int s, const MatrixXd& X) -> MatrixXd {
        const MatrixXd& a = acl.Backward(m, s);
        return -(a.transpose() * X + X * a + forcing.Backward(m, s));
      },
      "solve_psi");
}

QuadraticPath SolvePsi(const LqGameSpec& spec, const PolicyProfile& K, int i) {
  if (i < 0 || i >= spec.agents()) {
    throw DimensionError("agent index out of range");
  }
  return SolvePsiWithCost(spec, K, spec.costs[i]);
}

QuadraticPath SolveTheta(const LqGameSpec& spec, const PolicyProfile& K,
                         const QuadraticPath& psi, int i,
                         const PolicyDirection& dir,
                         const OdeOptions& options) {
  K.CheckAgainst(spec);
  CheckDirection(spec, dir);
  const int M = spec.grid.steps();
  if (static_cast<int>(psi.stages.size()) != M) {
    throw DimensionError("solve_theta: value trajectory from another grid");
  }
  const StageSamples acl = ClosedLoop(spec, K);
  const StageSamples bk = DirectedDrift(spec, dir);
  const int off = spec.control_offset(dir.agent);
  const int kh = spec.control_dims[dir.agent];
  const auto& R = spec.costs[i].R;
  // K'(R_i)_h K'_h
  std::function<MatrixXd(int)> node = [&](int m) -> MatrixXd {
    return K.Joint(m).transpose() * R.at(m).middleCols(off, kh) *
           dir.gain.at(m);
  };
  std::function<MatrixXd(int)> mid = [&](int m) -> MatrixXd {
    return K.JointMid(m).transpose() * R.mid(m).middleCols(off, kh) *
           dir.gain.mid(m);
  };
  const StageSamples cross = Sample(M, node, mid);
  const MatrixXd noise = spec.sigma * spec.sigma.transpose();
  const double scale = options.theta_forcing_scale;
  return IntegrateBackward(
      spec.grid, MatrixXd::Zero(spec.state_dim(), spec.state_dim()), noise,
      [&](int m, int s, const MatrixXd& X) -> MatrixXd {
        const MatrixXd& a = acl.Backward(m, s);
        const MatrixXd f =
            psi.stages[m][s] * bk.Backward(m, s) + cross.Backward(m, s);
        return -(a.transpose() * X + X * a + scale * Symmetrised(f));
      },
      "solve_theta");
}

QuadraticPath SolveLambda(const LqGameSpec& spec, const PolicyProfile& K,
                          int i, const QuadraticPath& theta_h,
                          const PolicyDirection& dir_h,
                          const QuadraticPath& theta_l,
                          const PolicyDirection& dir_l) {
  K.CheckAgainst(spec);
  CheckDirection(spec, dir_h);
  CheckDirection(spec, dir_l);
  const int M = spec.grid.steps();
  if (static_cast<int>(theta_h.stages.size()) != M ||
      static_cast<int>(theta_l.stages.size()) != M) {
    throw DimensionError("solve_lambda: derivative trajectory from another grid");
  }
  const StageSamples acl = ClosedLoop(spec, K);
  const StageSamples bk_h = DirectedDrift(spec, dir_h);
  const StageSamples bk_l = DirectedDrift(spec, dir_l);
  const int off_h = spec.control_offset(dir_h.agent);
  const int off_l = spec.control_offset(dir_l.agent);
  const int kh = spec.control_dims[dir_h.agent];
  const int kl = spec.control_dims[dir_l.agent];
  const auto& R = spec.costs[i].R;
  // K''_l' (R_i)_{lh} K'_h
  std::function<MatrixXd(int)> node = [&](int m) -> MatrixXd {
    return dir_l.gain.at(m).transpose() * R.at(m).block(off_l, off_h, kl, kh) *
           dir_h.gain.at(m);
  };
  std::function<MatrixXd(int)> mid = [&](int m) -> MatrixXd {
    return dir_l.gain.mid(m).transpose() *
           R.mid(m).block(off_l, off_h, kl, kh) * dir_h.gain.mid(m);
  };
  const StageSamples cross = Sample(M, node, mid);
  const MatrixXd noise = spec.sigma * spec.sigma.transpose();
  return IntegrateBackward(
      spec.grid, MatrixXd::Zero(spec.state_dim(), spec.state_dim()), noise,
      [&](int m, int s, const MatrixXd& X) -> MatrixXd {
        const MatrixXd& a = acl.Backward(m, s);
        const MatrixXd f = theta_h.stages[m][s] * bk_l.Backward(m, s) +
                           theta_l.stages[m][s] * bk_h.Backward(m, s) +
                           cross.Backward(m, s);
        return -(a.transpose() * X + X * a + Symmetrised(f));
      },
      "solve_lambda");
}

SensitivityBundle SolveSensitivities(const LqGameSpec& spec,
                                     const PolicyProfile& K, int i,
                                     const PolicyDirection& dir_h,
                                     const PolicyDirection& dir_l) {
  SensitivityBundle b;
  b.psi = SolvePsi(spec, K, i);
  b.theta_h = SolveTheta(spec, K, b.psi, i, dir_h);
  b.theta_l = SolveTheta(spec, K, b.psi, i, dir_l);
  b.lambda = SolveLambda(spec, K, i, b.theta_h, dir_h, b.theta_l, dir_l);
  return b;
}

SecondMoment SolveSecondMoment(const LqGameSpec& spec, const PolicyProfile& K,
                               int start_node, const MatrixXd& initial) {
  K.CheckAgainst(spec);
  const int M = spec.grid.steps();
  const int nx = spec.state_dim();
  if (start_node < 0 || start_node >= M) {
    throw RangeError("second moment: start node out of range");
  }
  if (initial.rows() != nx || initial.cols() != nx) {
    throw DimensionError("second moment: initial moment has the wrong shape");
  }
  const StageSamples acl = ClosedLoop(spec, K);
  const MatrixXd noise = spec.sigma * spec.sigma.transpose();
  auto rhs = [&](int m, int s, const MatrixXd& X) -> MatrixXd {
    const MatrixXd& a = acl.Forward(m, s);
    return a * X + X * a.transpose() + noise;
  };
  SecondMoment out;
  out.grid = spec.grid;
  out.start_node = start_node;
  out.moment.resize(M + 1);
  const double h = spec.grid.dt();
  MatrixXd X = initial;
  out.moment[start_node] = X;
  for (int m = start_node; m < M; ++m) {
    const MatrixXd k1 = rhs(m, 0, X);
    const MatrixXd k2 = rhs(m, 1, X + (0.5 * h) * k1);
    const MatrixXd k3 = rhs(m, 2, X + (0.5 * h) * k2);
    const MatrixXd k4 = rhs(m, 3, X + h * k3);
    X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    X = (0.5 * (X + X.transpose())).eval();
    if (!X.allFinite()) {
      throw DivergenceError("solve_second_moment: non-finite value at node " +
                            std::to_string(m + 1));
    }
    // RK4 does not preserve semidefiniteness exactly for rank-deficient
    // moments; only a clear loss of it is reported.
    const double floor = -1e-6 * std::max(1.0, X.cwiseAbs().maxCoeff());
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<MatrixXd>(X, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .minCoeff();
    if (min_eig < floor) {
      std::ostringstream os;
      os << "solve_second_moment: moment not positive semidefinite at node "
         << m + 1 << " (min eigenvalue " << min_eig << ")";
      throw DivergenceError(os.str());
    }
    out.moment[m + 1] = X;
  }
  return out;
}

SecondMoment SolveSecondMoment(const LqGameSpec& spec, const PolicyProfile& K,
                               double t0, const Eigen::VectorXd& x0) {
  auto node = spec.grid.NodeIndex(t0);
  if (!node) throw RangeError("second moment: t0 must be a grid node");
  return SolveSecondMoment(spec, K, *node, x0 * x0.transpose());
}

void WriteTrajectoryCsv(std::ostream& os, const QuadraticPath& q) {
  const int n = static_cast<int>(q.matrix.front().rows());
  os << "t";
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) os << ",X" << r + 1 << c + 1;
  }
  os << ",c\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (size_t m = 0; m < q.matrix.size(); ++m) {
    os << q.grid.node(static_cast<int>(m));
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) os << "," << q.matrix[m](r, c);
    }
    os << "," << q.scalar[m] << "\n";
  }
}

}  // namespace potentia
