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

#ifndef POTENTIA_ODE_H_
#define POTENTIA_ODE_H_

#include <array>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "potentia/game.h"

// Backward matrix ODEs of the LQ game under linear feedback K:
//
//   value        Psi' + Acl'Psi + Psi Acl + Q_i + K'R_i K = 0,   Psi(T) = G_i
//   1st deriv.   Theta' + Acl'Theta + Theta Acl + [Psi B_h K'_h
//                  + K'(R_i)_h K'_h + transpose] = 0,            Theta(T) = 0
//   2nd deriv.   Lambda' + Acl'Lambda + Lambda Acl + [Theta^h B_l K''_l
//                  + Theta^l B_h K'_h + K''_l'(R_i)_{lh} K'_h
//                  + transpose] = 0,                             Lambda(T) = 0
//
// with Acl = A + BK and scalar companions c' + tr(sigma sigma' X)/2 = 0.
// Quadratic forms are x'X(t)x/2 + c(t).
//
// All solves use classical RK4 on the grid with coefficients interpolated to
// stage midpoints, and symmetrise after every step. Theta is integrated
// against the stored RK4 stage states of Psi (and Lambda against those of
// Theta), so it is the exact derivative of the discrete Psi with respect to
// the gain perturbation.
namespace potentia {

struct QuadraticPath {
  TimeGrid grid{0.0, 1.0, 2};
  std::vector<Eigen::MatrixXd> matrix;  // node samples
  std::vector<double> scalar;           // node samples
  // stages[m][s]: RK4 stage state s of the step from t_{m+1} to t_m. Stage 0
  // sits at t_{m+1}, stages 1 and 2 at the midpoint, stage 3 at t_m.
  std::vector<std::array<Eigen::MatrixXd, 4>> stages;

  // x'X(t)x/2 + c(t) with piecewise-linear interpolation in t.
  double Evaluate(double t, const Eigen::VectorXd& x) const;
  // tr(X(t_m) S)/2 + c(t_m): the expectation of the form for a random
  // initial state with second moment S.
  double EvaluateMoment(int node, const Eigen::MatrixXd& moment) const;
};

// eval_quadratic: throws RangeError if t lies outside the grid.
double EvalQuadratic(const QuadraticPath& q, double t,
                     const Eigen::VectorXd& x);

struct OdeOptions {
  // Multiplies the forcing of the first-derivative equation. Only the
  // crosscheck fault-injection hook sets this to anything but 1.
  double theta_forcing_scale = 1.0;
};

QuadraticPath SolvePsi(const LqGameSpec& spec, const PolicyProfile& K, int i);
// Value of an arbitrary quadratic cost under K (used for joint potentials).
QuadraticPath SolvePsiWithCost(const LqGameSpec& spec, const PolicyProfile& K,
                               const AgentCost& cost);

// First linear derivative of V_i along direction `dir` of agent dir.agent.
QuadraticPath SolveTheta(const LqGameSpec& spec, const PolicyProfile& K,
                         const QuadraticPath& psi, int i,
                         const PolicyDirection& dir,
                         const OdeOptions& options = {});

// Second linear derivative of V_i along (dir_h, dir_l); theta_h and theta_l
// are the first derivatives of V_i along those directions.
QuadraticPath SolveLambda(const LqGameSpec& spec, const PolicyProfile& K,
                          int i, const QuadraticPath& theta_h,
                          const PolicyDirection& dir_h,
                          const QuadraticPath& theta_l,
                          const PolicyDirection& dir_l);

struct SensitivityBundle {
  QuadraticPath psi;
  QuadraticPath theta_h;
  QuadraticPath theta_l;
  QuadraticPath lambda;
};

// Psi, Theta^h, Theta^l and Lambda^{h,l} of agent i in one call.
SensitivityBundle SolveSensitivities(const LqGameSpec& spec,
                                     const PolicyProfile& K, int i,
                                     const PolicyDirection& dir_h,
                                     const PolicyDirection& dir_l);

// E[X_s X_s'] for s >= t_{start}, forward RK4 of
//   M' = Acl M + M Acl' + sigma sigma',  M(t_start) = initial.
struct SecondMoment {
  TimeGrid grid{0.0, 1.0, 2};
  int start_node = 0;
  std::vector<Eigen::MatrixXd> moment;  // indexed by node; empty before start
};

SecondMoment SolveSecondMoment(const LqGameSpec& spec, const PolicyProfile& K,
                               int start_node, const Eigen::MatrixXd& initial);
SecondMoment SolveSecondMoment(const LqGameSpec& spec, const PolicyProfile& K,
                               double t0, const Eigen::VectorXd& x0);

// Closed-loop drift A + BK at node m / at the midpoint of step m.
Eigen::MatrixXd ClosedLoopAt(const LqGameSpec& spec, const PolicyProfile& K,
                             int m);
Eigen::MatrixXd ClosedLoopMid(const LqGameSpec& spec, const PolicyProfile& K,
                              int m);

// CSV dump: header t,X11,X12,...,c then one row per node.
void WriteTrajectoryCsv(std::ostream& os, const QuadraticPath& q);

}  // namespace potentia

#endif  // POTENTIA_ODE_H_
