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

#ifndef POTENTIA_GAME_H_
#define POTENTIA_GAME_H_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "potentia/grid.h"

namespace potentia {

// Quadratic costs of one agent in the joint state/action space:
// running cost 1/2 (x'Qx + a'Ra), terminal cost 1/2 x'Gx.
struct AgentCost {
  TimeSeries Q;  // n_x x n_x
  TimeSeries R;  // n_a x n_a, blocks (R)_{hl} of size k_h x k_l
  Eigen::MatrixXd G;  // n_x x n_x

  bool operator==(const AgentCost& o) const {
    return Q == o.Q && R == o.R && G.rows() == o.G.rows() &&
           G.cols() == o.G.cols() && (G.array() == o.G.array()).all();
  }
};

// Linear-quadratic N-agent game
//   dX = (A X + B a) ds + sigma dW,  a = (a_1, ..., a_N),  a_i = K_i X.
// Agent indices are 0-based in code and 1-based in files and messages.
struct LqGameSpec {
  TimeGrid grid{0.0, 1.0, 2};
  std::vector<int> control_dims;  // k_i
  TimeSeries A;                   // n_x x n_x
  TimeSeries B;                   // n_x x n_a, block columns B_1 ... B_N
  Eigen::MatrixXd sigma;          // n_x x n_w
  std::vector<AgentCost> costs;   // one per agent
  // State columns agent i may feed back on. Empty means all columns. A
  // distributed game restricts agent i to its own state block.
  std::vector<std::vector<int>> feedback;

  int agents() const { return static_cast<int>(control_dims.size()); }
  int state_dim() const { return A.rows(); }
  int control_dim() const;
  int noise_dim() const { return static_cast<int>(sigma.cols()); }
  int control_offset(int i) const;
  int nodes() const { return grid.steps() + 1; }

  // Resolved feedback columns of agent i.
  std::vector<int> FeedbackColumns(int i) const;
  // k_i x n_x matrix with ones on admissible gain entries.
  Eigen::MatrixXd GainMask(int i) const;
  bool HasRestrictedFeedback() const;

  // Column block B_h at node m.
  Eigen::MatrixXd BBlock(int h, int m) const;

  bool operator==(const LqGameSpec& o) const;
};

struct Violation {
  std::string field;
  std::optional<int> node;
  std::string rule;
  std::string message;
};

// Checks every invariant of the spec; never throws.
std::vector<Violation> ValidateSpec(const LqGameSpec& spec);
// Throws DimensionError carrying the first violation, if any.
void RequireValid(const LqGameSpec& spec);

// Per-agent linear feedback gains K_i(t_m) (k_i x n_x), interpolated
// piecewise-linearly between nodes.
class PolicyProfile {
 public:
  PolicyProfile() = default;
  explicit PolicyProfile(std::vector<TimeSeries> gains)
      : gains_(std::move(gains)) {}

  static PolicyProfile Zero(const LqGameSpec& spec);

  int agents() const { return static_cast<int>(gains_.size()); }
  const TimeSeries& gain(int i) const { return gains_[i]; }
  TimeSeries& gain(int i) { return gains_[i]; }
  const std::vector<TimeSeries>& gains() const { return gains_; }

  // Stacked n_a x n_x gain at node m.
  Eigen::MatrixXd Joint(int m) const;
  // Stacked gain at the midpoint of [t_m, t_{m+1}].
  Eigen::MatrixXd JointMid(int m) const;
  // K_i(t) by interpolation.
  Eigen::MatrixXd Evaluate(int i, const TimeGrid& grid, double t) const;

  // Throws DimensionError unless shapes match `spec`.
  void CheckAgainst(const LqGameSpec& spec) const;

  bool operator==(const PolicyProfile& o) const { return gains_ == o.gains_; }

 private:
  std::vector<TimeSeries> gains_;
};

// Perturbation direction K'_h of agent h's gain (same sampling convention).
struct PolicyDirection {
  int agent = 0;
  TimeSeries gain;
};

// K with agent d.agent's gain replaced by K_h + eps * K'_h.
PolicyProfile Deviate(const PolicyProfile& K, const PolicyDirection& d,
                      double eps, int nodes);
// z + r (phi - z), agentwise.
PolicyProfile Interpolate(const PolicyProfile& z, const PolicyProfile& phi,
                          double r, int nodes);
// phi_i - z_i as a direction for agent i.
PolicyDirection Difference(const PolicyProfile& phi, const PolicyProfile& z,
                           int i, int nodes);

// Distributed game with quadratic mean-field costs:
//   f_i = x_i'Q_i x_i + (x_i - gamma xbar_{-i})' Qbar (x_i - gamma xbar_{-i})
//       + a_i'R_i a_i + (a_i - kappa abar_{-i})' Rbar (a_i - kappa abar_{-i}),
//   g_i = x_i'G_i x_i + (x_i - eta xbar_{-i})' Gbar (x_i - eta xbar_{-i}),
// where xbar_{-i}, abar_{-i} average the other agents.
struct DistributedQuadraticSpec {
  TimeGrid grid{0.0, 1.0, 2};
  int agents = 0;
  int state_dim = 0;    // n, common to all agents
  int control_dim = 0;  // k, common to all agents
  std::vector<AgentCost> own;  // Q_i (n x n), R_i (k x k), G_i (n x n)
  TimeSeries Qbar;
  TimeSeries Rbar;
  Eigen::MatrixXd Gbar;
  TimeSeries gamma;  // 1 x 1
  TimeSeries kappa;  // 1 x 1
  double eta = 0.0;

  bool operator==(const DistributedQuadraticSpec& o) const;
};

// Agent i's own linear dynamics dx_i = (A_i x_i + B_i a_i) ds + sigma_i dW^i.
struct AgentDynamics {
  TimeSeries A;           // n x n
  TimeSeries B;           // n x k
  Eigen::MatrixXd sigma;  // n x n_w_i

  bool operator==(const AgentDynamics& o) const;
};

// Joint block-diagonal LQ game. Joint cost matrices are the quadratic forms
// of f_i and g_i themselves: x'Q_i^joint x equals the state part of f_i.
// Agent i may feed back on its own state block only.
LqGameSpec LiftDistributed(const DistributedQuadraticSpec& d,
                           const std::vector<AgentDynamics>& dynamics);

bool IsSymmetric(const Eigen::MatrixXd& m, double tol);

}  // namespace potentia

#endif  // POTENTIA_GAME_H_
