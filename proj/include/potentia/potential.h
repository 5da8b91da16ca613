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

#ifndef POTENTIA_POTENTIAL_H_
#define POTENTIA_POTENTIAL_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "potentia/game.h"
#include "potentia/general.h"
#include "potentia/ode.h"
#include "potentia/quadrature.h"

namespace potentia {

// Where a value or potential is evaluated: the expectation of the quadratic
// forms at node `node` for an initial state with second moment `moment`.
// A point x0 has moment x0 x0'; the identity stands for x0 ~ N(0, I).
struct Objective {
  int node = 0;
  Eigen::MatrixXd moment;

  static Objective AtPoint(const LqGameSpec& spec, double t0,
                           const Eigen::VectorXd& x0);
  static Objective Distributional(const LqGameSpec& spec, double t0);
  double Apply(const QuadraticPath& q) const {
    return q.EvaluateMoment(node, moment);
  }
};

// V_i(K) for the given objective.
double AgentValue(const LqGameSpec& spec, const PolicyProfile& K, int i,
                  const Objective& obj);

enum class Verdict { kMpg, kClpg, kNotPotential };
const char* VerdictName(Verdict v);

struct PairReport {
  int i = 0;
  int j = 0;
  // Per node, max over probes of |Lambda_i^{i,j} - Lambda_j^{j,i}|_inf and of
  // the scalar gap.
  std::vector<double> matrix_gap;
  std::vector<double> scalar_gap;
  double max_matrix_gap = 0.0;
  double max_scalar_gap = 0.0;
  double lambda_scale = 0.0;  // max |Lambda|_inf seen for this pair
  // Largest gap of the quadratic-form values at the supplied (t, x).
  double point_gap = 0.0;
  double point_scale = 0.0;
};

struct SymmetryOptions {
  int probes = 8;
  std::uint64_t seed = 0;
  double relative_tolerance = 1e-7;
  // Sweep the canonical (hat-function) basis when the pair's basis has at
  // most this many direction pairs.
  int basis_limit = 512;
  // Optional point for the closed-loop variant.
  std::optional<double> t;
  std::optional<Eigen::VectorXd> x;
};

struct SymmetryReport {
  Verdict verdict = Verdict::kMpg;
  std::vector<PairReport> pairs;  // i < j
  int probes_used = 0;
  bool basis_swept = false;
  double max_discrepancy = 0.0;  // over pairs, matrix gaps
  double tolerance = 0.0;        // relative tolerance used
};

// Probes the symmetric-Jacobian condition at profile K with random masked
// Gaussian directions (and basis directions at small sizes).
SymmetryReport CheckSymmetry(const LqGameSpec& spec, const PolicyProfile& K,
                             const SymmetryOptions& options);
// Gaps of one pair. Directions are drawn per agent, so CheckPair(i, j) and
// CheckPair(j, i) see the same probes and report the same gaps.
PairReport CheckPair(const LqGameSpec& spec, const PolicyProfile& K, int i,
                     int j, const SymmetryOptions& options,
                     bool* basis_swept = nullptr, int* probes_used = nullptr);
// Same as CheckSymmetry, over several base profiles; gaps are maxima over all of them.
SymmetryReport CheckSymmetry(const LqGameSpec& spec,
                             const std::vector<PolicyProfile>& profiles,
                             const SymmetryOptions& options);

// Random k_i x n_x gains at every node, zero outside agent i's feedback mask.
TimeSeries RandomMaskedGain(const LqGameSpec& spec, int i,
                            std::uint64_t seed, double scale = 1.0);
PolicyProfile RandomProfile(const LqGameSpec& spec, std::uint64_t seed,
                            double scale = 1.0);

class PotentialFunction {
 public:
  enum class Kind { kLineIntegral, kQuadratic, kTeam };

  static PotentialFunction LineIntegral(PolicyProfile base, int n_quad,
                                        bool not_a_potential = false);
  static PotentialFunction Quadratic(AgentCost joint);
  static PotentialFunction Team(int agent);

  Kind kind() const { return kind_; }
  const PolicyProfile& base() const { return base_; }
  int n_quad() const { return static_cast<int>(rule_.nodes.size()); }
  const QuadratureRule& rule() const { return rule_; }
  bool not_a_potential() const { return not_a_potential_; }
  const AgentCost& joint() const { return joint_; }
  int team_agent() const { return team_agent_; }

  double Evaluate(const LqGameSpec& spec, const PolicyProfile& K, double t,
                  const Eigen::VectorXd& x) const;
  double Evaluate(const LqGameSpec& spec, const PolicyProfile& K,
                  const Objective& obj) const;

  bool operator==(const PotentialFunction& o) const;

 private:
  double EvaluateWith(
      const LqGameSpec& spec, const PolicyProfile& K,
      const std::function<double(const QuadraticPath&)>& apply) const;

  Kind kind_ = Kind::kTeam;
  PolicyProfile base_;
  QuadratureRule rule_;
  bool not_a_potential_ = false;
  AgentCost joint_;
  int team_agent_ = 0;
};

// Refuses (RefusalError) when the report's verdict is not-potential, unless
// `override_refusal` is set, in which case the result is marked.
PotentialFunction BuildLineIntegralPotential(const LqGameSpec& spec,
                                             const PolicyProfile& base,
                                             int n_quad,
                                             const SymmetryReport& report,
                                             bool override_refusal = false);

// Joint cost matrices of the distributed potential: diagonal blocks
// Q_i + Qbar, off-diagonal blocks -gamma Qbar / (N - 1); R and G alike with
// kappa and eta. They are quadratic-form matrices of F and G, the same
// convention as the lifted agent costs, so that potential differences equal
// value differences in the engine's 1/2 convention.
AgentCost DistributedPotentialCosts(const DistributedQuadraticSpec& d);
PotentialFunction BuildDistributedPotential(const DistributedQuadraticSpec& d);

// Potential pair (F, G) of a distributed game with general costs.
struct DistributedFG {
  std::function<double(double, const Eigen::VectorXd&, const Eigen::VectorXd&)>
      F;
  std::function<double(const Eigen::VectorXd&)> G;
  // U_{f_i} = f_i - F and U_{g_i} = g_i - G.
  std::function<double(int, double, const Eigen::VectorXd&,
                       const Eigen::VectorXd&)>
      Uf;
  std::function<double(int, const Eigen::VectorXd&)> Ug;
};

struct DistributedFGOptions {
  int n_quad = 16;
  int probes = 10;
  std::uint64_t seed = 0;
  double hessian_tolerance = 1e-6;
};

// `costs` carries running/terminal costs of N agents over the joint
// (x, a) = ((x_1..x_N), (a_1..a_N)) with agent blocks of size `agent_state`
// and control_dims[i]. Refuses (RefusalError naming the pair and point) if
// the cross Hessian blocks of f_i and f_j (or g_i and g_j) differ at a probe.
DistributedFG BuildGeneralDistributedFG(const GeneralCoefficients& costs,
                                        int agent_state,
                                        const Eigen::VectorXd& anchor_x,
                                        const Eigen::VectorXd& anchor_a,
                                        const TimeGrid& grid,
                                        const DistributedFGOptions& options);

}  // namespace potentia

#endif  // POTENTIA_POTENTIAL_H_
