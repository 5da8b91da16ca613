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

#ifndef POTENTIA_NASH_H_
#define POTENTIA_NASH_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "potentia/game.h"
#include "potentia/potential.h"

namespace potentia {

// Gradient of an objective with respect to the node samples of every
// agent's gain: the directional derivative along a piecewise-linear
// direction K' is sum_i sum_m <gains[i](m), K'_i(m)>.
struct GradientField {
  std::vector<TimeSeries> gains;

  double Dot(const PolicyProfile& direction) const;
  // max_m |G(m)| / w_m with lumped trapezoid weights w_m: the sup-norm of
  // the gradient density, independent of the grid size.
  double SupNorm(const TimeGrid& grid) const;
};

enum class GradientBackend {
  kFast,   // density [B_i' Psi_i + (R_i)_i' K] M integrated against hats
  kBasis,  // one first-derivative solve per hat direction
};

// Gradient of the potential with respect to K_i, i.e. the gradient of V_i
// in K_i for every i. Refuses if `report` says not-potential.
GradientField PotentialGradient(const LqGameSpec& spec, const PolicyProfile& K,
                                const Objective& obj,
                                GradientBackend backend = GradientBackend::kFast,
                                const SymmetryReport* report = nullptr);

struct BestResponse {
  bool available = false;
  std::string notice;
  TimeSeries gain;  // k_i x n_x node samples
};

// Exact best response of agent i against K_{-i}: a single-agent LQR with
// drift A + sum_{j != i} B_j K_j, state cost Q_i + K_{-i}'(R_i)_{-i,-i}K_{-i},
// cross term (R_i)_{i,-i} K_{-i} and control cost (R_i)_{ii}.
BestResponse ExactBestResponse(const LqGameSpec& spec, const PolicyProfile& K,
                               int i);

struct AgentGap {
  int agent = 0;
  // Most negative V_i(deviation) - V_i(K) over probes (0 if none helped).
  double worst_improvement = 0.0;
  bool best_response_checked = false;
  double best_response_improvement = 0.0;
  int probes = 0;
  std::string notice;
};

struct TraceRow {
  int iteration = 0;
  double potential = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
};

struct NashCertificate {
  PolicyProfile profile;
  std::vector<AgentGap> gaps;
  double worst_improvement = 0.0;
  double tolerance = 0.0;
  bool certified = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  double final_potential = 0.0;
  bool converged = false;
  std::string potential_kind;
  std::string verdict;
  // Smallest potential change over the same probes, and whether the probed
  // potential minimality and the Nash verdict agree.
  std::optional<double> worst_potential_change;
  bool potential_consistent = true;
  std::vector<std::string> notices;
  std::vector<TraceRow> trace;
};

struct VerifyOptions {
  int probes = 50;
  std::vector<double> radii{1e-2, 1e-1, 1.0};
  std::uint64_t seed = 0;
  double tolerance = 1e-5;
  bool best_response = true;
};

// Unilateral-deviation check of K: random masked gain deviations of each
// radius in sup-norm, plus the exact best response where available.
// `potential`, if given, is evaluated on the same deviations.
NashCertificate VerifyNash(const LqGameSpec& spec, const PolicyProfile& K,
                           const Objective& obj, const VerifyOptions& options,
                           const PotentialFunction* potential = nullptr);

struct NashOptions {
  int max_iter = 2000;
  double tol = 1e-6;  // on GradientField::SupNorm
  double armijo = 1e-4;
  double initial_step = 1.0;
  int max_halvings = 40;
  int symmetry_probes = 4;
  std::uint64_t seed = 0;
  VerifyOptions verify;
  // Potential to descend; defaults to the team potential when all costs are
  // equal, else the line integral based at K0.
  std::optional<PotentialFunction> potential;
};

NashCertificate SolveNash(const LqGameSpec& spec, const PolicyProfile& K0,
                          const Objective& obj, const NashOptions& options);

void WriteTraceCsv(std::ostream& os, const std::vector<TraceRow>& trace);

bool AllCostsEqual(const LqGameSpec& spec);

}  // namespace potentia

#endif  // POTENTIA_NASH_H_
