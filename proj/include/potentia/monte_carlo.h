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

#ifndef POTENTIA_MONTE_CARLO_H_
#define POTENTIA_MONTE_CARLO_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "potentia/game.h"
#include "potentia/general.h"

// Euler-Maruyama simulation of the state X, the first sensitivities Y (one
// per direction) and the second sensitivities Z (one per direction pair),
// all driven by the same Brownian increments, and path estimators of values
// and their first and second linear derivatives.
//
// With u = (Y, da) and phi the joint policy:
//   da   = phi_x Y + E_h phi'(X)
//   dY   = (B_x Y + B_a da) ds + sum_k (S^k_x Y + S^k_a da) dW^k
//   d2a  = phi_x Z + phi_xx[Y^h, Y^l] + E_l phi''_x Y^h + E_h phi'_x Y^l
//   dZ   = (B_x Z + B_a d2a + D2B[u^h, u^l]) ds
//            + sum_k (S^k_x Z + S^k_a d2a + D2S^k[u^h, u^l]) dW^k
// and the estimators integrate (grad f_i) . u, u^h' H(f_i) u^l +
// (grad f_i) . (Z, d2a), plus the terminal terms, by the trapezoid rule.
namespace potentia {

struct McConfig {
  int n_paths = 1000;
  std::uint64_t seed = 0;
  bool antithetic = false;  // pairs (2p, 2p+1) share increments up to sign
  int threads = 0;          // 0: POTENTIA_THREADS or hardware default
};

struct DerivativeEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  int n_paths = 0;  // paths used, after exclusions
  std::uint64_t seed = 0;
  int flagged = 0;  // paths excluded for non-finite samples
};

// Indices into the direction list.
struct DirectionPair {
  int first = 0;
  int second = 0;
};

// One simulated path. Columns are nodes start_node..M.
struct PathBundle {
  int path = 0;
  int start_node = 0;
  Eigen::MatrixXd X;                 // n_x x nodes
  Eigen::MatrixXd alpha;             // n_a x nodes
  std::vector<Eigen::MatrixXd> Y;    // per direction, n_x x nodes
  std::vector<Eigen::MatrixXd> dalpha;   // per direction, n_a x nodes
  std::vector<Eigen::MatrixXd> Z;    // per pair, n_x x nodes
  std::vector<Eigen::MatrixXd> d2alpha;  // per pair, n_a x nodes
  Eigen::MatrixXd dW;                // n_w x steps
  bool flagged = false;
};

// Called once per path, possibly from several threads at once; the bundle
// is only valid during the call.
using PathVisitor = std::function<void(const PathBundle&)>;

// Direction of a general policy perturbation for agent `agent`.
struct GeneralDirection {
  int agent = 0;
  FeedbackPolicy policy;
};

// Per-path seed of path p: splitmix64(seed + p).
std::uint64_t PathSeed(std::uint64_t seed, int path);

// LQ fast path. t0 must be a grid node.
void SimulatePaths(const LqGameSpec& spec, const PolicyProfile& K,
                   const std::vector<PolicyDirection>& directions,
                   const std::vector<DirectionPair>& pairs, double t0,
                   const Eigen::VectorXd& x0, const McConfig& cfg,
                   const PathVisitor& visit);

// General coefficients. Runs the derivative self-test first.
void SimulatePaths(const GeneralCoefficients& coeffs,
                   const std::vector<FeedbackPolicy>& phi,
                   const std::vector<GeneralDirection>& directions,
                   const std::vector<DirectionPair>& pairs,
                   const TimeGrid& grid, double t0, const Eigen::VectorXd& x0,
                   const McConfig& cfg, const PathVisitor& visit);

struct EstimateRequest {
  enum class Kind { kValue, kFirst, kSecond };
  Kind kind = Kind::kValue;
  int agent = 0;      // i
  int direction = 0;  // kFirst: index into directions
  int pair = 0;       // kSecond: index into pairs
};

// All requested estimates from one set of paths (common random numbers).
std::vector<DerivativeEstimate> Estimate(
    const LqGameSpec& spec, const PolicyProfile& K,
    const std::vector<PolicyDirection>& directions,
    const std::vector<DirectionPair>& pairs,
    const std::vector<EstimateRequest>& requests, double t0,
    const Eigen::VectorXd& x0, const McConfig& cfg);

std::vector<DerivativeEstimate> Estimate(
    const GeneralCoefficients& coeffs, const std::vector<FeedbackPolicy>& phi,
    const std::vector<GeneralDirection>& directions,
    const std::vector<DirectionPair>& pairs,
    const std::vector<EstimateRequest>& requests, const TimeGrid& grid,
    double t0, const Eigen::VectorXd& x0, const McConfig& cfg);

// Per-path samples behind an estimate (for path-level property tests);
// flagged paths hold NaN.
std::vector<std::vector<double>> PathSamples(
    const LqGameSpec& spec, const PolicyProfile& K,
    const std::vector<PolicyDirection>& directions,
    const std::vector<DirectionPair>& pairs,
    const std::vector<EstimateRequest>& requests, double t0,
    const Eigen::VectorXd& x0, const McConfig& cfg);

DerivativeEstimate EstimateValue(const LqGameSpec& spec,
                                 const PolicyProfile& K, int i, double t0,
                                 const Eigen::VectorXd& x0,
                                 const McConfig& cfg);
DerivativeEstimate EstimateFirstDerivative(const LqGameSpec& spec,
                                           const PolicyProfile& K, int i,
                                           const PolicyDirection& dir,
                                           double t0,
                                           const Eigen::VectorXd& x0,
                                           const McConfig& cfg);
DerivativeEstimate EstimateSecondDerivative(const LqGameSpec& spec,
                                            const PolicyProfile& K, int i,
                                            const PolicyDirection& dir_h,
                                            const PolicyDirection& dir_l,
                                            double t0,
                                            const Eigen::VectorXd& x0,
                                            const McConfig& cfg);

// CSV of the first `count` paths: path,t,X1..,Y1_1..,Z1_1..
void WritePathsCsv(std::ostream& os, const LqGameSpec& spec,
                   const PolicyProfile& K,
                   const std::vector<PolicyDirection>& directions,
                   const std::vector<DirectionPair>& pairs, double t0,
                   const Eigen::VectorXd& x0, const McConfig& cfg, int count);

}  // namespace potentia

#endif  // POTENTIA_MONTE_CARLO_H_
