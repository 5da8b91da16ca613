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

#ifndef POTENTIA_GENERAL_H_
#define POTENTIA_GENERAL_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "potentia/game.h"

// Code-level coefficients of a general (nonlinear) game. Derivatives are
// taken with respect to z = (x, a), x first.
namespace potentia {

// Vector-valued map of (t, x, a), e.g. the drift or one diffusion column.
struct VectorField {
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&,
                                const Eigen::VectorXd&)>
      value;
  // dim x (n_x + n_a).
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&,
                                const Eigen::VectorXd&)>
      jacobian;
  // One (n_x + n_a)^2 Hessian per output component.
  std::function<std::vector<Eigen::MatrixXd>(double, const Eigen::VectorXd&,
                                             const Eigen::VectorXd&)>
      hessians;
};

// Running cost f_i(t, x, a).
struct ScalarField {
  std::function<double(double, const Eigen::VectorXd&, const Eigen::VectorXd&)>
      value;
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&,
                                const Eigen::VectorXd&)>
      gradient;
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&,
                                const Eigen::VectorXd&)>
      hessian;
};

// Terminal cost g_i(x).
struct TerminalField {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};

struct GeneralCoefficients {
  int state_dim = 0;
  std::vector<int> control_dims;
  VectorField drift;                   // B(t, x, a)
  std::vector<VectorField> diffusion;  // Sigma(t, x, a), one per noise column
  std::vector<ScalarField> running;    // f_i
  std::vector<TerminalField> terminal;  // g_i

  int agents() const { return static_cast<int>(control_dims.size()); }
  int control_dim() const;
  int noise_dim() const { return static_cast<int>(diffusion.size()); }
  int control_offset(int i) const;
};

// Feedback policy a_i = phi_i(t, x) of one agent (also used for
// perturbation directions).
struct FeedbackPolicy {
  int dim = 0;  // k_i
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> value;
  // k_i x n_x.
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> jacobian;
  // One n_x x n_x Hessian per control component.
  std::function<std::vector<Eigen::MatrixXd>(double, const Eigen::VectorXd&)>
      hessians;
};

struct SelfTestReport {
  bool passed = true;
  double worst_relative_error = 0.0;
  std::string worst_callback;
  std::vector<std::string> failures;
};

// Checks output shapes and compares every derivative callback against
// central differences of the callback one order below at `points` random
// (t, x, a) with t in [t0, T]. Passes when every relative error is <= tol.
SelfTestReport SelfTestCoefficients(const GeneralCoefficients& c,
                                    const TimeGrid& grid, std::uint64_t seed,
                                    int points = 10, double tol = 1e-4);
SelfTestReport SelfTestPolicy(const FeedbackPolicy& p, int state_dim,
                              const TimeGrid& grid, std::uint64_t seed,
                              int points = 10, double tol = 1e-4);
// Throws Error naming the worst callback unless the tests pass.
void RequireSelfTest(const GeneralCoefficients& c,
                     const std::vector<FeedbackPolicy>& policies,
                     const TimeGrid& grid, std::uint64_t seed);

// The LQ game as general coefficients: B = A x + B a, Sigma = sigma,
// f_i = (x'Q_i x + a'R_i a)/2, g_i = x'G_i x/2, coefficients interpolated
// in t.
GeneralCoefficients FromLqSpec(const LqGameSpec& spec);
// a_i = K_i(t) x.
FeedbackPolicy LinearFeedback(const TimeSeries& gain, const TimeGrid& grid);

}  // namespace potentia

#endif  // POTENTIA_GENERAL_H_
