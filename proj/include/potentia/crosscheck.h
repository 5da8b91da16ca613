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

#ifndef POTENTIA_CROSSCHECK_H_
#define POTENTIA_CROSSCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "potentia/game.h"

// Agreement of the ODE quadratic forms with Monte Carlo estimates of the
// first and second linear derivatives of every agent's value.
namespace potentia {

struct CrosscheckOptions {
  int paths = 20000;
  std::uint64_t seed = 0;
  int threads = 0;
  // Test hook: scales the forcing of the first-derivative ODE.
  double theta_forcing_scale = 1.0;
  // Used instead of the z-score when the standard error is zero.
  double exact_tolerance = 1e-8;
};

struct CrosscheckEntry {
  int order = 1;  // 1 or 2
  int i = 0;      // agent whose value is differentiated
  int h = 0;      // agent of the first direction
  int l = -1;     // agent of the second direction (order 2)
  std::string direction;  // e.g. "h1a" or "h1a,h2b"
  double ode = 0.0;
  double mc = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
  int flagged = 0;
  bool ok = true;
  std::string error;
};

struct CrosscheckReport {
  std::vector<CrosscheckEntry> entries;
  int paths = 0;
  std::uint64_t seed = 0;
  std::uint64_t direction_seed = 0;
  std::uint64_t path_seed = 0;
  double t0 = 0.0;
  Eigen::VectorXd x0;
  double max_abs_z = 0.0;
  double fraction_within_2 = 0.0;
  bool pass = false;
};

// Directions: two time-constant random masked gains per agent ("a" and "b").
// First-order entries cover every (i, direction); second-order entries every
// (i, a-direction of h, b-direction of l). PASS iff every |z| <= 3 and at
// least 95% of entries have |z| <= 2. Entries whose standard error is at
// most tol = exact_tolerance * (1 + |ode|) (deterministic paths) must agree
// within tol instead, and report z = (mc - ode) / tol.
CrosscheckReport RunCrosscheck(const LqGameSpec& spec, const PolicyProfile& K,
                               double t0, const Eigen::VectorXd& x0,
                               const CrosscheckOptions& options);

}  // namespace potentia

#endif  // POTENTIA_CROSSCHECK_H_
