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

#include "potentia/crosscheck.h"

#include <cmath>
#include <random>

#include "potentia/errors.h"
#include "potentia/monte_carlo.h"
#include "potentia/ode.h"
#include "potentia/seeds.h"

namespace potentia {
namespace {

constexpr std::uint64_t kDirectionStage = 0x43524f53;  // "CROS"
constexpr std::uint64_t kPathStage = 0x50415448;       // "PATH"

TimeSeries ConstantMaskedGain(const LqGameSpec& spec, int i,
                              std::uint64_t seed) {
  const Eigen::MatrixXd mask = spec.GainMask(i);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(mask.rows(), mask.cols());
  for (int q = 0; q < g.cols(); ++q) {
    for (int p = 0; p < g.rows(); ++p) g(p, q) = normal(rng);
  }
  return TimeSeries(Eigen::MatrixXd(g.cwiseProduct(mask)));
}

std::string DirName(int agent, int which) {
  return "h" + std::to_string(agent + 1) + (which == 0 ? "a" : "b");
}

}  // namespace

CrosscheckReport RunCrosscheck(const LqGameSpec& spec, const PolicyProfile& K,
                               double t0, const Eigen::VectorXd& x0,
                               const CrosscheckOptions& options) {
  RequireValid(spec);
  K.CheckAgainst(spec);
  if (x0.size() != spec.state_dim()) {
    throw DimensionError("crosscheck: x0 has " + std::to_string(x0.size()) +
                         " entries, expected " +
                         std::to_string(spec.state_dim()));
  }
  const int N = spec.agents();
  CrosscheckReport rep;
  rep.paths = options.paths;
  rep.seed = options.seed;
  rep.direction_seed = DeriveSeed(options.seed, kDirectionStage, 0);
  rep.path_seed = DeriveSeed(options.seed, kPathStage, 0);
  rep.t0 = t0;
  rep.x0 = x0;

  // Direction 2h is agent h's "a" direction, 2h+1 its "b" direction.
  std::vector<PolicyDirection> dirs;
  for (int h = 0; h < N; ++h) {
    for (int w = 0; w < 2; ++w) {
      dirs.push_back(
          {h, ConstantMaskedGain(spec, h,
                                 DeriveSeed(rep.direction_seed, h, w))});
    }
  }
  std::vector<DirectionPair> pairs;
  for (int h = 0; h < N; ++h) {
    for (int l = 0; l < N; ++l) pairs.push_back({2 * h, 2 * l + 1});
  }

  OdeOptions ode_opts;
  ode_opts.theta_forcing_scale = options.theta_forcing_scale;
  std::vector<EstimateRequest> requests;
  for (int i = 0; i < N; ++i) {
    const QuadraticPath psi = SolvePsi(spec, K, i);
    std::vector<QuadraticPath> theta;
    for (size_t d = 0; d < dirs.size(); ++d) {
      theta.push_back(SolveTheta(spec, K, psi, i, dirs[d], ode_opts));
      CrosscheckEntry e;
      e.order = 1;
      e.i = i;
      e.h = dirs[d].agent;
      e.direction = DirName(dirs[d].agent, static_cast<int>(d % 2));
      e.ode = theta.back().Evaluate(t0, x0);
      rep.entries.push_back(e);
      requests.push_back({EstimateRequest::Kind::kFirst, i,
                          static_cast<int>(d), 0});
    }
    for (size_t p = 0; p < pairs.size(); ++p) {
      const auto& dh = dirs[pairs[p].first];
      const auto& dl = dirs[pairs[p].second];
      const QuadraticPath lambda =
          SolveLambda(spec, K, i, theta[pairs[p].first], dh,
                      theta[pairs[p].second], dl);
      CrosscheckEntry e;
      e.order = 2;
      e.i = i;
      e.h = dh.agent;
      e.l = dl.agent;
      e.direction = DirName(dh.agent, 0) + "," + DirName(dl.agent, 1);
      e.ode = lambda.Evaluate(t0, x0);
      rep.entries.push_back(e);
      requests.push_back({EstimateRequest::Kind::kSecond, i, 0,
                          static_cast<int>(p)});
    }
  }

  McConfig cfg;
  cfg.n_paths = options.paths;
  cfg.seed = rep.path_seed;
  cfg.threads = options.threads;
  std::vector<DerivativeEstimate> est;
  std::string failure;
  try {
    est = Estimate(spec, K, dirs, pairs, requests, t0, x0, cfg);
  } catch (const DivergenceError& e) {
    failure = e.what();
  }

  int within2 = 0;
  bool all_ok = true;
  for (size_t k = 0; k < rep.entries.size(); ++k) {
    auto& e = rep.entries[k];
    if (!failure.empty()) {
      e.ok = false;
      e.error = failure;
      e.mc = std::nan("");
      e.z = std::nan("");
      all_ok = false;
      continue;
    }
    e.mc = est[k].value;
    e.standard_error = est[k].standard_error;
    e.flagged = est[k].flagged;
    const double diff = e.mc - e.ode;
    const double tol = options.exact_tolerance * (1.0 + std::abs(e.ode));
    // A standard error at rounding level means a deterministic estimate.
    if (e.standard_error > tol) {
      e.z = diff / e.standard_error;
      e.ok = std::abs(e.z) <= 3.0;
      if (std::abs(e.z) <= 2.0) ++within2;
    } else {
      e.z = diff / tol;
      e.ok = std::abs(diff) <= tol;
      if (e.ok) ++within2;
    }
    if (!std::isfinite(e.z)) e.ok = false;
    if (e.flagged > 0) {
      e.error = std::to_string(e.flagged) + " paths excluded (non-finite)";
    }
    all_ok = all_ok && e.ok;
    if (std::isfinite(e.z)) {
      rep.max_abs_z = std::max(rep.max_abs_z, std::abs(e.z));
    }
  }
  rep.fraction_within_2 =
      rep.entries.empty()
          ? 1.0
          : static_cast<double>(within2) / static_cast<double>(rep.entries.size());
  rep.pass = all_ok && rep.fraction_within_2 >= 0.95;
  return rep;
}

}  // namespace potentia
