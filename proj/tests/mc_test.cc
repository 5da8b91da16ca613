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

#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.h"
#include "potentia/errors.h"
#include "potentia/general.h"
#include "potentia/monte_carlo.h"
#include "potentia/ode.h"

namespace potentia {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::RandomDirection;
using testing::RandomGains;
using testing::RandomSpec;

// dX = a ds, one agent, x0 = 1, terminal cost x^2/2.
LqGameSpec ScalarSpec(int steps = 10) {
  LqGameSpec s;
  s.grid = TimeGrid(0.0, 1.0, steps);
  s.control_dims = {1};
  s.A = TimeSeries::Scalar(0.0);
  s.B = TimeSeries::Scalar(1.0);
  s.sigma = MatrixXd::Zero(1, 1);
  s.costs = {{TimeSeries::Scalar(0.0), TimeSeries::Scalar(0.0),
              MatrixXd::Constant(1, 1, 1.0)}};
  return s;
}

McConfig Cfg(int paths, std::uint64_t seed, int threads = 1) {
  McConfig c;
  c.n_paths = paths;
  c.seed = seed;
  c.threads = threads;
  return c;
}

// Moderate drift and noise so that Euler bias stays well inside the
// statistical error at the sizes used here.
LqGameSpec NoisySpec(std::uint64_t seed, int steps = 200) {
  testing::RandomSpecOptions o;
  o.steps = steps;
  o.a_scale = 0.3;
  o.b_scale = 0.5;
  o.sigma_scale = 0.8;
  return RandomSpec(seed, o);
}

TEST(Mc, FrozenStateWithoutDynamics) {
  LqGameSpec s = RandomSpec(1, {});
  s.A = TimeSeries::Zero(2, 2);
  s.B = TimeSeries::Zero(2, 2);
  s.sigma = MatrixXd::Zero(2, 2);
  const VectorXd x0 = VectorXd::LinSpaced(2, 0.5, -1.5);
  int seen = 0;
  std::mutex mu;
  SimulatePaths(s, RandomGains(s, 2, 1.0), {}, {}, 0.0, x0, Cfg(16, 3),
                [&](const PathBundle& b) {
                  for (int c = 0; c < b.X.cols(); ++c) {
                    EXPECT_EQ(VectorXd(b.X.col(c)), x0);
                  }
                  std::lock_guard<std::mutex> lock(mu);
                  ++seen;
                });
  EXPECT_EQ(seen, 16);
}

TEST(Mc, FirstSensitivityIsLinearInTime) {
  const LqGameSpec s = ScalarSpec();
  const PolicyDirection d{0, TimeSeries::Scalar(1.0)};
  SimulatePaths(s, PolicyProfile::Zero(s), {d}, {}, 0.0, VectorXd::Ones(1),
                Cfg(2, 0), [&](const PathBundle& b) {
                  for (int m = 0; m < s.nodes(); ++m) {
                    EXPECT_NEAR(b.Y[0](0, m), s.grid.node(m), 1e-15);
                  }
                });
  const DerivativeEstimate e = EstimateFirstDerivative(
      s, PolicyProfile::Zero(s), 0, d, 0.0, VectorXd::Ones(1), Cfg(4, 0));
  EXPECT_NEAR(e.value, 1.0, 1e-14);
  EXPECT_EQ(e.standard_error, 0.0);
}

TEST(Mc, ZeroDirectionsGiveZeroSensitivities) {
  const LqGameSpec s = NoisySpec(2, 20);
  const PolicyDirection z0{0, TimeSeries::Zero(1, 2)};
  const PolicyDirection z1{1, TimeSeries::Zero(1, 2)};
  SimulatePaths(s, RandomGains(s, 1, 0.5), {z0, z1}, {{0, 1}}, 0.0,
                VectorXd::Ones(2), Cfg(8, 1), [&](const PathBundle& b) {
                  EXPECT_EQ(b.Y[0].cwiseAbs().maxCoeff(), 0.0);
                  EXPECT_EQ(b.Z[0].cwiseAbs().maxCoeff(), 0.0);
                  EXPECT_EQ(b.d2alpha[0].cwiseAbs().maxCoeff(), 0.0);
                });
  const auto e = EstimateSecondDerivative(s, RandomGains(s, 1, 0.5), 0, z0, z1,
                                          0.0, VectorXd::Ones(2), Cfg(8, 1));
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.standard_error, 0.0);
}

TEST(Mc, DeterministicValues) {
  LqGameSpec s = ScalarSpec();
  s.B = TimeSeries::Scalar(0.0);
  const auto v = EstimateValue(s, PolicyProfile::Zero(s), 0, 0.0,
                               VectorXd::Ones(1), Cfg(4, 9));
  EXPECT_EQ(v.value, 0.5);
  EXPECT_EQ(v.standard_error, 0.0);
  s.costs[0].G = MatrixXd::Zero(1, 1);
  s.sigma = MatrixXd::Ones(1, 1);
  const auto z = EstimateValue(s, PolicyProfile::Zero(s), 0, 0.0,
                               VectorXd::Ones(1), Cfg(4, 9));
  EXPECT_EQ(z.value, 0.0);
  EXPECT_EQ(z.standard_error, 0.0);
}

struct Fixture {
  LqGameSpec spec;
  PolicyProfile K;
  std::vector<PolicyDirection> dirs;
  VectorXd x0;
};

Fixture MakeSetup(std::uint64_t seed, int steps = 200) {
  Fixture s{NoisySpec(seed, steps), {}, {}, VectorXd::LinSpaced(2, 0.6, -0.4)};
  s.K = RandomGains(s.spec, seed + 1, 0.3);
  s.dirs = {RandomDirection(s.spec, 0, seed + 2),
            RandomDirection(s.spec, 1, seed + 3)};
  return s;
}

std::vector<EstimateRequest> AllRequests() {
  using K = EstimateRequest::Kind;
  return {{K::kValue, 0, 0, 0},  {K::kValue, 1, 0, 0},
          {K::kFirst, 0, 0, 0},  {K::kFirst, 0, 1, 0},
          {K::kFirst, 1, 0, 0},  {K::kFirst, 1, 1, 0},
          {K::kSecond, 0, 0, 0}, {K::kSecond, 1, 0, 0},
          {K::kSecond, 0, 0, 1}, {K::kSecond, 1, 0, 1}};
}

TEST(Mc, BitIdenticalAcrossThreadCounts) {
  const Fixture s = MakeSetup(4, 50);
  const std::vector<DirectionPair> pairs{{0, 1}, {1, 1}};
  std::vector<std::vector<DerivativeEstimate>> runs;
  for (int threads : {1, 3, 8}) {
    runs.push_back(Estimate(s.spec, s.K, s.dirs, pairs, AllRequests(), 0.0,
                            s.x0, Cfg(500, 77, threads)));
  }
  for (size_t r = 1; r < runs.size(); ++r) {
    for (size_t k = 0; k < runs[0].size(); ++k) {
      EXPECT_EQ(runs[r][k].value, runs[0][k].value);
      EXPECT_EQ(runs[r][k].standard_error, runs[0][k].standard_error);
    }
  }
  // A different seed gives different numbers.
  const auto other = Estimate(s.spec, s.K, s.dirs, pairs, AllRequests(), 0.0,
                              s.x0, Cfg(500, 78));
  EXPECT_NE(other[2].value, runs[0][2].value);
}

TEST(Mc, SecondDerivativeSwapSymmetryPathByPath) {
  const Fixture s = MakeSetup(5, 50);
  using K = EstimateRequest::Kind;
  const std::vector<EstimateRequest> req{{K::kSecond, 0, 0, 0},
                                         {K::kSecond, 0, 0, 1},
                                         {K::kSecond, 1, 0, 0},
                                         {K::kSecond, 1, 0, 1}};
  const auto a = PathSamples(s.spec, s.K, s.dirs, {{0, 1}, {1, 0}}, req, 0.0,
                             s.x0, Cfg(64, 5));
  for (int p = 0; p < 64; ++p) {
    EXPECT_EQ(a[0][p], a[1][p]);
    EXPECT_EQ(a[2][p], a[3][p]);
  }
}

TEST(Mc, LinearInDirectionPathByPath) {
  const Fixture s = MakeSetup(6, 50);
  std::vector<PolicyDirection> dirs = s.dirs;
  dirs.push_back({0, s.dirs[0].gain.Axpy(1.0, s.dirs[0].gain, s.spec.nodes())});
  using K = EstimateRequest::Kind;
  const std::vector<EstimateRequest> req{{K::kFirst, 1, 0, 0},
                                         {K::kFirst, 1, 2, 0},
                                         {K::kSecond, 0, 0, 0},
                                         {K::kSecond, 0, 0, 1}};
  const auto a = PathSamples(s.spec, s.K, dirs, {{0, 1}, {2, 1}}, req, 0.0,
                             s.x0, Cfg(64, 6));
  for (int p = 0; p < 64; ++p) {
    EXPECT_EQ(a[1][p], 2.0 * a[0][p]);
    EXPECT_EQ(a[3][p], 2.0 * a[2][p]);
  }
}

TEST(Mc, MatchesOdeWithinThreeStandardErrors) {
  for (std::uint64_t seed : {7, 8}) {
    const Fixture s = MakeSetup(seed);
    const std::vector<DirectionPair> pairs{{0, 1}, {1, 1}};
    const auto est = Estimate(s.spec, s.K, s.dirs, pairs, AllRequests(), 0.0,
                              s.x0, Cfg(10000, seed));
    const auto reqs = AllRequests();
    for (size_t k = 0; k < reqs.size(); ++k) {
      const auto& r = reqs[k];
      const int pair = r.kind == EstimateRequest::Kind::kSecond ? r.pair : 0;
      const auto b = SolveSensitivities(
          s.spec, s.K, r.agent,
          s.dirs[r.kind == EstimateRequest::Kind::kFirst ? r.direction
                                                         : pairs[pair].first],
          s.dirs[pairs[pair].second]);
      const QuadraticPath& q = r.kind == EstimateRequest::Kind::kValue ? b.psi
                               : r.kind == EstimateRequest::Kind::kFirst
                                   ? b.theta_h
                                   : b.lambda;
      const double ode = EvalQuadratic(q, 0.0, s.x0);
      EXPECT_LE(std::abs(est[k].value - ode), 3.0 * est[k].standard_error)
          << "seed " << seed << " request " << k << " ode " << ode << " mc "
          << est[k].value;
    }
  }
}

TEST(Mc, SecondMomentMatchesOde) {
  const Fixture s = MakeSetup(9);
  const int n = 20000;
  std::vector<MatrixXd> xt(n);
  SimulatePaths(s.spec, s.K, {}, {}, 0.0, s.x0, Cfg(n, 9),
                [&](const PathBundle& b) {
                  const VectorXd x = b.X.col(b.X.cols() - 1);
                  xt[b.path] = x * x.transpose();
                });
  const MatrixXd ode = SolveSecondMoment(s.spec, s.K, 0.0, s.x0).moment.back();
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      double mean = 0.0, sq = 0.0;
      for (const auto& m : xt) mean += m(r, c);
      mean /= n;
      for (const auto& m : xt) sq += (m(r, c) - mean) * (m(r, c) - mean);
      const double se = std::sqrt(sq / (n - 1) / n);
      EXPECT_LE(std::abs(mean - ode(r, c)), 3.0 * se);
    }
  }
}

// Common random numbers: the difference quotient of value estimates tends
// to the first-derivative estimate at rate O(eps).
TEST(Mc, DifferenceQuotientConverges) {
  const Fixture s = MakeSetup(10, 50);
  const McConfig cfg = Cfg(200, 10);
  const double v0 = EstimateValue(s.spec, s.K, 1, 0.0, s.x0, cfg).value;
  const double d =
      EstimateFirstDerivative(s.spec, s.K, 1, s.dirs[0], 0.0, s.x0, cfg).value;
  double prev = 0.0;
  for (double eps = 1e-2; eps > 1e-4; eps /= 2.0) {
    const PolicyProfile Ke = Deviate(s.K, s.dirs[0], eps, s.spec.nodes());
    const double err =
        std::abs((EstimateValue(s.spec, Ke, 1, 0.0, s.x0, cfg).value - v0) /
                     eps -
                 d);
    if (prev > 0.0) EXPECT_NEAR(prev / err, 2.0, 0.4) << eps;
    prev = err;
  }
}

TEST(Mc, GeneralCoefficientsCollapseToLq) {
  const Fixture s = MakeSetup(11, 40);
  const GeneralCoefficients g = FromLqSpec(s.spec);
  std::vector<FeedbackPolicy> phi;
  for (int i = 0; i < 2; ++i) phi.push_back(LinearFeedback(s.K.gain(i), s.spec.grid));
  std::vector<GeneralDirection> gd;
  for (const auto& d : s.dirs) {
    gd.push_back({d.agent, LinearFeedback(d.gain, s.spec.grid)});
  }
  const std::vector<DirectionPair> pairs{{0, 1}, {1, 1}};
  const auto lq = Estimate(s.spec, s.K, s.dirs, pairs, AllRequests(), 0.0,
                           s.x0, Cfg(100, 11));
  const auto ge = Estimate(g, phi, gd, pairs, AllRequests(), s.spec.grid, 0.0,
                           s.x0, Cfg(100, 11));
  for (size_t k = 0; k < lq.size(); ++k) {
    EXPECT_NEAR(ge[k].value, lq[k].value, 1e-10 * (1.0 + std::abs(lq[k].value)));
    EXPECT_NEAR(ge[k].standard_error, lq[k].standard_error,
                1e-8 * (1.0 + lq[k].standard_error));
  }
}

// Scalar game whose drift is undefined beyond |x| = 10.
GeneralCoefficients Cliff(double sigma) {
  GeneralCoefficients c;
  c.state_dim = 1;
  c.control_dims = {1};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  c.drift.value = [nan](double, const VectorXd& x, const VectorXd&) {
    return VectorXd::Constant(1, std::abs(x(0)) > 10.0 ? nan : 0.0);
  };
  c.drift.jacobian = [](double, const VectorXd&, const VectorXd&) {
    return MatrixXd::Zero(1, 2);
  };
  c.drift.hessians = [](double, const VectorXd&, const VectorXd&) {
    return std::vector<MatrixXd>{MatrixXd::Zero(2, 2)};
  };
  VectorField col;
  col.value = [sigma](double, const VectorXd&, const VectorXd&) {
    return VectorXd::Constant(1, sigma);
  };
  col.jacobian = c.drift.jacobian;
  col.hessians = c.drift.hessians;
  c.diffusion = {col};
  ScalarField f;
  f.value = [](double, const VectorXd& x, const VectorXd&) {
    return 0.5 * x.squaredNorm();
  };
  f.gradient = [](double, const VectorXd& x, const VectorXd&) {
    VectorXd g = VectorXd::Zero(2);
    g(0) = x(0);
    return g;
  };
  f.hessian = [](double, const VectorXd&, const VectorXd&) {
    MatrixXd h = MatrixXd::Zero(2, 2);
    h(0, 0) = 1.0;
    return h;
  };
  c.running = {f};
  TerminalField g;
  g.value = [](const VectorXd& x) { return 0.5 * x.squaredNorm(); };
  g.gradient = [](const VectorXd& x) { return x; };
  g.hessian = [](const VectorXd&) { return MatrixXd::Identity(1, 1); };
  c.terminal = {g};
  return c;
}

TEST(Mc, FlaggedPathsAreExcludedAndCounted) {
  const TimeGrid grid(0.0, 1.0, 50);
  const std::vector<FeedbackPolicy> phi{
      LinearFeedback(TimeSeries::Zero(1, 1), grid)};
  using K = EstimateRequest::Kind;
  const auto few = Estimate(Cliff(3.3), phi, {}, {}, {{K::kValue, 0, 0, 0}},
                            grid, 0.0, VectorXd::Zero(1), Cfg(4000, 12));
  EXPECT_GT(few[0].flagged, 0);
  EXPECT_EQ(few[0].n_paths, 4000 - few[0].flagged);
  EXPECT_TRUE(std::isfinite(few[0].value));
  EXPECT_THROW(Estimate(Cliff(8.0), phi, {}, {}, {{K::kValue, 0, 0, 0}}, grid,
                        0.0, VectorXd::Zero(1), Cfg(4000, 12)),
               DivergenceError);
}

TEST(Mc, GeneralSelfTestRejectsWrongDerivative) {
  GeneralCoefficients c = Cliff(1.0);
  c.terminal[0].gradient = [](const VectorXd& x) { return VectorXd(2.0 * x); };
  const TimeGrid grid(0.0, 1.0, 10);
  const std::vector<FeedbackPolicy> phi{
      LinearFeedback(TimeSeries::Zero(1, 1), grid)};
  EXPECT_THROW(SimulatePaths(c, phi, {}, {}, grid, 0.0, VectorXd::Zero(1),
                             Cfg(4, 1), [](const PathBundle&) {}),
               Error);
}

TEST(Mc, AntitheticPairsMirrorIncrements) {
  const Fixture s = MakeSetup(13, 20);
  McConfig cfg = Cfg(8, 13);
  cfg.antithetic = true;
  std::vector<MatrixXd> dw(8);
  SimulatePaths(s.spec, s.K, {}, {}, 0.0, s.x0, cfg,
                [&](const PathBundle& b) { dw[b.path] = b.dW; });
  for (int p = 0; p < 8; p += 2) EXPECT_EQ(dw[p], -dw[p + 1]);
  EXPECT_NE(dw[0], dw[2]);
  cfg.n_paths = 7;
  EXPECT_THROW(EstimateValue(s.spec, s.K, 0, 0.0, s.x0, cfg), RangeError);
}

TEST(Mc, RejectsBadInputs) {
  const Fixture s = MakeSetup(14, 20);
  EXPECT_THROW(EstimateValue(s.spec, s.K, 0, 0.025, s.x0, Cfg(4, 0)),
               RangeError);
  EXPECT_THROW(EstimateValue(s.spec, s.K, 0, 0.0, s.x0, Cfg(1, 0)), RangeError);
  EXPECT_THROW(EstimateValue(s.spec, s.K, 0, 0.0, VectorXd::Ones(3), Cfg(4, 0)),
               DimensionError);
}

TEST(Mc, StartsAtLaterNode) {
  const Fixture s = MakeSetup(15, 20);
  SimulatePaths(s.spec, s.K, {s.dirs[0]}, {}, 0.5, s.x0, Cfg(2, 0),
                [&](const PathBundle& b) {
                  EXPECT_EQ(b.start_node, 10);
                  EXPECT_EQ(b.X.cols(), 11);
                  EXPECT_EQ(VectorXd(b.X.col(0)), s.x0);
                  EXPECT_EQ(b.Y[0].col(0).norm(), 0.0);
                });
}

TEST(Mc, PathsCsv) {
  const Fixture s = MakeSetup(16, 4);
  std::ostringstream os;
  WritePathsCsv(os, s.spec, s.K, {s.dirs[0]}, {{0, 0}}, 0.0, s.x0, Cfg(3, 1), 2);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "path,t,X1,X2,Y1_1,Y1_2,Z1_1,Z1_2");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * 5);
}

}  // namespace
}  // namespace potentia
