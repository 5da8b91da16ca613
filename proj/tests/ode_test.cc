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
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.h"
#include "potentia/errors.h"
#include "potentia/ode.h"
#include "potentia/potential.h"

namespace potentia {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing::RandomDirection;
using testing::RandomGains;
using testing::RandomSpec;

double MaxAbs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

struct Case {
  LqGameSpec spec;
  PolicyProfile K;
  PolicyDirection dh, dl;
};

Case MakeCase(std::uint64_t seed, int steps = 100) {
  testing::RandomSpecOptions o;
  o.steps = steps;
  o.control_dims = {1, 2};
  o.state_dim = 3;
  Case c{RandomSpec(seed, o), {}, {}, {}};
  c.K = RandomGains(c.spec, seed + 100, 0.4);
  c.dh = RandomDirection(c.spec, 0, seed + 200);
  c.dl = RandomDirection(c.spec, 1, seed + 300);
  return c;
}

TEST(Ode, MatchesAdaptiveOracle) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Case c = MakeCase(seed, 400);
    for (int i = 0; i < 2; ++i) {
      const auto b = SolveSensitivities(c.spec, c.K, i, c.dh, c.dl);
      const auto o = testing::OracleSensitivities(c.spec, c.K, i, c.dh, c.dl);
      double scale = 0.0, err = 0.0, cscale = 0.0, cerr = 0.0;
      for (int m = 0; m < c.spec.nodes(); ++m) {
        const std::pair<const QuadraticPath*, const std::vector<MatrixXd>*>
            pairs[] = {{&b.psi, &o.psi},
                       {&b.theta_h, &o.theta_h},
                       {&b.theta_l, &o.theta_l},
                       {&b.lambda, &o.lambda}};
        for (const auto& [mine, ref] : pairs) {
          scale = std::max(scale, MaxAbs((*ref)[m]));
          err = std::max(err, MaxAbs(mine->matrix[m] - (*ref)[m]));
        }
        const std::pair<const QuadraticPath*, const std::vector<double>*>
            scalars[] = {{&b.psi, &o.psi_c},
                         {&b.theta_h, &o.theta_h_c},
                         {&b.theta_l, &o.theta_l_c},
                         {&b.lambda, &o.lambda_c}};
        for (const auto& [mine, ref] : scalars) {
          cscale = std::max(cscale, std::abs((*ref)[m]));
          cerr = std::max(cerr, std::abs(mine->scalar[m] - (*ref)[m]));
        }
      }
      EXPECT_LT(err, 1e-8 * (1.0 + scale)) << "seed " << seed << " agent " << i;
      EXPECT_LT(cerr, 1e-8 * (1.0 + cscale)) << "seed " << seed << " agent " << i;
    }
  }
}

// Halving dt divides the RK4 error by about 16 when the coefficients are
// exactly piecewise linear.
TEST(Ode, FourthOrderUnderRefinement) {
  testing::RandomSpecOptions o;
  o.steps = 8;
  o.a_scale = 1.5;
  const LqGameSpec coarse = RandomSpec(21, o);
  o.steps = 16;
  const LqGameSpec fine = RandomSpec(21, o);
  const PolicyProfile Kc = RandomGains(coarse, 5, 0.5, false);
  const PolicyProfile Kf = RandomGains(fine, 5, 0.5, false);
  const auto ref = testing::OracleSensitivities(
      coarse, Kc, 0, {0, TimeSeries::Zero(1, 2)}, {1, TimeSeries::Zero(1, 2)},
      1e-13);
  const double ec = MaxAbs(SolvePsi(coarse, Kc, 0).matrix[0] - ref.psi[0]);
  const double ef = MaxAbs(SolvePsi(fine, Kf, 0).matrix[0] - ref.psi[0]);
  EXPECT_GT(ec / ef, 12.0);
  EXPECT_LT(ec / ef, 20.0);
  const double sc = std::abs(SolvePsi(coarse, Kc, 0).scalar[0] - ref.psi_c[0]);
  const double sf = std::abs(SolvePsi(fine, Kf, 0).scalar[0] - ref.psi_c[0]);
  EXPECT_GT(sc / sf, 12.0);
  EXPECT_LT(sc / sf, 20.0);
}

TEST(Ode, OutputsAreExactlySymmetric) {
  const Case c = MakeCase(4);
  const auto b = SolveSensitivities(c.spec, c.K, 1, c.dh, c.dl);
  for (int m = 0; m < c.spec.nodes(); ++m) {
    for (const auto* q : {&b.psi, &b.theta_h, &b.theta_l, &b.lambda}) {
      EXPECT_EQ(MaxAbs(q->matrix[m] - q->matrix[m].transpose()), 0.0);
    }
  }
}

TEST(Ode, ScalarHandCheck) {
  LqGameSpec s;
  s.grid = TimeGrid(0.0, 1.0, 10);
  s.control_dims = {1};
  s.A = TimeSeries::Scalar(0.0);
  s.B = TimeSeries::Scalar(1.0);
  s.sigma = MatrixXd::Zero(1, 1);
  s.costs = {{TimeSeries::Scalar(0.0), TimeSeries::Scalar(0.0),
              MatrixXd::Constant(1, 1, 1.0)}};
  const PolicyProfile K = PolicyProfile::Zero(s);
  const QuadraticPath psi = SolvePsi(s, K, 0);
  const QuadraticPath th =
      SolveTheta(s, K, psi, 0, {0, TimeSeries::Scalar(1.0)});
  EXPECT_NEAR(EvalQuadratic(th, 0.0, VectorXd::Ones(1)), 1.0, 1e-12);
  EXPECT_NEAR(EvalQuadratic(psi, 0.0, VectorXd::Ones(1)), 0.5, 1e-15);
}

LqGameSpec Scalar1(double sigma) {
  LqGameSpec s;
  s.grid = TimeGrid(0.0, 1.0, 20);
  s.control_dims = {1};
  s.A = TimeSeries::Scalar(0.0);
  s.B = TimeSeries::Scalar(0.0);
  s.sigma = MatrixXd::Constant(1, 1, sigma);
  s.costs = {{TimeSeries::Scalar(1.0), TimeSeries::Scalar(1.0),
              MatrixXd::Zero(1, 1)}};
  return s;
}

TEST(Ode, ClosedForms) {
  // Psi = (1 - t) I when only Q acts.
  LqGameSpec s = RandomSpec(13);
  s.A = TimeSeries::Zero(2, 2);
  s.B = TimeSeries::Zero(2, 2);
  s.costs[0].Q = TimeSeries(MatrixXd(MatrixXd::Identity(2, 2)));
  s.costs[0].G = MatrixXd::Zero(2, 2);
  const QuadraticPath psi = SolvePsi(s, PolicyProfile::Zero(s), 0);
  for (int m = 0; m < s.nodes(); ++m) {
    EXPECT_LT(MaxAbs(psi.matrix[m] -
                     (1.0 - s.grid.node(m)) * MatrixXd::Identity(2, 2)),
              1e-13);
  }
  // sigma = 1 and Psi = 1 - t give psi(0) = 1/4.
  const LqGameSpec one = Scalar1(1.0);
  const QuadraticPath p1 = SolvePsi(one, PolicyProfile::Zero(one), 0);
  EXPECT_NEAR(p1.scalar[0], 0.25, 1e-14);
  EXPECT_NEAR(EvalQuadratic(p1, 0.0, VectorXd::Zero(1)), 0.25, 1e-14);
  // Pure Brownian variance.
  const SecondMoment sm =
      SolveSecondMoment(one, PolicyProfile::Zero(one), 0.0, VectorXd::Zero(1));
  for (int m = 0; m < one.nodes(); ++m) {
    EXPECT_NEAR(sm.moment[m](0, 0), one.grid.node(m), 1e-14);
  }
  // All costs zero.
  LqGameSpec z = RandomSpec(14);
  for (auto& c : z.costs) {
    c.Q = TimeSeries::Zero(2, 2);
    c.R = TimeSeries::Zero(2, 2);
    c.G = MatrixXd::Zero(2, 2);
  }
  const QuadraticPath pz = SolvePsi(z, RandomGains(z, 1, 0.5), 1);
  for (int m = 0; m < z.nodes(); ++m) {
    EXPECT_EQ(MaxAbs(pz.matrix[m]), 0.0);
    EXPECT_EQ(pz.scalar[m], 0.0);
  }
}

// With identical costs, Lambda_1^{1,2}(K', K'') = Lambda_2^{2,1}(K'', K').
TEST(Ode, TeamGameMixedPartials) {
  LqGameSpec s = RandomSpec(15);
  s.costs[1] = s.costs[0];
  const PolicyProfile K = RandomGains(s, 2, 0.4);
  const PolicyDirection d1 = RandomDirection(s, 0, 3);
  const PolicyDirection d2 = RandomDirection(s, 1, 4);
  const auto a = SolveSensitivities(s, K, 0, d1, d2);
  const auto b = SolveSensitivities(s, K, 1, d2, d1);
  for (int m = 0; m < s.nodes(); ++m) {
    EXPECT_LT(MaxAbs(a.lambda.matrix[m] - b.lambda.matrix[m]), 1e-8);
  }
  // Single agent, h = l = i: swapping the directions leaves the form value.
  const PolicyDirection e1 = RandomDirection(s, 0, 5);
  const auto c1 = SolveSensitivities(s, K, 0, d1, e1);
  const auto c2 = SolveSensitivities(s, K, 0, e1, d1);
  const VectorXd x = VectorXd::Ones(2);
  EXPECT_NEAR(EvalQuadratic(c1.lambda, 0.0, x), EvalQuadratic(c2.lambda, 0.0, x),
              1e-8);
}

TEST(Ode, ZeroDirectionAndBilinearity) {
  const Case c = MakeCase(5);
  const QuadraticPath psi = SolvePsi(c.spec, c.K, 0);
  const PolicyDirection zero{0, TimeSeries::Zero(1, 3)};
  const QuadraticPath th0 = SolveTheta(c.spec, c.K, psi, 0, zero);
  for (const auto& m : th0.matrix) EXPECT_EQ(MaxAbs(m), 0.0);
  // Scaling a direction by 2 scales Theta and Lambda by 2 exactly.
  PolicyDirection d2{c.dh.agent, c.dh.gain.Axpy(1.0, c.dh.gain, c.spec.nodes())};
  const auto a = SolveSensitivities(c.spec, c.K, 0, c.dh, c.dl);
  const auto b = SolveSensitivities(c.spec, c.K, 0, d2, c.dl);
  for (int m = 0; m < c.spec.nodes(); ++m) {
    EXPECT_EQ(b.theta_h.matrix[m], 2.0 * a.theta_h.matrix[m]);
    EXPECT_EQ(b.lambda.matrix[m], 2.0 * a.lambda.matrix[m]);
  }
}

// Theta and Lambda are derivatives of the discrete Psi: forward and mixed
// differences converge at first order.
TEST(Ode, DerivativesMatchFiniteDifferences) {
  const Case c = MakeCase(6, 40);
  const VectorXd x = VectorXd::LinSpaced(3, -1.0, 1.0);
  const int nodes = c.spec.nodes();
  auto value = [&](const PolicyProfile& K) {
    return EvalQuadratic(SolvePsi(c.spec, K, 1), 0.0, x);
  };
  const auto b = SolveSensitivities(c.spec, c.K, 1, c.dh, c.dl);
  const double th = EvalQuadratic(b.theta_h, 0.0, x);
  const double la = EvalQuadratic(b.lambda, 0.0, x);
  const double v0 = value(c.K);
  double prev1 = 0.0, prev2 = 0.0;
  for (double eps = 1e-2; eps > 1.1e-3; eps /= 2.0) {
    const PolicyProfile Kh = Deviate(c.K, c.dh, eps, nodes);
    const PolicyProfile Kl = Deviate(c.K, c.dl, eps, nodes);
    const PolicyProfile Khl = Deviate(Kh, c.dl, eps, nodes);
    const double e1 = std::abs((value(Kh) - v0) / eps - th);
    const double e2 =
        std::abs((value(Khl) - value(Kh) - value(Kl) + v0) / (eps * eps) - la);
    if (prev1 > 0.0) {
      EXPECT_NEAR(prev1 / e1, 2.0, 0.6);
      EXPECT_NEAR(prev2 / e2, 2.0, 0.6);
    }
    prev1 = e1;
    prev2 = e2;
  }
}

TEST(Ode, SecondMomentMatchesOracle) {
  const Case c = MakeCase(7);
  const MatrixXd M0 = testing::RandomSpd(3, 9, 0.5, 1.5);
  const SecondMoment sm = SolveSecondMoment(c.spec, c.K, 0, M0);
  const auto ref = testing::OracleSecondMoment(c.spec, c.K, M0);
  for (int m = 0; m < c.spec.nodes(); ++m) {
    EXPECT_LT(MaxAbs(sm.moment[m] - ref[m]), 1e-8 * (1.0 + MaxAbs(ref[m])));
  }
}

TEST(Ode, SecondMomentFrozenWithoutDriftOrNoise) {
  LqGameSpec s = RandomSpec(8);
  s.A = TimeSeries::Zero(2, 2);
  s.sigma = MatrixXd::Zero(2, 2);
  const VectorXd x0 = VectorXd::LinSpaced(2, 1.0, 2.0);
  const SecondMoment sm =
      SolveSecondMoment(s, PolicyProfile::Zero(s), 0.0, x0);
  for (const auto& m : sm.moment) EXPECT_EQ(m, x0 * x0.transpose());
}

TEST(Ode, SecondMomentFromLaterNode) {
  const Case c = MakeCase(9);
  const SecondMoment sm =
      SolveSecondMoment(c.spec, c.K, 0.5, VectorXd::Ones(3));
  EXPECT_EQ(sm.start_node, 50);
  EXPECT_EQ(sm.moment[50], MatrixXd::Ones(3, 3));
  EXPECT_THROW(SolveSecondMoment(c.spec, c.K, 0.505, VectorXd::Ones(3)),
               RangeError);
}

TEST(Ode, EvalOutsideGridThrows) {
  const Case c = MakeCase(10);
  const QuadraticPath psi = SolvePsi(c.spec, c.K, 0);
  EXPECT_THROW(EvalQuadratic(psi, 1.5, VectorXd::Ones(3)), RangeError);
  EXPECT_THROW(EvalQuadratic(psi, 0.0, VectorXd::Ones(2)), DimensionError);
}

TEST(Ode, DivergenceNamesNode) {
  LqGameSpec s = RandomSpec(11);
  s.grid = TimeGrid(0.0, 50.0, 40);
  s.A = TimeSeries(MatrixXd(1000.0 * MatrixXd::Identity(2, 2)));
  s.B = TimeSeries::Zero(2, 2);
  s.costs[0].Q = TimeSeries(MatrixXd::Identity(2, 2));
  s.costs[0].R = TimeSeries(MatrixXd::Identity(2, 2));
  try {
    SolvePsi(s, PolicyProfile::Zero(s), 0);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("node"), std::string::npos);
  }
}

TEST(Ode, TrajectoryCsvHeader) {
  const Case c = MakeCase(12, 4);
  std::ostringstream os;
  WriteTrajectoryCsv(os, SolvePsi(c.spec, c.K, 0));
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "t,X11,X12,X13,X21,X22,X23,X31,X32,X33,c");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}

}  // namespace
}  // namespace potentia
