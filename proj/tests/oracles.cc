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

#include "oracles.h"

#include <random>

#include <boost/numeric/odeint.hpp>

namespace potentia::testing {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using State = std::vector<double>;
namespace odeint = boost::numeric::odeint;

// Node samples of a series (constant series repeat their one sample).
MatrixXd Sample(const TimeSeries& s, int m) {
  return s.samples()[s.samples().size() == 1 ? 0 : m];
}

MatrixXd Lerp(const TimeSeries& s, const TimeGrid& g, double t) {
  int m = static_cast<int>((t - g.start()) / g.dt());
  m = std::clamp(m, 0, g.steps() - 1);
  const double w = (t - (g.start() + m * g.dt())) / g.dt();
  return (1.0 - w) * Sample(s, m) + w * Sample(s, m + 1);
}

MatrixXd JointGain(const PolicyProfile& K, const TimeGrid& g, double t) {
  int rows = 0;
  for (const auto& s : K.gains()) rows += static_cast<int>(Sample(s, 0).rows());
  MatrixXd out(rows, Sample(K.gain(0), 0).cols());
  int r = 0;
  for (const auto& s : K.gains()) {
    const MatrixXd k = Lerp(s, g, t);
    out.middleRows(r, k.rows()) = k;
    r += static_cast<int>(k.rows());
  }
  return out;
}

int Offset(const LqGameSpec& spec, int h) {
  int o = 0;
  for (int j = 0; j < h; ++j) o += spec.control_dims[j];
  return o;
}

void Put(State& s, int at, const MatrixXd& m) {
  for (int k = 0; k < m.size(); ++k) s[at + k] = m.data()[k];
}

MatrixXd Get(const State& s, int at, int n) {
  MatrixXd m(n, n);
  for (int k = 0; k < n * n; ++k) m.data()[k] = s[at + k];
  return m;
}

MatrixXd Sym(const MatrixXd& m) { return m + m.transpose(); }

template <typename Rhs>
void Backward(Rhs rhs, State& x, double from, double to, double tol) {
  odeint::integrate_adaptive(
      odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>()),
      rhs, x, from, to, (to - from) / 8.0);
}

std::mt19937_64 Rng(std::uint64_t seed) { return std::mt19937_64(seed); }

MatrixXd Gaussian(std::mt19937_64& rng, int r, int c, double scale) {
  std::normal_distribution<double> n;
  MatrixXd m(r, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) m(i, j) = scale * n(rng);
  }
  return m;
}

// Samples of A0 + t A1 at the grid nodes.
TimeSeries Affine(const MatrixXd& a0, const MatrixXd& a1, const TimeGrid& g) {
  std::vector<MatrixXd> s;
  for (int m = 0; m <= g.steps(); ++m) s.push_back(a0 + g.node(m) * a1);
  return TimeSeries(std::move(s));
}

}  // namespace

double Form(const MatrixXd& X, double c, const VectorXd& x) {
  return 0.5 * x.dot(X * x) + c;
}

OracleForms OracleSensitivities(const LqGameSpec& spec, const PolicyProfile& K,
                                int i, const PolicyDirection& dir_h,
                                const PolicyDirection& dir_l, double tol) {
  const TimeGrid& g = spec.grid;
  const int n = spec.state_dim();
  const int nn = n * n;
  const int h = dir_h.agent, l = dir_l.agent;
  const int oh = Offset(spec, h), ol = Offset(spec, l);
  const int kh = spec.control_dims[h], kl = spec.control_dims[l];
  const MatrixXd ss = spec.sigma * spec.sigma.transpose();
  // Layout: Psi, c, Theta^h, c, Theta^l, c, Lambda, c.
  auto at = [nn](int block) { return block * (nn + 1); };
  auto rhs = [&](const State& x, State& dx, double t) {
    const MatrixXd A = Lerp(spec.A, g, t), B = Lerp(spec.B, g, t);
    const MatrixXd Q = Lerp(spec.costs[i].Q, g, t);
    const MatrixXd R = Lerp(spec.costs[i].R, g, t);
    const MatrixXd Kj = JointGain(K, g, t);
    const MatrixXd Kh = Lerp(dir_h.gain, g, t), Kl = Lerp(dir_l.gain, g, t);
    const MatrixXd Bh = B.middleCols(oh, kh), Bl = B.middleCols(ol, kl);
    const MatrixXd Acl = A + B * Kj;
    const MatrixXd P = Get(x, at(0), n), Th = Get(x, at(1), n),
                   Tl = Get(x, at(2), n), L = Get(x, at(3), n);
    auto lyap = [&](const MatrixXd& X) {
      return MatrixXd(Acl.transpose() * X + X * Acl);
    };
    const MatrixXd dP = -(lyap(P) + Q + Kj.transpose() * R * Kj);
    const MatrixXd dTh =
        -(lyap(Th) + Sym(P * Bh * Kh) +
          Sym(Kj.transpose() * R.middleCols(oh, kh) * Kh));
    const MatrixXd dTl =
        -(lyap(Tl) + Sym(P * Bl * Kl) +
          Sym(Kj.transpose() * R.middleCols(ol, kl) * Kl));
    const MatrixXd dL =
        -(lyap(L) + Sym(Th * Bl * Kl) + Sym(Tl * Bh * Kh) +
          Sym(Kl.transpose() * R.block(ol, oh, kl, kh) * Kh));
    dx.assign(x.size(), 0.0);
    const MatrixXd* d[4] = {&dP, &dTh, &dTl, &dL};
    const MatrixXd* X[4] = {&P, &Th, &Tl, &L};
    for (int b = 0; b < 4; ++b) {
      Put(dx, at(b), *d[b]);
      dx[at(b) + nn] = -0.5 * (ss * *X[b]).trace();
    }
  };
  State x(4 * (nn + 1), 0.0);
  Put(x, at(0), spec.costs[i].G);
  OracleForms out;
  const int M = g.steps();
  auto record = [&](const State& s) {
    out.psi.push_back(Get(s, at(0), n));
    out.psi_c.push_back(s[at(0) + nn]);
    out.theta_h.push_back(Get(s, at(1), n));
    out.theta_h_c.push_back(s[at(1) + nn]);
    out.theta_l.push_back(Get(s, at(2), n));
    out.theta_l_c.push_back(s[at(2) + nn]);
    out.lambda.push_back(Get(s, at(3), n));
    out.lambda_c.push_back(s[at(3) + nn]);
  };
  std::vector<State> nodes(M + 1);
  nodes[M] = x;
  for (int m = M - 1; m >= 0; --m) {
    Backward(rhs, x, g.node(m + 1), g.node(m), tol);
    nodes[m] = x;
  }
  for (const auto& s : nodes) record(s);
  return out;
}

std::vector<MatrixXd> OracleLqrGain(const MatrixXd& A, const MatrixXd& B,
                                    const MatrixXd& Q, const MatrixXd& R,
                                    const MatrixXd& G, const TimeGrid& grid) {
  const int n = static_cast<int>(A.rows());
  const MatrixXd Rinv = R.inverse();
  auto rhs = [&](const State& x, State& dx, double) {
    const MatrixXd P = Get(x, 0, n);
    dx.assign(x.size(), 0.0);
    Put(dx, 0,
        MatrixXd(-(A.transpose() * P + P * A -
                   P * B * Rinv * B.transpose() * P + Q)));
  };
  State x(n * n);
  Put(x, 0, G);
  std::vector<MatrixXd> gain(grid.steps() + 1);
  gain[grid.steps()] = -Rinv * B.transpose() * G;
  for (int m = grid.steps() - 1; m >= 0; --m) {
    Backward(rhs, x, grid.node(m + 1), grid.node(m), 1e-13);
    gain[m] = -Rinv * B.transpose() * Get(x, 0, n);
  }
  return gain;
}

std::vector<MatrixXd> OracleSecondMoment(const LqGameSpec& spec,
                                         const PolicyProfile& K,
                                         const MatrixXd& M0) {
  const TimeGrid& g = spec.grid;
  const int n = spec.state_dim();
  const MatrixXd ss = spec.sigma * spec.sigma.transpose();
  auto rhs = [&](const State& x, State& dx, double t) {
    const MatrixXd Acl =
        Lerp(spec.A, g, t) + Lerp(spec.B, g, t) * JointGain(K, g, t);
    const MatrixXd Mt = Get(x, 0, n);
    dx.assign(x.size(), 0.0);
    Put(dx, 0, MatrixXd(Acl * Mt + Mt * Acl.transpose() + ss));
  };
  State x(n * n);
  Put(x, 0, M0);
  std::vector<MatrixXd> out{M0};
  for (int m = 0; m < g.steps(); ++m) {
    Backward(rhs, x, g.node(m), g.node(m + 1), 1e-12);
    out.push_back(Get(x, 0, n));
  }
  return out;
}

PolarisedCosts PolariseDistributedCost(const DistributedQuadraticSpec& d,
                                       int i, int node) {
  const int N = d.agents, n = d.state_dim, k = d.control_dim;
  // One block per agent; `w` is the mean-field weight, `own`/`bar` the
  // matrices of the individual and the coupling term.
  auto cost = [&](const VectorXd& v, int blk, const MatrixXd& own,
                  const MatrixXd& bar, double w) {
    VectorXd avg = VectorXd::Zero(blk);
    for (int j = 0; j < N; ++j) {
      if (j != i) avg += v.segment(j * blk, blk);
    }
    avg /= static_cast<double>(N - 1);
    const VectorXd vi = v.segment(i * blk, blk);
    const VectorXd dev = vi - w * avg;
    return vi.dot(own * vi) + dev.dot(bar * dev);
  };
  auto polarise = [&](int blk, const MatrixXd& own, const MatrixXd& bar,
                      double w) {
    const int dim = N * blk;
    MatrixXd out(dim, dim);
    for (int p = 0; p < dim; ++p) {
      for (int q = 0; q < dim; ++q) {
        VectorXd ep = VectorXd::Unit(dim, p), eq = VectorXd::Unit(dim, q);
        out(p, q) = 0.5 * (cost(ep + eq, blk, own, bar, w) -
                           cost(ep, blk, own, bar, w) -
                           cost(eq, blk, own, bar, w));
      }
    }
    return out;
  };
  PolarisedCosts pc;
  pc.Q = polarise(n, Sample(d.own[i].Q, node), Sample(d.Qbar, node),
                  Sample(d.gamma, node)(0, 0));
  pc.R = polarise(k, Sample(d.own[i].R, node), Sample(d.Rbar, node),
                  Sample(d.kappa, node)(0, 0));
  pc.G = polarise(n, d.own[i].G, d.Gbar, d.eta);
  return pc;
}

MatrixXd RandomSpd(int n, std::uint64_t seed, double lo, double hi) {
  auto rng = Rng(seed);
  const MatrixXd X = Gaussian(rng, n, n, 1.0);
  Eigen::HouseholderQR<MatrixXd> qr(X);
  const MatrixXd U = qr.householderQ();
  std::uniform_real_distribution<double> u(lo, hi);
  VectorXd ev(n);
  for (int k = 0; k < n; ++k) ev(k) = u(rng);
  const MatrixXd S = U * ev.asDiagonal() * U.transpose();
  return 0.5 * (S + S.transpose());
}

LqGameSpec RandomSpec(std::uint64_t seed, const RandomSpecOptions& o) {
  auto rng = Rng(seed);
  LqGameSpec s;
  s.grid = TimeGrid(0.0, o.horizon, o.steps);
  s.control_dims = o.control_dims;
  const int n = o.state_dim;
  int na = 0;
  for (int k : o.control_dims) na += k;
  const double tv = o.time_varying ? 1.0 : 0.0;
  const MatrixXd A0 = Gaussian(rng, n, n, o.a_scale);
  const MatrixXd A1 = Gaussian(rng, n, n, 0.5 * o.a_scale * tv);
  const MatrixXd B0 = Gaussian(rng, n, na, o.b_scale);
  const MatrixXd B1 = Gaussian(rng, n, na, 0.3 * o.b_scale * tv);
  s.A = o.time_varying ? Affine(A0, A1, s.grid) : TimeSeries(A0);
  s.B = o.time_varying ? Affine(B0, B1, s.grid) : TimeSeries(B0);
  if (o.full_noise) {
    s.sigma = o.sigma_scale *
              (MatrixXd::Identity(n, n) + Gaussian(rng, n, n, 0.3));
  } else {
    s.sigma = Gaussian(rng, n, 1, o.sigma_scale);
  }
  const int N = static_cast<int>(o.control_dims.size());
  for (int i = 0; i < N; ++i) {
    AgentCost c;
    const std::uint64_t base = seed * 131 + 17 * i;
    const MatrixXd Q0 = RandomSpd(n, base + 1, 0.2, 1.5);
    const MatrixXd Q1 = tv * RandomSpd(n, base + 2, 0.0, 0.5);
    const MatrixXd R0 = RandomSpd(na, base + 3, 0.5, 2.0);
    const MatrixXd R1 = tv * RandomSpd(na, base + 4, 0.0, 0.3);
    c.Q = o.time_varying ? Affine(Q0, Q1, s.grid) : TimeSeries(Q0);
    c.R = o.time_varying ? Affine(R0, R1, s.grid) : TimeSeries(R0);
    c.G = RandomSpd(n, base + 5, 0.2, 1.0);
    s.costs.push_back(std::move(c));
  }
  return s;
}

PolicyProfile RandomGains(const LqGameSpec& spec, std::uint64_t seed,
                          double scale, bool time_varying) {
  auto rng = Rng(seed);
  std::vector<TimeSeries> g;
  for (int i = 0; i < spec.agents(); ++i) {
    const MatrixXd mask = spec.GainMask(i);
    const MatrixXd k0 =
        Gaussian(rng, mask.rows(), mask.cols(), scale).cwiseProduct(mask);
    const MatrixXd k1 =
        Gaussian(rng, mask.rows(), mask.cols(), scale).cwiseProduct(mask);
    g.push_back(time_varying ? Affine(k0, k1, spec.grid) : TimeSeries(k0));
  }
  return PolicyProfile(std::move(g));
}

PolicyDirection RandomDirection(const LqGameSpec& spec, int agent,
                                std::uint64_t seed, double scale) {
  auto rng = Rng(seed);
  const MatrixXd mask = spec.GainMask(agent);
  const MatrixXd d0 =
      Gaussian(rng, mask.rows(), mask.cols(), scale).cwiseProduct(mask);
  const MatrixXd d1 =
      Gaussian(rng, mask.rows(), mask.cols(), scale).cwiseProduct(mask);
  return {agent, Affine(d0, d1, spec.grid)};
}

DistributedQuadraticSpec RandomDistributed(std::uint64_t seed, int agents,
                                           int n, int k, int steps,
                                           std::vector<AgentDynamics>* dyn) {
  auto rng = Rng(seed);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  DistributedQuadraticSpec d;
  d.grid = TimeGrid(0.0, 1.0, steps);
  d.agents = agents;
  d.state_dim = n;
  d.control_dim = k;
  d.Qbar = Affine(RandomSpd(n, seed + 1, 0.3, 1.0),
                  RandomSpd(n, seed + 2, 0.0, 0.2), d.grid);
  d.Rbar = TimeSeries(RandomSpd(k, seed + 3, 0.3, 1.0));
  d.Gbar = RandomSpd(n, seed + 4, 0.3, 1.0);
  const double g0 = u(rng), g1 = u(rng) - 0.5;
  d.gamma = Affine(MatrixXd::Constant(1, 1, g0), MatrixXd::Constant(1, 1, g1),
                   d.grid);
  d.kappa = TimeSeries::Scalar(u(rng));
  d.eta = u(rng);
  dyn->clear();
  for (int i = 0; i < agents; ++i) {
    AgentCost c;
    c.Q = TimeSeries(RandomSpd(n, seed + 10 + 7 * i, 0.2, 1.0));
    c.R = TimeSeries(RandomSpd(k, seed + 11 + 7 * i, 0.5, 1.5));
    c.G = RandomSpd(n, seed + 12 + 7 * i, 0.2, 1.0);
    d.own.push_back(std::move(c));
    AgentDynamics a;
    a.A = TimeSeries(Gaussian(rng, n, n, 0.4));
    a.B = TimeSeries(Gaussian(rng, n, k, 1.0));
    a.sigma = 0.4 * MatrixXd::Identity(n, n);
    dyn->push_back(std::move(a));
  }
  return d;
}

std::string TestData(const std::string& name) {
  return std::string(POTENTIA_TESTDATA) + "/" + name;
}

}  // namespace potentia::testing
