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

#include "potentia/monte_carlo.h"

#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "potentia/errors.h"
#include "potentia/parallel.h"
#include "potentia/quadrature.h"
#include "potentia/seeds.h"

namespace potentia {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Brownian increments of path p. Antithetic pairs share the stream of p / 2.
void FillIncrements(const McConfig& cfg, int path, double sqrt_dt,
                    MatrixXd& dW) {
  const int stream = cfg.antithetic ? path / 2 : path;
  const double sign = (cfg.antithetic && path % 2 == 1) ? -1.0 : 1.0;
  std::mt19937_64 rng(PathSeed(cfg.seed, stream));
  std::normal_distribution<double> normal;
  for (int j = 0; j < dW.cols(); ++j) {
    for (int k = 0; k < dW.rows(); ++k) dW(k, j) = sign * sqrt_dt * normal(rng);
  }
}

void Shape(PathBundle& b, int nx, int na, int nw, int nodes, int dirs,
           int pairs) {
  b.X.resize(nx, nodes);
  b.alpha.resize(na, nodes);
  b.Y.assign(dirs, MatrixXd(nx, nodes));
  b.dalpha.assign(dirs, MatrixXd(na, nodes));
  b.Z.assign(pairs, MatrixXd(nx, nodes));
  b.d2alpha.assign(pairs, MatrixXd(na, nodes));
  b.dW.resize(nw, nodes - 1);
}

bool Finite(const PathBundle& b) {
  if (!b.X.allFinite() || !b.alpha.allFinite()) return false;
  for (const auto& m : b.Y) if (!m.allFinite()) return false;
  for (const auto& m : b.dalpha) if (!m.allFinite()) return false;
  for (const auto& m : b.Z) if (!m.allFinite()) return false;
  for (const auto& m : b.d2alpha) if (!m.allFinite()) return false;
  return true;
}

void CheckConfig(const McConfig& cfg) {
  if (cfg.n_paths < 2) throw RangeError("monte carlo: need n_paths >= 2");
  if (cfg.antithetic && cfg.n_paths % 2 != 0) {
    throw RangeError("monte carlo: antithetic sampling needs an even n_paths");
  }
}

void CheckPairs(const std::vector<DirectionPair>& pairs, int dirs) {
  for (const auto& p : pairs) {
    if (p.first < 0 || p.first >= dirs || p.second < 0 || p.second >= dirs) {
      throw DimensionError("monte carlo: direction pair index out of range");
    }
  }
}

int StartNode(const TimeGrid& grid, double t0) {
  auto node = grid.NodeIndex(t0);
  if (!node || *node >= grid.steps()) {
    throw RangeError("monte carlo: t0 must be a grid node before T");
  }
  return *node;
}

// Trapezoid weights over nodes start..M.
std::vector<double> TrapezoidWeights(int nodes, double dt) {
  std::vector<double> w(nodes, dt);
  w.front() = 0.5 * dt;
  w.back() = 0.5 * dt;
  return w;
}

// Symmetrised bilinear form (u'Hv + v'Hu) / 2, exactly invariant under
// swapping u and v.
double SymForm(const VectorXd& u, const MatrixXd& H, const VectorXd& v) {
  return 0.5 * (u.dot(H * v) + v.dot(H * u));
}

// ---------------------------------------------------------------------------
// LQ fast path.

struct LqTables {
  int start = 0;
  int nodes = 0;
  double dt = 0.0;
  std::vector<MatrixXd> acl, K;            // by node
  std::vector<std::vector<MatrixXd>> bk;   // [direction][node], B_h K'_h
  std::vector<std::vector<MatrixXd>> ek;   // [direction][node], E_h K'_h
};

LqTables MakeTables(const LqGameSpec& spec, const PolicyProfile& K,
                    const std::vector<PolicyDirection>& directions,
                    int start) {
  LqTables t;
  t.start = start;
  t.nodes = spec.grid.steps() + 1 - start;
  t.dt = spec.grid.dt();
  const int na = spec.control_dim();
  const int nx = spec.state_dim();
  for (int j = 0; j < t.nodes; ++j) {
    const int m = start + j;
    t.K.push_back(K.Joint(m));
    t.acl.push_back(spec.A.at(m) + spec.B.at(m) * t.K.back());
  }
  for (const auto& d : directions) {
    if (d.agent < 0 || d.agent >= spec.agents() ||
        d.gain.rows() != spec.control_dims[d.agent] || d.gain.cols() != nx ||
        (d.gain.size() != 1 && d.gain.size() != spec.nodes())) {
      throw DimensionError("monte carlo: direction has the wrong shape");
    }
    const int off = spec.control_offset(d.agent);
    const int kh = spec.control_dims[d.agent];
    std::vector<MatrixXd> bk, ek;
    for (int j = 0; j < t.nodes; ++j) {
      const int m = start + j;
      MatrixXd e = MatrixXd::Zero(na, nx);
      e.middleRows(off, kh) = d.gain.at(m);
      ek.push_back(e);
      bk.push_back(spec.B.at(m).middleCols(off, kh) * d.gain.at(m));
    }
    t.bk.push_back(std::move(bk));
    t.ek.push_back(std::move(ek));
  }
  return t;
}

void SimulateLqPath(const LqTables& t, const MatrixXd& sigma,
                    const VectorXd& x0, const std::vector<DirectionPair>& pairs,
                    PathBundle& b) {
  const int nd = static_cast<int>(b.Y.size());
  const int np = static_cast<int>(pairs.size());
  b.X.col(0) = x0;
  for (int d = 0; d < nd; ++d) b.Y[d].col(0).setZero();
  for (int p = 0; p < np; ++p) b.Z[p].col(0).setZero();
  for (int j = 0; j + 1 < t.nodes; ++j) {
    const MatrixXd& a = t.acl[j];
    b.X.col(j + 1) = b.X.col(j) + t.dt * (a * b.X.col(j)) + sigma * b.dW.col(j);
    for (int d = 0; d < nd; ++d) {
      b.Y[d].col(j + 1) =
          b.Y[d].col(j) +
          t.dt * (a * b.Y[d].col(j) + t.bk[d][j] * b.X.col(j));
    }
    for (int p = 0; p < np; ++p) {
      const int h = pairs[p].first, l = pairs[p].second;
      const VectorXd cross =
          t.bk[l][j] * b.Y[h].col(j) + t.bk[h][j] * b.Y[l].col(j);
      b.Z[p].col(j + 1) =
          b.Z[p].col(j) + t.dt * (a * b.Z[p].col(j) + cross);
    }
  }
  for (int j = 0; j < t.nodes; ++j) {
    b.alpha.col(j) = t.K[j] * b.X.col(j);
    for (int d = 0; d < nd; ++d) {
      b.dalpha[d].col(j) = t.K[j] * b.Y[d].col(j) + t.ek[d][j] * b.X.col(j);
    }
    for (int p = 0; p < np; ++p) {
      const int h = pairs[p].first, l = pairs[p].second;
      const VectorXd cross =
          t.ek[l][j] * b.Y[h].col(j) + t.ek[h][j] * b.Y[l].col(j);
      b.d2alpha[p].col(j) = t.K[j] * b.Z[p].col(j) + cross;
    }
  }
}

struct LqCosts {
  std::vector<std::vector<MatrixXd>> Q, R;  // [agent][node]
  std::vector<MatrixXd> G;
};

LqCosts MakeCosts(const LqGameSpec& spec, int start) {
  LqCosts c;
  for (const auto& cost : spec.costs) {
    std::vector<MatrixXd> q, r;
    for (int m = start; m <= spec.grid.steps(); ++m) {
      q.push_back(cost.Q.at(m));
      r.push_back(cost.R.at(m));
    }
    c.Q.push_back(std::move(q));
    c.R.push_back(std::move(r));
    c.G.push_back(cost.G);
  }
  return c;
}

double LqSample(const LqCosts& c, const std::vector<double>& w,
                const std::vector<DirectionPair>& pairs,
                const EstimateRequest& req, const PathBundle& b) {
  const int i = req.agent;
  const int last = static_cast<int>(w.size()) - 1;
  double s = 0.0;
  switch (req.kind) {
    case EstimateRequest::Kind::kValue:
      for (int j = 0; j <= last; ++j) {
        s += w[j] * 0.5 *
             (b.X.col(j).dot(c.Q[i][j] * b.X.col(j)) +
              b.alpha.col(j).dot(c.R[i][j] * b.alpha.col(j)));
      }
      s += 0.5 * b.X.col(last).dot(c.G[i] * b.X.col(last));
      break;
    case EstimateRequest::Kind::kFirst: {
      const int d = req.direction;
      for (int j = 0; j <= last; ++j) {
        s += w[j] * (b.X.col(j).dot(c.Q[i][j] * b.Y[d].col(j)) +
                     b.alpha.col(j).dot(c.R[i][j] * b.dalpha[d].col(j)));
      }
      s += b.X.col(last).dot(c.G[i] * b.Y[d].col(last));
      break;
    }
    case EstimateRequest::Kind::kSecond: {
      const int p = req.pair;
      const int h = pairs[p].first, l = pairs[p].second;
      for (int j = 0; j <= last; ++j) {
        const double hess =
            SymForm(b.Y[h].col(j), c.Q[i][j], b.Y[l].col(j)) +
            SymForm(b.dalpha[h].col(j), c.R[i][j], b.dalpha[l].col(j));
        const double grad =
            b.X.col(j).dot(c.Q[i][j] * b.Z[p].col(j)) +
            b.alpha.col(j).dot(c.R[i][j] * b.d2alpha[p].col(j));
        s += w[j] * (hess + grad);
      }
      s += SymForm(b.Y[h].col(last), c.G[i], b.Y[l].col(last)) +
           b.X.col(last).dot(c.G[i] * b.Z[p].col(last));
      break;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// General path.

struct GeneralModel {
  const GeneralCoefficients* c;
  const std::vector<FeedbackPolicy>* phi;
  const std::vector<GeneralDirection>* dirs;
  const std::vector<DirectionPair>* pairs;
  const TimeGrid* grid;
  int start;
  int nodes;
};

// sym u'H_c v per component.
VectorXd SymComponents(const std::vector<MatrixXd>& H, const VectorXd& u,
                       const VectorXd& v) {
  VectorXd out(H.size());
  for (size_t k = 0; k < H.size(); ++k) out(k) = SymForm(u, H[k], v);
  return out;
}

void SimulateGeneralPath(const GeneralModel& g, const VectorXd& x0,
                         PathBundle& b) {
  const auto& c = *g.c;
  const int nx = c.state_dim;
  const int na = c.control_dim();
  const int nd = static_cast<int>(g.dirs->size());
  const int np = static_cast<int>(g.pairs->size());
  const double dt = g.grid->dt();
  b.X.col(0) = x0;
  for (int d = 0; d < nd; ++d) b.Y[d].col(0).setZero();
  for (int p = 0; p < np; ++p) b.Z[p].col(0).setZero();
  MatrixXd phi_x(na, nx);
  std::vector<MatrixXd> phi_xx(na);
  std::vector<VectorXd> u(nd);
  std::vector<MatrixXd> dir_x(nd);
  for (int j = 0; j < g.nodes; ++j) {
    const double t = g.grid->node(g.start + j);
    const VectorXd x = b.X.col(j);
    // Policy and its derivatives at (t, x).
    for (int i = 0, off = 0; i < c.agents(); off += c.control_dims[i], ++i) {
      const auto& p = (*g.phi)[i];
      b.alpha.col(j).segment(off, c.control_dims[i]) = p.value(t, x);
      phi_x.middleRows(off, c.control_dims[i]) = p.jacobian(t, x);
      const auto hs = p.hessians(t, x);
      for (int k = 0; k < c.control_dims[i]; ++k) phi_xx[off + k] = hs[k];
    }
    for (int d = 0; d < nd; ++d) {
      const auto& dir = (*g.dirs)[d];
      const int off = c.control_offset(dir.agent);
      VectorXd da = phi_x * b.Y[d].col(j);
      da.segment(off, dir.policy.dim) += dir.policy.value(t, x);
      b.dalpha[d].col(j) = da;
      dir_x[d] = dir.policy.jacobian(t, x);
      u[d].resize(nx + na);
      u[d] << b.Y[d].col(j), da;
    }
    std::vector<VectorXd> w(np);  // (Z, d2a) per pair
    for (int p = 0; p < np; ++p) {
      const int h = (*g.pairs)[p].first, l = (*g.pairs)[p].second;
      const auto& dh = (*g.dirs)[h];
      const auto& dl = (*g.dirs)[l];
      VectorXd cross_l = VectorXd::Zero(na), cross_h = VectorXd::Zero(na);
      cross_l.segment(c.control_offset(dl.agent), dl.policy.dim) =
          dir_x[l] * b.Y[h].col(j);
      cross_h.segment(c.control_offset(dh.agent), dh.policy.dim) =
          dir_x[h] * b.Y[l].col(j);
      const VectorXd d2a =
          (phi_x * b.Z[p].col(j) +
           SymComponents(phi_xx, b.Y[h].col(j), b.Y[l].col(j))) +
          (cross_l + cross_h);
      b.d2alpha[p].col(j) = d2a;
      w[p].resize(nx + na);
      w[p] << b.Z[p].col(j), d2a;
    }
    if (j + 1 == g.nodes) break;

    const VectorXd a = b.alpha.col(j);
    auto advance = [&](const VectorField& f, double scale,
                       bool first_field) {
      const MatrixXd J = f.jacobian(t, x, a);
      const auto H = f.hessians(t, x, a);
      if (first_field) {
        b.X.col(j + 1) = x;
        for (int d = 0; d < nd; ++d) b.Y[d].col(j + 1) = b.Y[d].col(j);
        for (int p = 0; p < np; ++p) b.Z[p].col(j + 1) = b.Z[p].col(j);
      }
      b.X.col(j + 1) += scale * f.value(t, x, a);
      for (int d = 0; d < nd; ++d) b.Y[d].col(j + 1) += scale * (J * u[d]);
      for (int p = 0; p < np; ++p) {
        const int h = (*g.pairs)[p].first, l = (*g.pairs)[p].second;
        b.Z[p].col(j + 1) += scale * (J * w[p] + SymComponents(H, u[h], u[l]));
      }
    };
    advance(c.drift, dt, true);
    for (int k = 0; k < c.noise_dim(); ++k) {
      advance(c.diffusion[k], b.dW(k, j), false);
    }
  }
}

double GeneralSample(const GeneralModel& g, const std::vector<double>& wts,
                     const EstimateRequest& req, const PathBundle& b) {
  const auto& c = *g.c;
  const int nx = c.state_dim;
  const int na = c.control_dim();
  const auto& f = c.running[req.agent];
  const auto& gt = c.terminal[req.agent];
  const int last = g.nodes - 1;
  const VectorXd xT = b.X.col(last);
  double s = 0.0;
  auto stack = [&](const MatrixXd& top, const MatrixXd& bottom, int j) {
    VectorXd v(nx + na);
    v << top.col(j), bottom.col(j);
    return v;
  };
  for (int j = 0; j <= last; ++j) {
    const double t = g.grid->node(g.start + j);
    const VectorXd x = b.X.col(j), a = b.alpha.col(j);
    switch (req.kind) {
      case EstimateRequest::Kind::kValue:
        s += wts[j] * f.value(t, x, a);
        break;
      case EstimateRequest::Kind::kFirst:
        s += wts[j] * f.gradient(t, x, a).dot(
                          stack(b.Y[req.direction], b.dalpha[req.direction], j));
        break;
      case EstimateRequest::Kind::kSecond: {
        const int h = (*g.pairs)[req.pair].first;
        const int l = (*g.pairs)[req.pair].second;
        s += wts[j] *
             (SymForm(stack(b.Y[h], b.dalpha[h], j), f.hessian(t, x, a),
                      stack(b.Y[l], b.dalpha[l], j)) +
              f.gradient(t, x, a).dot(
                  stack(b.Z[req.pair], b.d2alpha[req.pair], j)));
        break;
      }
    }
  }
  switch (req.kind) {
    case EstimateRequest::Kind::kValue:
      s += gt.value(xT);
      break;
    case EstimateRequest::Kind::kFirst:
      s += gt.gradient(xT).dot(b.Y[req.direction].col(last));
      break;
    case EstimateRequest::Kind::kSecond: {
      const int h = (*g.pairs)[req.pair].first;
      const int l = (*g.pairs)[req.pair].second;
      s += SymForm(b.Y[h].col(last), gt.hessian(xT), b.Y[l].col(last)) +
           gt.gradient(xT).dot(b.Z[req.pair].col(last));
      break;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Driver and reduction.

template <typename Sim, typename Sample>
std::vector<std::vector<double>> RunPaths(const McConfig& cfg, int nx, int na,
                                          int nw, int nodes, int dirs,
                                          int pairs, double dt, Sim&& sim,
                                          int n_requests, Sample&& sample,
                                          const PathVisitor* visit) {
  CheckConfig(cfg);
  const int threads = ResolveThreads(cfg.threads);
  const int workers = std::max(1, std::min(threads, cfg.n_paths));
  std::vector<PathBundle> bundles(workers);
  for (auto& b : bundles) Shape(b, nx, na, nw, nodes, dirs, pairs);
  std::vector<std::vector<double>> samples(
      n_requests, std::vector<double>(cfg.n_paths));
  const double sqrt_dt = std::sqrt(dt);
  ParallelFor(cfg.n_paths, workers, [&](int path, int worker) {
    PathBundle& b = bundles[worker];
    b.path = path;
    FillIncrements(cfg, path, sqrt_dt, b.dW);
    sim(b);
    b.flagged = !Finite(b);
    for (int r = 0; r < n_requests; ++r) {
      double v = b.flagged ? std::numeric_limits<double>::quiet_NaN()
                           : sample(r, b);
      if (!std::isfinite(v)) {
        b.flagged = true;
        v = std::numeric_limits<double>::quiet_NaN();
      }
      samples[r][path] = v;
    }
    if (b.flagged) {
      for (int r = 0; r < n_requests; ++r) {
        samples[r][path] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    if (visit) (*visit)(b);
  });
  return samples;
}

DerivativeEstimate Reduce(const std::vector<double>& samples,
                          const McConfig& cfg) {
  std::vector<double> used;
  used.reserve(samples.size());
  int flagged = 0;
  const int stride = cfg.antithetic ? 2 : 1;
  for (size_t p = 0; p < samples.size(); p += stride) {
    double v = samples[p];
    if (cfg.antithetic) v = 0.5 * (samples[p] + samples[p + 1]);
    if (std::isnan(v)) {
      flagged += stride;
      continue;
    }
    used.push_back(v);
  }
  if (flagged > 0.01 * static_cast<double>(samples.size())) {
    throw DivergenceError("monte carlo: " + std::to_string(flagged) + " of " +
                          std::to_string(samples.size()) +
                          " paths non-finite (more than 1%)");
  }
  DerivativeEstimate e;
  e.seed = cfg.seed;
  e.flagged = flagged;
  e.n_paths = static_cast<int>(used.size()) * stride;
  const int n = static_cast<int>(used.size());
  if (n == 0) throw DivergenceError("monte carlo: every path was flagged");
  e.value = PairwiseSum(used.data(), n) / n;
  if (n > 1) {
    std::vector<double> sq(n);
    for (int k = 0; k < n; ++k) sq[k] = (used[k] - e.value) * (used[k] - e.value);
    e.standard_error = std::sqrt(PairwiseSum(sq.data(), n) / (n - 1) / n);
  }
  return e;
}

void CheckRequests(const std::vector<EstimateRequest>& requests, int agents,
                   int dirs, int pairs) {
  for (const auto& r : requests) {
    if (r.agent < 0 || r.agent >= agents) {
      throw DimensionError("monte carlo: request agent out of range");
    }
    if (r.kind == EstimateRequest::Kind::kFirst &&
        (r.direction < 0 || r.direction >= dirs)) {
      throw DimensionError("monte carlo: request direction out of range");
    }
    if (r.kind == EstimateRequest::Kind::kSecond &&
        (r.pair < 0 || r.pair >= pairs)) {
      throw DimensionError("monte carlo: request pair out of range");
    }
  }
}

std::vector<std::vector<double>> LqRun(
    const LqGameSpec& spec, const PolicyProfile& K,
    const std::vector<PolicyDirection>& directions,
    const std::vector<DirectionPair>& pairs,
    const std::vector<EstimateRequest>& requests, double t0,
    const VectorXd& x0, const McConfig& cfg, const PathVisitor* visit) {
  K.CheckAgainst(spec);
  if (x0.size() != spec.state_dim()) {
    throw DimensionError("monte carlo: x0 has the wrong dimension");
  }
  const int nd = static_cast<int>(directions.size());
  const int np = static_cast<int>(pairs.size());
  CheckPairs(pairs, nd);
  CheckRequests(requests, spec.agents(), nd, np);
  const int start = StartNode(spec.grid, t0);
  const LqTables tables = MakeTables(spec, K, directions, start);
  const LqCosts costs = MakeCosts(spec, start);
  const auto w = TrapezoidWeights(tables.nodes, tables.dt);
  return RunPaths(
      cfg, spec.state_dim(), spec.control_dim(), spec.noise_dim(),
      tables.nodes, nd, np, tables.dt,
      [&](PathBundle& b) {
        b.start_node = start;
        SimulateLqPath(tables, spec.sigma, x0, pairs, b);
      },
      static_cast<int>(requests.size()),
      [&](int r, const PathBundle& b) {
        return LqSample(costs, w, pairs, requests[r], b);
      },
      visit);
}

std::vector<std::vector<double>> GeneralRun(
    const GeneralCoefficients& coeffs, const std::vector<FeedbackPolicy>& phi,
    const std::vector<GeneralDirection>& directions,
    const std::vector<DirectionPair>& pairs,
    const std::vector<EstimateRequest>& requests, const TimeGrid& grid,
    double t0, const VectorXd& x0, const McConfig& cfg,
    const PathVisitor* visit) {
  if (static_cast<int>(phi.size()) != coeffs.agents()) {
    throw DimensionError("monte carlo: one policy per agent required");
  }
  if (x0.size() != coeffs.state_dim) {
    throw DimensionError("monte carlo: x0 has the wrong dimension");
  }
  for (int i = 0; i < coeffs.agents(); ++i) {
    if (phi[i].dim != coeffs.control_dims[i]) {
      throw DimensionError("monte carlo: policy dimension mismatch");
    }
  }
  std::vector<FeedbackPolicy> all = phi;
  for (const auto& d : directions) {
    if (d.agent < 0 || d.agent >= coeffs.agents() ||
        d.policy.dim != coeffs.control_dims[d.agent]) {
      throw DimensionError("monte carlo: direction has the wrong shape");
    }
    all.push_back(d.policy);
  }
  RequireSelfTest(coeffs, all, grid, cfg.seed ^ 0x5e1f7e57ULL);
  const int nd = static_cast<int>(directions.size());
  const int np = static_cast<int>(pairs.size());
  CheckPairs(pairs, nd);
  CheckRequests(requests, coeffs.agents(), nd, np);
  const int start = StartNode(grid, t0);
  GeneralModel model{&coeffs, &phi,  &directions, &pairs,
                     &grid,   start, grid.steps() + 1 - start};
  const auto w = TrapezoidWeights(model.nodes, grid.dt());
  return RunPaths(
      cfg, coeffs.state_dim, coeffs.control_dim(), coeffs.noise_dim(),
      model.nodes, nd, np, grid.dt(),
      [&](PathBundle& b) {
        b.start_node = start;
        SimulateGeneralPath(model, x0, b);
      },
      static_cast<int>(requests.size()),
      [&](int r, const PathBundle& b) {
        return GeneralSample(model, w, requests[r], b);
      },
      visit);
}

std::vector<DerivativeEstimate> ReduceAll(
    const std::vector<std::vector<double>>& samples, const McConfig& cfg) {
  std::vector<DerivativeEstimate> out;
  for (const auto& s : samples) out.push_back(Reduce(s, cfg));
  return out;
}

}  // namespace

std::uint64_t PathSeed(std::uint64_t seed, int path) {
  return Mix64(seed + static_cast<std::uint64_t>(path));
}

void SimulatePaths(const LqGameSpec& spec, const PolicyProfile& K,
                   const std::vector<PolicyDirection>& directions,
                   const std::vector<DirectionPair>& pairs, double t0,
                   const VectorXd& x0, const McConfig& cfg,
                   const PathVisitor& visit) {
  LqRun(spec, K, directions, pairs, {}, t0, x0, cfg, &visit);
}

void SimulatePaths(const GeneralCoefficients& coeffs,
                   const std::vector<FeedbackPolicy>& phi,
                   const std::vector<GeneralDirection>& directions,
                   const std::vector<DirectionPair>& pairs,
                   const TimeGrid& grid, double t0, const VectorXd& x0,
                   const McConfig& cfg, const PathVisitor& visit) {
  GeneralRun(coeffs, phi, directions, pairs, {}, grid, t0, x0, cfg, &visit);
}

std::vector<DerivativeEstimate> Estimate(
    const LqGameSpec& spec, const PolicyProfile& K,
    const std::vector<PolicyDirection>& directions,
    const std::vector<DirectionPair>& pairs,
    const std::vector<EstimateRequest>& requests, double t0,
    const VectorXd& x0, const McConfig& cfg) {
  return ReduceAll(
      LqRun(spec, K, directions, pairs, requests, t0, x0, cfg, nullptr), cfg);
}

std::vector<DerivativeEstimate> Estimate(
    const GeneralCoefficients& coeffs, const std::vector<FeedbackPolicy>& phi,
    const std::vector<GeneralDirection>& directions,
    const std::vector<DirectionPair>& pairs,
    const std::vector<EstimateRequest>& requests, const TimeGrid& grid,
    double t0, const VectorXd& x0, const McConfig& cfg) {
  return ReduceAll(GeneralRun(coeffs, phi, directions, pairs, requests, grid,
                              t0, x0, cfg, nullptr),
                   cfg);
}

std::vector<std::vector<double>> PathSamples(
    const LqGameSpec& spec, const PolicyProfile& K,
    const std::vector<PolicyDirection>& directions,
    const std::vector<DirectionPair>& pairs,
    const std::vector<EstimateRequest>& requests, double t0,
    const VectorXd& x0, const McConfig& cfg) {
  return LqRun(spec, K, directions, pairs, requests, t0, x0, cfg, nullptr);
}

DerivativeEstimate EstimateValue(const LqGameSpec& spec,
                                 const PolicyProfile& K, int i, double t0,
                                 const VectorXd& x0, const McConfig& cfg) {
  EstimateRequest r;
  r.kind = EstimateRequest::Kind::kValue;
  r.agent = i;
  return Estimate(spec, K, {}, {}, {r}, t0, x0, cfg).front();
}

DerivativeEstimate EstimateFirstDerivative(const LqGameSpec& spec,
                                           const PolicyProfile& K, int i,
                                           const PolicyDirection& dir,
                                           double t0, const VectorXd& x0,
                                           const McConfig& cfg) {
  EstimateRequest r;
  r.kind = EstimateRequest::Kind::kFirst;
  r.agent = i;
  r.direction = 0;
  return Estimate(spec, K, {dir}, {}, {r}, t0, x0, cfg).front();
}

DerivativeEstimate EstimateSecondDerivative(const LqGameSpec& spec,
                                            const PolicyProfile& K, int i,
                                            const PolicyDirection& dir_h,
                                            const PolicyDirection& dir_l,
                                            double t0, const VectorXd& x0,
                                            const McConfig& cfg) {
  EstimateRequest r;
  r.kind = EstimateRequest::Kind::kSecond;
  r.agent = i;
  r.pair = 0;
  return Estimate(spec, K, {dir_h, dir_l}, {{0, 1}}, {r}, t0, x0, cfg)
      .front();
}

void WritePathsCsv(std::ostream& os, const LqGameSpec& spec,
                   const PolicyProfile& K,
                   const std::vector<PolicyDirection>& directions,
                   const std::vector<DirectionPair>& pairs, double t0,
                   const VectorXd& x0, const McConfig& cfg, int count) {
  McConfig c = cfg;
  c.n_paths = std::max(2, count + (cfg.antithetic && count % 2 ? 1 : 0));
  std::vector<std::string> rows(c.n_paths);
  const TimeGrid grid = spec.grid;
  SimulatePaths(spec, K, directions, pairs, t0, x0, c,
                [&](const PathBundle& b) {
                  if (b.path >= count) return;
                  std::ostringstream s;
                  s << std::setprecision(17);
                  for (int j = 0; j < b.X.cols(); ++j) {
                    s << b.path << "," << grid.node(b.start_node + j);
                    for (int k = 0; k < b.X.rows(); ++k) s << "," << b.X(k, j);
                    for (const auto& y : b.Y) {
                      for (int k = 0; k < y.rows(); ++k) s << "," << y(k, j);
                    }
                    for (const auto& z : b.Z) {
                      for (int k = 0; k < z.rows(); ++k) s << "," << z(k, j);
                    }
                    s << "\n";
                  }
                  rows[b.path] = s.str();
                });
  const int nx = spec.state_dim();
  os << "path,t";
  for (int k = 0; k < nx; ++k) os << ",X" << k + 1;
  for (size_t d = 0; d < directions.size(); ++d) {
    for (int k = 0; k < nx; ++k) os << ",Y" << d + 1 << "_" << k + 1;
  }
  for (size_t p = 0; p < pairs.size(); ++p) {
    for (int k = 0; k < nx; ++k) os << ",Z" << p + 1 << "_" << k + 1;
  }
  os << "\n";
  for (int p = 0; p < count && p < c.n_paths; ++p) os << rows[p];
}

}  // namespace potentia
