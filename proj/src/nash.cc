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

#include "potentia/nash.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "potentia/errors.h"
#include "potentia/ode.h"
#include "potentia/parallel.h"
#include "potentia/seeds.h"

namespace potentia {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr std::uint64_t kVerifyStage = 0x766572696679ULL;
constexpr std::uint64_t kSymmetryStage = 0x73796d6dULL;

std::vector<double> LumpedWeights(const TimeGrid& grid) {
  std::vector<double> w(grid.steps() + 1, grid.dt());
  w.front() = 0.5 * grid.dt();
  w.back() = 0.5 * grid.dt();
  return w;
}

GradientField ZeroField(const LqGameSpec& spec) {
  GradientField g;
  for (int i = 0; i < spec.agents(); ++i) {
    g.gains.emplace_back(std::vector<MatrixXd>(
        spec.nodes(), MatrixXd::Zero(spec.control_dims[i], spec.state_dim())));
  }
  return g;
}

GradientField FastGradient(const LqGameSpec& spec, const PolicyProfile& K,
                           const Objective& obj) {
  const int M = spec.grid.steps();
  const int start = obj.node;
  const double dt = spec.grid.dt();
  std::vector<std::vector<MatrixXd>> out(spec.agents());
  for (int i = 0; i < spec.agents(); ++i) {
    out[i].assign(spec.nodes(),
                  MatrixXd::Zero(spec.control_dims[i], spec.state_dim()));
  }
  if (start >= M) {
    GradientField g;
    for (auto& s : out) g.gains.emplace_back(std::move(s));
    return g;
  }
  const SecondMoment sm = SolveSecondMoment(spec, K, start, obj.moment);
  const MatrixXd noise = spec.sigma * spec.sigma.transpose();
  std::vector<MatrixXd> acl(M + 1), dmom(M + 1);
  for (int m = start; m <= M; ++m) {
    acl[m] = ClosedLoopAt(spec, K, m);
    dmom[m] = acl[m] * sm.moment[m] + sm.moment[m] * acl[m].transpose() + noise;
  }
  for (int i = 0; i < spec.agents(); ++i) {
    const QuadraticPath psi = SolvePsi(spec, K, i);
    const auto& cost = spec.costs[i];
    const int off = spec.control_offset(i);
    const int k = spec.control_dims[i];
    std::vector<MatrixXd> d(M + 1), dpsi(M + 1);
    for (int m = start; m <= M; ++m) {
      const MatrixXd kj = K.Joint(m);
      const MatrixXd& P = psi.matrix[m];
      dpsi[m] = -(acl[m].transpose() * P + P * acl[m] + cost.Q.at(m) +
                  kj.transpose() * cost.R.at(m) * kj);
      d[m] = (spec.B.at(m).middleCols(off, k).transpose() * P +
              cost.R.at(m).middleCols(off, k).transpose() * kj) *
             sm.moment[m];
    }
    for (int m = start; m < M; ++m) {
      // Cubic Hermite midpoints of Psi and of the moment.
      const MatrixXd pmid = 0.5 * (psi.matrix[m] + psi.matrix[m + 1]) +
                            (dt / 8.0) * (dpsi[m] - dpsi[m + 1]);
      const MatrixXd mmid = 0.5 * (sm.moment[m] + sm.moment[m + 1]) +
                            (dt / 8.0) * (dmom[m] - dmom[m + 1]);
      const MatrixXd dmid =
          (spec.B.mid(m).middleCols(off, k).transpose() * pmid +
           cost.R.mid(m).middleCols(off, k).transpose() * K.JointMid(m)) *
          mmid;
      // Simpson on [t_m, t_{m+1}] against the two hats.
      out[i][m] += (dt / 6.0) * (d[m] + dmid);
      out[i][m] += (dt / 6.0) * dmid;
      out[i][m + 1] += (dt / 6.0) * (d[m + 1] + dmid);
      out[i][m + 1] += (dt / 6.0) * dmid;
    }
    const MatrixXd mask = spec.GainMask(i);
    for (auto& g : out[i]) g = g.cwiseProduct(mask);
  }
  GradientField g;
  for (auto& s : out) g.gains.emplace_back(std::move(s));
  return g;
}

GradientField BasisGradient(const LqGameSpec& spec, const PolicyProfile& K,
                            const Objective& obj) {
  GradientField g = ZeroField(spec);
  std::vector<MatrixXd> out;
  for (int i = 0; i < spec.agents(); ++i) {
    const QuadraticPath psi = SolvePsi(spec, K, i);
    const MatrixXd mask = spec.GainMask(i);
    std::vector<MatrixXd> gi = g.gains[i].samples();
    const MatrixXd zero = MatrixXd::Zero(mask.rows(), mask.cols());
    for (int m = 0; m < spec.nodes(); ++m) {
      for (int p = 0; p < mask.rows(); ++p) {
        for (int q = 0; q < mask.cols(); ++q) {
          if (mask(p, q) == 0.0) continue;
          std::vector<MatrixXd> hat(spec.nodes(), zero);
          hat[m](p, q) = 1.0;
          const PolicyDirection dir{i, TimeSeries(std::move(hat))};
          gi[m](p, q) = obj.Apply(SolveTheta(spec, K, psi, i, dir));
        }
      }
    }
    g.gains[i] = TimeSeries(std::move(gi));
  }
  return g;
}

double SupNormOf(const TimeSeries& s) {
  double v = 0.0;
  for (const auto& m : s.samples()) v = std::max(v, m.cwiseAbs().maxCoeff());
  return v;
}

// Preconditioned (L2) gradient: G(m) / w_m.
std::vector<TimeSeries> Precondition(const GradientField& g,
                                     const std::vector<double>& w) {
  std::vector<TimeSeries> out;
  for (const auto& s : g.gains) {
    std::vector<MatrixXd> v(s.samples().size());
    for (size_t m = 0; m < v.size(); ++m) v[m] = s.samples()[m] / w[m];
    out.emplace_back(std::move(v));
  }
  return out;
}

double WeightedDot(const std::vector<TimeSeries>& a,
                   const std::vector<TimeSeries>& b,
                   const std::vector<double>& w) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t m = 0; m < w.size(); ++m) {
      s += w[m] * a[i].at(m).cwiseProduct(b[i].at(m)).sum();
    }
  }
  return s;
}

PolicyProfile Step(const PolicyProfile& K, const std::vector<TimeSeries>& dir,
                   double t, int nodes) {
  std::vector<TimeSeries> g;
  for (int i = 0; i < K.agents(); ++i) {
    g.push_back(K.gain(i).Axpy(t, dir[i], nodes));
  }
  return PolicyProfile(std::move(g));
}

void RequireMasked(const LqGameSpec& spec, const PolicyProfile& K) {
  for (int i = 0; i < spec.agents(); ++i) {
    const MatrixXd outside =
        MatrixXd::Ones(spec.control_dims[i], spec.state_dim()) -
        spec.GainMask(i);
    for (const auto& s : K.gain(i).samples()) {
      if (s.cwiseProduct(outside).cwiseAbs().maxCoeff() > 0.0) {
        throw DimensionError("gain of agent " + std::to_string(i + 1) +
                             " feeds back on states outside its policy class");
      }
    }
  }
}

// Columns/rows of the joint control vector not owned by agent i.
std::vector<int> OtherControls(const LqGameSpec& spec, int i) {
  std::vector<int> idx;
  for (int h = 0; h < spec.agents(); ++h) {
    if (h == i) continue;
    for (int k = 0; k < spec.control_dims[h]; ++k) {
      idx.push_back(spec.control_offset(h) + k);
    }
  }
  return idx;
}

MatrixXd Rows(const MatrixXd& m, const std::vector<int>& idx) {
  MatrixXd out(idx.size(), m.cols());
  for (size_t r = 0; r < idx.size(); ++r) out.row(r) = m.row(idx[r]);
  return out;
}

MatrixXd Cols(const MatrixXd& m, const std::vector<int>& idx) {
  MatrixXd out(m.rows(), idx.size());
  for (size_t c = 0; c < idx.size(); ++c) out.col(c) = m.col(idx[c]);
  return out;
}

}  // namespace

double GradientField::Dot(const PolicyProfile& direction) const {
  double s = 0.0;
  for (size_t i = 0; i < gains.size(); ++i) {
    for (int m = 0; m < gains[i].size(); ++m) {
      s += gains[i].at(m).cwiseProduct(direction.gain(i).at(m)).sum();
    }
  }
  return s;
}

double GradientField::SupNorm(const TimeGrid& grid) const {
  const auto w = LumpedWeights(grid);
  double v = 0.0;
  for (const auto& g : gains) {
    for (int m = 0; m < g.size(); ++m) {
      v = std::max(v, g.at(m).cwiseAbs().maxCoeff() / w[m]);
    }
  }
  return v;
}

bool AllCostsEqual(const LqGameSpec& spec) {
  for (int i = 1; i < spec.agents(); ++i) {
    if (!(spec.costs[i] == spec.costs[0])) return false;
  }
  return true;
}

GradientField PotentialGradient(const LqGameSpec& spec, const PolicyProfile& K,
                                const Objective& obj, GradientBackend backend,
                                const SymmetryReport* report) {
  if (report && report->verdict == Verdict::kNotPotential) {
    throw RefusalError("potential gradient: the game failed the symmetry test");
  }
  K.CheckAgainst(spec);
  if (obj.node < 0 || obj.node > spec.grid.steps()) {
    throw RangeError("potential gradient: objective node out of range");
  }
  return backend == GradientBackend::kFast ? FastGradient(spec, K, obj)
                                           : BasisGradient(spec, K, obj);
}

BestResponse ExactBestResponse(const LqGameSpec& spec, const PolicyProfile& K,
                               int i) {
  BestResponse br;
  const MatrixXd mask = spec.GainMask(i);
  if ((mask.array() != 1.0).any()) {
    br.notice = "best response skipped for agent " + std::to_string(i + 1) +
                ": feedback restricted to a subset of the state";
    return br;
  }
  const int off = spec.control_offset(i);
  const int k = spec.control_dims[i];
  const int nx = spec.state_dim();
  const std::vector<int> others = OtherControls(spec, i);
  const auto& cost = spec.costs[i];
  const TimeGrid& grid = spec.grid;

  struct Coeffs {
    MatrixXd A, Bi, Q, S, Rinv;
  };
  auto coeffs = [&](double t) {
    MatrixXd joint(spec.control_dim(), nx);
    for (int h = 0; h < spec.agents(); ++h) {
      joint.middleRows(spec.control_offset(h), spec.control_dims[h]) =
          K.Evaluate(h, grid, t);
    }
    const MatrixXd B = spec.B.Evaluate(grid, t);
    const MatrixXd R = cost.R.Evaluate(grid, t);
    const MatrixXd Km = Rows(joint, others);
    Coeffs c;
    c.A = spec.A.Evaluate(grid, t) + Cols(B, others) * Km;
    c.Bi = B.middleCols(off, k);
    const MatrixXd Rmm = Rows(Cols(R, others), others);
    c.Q = cost.Q.Evaluate(grid, t) + Km.transpose() * Rmm * Km;
    c.S = Cols(R.middleRows(off, k), others) * Km;
    c.Rinv = R.block(off, off, k, k).inverse();
    return c;
  };
  for (int m = 0; m < spec.nodes(); ++m) {
    const MatrixXd Rii = cost.R.at(m).block(off, off, k, k);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Rii, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, Rii.norm())) {
      br.notice = "best response skipped for agent " + std::to_string(i + 1) +
                  ": own control cost not positive definite at node " +
                  std::to_string(m);
      return br;
    }
  }
  auto rhs = [&](double t, const MatrixXd& P) -> MatrixXd {
    const Coeffs c = coeffs(t);
    const MatrixXd L = c.Bi.transpose() * P + c.S;
    return -(c.A.transpose() * P + P * c.A + c.Q - L.transpose() * c.Rinv * L);
  };
  auto gain = [&](double t, const MatrixXd& P) -> MatrixXd {
    const Coeffs c = coeffs(t);
    return -c.Rinv * (c.Bi.transpose() * P + c.S);
  };
  const int sub = 4;
  const int M = grid.steps();
  std::vector<MatrixXd> gains(M + 1);
  MatrixXd P = cost.G;
  gains[M] = gain(grid.node(M), P);
  for (int m = M - 1; m >= 0; --m) {
    const double t1 = grid.node(m + 1);
    const double h = -(t1 - grid.node(m)) / sub;
    for (int s = 0; s < sub; ++s) {
      const double t = t1 + s * h;
      const MatrixXd k1 = rhs(t, P);
      const MatrixXd k2 = rhs(t + 0.5 * h, P + 0.5 * h * k1);
      const MatrixXd k3 = rhs(t + 0.5 * h, P + 0.5 * h * k2);
      const MatrixXd k4 = rhs(t + h, P + h * k3);
      P += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      P = (0.5 * (P + P.transpose())).eval();
    }
    if (!P.allFinite()) {
      br.notice = "best response skipped for agent " + std::to_string(i + 1) +
                  ": Riccati solution diverged";
      return br;
    }
    gains[m] = gain(grid.node(m), P);
  }
  br.available = true;
  br.gain = TimeSeries(std::move(gains));
  return br;
}

NashCertificate VerifyNash(const LqGameSpec& spec, const PolicyProfile& K,
                           const Objective& obj, const VerifyOptions& options,
                           const PotentialFunction* potential) {
  K.CheckAgainst(spec);
  NashCertificate cert;
  cert.profile = K;
  cert.tolerance = options.tolerance;
  const int N = spec.agents();
  const int R = static_cast<int>(options.radii.size());
  const int per_agent = R * options.probes;
  std::vector<double> base(N);
  for (int i = 0; i < N; ++i) base[i] = AgentValue(spec, K, i, obj);
  const double phi0 = potential ? potential->Evaluate(spec, K, obj) : 0.0;

  std::vector<double> improvement(N * per_agent, 0.0);
  std::vector<double> dphi(N * per_agent, 0.0);
  ParallelFor(N * per_agent, ResolveThreads(), [&](int idx, int) {
    const int i = idx / per_agent;
    const int r = (idx % per_agent) / options.probes;
    const int p = idx % options.probes;
    const std::uint64_t key = (static_cast<std::uint64_t>(i) << 32) |
                              (static_cast<std::uint64_t>(r) << 16) | p;
    TimeSeries dev =
        RandomMaskedGain(spec, i, DeriveSeed(options.seed, kVerifyStage, key));
    const double norm = SupNormOf(dev);
    if (norm == 0.0) return;
    PolicyDirection d{i, dev};
    const PolicyProfile Kd =
        Deviate(K, d, options.radii[r] / norm, spec.nodes());
    improvement[idx] = AgentValue(spec, Kd, i, obj) - base[i];
    if (potential) dphi[idx] = potential->Evaluate(spec, Kd, obj) - phi0;
  });

  cert.worst_improvement = 0.0;
  double worst_phi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    AgentGap gap;
    gap.agent = i;
    gap.probes = per_agent;
    for (int q = 0; q < per_agent; ++q) {
      gap.worst_improvement =
          std::min(gap.worst_improvement, improvement[i * per_agent + q]);
      worst_phi = std::min(worst_phi, dphi[i * per_agent + q]);
    }
    if (options.best_response) {
      const BestResponse br = ExactBestResponse(spec, K, i);
      if (br.available) {
        PolicyProfile Kb = K;
        Kb.gain(i) = br.gain;
        gap.best_response_checked = true;
        gap.best_response_improvement = AgentValue(spec, Kb, i, obj) - base[i];
        gap.worst_improvement =
            std::min(gap.worst_improvement, gap.best_response_improvement);
      } else {
        gap.notice = br.notice;
        cert.notices.push_back(br.notice);
      }
    }
    cert.worst_improvement = std::min(cert.worst_improvement,
                                      gap.worst_improvement);
    cert.gaps.push_back(gap);
  }
  cert.certified = cert.worst_improvement >= -options.tolerance;
  if (potential && per_agent > 0) {
    cert.worst_potential_change = worst_phi;
    const bool phi_minimal = worst_phi >= -options.tolerance;
    cert.potential_consistent = !phi_minimal || cert.certified;
  }
  return cert;
}

NashCertificate SolveNash(const LqGameSpec& spec, const PolicyProfile& K0,
                          const Objective& obj, const NashOptions& options) {
  RequireValid(spec);
  K0.CheckAgainst(spec);
  RequireMasked(spec, K0);
  SymmetryOptions so;
  so.probes = options.symmetry_probes;
  so.seed = DeriveSeed(options.seed, kSymmetryStage, 0);
  const SymmetryReport report = CheckSymmetry(spec, K0, so);
  if (report.verdict == Verdict::kNotPotential) {
    std::ostringstream os;
    os << "solve_nash: game is not a potential game (max discrepancy "
       << report.max_discrepancy << ")";
    throw RefusalError(os.str());
  }
  const PotentialFunction phi_fn =
      options.potential
          ? *options.potential
          : (AllCostsEqual(spec) ? PotentialFunction::Team(0)
                                 : PotentialFunction::LineIntegral(K0, 16));
  const int nodes = spec.nodes();
  const auto w = LumpedWeights(spec.grid);

  PolicyProfile K = K0;
  double phi = phi_fn.Evaluate(spec, K, obj);
  GradientField grad = PotentialGradient(spec, K, obj);
  double norm = grad.SupNorm(spec.grid);
  double step = options.initial_step;
  NashCertificate cert;
  std::vector<TraceRow> trace;
  trace.push_back({0, phi, norm, 0.0});
  int it = 0;
  bool converged = norm <= options.tol;
  while (!converged && it < options.max_iter) {
    const std::vector<TimeSeries> g = Precondition(grad, w);
    std::vector<TimeSeries> dir;
    for (const auto& s : g) dir.push_back(s.Axpy(-2.0, s, nodes));  // -g
    const double slope = WeightedDot(g, dir, w);
    double t = step;
    int halvings = 0;
    PolicyProfile Kn;
    double phin = 0.0;
    while (true) {
      Kn = Step(K, dir, t, nodes);
      bool ok = false;
      try {
        phin = phi_fn.Evaluate(spec, Kn, obj);
        ok = std::isfinite(phin) && phin < phi &&
             phin <= phi + options.armijo * t * slope;
      } catch (const DivergenceError&) {
        ok = false;
      }
      if (ok) break;
      if (++halvings > options.max_halvings) {
        std::ostringstream os;
        os << std::setprecision(17) << "solve_nash: line search stalled at "
           << "iteration " << it + 1 << " after " << options.max_halvings
           << " halvings (potential " << phi << ", gradient norm " << norm
           << ", last step " << t << ")";
        throw StallError(os.str());
      }
      t *= 0.5;
    }
    ++it;
    const GradientField gn = PotentialGradient(spec, Kn, obj);
    // Barzilai-Borwein guess for the next trial step.
    const std::vector<TimeSeries> gpn = Precondition(gn, w);
    std::vector<TimeSeries> y;
    for (size_t i = 0; i < g.size(); ++i) {
      y.push_back(gpn[i].Axpy(-1.0, g[i], nodes));
    }
    const double sy = t * WeightedDot(dir, y, w);
    const double ss = t * t * WeightedDot(dir, dir, w);
    step = (sy > 0.0) ? std::clamp(ss / sy, 1e-8, 1e8) : 2.0 * t;
    K = std::move(Kn);
    phi = phin;
    grad = gn;
    norm = grad.SupNorm(spec.grid);
    trace.push_back({it, phi, norm, t});
    converged = norm <= options.tol;
  }
  cert = VerifyNash(spec, K, obj, options.verify, &phi_fn);
  cert.iterations = it;
  cert.final_gradient_norm = norm;
  cert.final_potential = phi;
  cert.converged = converged;
  cert.trace = std::move(trace);
  cert.verdict = VerdictName(report.verdict);
  switch (phi_fn.kind()) {
    case PotentialFunction::Kind::kTeam:
      cert.potential_kind = "team";
      break;
    case PotentialFunction::Kind::kQuadratic:
      cert.potential_kind = "quadratic";
      break;
    case PotentialFunction::Kind::kLineIntegral:
      cert.potential_kind = "line-integral";
      break;
  }
  if (!converged) {
    cert.notices.push_back("gradient tolerance not reached within max_iter");
  }
  cert.notices.push_back(
      "first-order stationary point of the potential; no global certificate");
  return cert;
}

void WriteTraceCsv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "iteration,potential,gradient_norm,step\n";
  os << std::setprecision(17);
  for (const auto& r : trace) {
    os << r.iteration << "," << r.potential << "," << r.gradient_norm << ","
       << r.step << "\n";
  }
}

}  // namespace potentia
