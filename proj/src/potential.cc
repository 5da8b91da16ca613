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

#include "potentia/potential.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "potentia/errors.h"
#include "potentia/seeds.h"

namespace potentia {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr std::uint64_t kProbeStage = 0x70726f6265ULL;

double InfNorm(const MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Canonical hat directions of agent i: one per admissible entry and node.
std::vector<TimeSeries> HatBasis(const LqGameSpec& spec, int i) {
  const MatrixXd mask = spec.GainMask(i);
  std::vector<TimeSeries> out;
  for (int m = 0; m < spec.nodes(); ++m) {
    for (int p = 0; p < mask.rows(); ++p) {
      for (int q = 0; q < mask.cols(); ++q) {
        if (mask(p, q) == 0.0) continue;
        std::vector<MatrixXd> s(spec.nodes(),
                                MatrixXd::Zero(mask.rows(), mask.cols()));
        s[m](p, q) = 1.0;
        out.emplace_back(std::move(s));
      }
    }
  }
  return out;
}

int BasisSize(const LqGameSpec& spec, int i) {
  return static_cast<int>(spec.GainMask(i).sum()) * spec.nodes();
}

void MergeInto(PairReport& into, const PairReport& from) {
  for (size_t m = 0; m < into.matrix_gap.size(); ++m) {
    into.matrix_gap[m] = std::max(into.matrix_gap[m], from.matrix_gap[m]);
    into.scalar_gap[m] = std::max(into.scalar_gap[m], from.scalar_gap[m]);
  }
  into.max_matrix_gap = std::max(into.max_matrix_gap, from.max_matrix_gap);
  into.max_scalar_gap = std::max(into.max_scalar_gap, from.max_scalar_gap);
  into.lambda_scale = std::max(into.lambda_scale, from.lambda_scale);
  into.point_gap = std::max(into.point_gap, from.point_gap);
  into.point_scale = std::max(into.point_scale, from.point_scale);
}

Verdict Decide(const std::vector<PairReport>& pairs,
               const SymmetryOptions& options) {
  const double tol = options.relative_tolerance;
  bool mpg = true;
  for (const auto& p : pairs) {
    if (p.max_matrix_gap > tol * (1.0 + p.lambda_scale) ||
        p.max_scalar_gap > tol * (1.0 + p.lambda_scale)) {
      mpg = false;
    }
  }
  if (mpg) return Verdict::kMpg;
  if (options.t && options.x) {
    bool clpg = true;
    for (const auto& p : pairs) {
      if (p.point_gap > tol * (1.0 + p.point_scale)) clpg = false;
    }
    if (clpg) return Verdict::kClpg;
  }
  return Verdict::kNotPotential;
}

}  // namespace

Objective Objective::AtPoint(const LqGameSpec& spec, double t0,
                             const VectorXd& x0) {
  auto node = spec.grid.NodeIndex(t0);
  if (!node) throw RangeError("objective: t0 must be a grid node");
  if (x0.size() != spec.state_dim()) {
    throw DimensionError("objective: x0 has the wrong dimension");
  }
  return {*node, x0 * x0.transpose()};
}

Objective Objective::Distributional(const LqGameSpec& spec, double t0) {
  auto node = spec.grid.NodeIndex(t0);
  if (!node) throw RangeError("objective: t0 must be a grid node");
  return {*node, MatrixXd::Identity(spec.state_dim(), spec.state_dim())};
}

double AgentValue(const LqGameSpec& spec, const PolicyProfile& K, int i,
                  const Objective& obj) {
  return obj.Apply(SolvePsi(spec, K, i));
}

const char* VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kMpg:
      return "MPG";
    case Verdict::kClpg:
      return "CLPG";
    case Verdict::kNotPotential:
      return "not-potential";
  }
  return "unknown";
}

TimeSeries RandomMaskedGain(const LqGameSpec& spec, int i, std::uint64_t seed,
                            double scale) {
  const MatrixXd mask = spec.GainMask(i);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<MatrixXd> s(spec.nodes());
  for (auto& g : s) {
    g.resize(mask.rows(), mask.cols());
    for (int q = 0; q < g.cols(); ++q) {
      for (int p = 0; p < g.rows(); ++p) g(p, q) = scale * normal(rng);
    }
    g = g.cwiseProduct(mask);
  }
  return TimeSeries(std::move(s));
}

PolicyProfile RandomProfile(const LqGameSpec& spec, std::uint64_t seed,
                            double scale) {
  std::vector<TimeSeries> g;
  for (int i = 0; i < spec.agents(); ++i) {
    g.push_back(RandomMaskedGain(spec, i, DeriveSeed(seed, 1, i), scale));
  }
  return PolicyProfile(std::move(g));
}

PairReport CheckPair(const LqGameSpec& spec, const PolicyProfile& K, int i,
                     int j, const SymmetryOptions& options, bool* basis_swept,
                     int* probes_used) {
  if (i == j || i < 0 || j < 0 || i >= spec.agents() || j >= spec.agents()) {
    throw DimensionError("check_symmetry: invalid agent pair");
  }
  const QuadraticPath psi_i = SolvePsi(spec, K, i);
  const QuadraticPath psi_j = SolvePsi(spec, K, j);
  std::vector<std::pair<TimeSeries, TimeSeries>> dirs;
  for (int p = 0; p < options.probes; ++p) {
    // Keyed by (agent, partner, probe) so the pair order does not matter.
    const std::uint64_t lo = std::min(i, j), hi = std::max(i, j);
    const std::uint64_t key = (lo << 40) ^ (hi << 20) ^ p;
    dirs.emplace_back(
        RandomMaskedGain(spec, i, DeriveSeed(options.seed, kProbeStage + i, key)),
        RandomMaskedGain(spec, j,
                         DeriveSeed(options.seed, kProbeStage + j, key)));
  }
  const bool sweep =
      static_cast<long>(BasisSize(spec, i)) * BasisSize(spec, j) <=
      options.basis_limit;
  if (sweep) {
    const auto bi = HatBasis(spec, i);
    const auto bj = HatBasis(spec, j);
    for (const auto& a : bi) {
      for (const auto& b : bj) dirs.emplace_back(a, b);
    }
  }
  if (basis_swept) *basis_swept = sweep;
  if (probes_used) *probes_used = static_cast<int>(dirs.size());

  PairReport r;
  r.i = std::min(i, j);
  r.j = std::max(i, j);
  r.matrix_gap.assign(spec.nodes(), 0.0);
  r.scalar_gap.assign(spec.nodes(), 0.0);
  for (const auto& [gi, gj] : dirs) {
    const PolicyDirection di{i, gi};
    const PolicyDirection dj{j, gj};
    const QuadraticPath ti_i = SolveTheta(spec, K, psi_i, i, di);
    const QuadraticPath ti_j = SolveTheta(spec, K, psi_i, i, dj);
    const QuadraticPath li = SolveLambda(spec, K, i, ti_i, di, ti_j, dj);
    const QuadraticPath tj_j = SolveTheta(spec, K, psi_j, j, dj);
    const QuadraticPath tj_i = SolveTheta(spec, K, psi_j, j, di);
    const QuadraticPath lj = SolveLambda(spec, K, j, tj_j, dj, tj_i, di);
    for (int m = 0; m < spec.nodes(); ++m) {
      const double mg = InfNorm(li.matrix[m] - lj.matrix[m]);
      const double sg = std::abs(li.scalar[m] - lj.scalar[m]);
      r.matrix_gap[m] = std::max(r.matrix_gap[m], mg);
      r.scalar_gap[m] = std::max(r.scalar_gap[m], sg);
      r.lambda_scale = std::max(
          {r.lambda_scale, InfNorm(li.matrix[m]), InfNorm(lj.matrix[m]),
           std::abs(li.scalar[m]), std::abs(lj.scalar[m])});
    }
    if (options.t && options.x) {
      const double a = EvalQuadratic(li, *options.t, *options.x);
      const double b = EvalQuadratic(lj, *options.t, *options.x);
      r.point_gap = std::max(r.point_gap, std::abs(a - b));
      r.point_scale = std::max({r.point_scale, std::abs(a), std::abs(b)});
    }
  }
  r.max_matrix_gap = *std::max_element(r.matrix_gap.begin(), r.matrix_gap.end());
  r.max_scalar_gap = *std::max_element(r.scalar_gap.begin(), r.scalar_gap.end());
  return r;
}

SymmetryReport CheckSymmetry(const LqGameSpec& spec, const PolicyProfile& K,
                             const SymmetryOptions& options) {
  return CheckSymmetry(spec, std::vector<PolicyProfile>{K}, options);
}

SymmetryReport CheckSymmetry(const LqGameSpec& spec,
                             const std::vector<PolicyProfile>& profiles,
                             const SymmetryOptions& options) {
  RequireValid(spec);
  if (profiles.empty()) {
    throw DimensionError("check_symmetry: need at least one profile");
  }
  if (options.probes < 0) throw RangeError("check_symmetry: probes < 0");
  SymmetryReport report;
  report.tolerance = options.relative_tolerance;
  for (size_t k = 0; k < profiles.size(); ++k) {
    profiles[k].CheckAgainst(spec);
    int pair_index = 0;
    for (int i = 0; i < spec.agents(); ++i) {
      for (int j = i + 1; j < spec.agents(); ++j, ++pair_index) {
        bool swept = false;
        int used = 0;
        PairReport r = CheckPair(spec, profiles[k], i, j, options, &swept, &used);
        report.probes_used += used;
        report.basis_swept = report.basis_swept || swept;
        if (k == 0) {
          report.pairs.push_back(std::move(r));
        } else {
          MergeInto(report.pairs[pair_index], r);
        }
      }
    }
  }
  for (const auto& p : report.pairs) {
    report.max_discrepancy = std::max(report.max_discrepancy, p.max_matrix_gap);
  }
  report.verdict = Decide(report.pairs, options);
  return report;
}

PotentialFunction PotentialFunction::LineIntegral(PolicyProfile base,
                                                  int n_quad,
                                                  bool not_a_potential) {
  PotentialFunction p;
  p.kind_ = Kind::kLineIntegral;
  p.base_ = std::move(base);
  p.rule_ = GaussLegendre(n_quad);
  p.not_a_potential_ = not_a_potential;
  return p;
}

PotentialFunction PotentialFunction::Quadratic(AgentCost joint) {
  PotentialFunction p;
  p.kind_ = Kind::kQuadratic;
  if (!IsSymmetric(joint.G, 1e-12)) {
    throw DimensionError("quadratic potential: G not symmetric");
  }
  for (const auto* s : {&joint.Q, &joint.R}) {
    for (const auto& m : s->samples()) {
      if (!IsSymmetric(m, 1e-12)) {
        throw DimensionError("quadratic potential: cost not symmetric");
      }
    }
  }
  p.joint_ = std::move(joint);
  return p;
}

PotentialFunction PotentialFunction::Team(int agent) {
  PotentialFunction p;
  p.kind_ = Kind::kTeam;
  p.team_agent_ = agent;
  return p;
}

double PotentialFunction::EvaluateWith(
    const LqGameSpec& spec, const PolicyProfile& K,
    const std::function<double(const QuadraticPath&)>& apply) const {
  K.CheckAgainst(spec);
  switch (kind_) {
    case Kind::kTeam:
      return apply(SolvePsi(spec, K, team_agent_));
    case Kind::kQuadratic:
      if (joint_.Q.rows() != spec.state_dim() ||
          joint_.R.rows() != spec.control_dim()) {
        throw DimensionError("quadratic potential: game dimensions differ");
      }
      return apply(SolvePsiWithCost(spec, K, joint_));
    case Kind::kLineIntegral: {
      base_.CheckAgainst(spec);
      const int nodes = spec.nodes();
      double total = 0.0;
      for (size_t q = 0; q < rule_.nodes.size(); ++q) {
        const PolicyProfile Kr = Interpolate(base_, K, rule_.nodes[q], nodes);
        double s = 0.0;
        for (int j = 0; j < spec.agents(); ++j) {
          const QuadraticPath psi = SolvePsi(spec, Kr, j);
          const QuadraticPath theta =
              SolveTheta(spec, Kr, psi, j, Difference(K, base_, j, nodes));
          s += apply(theta);
        }
        total += rule_.weights[q] * s;
      }
      return total;
    }
  }
  return 0.0;
}

double PotentialFunction::Evaluate(const LqGameSpec& spec,
                                   const PolicyProfile& K, double t,
                                   const VectorXd& x) const {
  return EvaluateWith(spec, K, [&](const QuadraticPath& q) {
    return EvalQuadratic(q, t, x);
  });
}

double PotentialFunction::Evaluate(const LqGameSpec& spec,
                                   const PolicyProfile& K,
                                   const Objective& obj) const {
  return EvaluateWith(spec, K,
                      [&](const QuadraticPath& q) { return obj.Apply(q); });
}

bool PotentialFunction::operator==(const PotentialFunction& o) const {
  if (kind_ != o.kind_) return false;
  switch (kind_) {
    case Kind::kTeam:
      return team_agent_ == o.team_agent_;
    case Kind::kQuadratic:
      return joint_ == o.joint_;
    case Kind::kLineIntegral:
      return base_ == o.base_ && rule_.nodes == o.rule_.nodes &&
             rule_.weights == o.rule_.weights &&
             not_a_potential_ == o.not_a_potential_;
  }
  return false;
}

PotentialFunction BuildLineIntegralPotential(const LqGameSpec& spec,
                                             const PolicyProfile& base,
                                             int n_quad,
                                             const SymmetryReport& report,
                                             bool override_refusal) {
  base.CheckAgainst(spec);
  const bool refused = report.verdict == Verdict::kNotPotential;
  if (refused && !override_refusal) {
    std::ostringstream os;
    os << "symmetric-Jacobian condition fails (max discrepancy "
       << report.max_discrepancy << "); refusing to build a potential";
    throw RefusalError(os.str());
  }
  return PotentialFunction::LineIntegral(base, n_quad, refused);
}

AgentCost DistributedPotentialCosts(const DistributedQuadraticSpec& d) {
  const int N = d.agents;
  if (N < 1 || static_cast<int>(d.own.size()) != N) {
    throw DimensionError("distributed potential: agent count mismatch");
  }
  const int nodes = d.grid.steps() + 1;
  auto assemble = [&](auto own_at, const MatrixXd& shared, double weight,
                      int dim) {
    MatrixXd out = MatrixXd::Zero(N * dim, N * dim);
    const double off = N > 1 ? -weight / (N - 1) : 0.0;
    for (int a = 0; a < N; ++a) {
      const MatrixXd& own = own_at(a);
      if (own.rows() != dim || own.cols() != dim || shared.rows() != dim ||
          shared.cols() != dim) {
        throw DimensionError("distributed potential: block shape mismatch");
      }
      for (int b = 0; b < N; ++b) {
        out.block(a * dim, b * dim, dim, dim) =
            a == b ? MatrixXd(own + shared) : MatrixXd(off * shared);
      }
    }
    return out;
  };
  auto series = [&](auto own_series, const TimeSeries& shared,
                    const TimeSeries& weight, int dim) {
    bool constant = shared.is_constant() && weight.is_constant();
    for (int a = 0; a < N; ++a) constant = constant && own_series(a).is_constant();
    const int count = constant ? 1 : nodes;
    std::vector<MatrixXd> out;
    for (int m = 0; m < count; ++m) {
      out.push_back(assemble(
          [&](int a) -> const MatrixXd& { return own_series(a).at(m); },
          shared.at(m), weight.scalar(m), dim));
    }
    return constant ? TimeSeries(out[0]) : TimeSeries(std::move(out));
  };
  AgentCost c;
  c.Q = series([&](int a) -> const TimeSeries& { return d.own[a].Q; }, d.Qbar,
               d.gamma, d.state_dim);
  c.R = series([&](int a) -> const TimeSeries& { return d.own[a].R; }, d.Rbar,
               d.kappa, d.control_dim);
  c.G = assemble([&](int a) -> const MatrixXd& { return d.own[a].G; }, d.Gbar,
                 d.eta, d.state_dim);
  return c;
}

PotentialFunction BuildDistributedPotential(const DistributedQuadraticSpec& d) {
  return PotentialFunction::Quadratic(DistributedPotentialCosts(d));
}

DistributedFG BuildGeneralDistributedFG(const GeneralCoefficients& costs,
                                        int agent_state,
                                        const VectorXd& anchor_x,
                                        const VectorXd& anchor_a,
                                        const TimeGrid& grid,
                                        const DistributedFGOptions& options) {
  const int N = costs.agents();
  const int nx = costs.state_dim;
  const int na = costs.control_dim();
  if (N < 1 || agent_state < 1 || nx != N * agent_state) {
    throw DimensionError("distributed F,G: state dimension is not N * n");
  }
  if (static_cast<int>(costs.running.size()) != N ||
      static_cast<int>(costs.terminal.size()) != N) {
    throw DimensionError("distributed F,G: one running and terminal cost per agent");
  }
  if (anchor_x.size() != nx || anchor_a.size() != na) {
    throw DimensionError("distributed F,G: anchor has the wrong dimension");
  }
  // Indices of (x_i, a_i) inside z = (x, a).
  std::vector<std::vector<int>> own(N), own_x(N);
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < agent_state; ++k) {
      own[i].push_back(i * agent_state + k);
      own_x[i].push_back(i * agent_state + k);
    }
    for (int k = 0; k < costs.control_dims[i]; ++k) {
      own[i].push_back(nx + costs.control_offset(i) + k);
    }
  }
  auto block = [](const MatrixXd& H, const std::vector<int>& r,
                  const std::vector<int>& c) {
    MatrixXd out(r.size(), c.size());
    for (size_t p = 0; p < r.size(); ++p) {
      for (size_t q = 0; q < c.size(); ++q) out(p, q) = H(r[p], c[q]);
    }
    return out;
  };
  auto refuse = [](const char* what, int i, int j, double t, const VectorXd& x,
                   const VectorXd* a, double gap) {
    std::ostringstream os;
    os << "Hessian asymmetry in " << what << " between agents " << i + 1
       << " and " << j + 1 << " at t=" << t << ", x=["
       << x.transpose() << "]";
    if (a) os << ", a=[" << a->transpose() << "]";
    os << " (gap " << gap << ")";
    throw RefusalError(os.str());
  };
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(grid.start(), grid.horizon());
  for (int p = 0; p < options.probes; ++p) {
    const double t = unif(rng);
    VectorXd x(nx), a(na);
    for (int k = 0; k < nx; ++k) x(k) = normal(rng);
    for (int k = 0; k < na; ++k) a(k) = normal(rng);
    std::vector<MatrixXd> hf(N), hg(N);
    for (int i = 0; i < N; ++i) {
      hf[i] = costs.running[i].hessian(t, x, a);
      hg[i] = costs.terminal[i].hessian(x);
    }
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        const MatrixXd bi = block(hf[i], own[i], own[j]);
        const MatrixXd bj = block(hf[j], own[i], own[j]);
        const double scale = std::max({1.0, InfNorm(bi), InfNorm(bj)});
        const double gap = InfNorm(bi - bj);
        if (gap > options.hessian_tolerance * scale) {
          refuse("running costs", i, j, t, x, &a, gap);
        }
        const MatrixXd gi = block(hg[i], own_x[i], own_x[j]);
        const MatrixXd gj = block(hg[j], own_x[i], own_x[j]);
        const double gscale = std::max({1.0, InfNorm(gi), InfNorm(gj)});
        const double ggap = InfNorm(gi - gj);
        if (ggap > options.hessian_tolerance * gscale) {
          refuse("terminal costs", i, j, t, x, nullptr, ggap);
        }
      }
    }
  }
  const QuadratureRule rule = GaussLegendre(options.n_quad);
  DistributedFG fg;
  fg.F = [=](double t, const VectorXd& x, const VectorXd& a) {
    VectorXd z(nx + na), zhat(nx + na);
    z << x, a;
    zhat << anchor_x, anchor_a;
    const VectorXd dz = z - zhat;
    double total = 0.0;
    for (size_t q = 0; q < rule.nodes.size(); ++q) {
      const VectorXd zr = zhat + rule.nodes[q] * dz;
      const VectorXd xr = zr.head(nx), ar = zr.tail(na);
      double s = 0.0;
      for (int i = 0; i < N; ++i) {
        const VectorXd g = costs.running[i].gradient(t, xr, ar);
        for (int k : own[i]) s += g(k) * dz(k);
      }
      total += rule.weights[q] * s;
    }
    return total;
  };
  // The path runs from the anchor: xhat + r (x - xhat).
  fg.G = [=](const VectorXd& x) {
    const VectorXd dx = x - anchor_x;
    double total = 0.0;
    for (size_t q = 0; q < rule.nodes.size(); ++q) {
      const VectorXd xr = anchor_x + rule.nodes[q] * dx;
      double s = 0.0;
      for (int i = 0; i < N; ++i) {
        const VectorXd g = costs.terminal[i].gradient(xr);
        for (int k : own_x[i]) s += g(k) * dx(k);
      }
      total += rule.weights[q] * s;
    }
    return total;
  };
  fg.Uf = [costs, F = fg.F](int i, double t, const VectorXd& x,
                            const VectorXd& a) {
    return costs.running[i].value(t, x, a) - F(t, x, a);
  };
  fg.Ug = [costs, G = fg.G](int i, const VectorXd& x) {
    return costs.terminal[i].value(x) - G(x);
  };
  return fg;
}

}  // namespace potentia
