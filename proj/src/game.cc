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

#include "potentia/game.h"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "potentia/errors.h"

namespace potentia {
namespace {

constexpr double kSymmetryTolerance = 1e-12;

std::string Indexed(const std::string& name, int i) {
  return name + "[" + std::to_string(i + 1) + "]";
}

class Checker {
 public:
  explicit Checker(int nodes) : nodes_(nodes) {}

  void Add(const std::string& field, std::optional<int> node,
           const std::string& rule, const std::string& message) {
    out_.push_back({field, node, rule, message});
  }

  // Shape and sample-count checks; returns false if the series is unusable.
  bool Series(const std::string& field, const TimeSeries& s, int rows,
              int cols) {
    if (s.size() == 0) {
      Add(field, std::nullopt, "shape", field + " missing");
      return false;
    }
    if (s.size() != 1 && s.size() != nodes_) {
      Add(field, std::nullopt, "samples",
          field + " has " + std::to_string(s.size()) +
              " samples, expected 1 or " + std::to_string(nodes_));
      return false;
    }
    if (s.rows() != rows || s.cols() != cols) {
      std::ostringstream os;
      os << field << " has shape " << s.rows() << "x" << s.cols()
         << ", expected " << rows << "x" << cols;
      Add(field, std::nullopt, "shape", os.str());
      return false;
    }
    for (int m = 0; m < s.size(); ++m) {
      if (!s.samples()[m].allFinite()) {
        Add(field, m, "finite",
            field + " not finite at node " + std::to_string(m));
        return false;
      }
    }
    return true;
  }

  void SymmetricSeries(const std::string& field, const TimeSeries& s) {
    for (int m = 0; m < s.size(); ++m) {
      if (!IsSymmetric(s.samples()[m], kSymmetryTolerance)) {
        Add(field, m, "symmetric",
            field + " not symmetric at node " + std::to_string(m));
        return;
      }
    }
  }

  bool Matrix(const std::string& field, const Eigen::MatrixXd& g, int rows,
              int cols) {
    if (g.rows() != rows || g.cols() != cols) {
      std::ostringstream os;
      os << field << " has shape " << g.rows() << "x" << g.cols()
         << ", expected " << rows << "x" << cols;
      Add(field, std::nullopt, "shape", os.str());
      return false;
    }
    if (!g.allFinite()) {
      Add(field, std::nullopt, "finite", field + " not finite");
      return false;
    }
    return true;
  }

  std::vector<Violation> Take() { return std::move(out_); }

 private:
  int nodes_;
  std::vector<Violation> out_;
};

}  // namespace

bool IsSymmetric(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return ((m - m.transpose()).cwiseAbs().array() <= tol).all();
}

int LqGameSpec::control_dim() const {
  return std::accumulate(control_dims.begin(), control_dims.end(), 0);
}

int LqGameSpec::control_offset(int i) const {
  return std::accumulate(control_dims.begin(), control_dims.begin() + i, 0);
}

std::vector<int> LqGameSpec::FeedbackColumns(int i) const {
  if (feedback.empty() || feedback[i].empty()) {
    std::vector<int> all(state_dim());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  return feedback[i];
}

Eigen::MatrixXd LqGameSpec::GainMask(int i) const {
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(control_dims[i], state_dim());
  for (int c : FeedbackColumns(i)) mask.col(c).setOnes();
  return mask;
}

bool LqGameSpec::HasRestrictedFeedback() const {
  for (int i = 0; i < agents(); ++i) {
    if (static_cast<int>(FeedbackColumns(i).size()) != state_dim()) return true;
  }
  return false;
}

Eigen::MatrixXd LqGameSpec::BBlock(int h, int m) const {
  return B.at(m).middleCols(control_offset(h), control_dims[h]);
}

bool LqGameSpec::operator==(const LqGameSpec& o) const {
  return grid == o.grid && control_dims == o.control_dims && A == o.A &&
         B == o.B && sigma.rows() == o.sigma.rows() &&
         sigma.cols() == o.sigma.cols() &&
         (sigma.array() == o.sigma.array()).all() && costs == o.costs &&
         feedback == o.feedback;
}

std::vector<Violation> ValidateSpec(const LqGameSpec& spec) {
  Checker check(spec.nodes());
  const int n_agents = spec.agents();
  if (n_agents < 1) {
    check.Add("k", std::nullopt, "shape", "need at least one agent");
    return check.Take();
  }
  for (int i = 0; i < n_agents; ++i) {
    if (spec.control_dims[i] < 1) {
      check.Add(Indexed("k", i), std::nullopt, "shape",
                Indexed("k", i) + " must be >= 1");
    }
  }
  const int nx = spec.state_dim();
  const int na = spec.control_dim();
  if (nx < 1) {
    check.Add("A", std::nullopt, "shape", "A missing or empty");
    return check.Take();
  }
  check.Series("A", spec.A, nx, nx);
  if (spec.B.size() > 0 && spec.B.rows() == nx && spec.B.cols() != na) {
    std::ostringstream os;
    os << "B block partition mismatch: B has " << spec.B.cols()
       << " columns but k sums to " << na;
    check.Add("B", std::nullopt, "block-partition", os.str());
  } else {
    check.Series("B", spec.B, nx, na);
  }
  if (spec.sigma.rows() != nx || spec.sigma.cols() < 1) {
    std::ostringstream os;
    os << "sigma has shape " << spec.sigma.rows() << "x" << spec.sigma.cols()
       << ", expected " << nx << "x n_w with n_w >= 1";
    check.Add("sigma", std::nullopt, "shape", os.str());
  } else if (!spec.sigma.allFinite()) {
    check.Add("sigma", std::nullopt, "finite", "sigma not finite");
  }
  if (static_cast<int>(spec.costs.size()) != n_agents) {
    check.Add("costs", std::nullopt, "shape",
              "expected " + std::to_string(n_agents) + " agent cost blocks");
  } else {
    for (int i = 0; i < n_agents; ++i) {
      const auto& c = spec.costs[i];
      if (check.Series(Indexed("Q", i), c.Q, nx, nx)) {
        check.SymmetricSeries(Indexed("Q", i), c.Q);
      }
      if (check.Series(Indexed("R", i), c.R, na, na)) {
        check.SymmetricSeries(Indexed("R", i), c.R);
      }
      if (check.Matrix(Indexed("G", i), c.G, nx, nx) &&
          !IsSymmetric(c.G, kSymmetryTolerance)) {
        check.Add(Indexed("G", i), std::nullopt, "symmetric",
                  Indexed("G", i) + " not symmetric");
      }
    }
  }
  if (!spec.feedback.empty()) {
    if (static_cast<int>(spec.feedback.size()) != n_agents) {
      check.Add("feedback", std::nullopt, "shape",
                "feedback lists must be given for every agent");
    } else {
      for (int i = 0; i < n_agents; ++i) {
        const auto& cols = spec.feedback[i];
        bool ok = std::is_sorted(cols.begin(), cols.end()) &&
                  std::adjacent_find(cols.begin(), cols.end()) == cols.end();
        for (int c : cols) ok = ok && c >= 0 && c < nx;
        if (!ok) {
          check.Add(Indexed("feedback", i), std::nullopt, "range",
                    Indexed("feedback", i) +
                        " must list distinct increasing state columns");
        }
      }
    }
  }
  return check.Take();
}

void RequireValid(const LqGameSpec& spec) {
  auto v = ValidateSpec(spec);
  if (!v.empty()) throw DimensionError("invalid game spec: " + v.front().message);
}

PolicyProfile PolicyProfile::Zero(const LqGameSpec& spec) {
  std::vector<TimeSeries> g;
  for (int i = 0; i < spec.agents(); ++i) {
    g.push_back(TimeSeries::Zero(spec.control_dims[i], spec.state_dim()));
  }
  return PolicyProfile(std::move(g));
}

Eigen::MatrixXd PolicyProfile::Joint(int m) const {
  int rows = 0;
  for (const auto& g : gains_) rows += g.rows();
  Eigen::MatrixXd out(rows, gains_.empty() ? 0 : gains_[0].cols());
  int r = 0;
  for (const auto& g : gains_) {
    out.middleRows(r, g.rows()) = g.at(m);
    r += g.rows();
  }
  return out;
}

Eigen::MatrixXd PolicyProfile::JointMid(int m) const {
  return 0.5 * (Joint(m) + Joint(m + 1));
}

Eigen::MatrixXd PolicyProfile::Evaluate(int i, const TimeGrid& grid,
                                        double t) const {
  return gains_[i].Evaluate(grid, t);
}

void PolicyProfile::CheckAgainst(const LqGameSpec& spec) const {
  if (agents() != spec.agents()) {
    throw DimensionError("policy has " + std::to_string(agents()) +
                         " agents, game has " + std::to_string(spec.agents()));
  }
  for (int i = 0; i < agents(); ++i) {
    const auto& g = gains_[i];
    if (g.rows() != spec.control_dims[i] || g.cols() != spec.state_dim() ||
        (g.size() != 1 && g.size() != spec.nodes())) {
      throw DimensionError("policy gain " + Indexed("K", i) +
                           " does not match the game dimensions");
    }
    for (const auto& s : g.samples()) {
      if (!s.allFinite()) {
        throw DimensionError("policy gain " + Indexed("K", i) + " not finite");
      }
    }
  }
}

PolicyProfile Deviate(const PolicyProfile& K, const PolicyDirection& d,
                      double eps, int nodes) {
  PolicyProfile out = K;
  out.gain(d.agent) = K.gain(d.agent).Axpy(eps, d.gain, nodes);
  return out;
}

PolicyProfile Interpolate(const PolicyProfile& z, const PolicyProfile& phi,
                          double r, int nodes) {
  std::vector<TimeSeries> g;
  for (int i = 0; i < z.agents(); ++i) {
    TimeSeries diff = phi.gain(i).Axpy(-1.0, z.gain(i), nodes);
    g.push_back(z.gain(i).Axpy(r, diff, nodes));
  }
  return PolicyProfile(std::move(g));
}

PolicyDirection Difference(const PolicyProfile& phi, const PolicyProfile& z,
                           int i, int nodes) {
  return {i, phi.gain(i).Axpy(-1.0, z.gain(i), nodes)};
}

bool DistributedQuadraticSpec::operator==(
    const DistributedQuadraticSpec& o) const {
  return grid == o.grid && agents == o.agents && state_dim == o.state_dim &&
         control_dim == o.control_dim && own == o.own && Qbar == o.Qbar &&
         Rbar == o.Rbar && Gbar.rows() == o.Gbar.rows() &&
         Gbar.cols() == o.Gbar.cols() &&
         (Gbar.array() == o.Gbar.array()).all() && gamma == o.gamma &&
         kappa == o.kappa && eta == o.eta;
}

bool AgentDynamics::operator==(const AgentDynamics& o) const {
  return A == o.A && B == o.B && sigma.rows() == o.sigma.rows() &&
         sigma.cols() == o.sigma.cols() &&
         (sigma.array() == o.sigma.array()).all();
}

namespace {

// Quadratic form of (z_i - c * sum_{j != i} z_j)' W (z_i - c * sum_{j != i}
// z_j) + z_i' P z_i over the stacked vector z = (z_1, ..., z_N).
Eigen::MatrixXd MeanFieldForm(int agents, int dim, int i,
                              const Eigen::MatrixXd& own,
                              const Eigen::MatrixXd& shared, double c) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(agents * dim, agents * dim);
  for (int a = 0; a < agents; ++a) {
    const double ca = (a == i) ? 1.0 : -c;
    for (int b = 0; b < agents; ++b) {
      const double cb = (b == i) ? 1.0 : -c;
      out.block(a * dim, b * dim, dim, dim) = ca * cb * shared;
    }
  }
  out.block(i * dim, i * dim, dim, dim) += own;
  return out;
}

TimeSeries MeanFieldSeries(const DistributedQuadraticSpec& d, int i,
                           const TimeSeries& own, const TimeSeries& shared,
                           const TimeSeries& weight, int dim) {
  const double denom = d.agents > 1 ? d.agents - 1 : 1;
  const int nodes = d.grid.steps() + 1;
  if (own.is_constant() && shared.is_constant() && weight.is_constant()) {
    return TimeSeries(MeanFieldForm(d.agents, dim, i, own.at(0), shared.at(0),
                                    weight.scalar(0) / denom));
  }
  std::vector<Eigen::MatrixXd> out(nodes);
  for (int m = 0; m < nodes; ++m) {
    out[m] = MeanFieldForm(d.agents, dim, i, own.at(m), shared.at(m),
                           weight.scalar(m) / denom);
  }
  return TimeSeries(std::move(out));
}

Eigen::MatrixXd BlockDiagonal(const std::vector<Eigen::MatrixXd>& blocks) {
  int rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  int r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

TimeSeries BlockDiagonalSeries(const std::vector<const TimeSeries*>& parts,
                               int nodes) {
  bool constant = true;
  for (const auto* p : parts) constant = constant && p->is_constant();
  const int count = constant ? 1 : nodes;
  std::vector<Eigen::MatrixXd> out(count);
  for (int m = 0; m < count; ++m) {
    std::vector<Eigen::MatrixXd> blocks;
    for (const auto* p : parts) blocks.push_back(p->at(m));
    out[m] = BlockDiagonal(blocks);
  }
  return constant ? TimeSeries(out[0]) : TimeSeries(std::move(out));
}

void RequireShape(const std::string& what, int rows, int cols, int er,
                  int ec) {
  if (rows != er || cols != ec) {
    std::ostringstream os;
    os << "distributed game: " << what << " has shape " << rows << "x" << cols
       << ", expected " << er << "x" << ec;
    throw DimensionError(os.str());
  }
}

}  // namespace

LqGameSpec LiftDistributed(const DistributedQuadraticSpec& d,
                           const std::vector<AgentDynamics>& dynamics) {
  const int N = d.agents;
  const int n = d.state_dim;
  const int k = d.control_dim;
  if (N < 1 || n < 1 || k < 1) {
    throw DimensionError("distributed game: need N, n, k >= 1");
  }
  if (static_cast<int>(d.own.size()) != N ||
      static_cast<int>(dynamics.size()) != N) {
    throw DimensionError("distributed game: expected " + std::to_string(N) +
                         " agent cost and dynamics blocks");
  }
  for (int i = 0; i < N; ++i) {
    const std::string tag = "agent " + std::to_string(i + 1);
    RequireShape(tag + " Q", d.own[i].Q.rows(), d.own[i].Q.cols(), n, n);
    RequireShape(tag + " R", d.own[i].R.rows(), d.own[i].R.cols(), k, k);
    RequireShape(tag + " G", d.own[i].G.rows(), d.own[i].G.cols(), n, n);
    RequireShape(tag + " A", dynamics[i].A.rows(), dynamics[i].A.cols(), n, n);
    RequireShape(tag + " B", dynamics[i].B.rows(), dynamics[i].B.cols(), n, k);
    if (dynamics[i].sigma.rows() != n) {
      throw DimensionError("distributed game: " + tag +
                           " sigma must have " + std::to_string(n) + " rows");
    }
  }
  RequireShape("Qbar", d.Qbar.rows(), d.Qbar.cols(), n, n);
  RequireShape("Rbar", d.Rbar.rows(), d.Rbar.cols(), k, k);
  RequireShape("Gbar", d.Gbar.rows(), d.Gbar.cols(), n, n);
  RequireShape("gamma", d.gamma.rows(), d.gamma.cols(), 1, 1);
  RequireShape("kappa", d.kappa.rows(), d.kappa.cols(), 1, 1);

  const int nodes = d.grid.steps() + 1;
  LqGameSpec spec;
  spec.grid = d.grid;
  spec.control_dims.assign(N, k);
  std::vector<const TimeSeries*> a_parts, b_parts;
  std::vector<Eigen::MatrixXd> s_parts;
  for (const auto& dyn : dynamics) {
    a_parts.push_back(&dyn.A);
    b_parts.push_back(&dyn.B);
    s_parts.push_back(dyn.sigma);
  }
  spec.A = BlockDiagonalSeries(a_parts, nodes);
  spec.B = BlockDiagonalSeries(b_parts, nodes);
  spec.sigma = BlockDiagonal(s_parts);
  const TimeSeries eta = TimeSeries::Scalar(d.eta);
  for (int i = 0; i < N; ++i) {
    AgentCost c;
    c.Q = MeanFieldSeries(d, i, d.own[i].Q, d.Qbar, d.gamma, n);
    c.R = MeanFieldSeries(d, i, d.own[i].R, d.Rbar, d.kappa, k);
    c.G = MeanFieldSeries(d, i, TimeSeries(d.own[i].G), TimeSeries(d.Gbar),
                          eta, n)
              .at(0);
    spec.costs.push_back(std::move(c));
    std::vector<int> cols(n);
    std::iota(cols.begin(), cols.end(), i * n);
    spec.feedback.push_back(std::move(cols));
  }
  return spec;
}

}  // namespace potentia
