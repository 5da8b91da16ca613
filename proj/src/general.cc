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

#include "potentia/general.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "potentia/errors.h"

namespace potentia {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kStep = 1e-5;

class Checker {
 public:
  Checker(SelfTestReport* report, double tol) : report_(report), tol_(tol) {}

  void Shape(const std::string& name, bool ok) {
    if (!ok) Fail(name + ": output shape does not match the metadata");
  }

  void Compare(const std::string& name, const MatrixXd& analytic,
               const MatrixXd& numeric) {
    if (analytic.rows() != numeric.rows() ||
        analytic.cols() != numeric.cols()) {
      Fail(name + ": output shape does not match the metadata");
      return;
    }
    if (!analytic.allFinite()) {
      Fail(name + ": non-finite derivative");
      return;
    }
    const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
    const double err = (analytic - numeric).cwiseAbs().maxCoeff() / scale;
    if (err > report_->worst_relative_error) {
      report_->worst_relative_error = err;
      report_->worst_callback = name;
    }
    if (err > tol_) {
      std::ostringstream os;
      os << name << ": relative error " << err << " against finite differences";
      Fail(os.str());
    }
  }

 private:
  void Fail(const std::string& msg) {
    report_->passed = false;
    report_->failures.push_back(msg);
  }

  SelfTestReport* report_;
  double tol_;
};

// Central-difference Jacobian of a vector function of z.
template <typename F>
MatrixXd NumericJacobian(F&& f, const VectorXd& z, int out_dim) {
  MatrixXd J(out_dim, z.size());
  for (int k = 0; k < z.size(); ++k) {
    const double h = kStep * std::max(1.0, std::abs(z(k)));
    VectorXd zp = z, zm = z;
    zp(k) += h;
    zm(k) -= h;
    J.col(k) = (f(zp) - f(zm)) / (2.0 * h);
  }
  return J;
}

void CheckVectorField(Checker& chk, const std::string& name,
                      const VectorField& v, int out_dim, int nx, double t,
                      const VectorXd& z) {
  if (!v.value || !v.jacobian || !v.hessians) {
    chk.Shape(name + " (missing callback)", false);
    return;
  }
  auto split = [nx](const VectorXd& w) {
    return std::pair<VectorXd, VectorXd>(w.head(nx), w.tail(w.size() - nx));
  };
  auto [x, a] = split(z);
  const VectorXd val = v.value(t, x, a);
  chk.Shape(name + ".value", val.size() == out_dim);
  if (val.size() != out_dim) return;
  auto f = [&](const VectorXd& w) {
    auto [xx, aa] = split(w);
    return VectorXd(v.value(t, xx, aa));
  };
  chk.Compare(name + ".jacobian", v.jacobian(t, x, a),
              NumericJacobian(f, z, out_dim));
  const auto hs = v.hessians(t, x, a);
  chk.Shape(name + ".hessians", static_cast<int>(hs.size()) == out_dim);
  if (static_cast<int>(hs.size()) != out_dim) return;
  for (int c = 0; c < out_dim; ++c) {
    auto g = [&](const VectorXd& w) {
      auto [xx, aa] = split(w);
      return VectorXd(v.jacobian(t, xx, aa).row(c).transpose());
    };
    chk.Compare(name + ".hessians[" + std::to_string(c) + "]", hs[c],
                NumericJacobian(g, z, static_cast<int>(z.size())));
  }
}

}  // namespace

int GeneralCoefficients::control_dim() const {
  int s = 0;
  for (int k : control_dims) s += k;
  return s;
}

int GeneralCoefficients::control_offset(int i) const {
  int s = 0;
  for (int h = 0; h < i; ++h) s += control_dims[h];
  return s;
}

SelfTestReport SelfTestCoefficients(const GeneralCoefficients& c,
                                    const TimeGrid& grid, std::uint64_t seed,
                                    int points, double tol) {
  SelfTestReport report;
  Checker chk(&report, tol);
  const int nx = c.state_dim;
  const int na = c.control_dim();
  chk.Shape("running costs", static_cast<int>(c.running.size()) == c.agents());
  chk.Shape("terminal costs",
            static_cast<int>(c.terminal.size()) == c.agents());
  if (!report.passed) return report;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(grid.start(), grid.horizon());
  for (int p = 0; p < points; ++p) {
    const double t = unif(rng);
    VectorXd z(nx + na);
    for (int k = 0; k < z.size(); ++k) z(k) = normal(rng);
    const VectorXd x = z.head(nx), a = z.tail(na);
    CheckVectorField(chk, "drift", c.drift, nx, nx, t, z);
    for (int k = 0; k < c.noise_dim(); ++k) {
      CheckVectorField(chk, "diffusion[" + std::to_string(k) + "]",
                       c.diffusion[k], nx, nx, t, z);
    }
    for (int i = 0; i < c.agents(); ++i) {
      const std::string tag = std::to_string(i + 1);
      const auto& f = c.running[i];
      if (!f.value || !f.gradient || !f.hessian) {
        chk.Shape("f[" + tag + "] (missing callback)", false);
      } else {
        auto fv = [&](const VectorXd& w) {
          return VectorXd::Constant(1, f.value(t, w.head(nx), w.tail(na)));
        };
        chk.Compare("f[" + tag + "].gradient",
                    f.gradient(t, x, a).transpose(),
                    NumericJacobian(fv, z, 1));
        auto fg = [&](const VectorXd& w) {
          return VectorXd(f.gradient(t, w.head(nx), w.tail(na)));
        };
        chk.Compare("f[" + tag + "].hessian", f.hessian(t, x, a),
                    NumericJacobian(fg, z, nx + na));
      }
      const auto& g = c.terminal[i];
      if (!g.value || !g.gradient || !g.hessian) {
        chk.Shape("g[" + tag + "] (missing callback)", false);
      } else {
        auto gv = [&](const VectorXd& w) {
          return VectorXd::Constant(1, g.value(w));
        };
        chk.Compare("g[" + tag + "].gradient", g.gradient(x).transpose(),
                    NumericJacobian(gv, x, 1));
        auto gg = [&](const VectorXd& w) { return VectorXd(g.gradient(w)); };
        chk.Compare("g[" + tag + "].hessian", g.hessian(x),
                    NumericJacobian(gg, x, nx));
      }
    }
  }
  return report;
}

SelfTestReport SelfTestPolicy(const FeedbackPolicy& p, int state_dim,
                              const TimeGrid& grid, std::uint64_t seed,
                              int points, double tol) {
  SelfTestReport report;
  Checker chk(&report, tol);
  if (!p.value || !p.jacobian || !p.hessians) {
    chk.Shape("policy (missing callback)", false);
    return report;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(grid.start(), grid.horizon());
  for (int q = 0; q < points; ++q) {
    const double t = unif(rng);
    VectorXd x(state_dim);
    for (int k = 0; k < state_dim; ++k) x(k) = normal(rng);
    const VectorXd v = p.value(t, x);
    chk.Shape("policy.value", v.size() == p.dim);
    if (v.size() != p.dim) return report;
    auto pv = [&](const VectorXd& w) { return VectorXd(p.value(t, w)); };
    chk.Compare("policy.jacobian", p.jacobian(t, x),
                NumericJacobian(pv, x, p.dim));
    const auto hs = p.hessians(t, x);
    chk.Shape("policy.hessians", static_cast<int>(hs.size()) == p.dim);
    if (static_cast<int>(hs.size()) != p.dim) return report;
    for (int c = 0; c < p.dim; ++c) {
      auto pj = [&](const VectorXd& w) {
        return VectorXd(p.jacobian(t, w).row(c).transpose());
      };
      chk.Compare("policy.hessians[" + std::to_string(c) + "]", hs[c],
                  NumericJacobian(pj, x, state_dim));
    }
  }
  return report;
}

void RequireSelfTest(const GeneralCoefficients& c,
                     const std::vector<FeedbackPolicy>& policies,
                     const TimeGrid& grid, std::uint64_t seed) {
  auto report = SelfTestCoefficients(c, grid, seed);
  for (size_t i = 0; i < policies.size() && report.passed; ++i) {
    report = SelfTestPolicy(policies[i], c.state_dim, grid, seed + 1 + i);
  }
  if (!report.passed) {
    throw Error("derivative self-test failed: " + report.failures.front());
  }
}

GeneralCoefficients FromLqSpec(const LqGameSpec& spec) {
  GeneralCoefficients c;
  const int nx = spec.state_dim();
  const int na = spec.control_dim();
  const int nz = nx + na;
  c.state_dim = nx;
  c.control_dims = spec.control_dims;
  const TimeGrid grid = spec.grid;
  const TimeSeries A = spec.A, B = spec.B;
  c.drift.value = [=](double t, const VectorXd& x, const VectorXd& a) {
    return VectorXd(A.Evaluate(grid, t) * x + B.Evaluate(grid, t) * a);
  };
  c.drift.jacobian = [=](double t, const VectorXd&, const VectorXd&) {
    MatrixXd J(nx, nz);
    J << A.Evaluate(grid, t), B.Evaluate(grid, t);
    return J;
  };
  c.drift.hessians = [=](double, const VectorXd&, const VectorXd&) {
    return std::vector<MatrixXd>(nx, MatrixXd::Zero(nz, nz));
  };
  for (int k = 0; k < spec.noise_dim(); ++k) {
    const VectorXd col = spec.sigma.col(k);
    VectorField v;
    v.value = [=](double, const VectorXd&, const VectorXd&) { return col; };
    v.jacobian = [=](double, const VectorXd&, const VectorXd&) {
      return MatrixXd(MatrixXd::Zero(nx, nz));
    };
    v.hessians = [=](double, const VectorXd&, const VectorXd&) {
      return std::vector<MatrixXd>(nx, MatrixXd::Zero(nz, nz));
    };
    c.diffusion.push_back(std::move(v));
  }
  for (const auto& cost : spec.costs) {
    const TimeSeries Q = cost.Q, R = cost.R;
    const MatrixXd G = cost.G;
    ScalarField f;
    f.value = [=](double t, const VectorXd& x, const VectorXd& a) {
      return 0.5 * (x.dot(Q.Evaluate(grid, t) * x) +
                    a.dot(R.Evaluate(grid, t) * a));
    };
    f.gradient = [=](double t, const VectorXd& x, const VectorXd& a) {
      VectorXd g(nz);
      g << Q.Evaluate(grid, t) * x, R.Evaluate(grid, t) * a;
      return g;
    };
    f.hessian = [=](double t, const VectorXd&, const VectorXd&) {
      MatrixXd H = MatrixXd::Zero(nz, nz);
      H.topLeftCorner(nx, nx) = Q.Evaluate(grid, t);
      H.bottomRightCorner(na, na) = R.Evaluate(grid, t);
      return H;
    };
    c.running.push_back(std::move(f));
    TerminalField g;
    g.value = [=](const VectorXd& x) { return 0.5 * x.dot(G * x); };
    g.gradient = [=](const VectorXd& x) { return VectorXd(G * x); };
    g.hessian = [=](const VectorXd&) { return G; };
    c.terminal.push_back(std::move(g));
  }
  return c;
}

FeedbackPolicy LinearFeedback(const TimeSeries& gain, const TimeGrid& grid) {
  FeedbackPolicy p;
  p.dim = gain.rows();
  const int nx = gain.cols();
  const int k = gain.rows();
  p.value = [=](double t, const VectorXd& x) {
    return VectorXd(gain.Evaluate(grid, t) * x);
  };
  p.jacobian = [=](double t, const VectorXd&) { return gain.Evaluate(grid, t); };
  p.hessians = [=](double, const VectorXd&) {
    return std::vector<MatrixXd>(k, MatrixXd::Zero(nx, nx));
  };
  return p;
}

}  // namespace potentia
