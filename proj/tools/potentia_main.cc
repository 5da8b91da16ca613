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

// potentia: command-line front end.
//
// Exit codes:
//   verify      0 MPG, 2 CLPG only, 3 not a potential game
//   potential   0 built, 3 refused
//   nash        0 certified, 5 not certified, 3 refused
//   crosscheck  0 PASS, 4 FAIL
//   any         1 input or solver error

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "potentia/crosscheck.h"
#include "potentia/errors.h"
#include "potentia/json_writer.h"
#include "potentia/monte_carlo.h"
#include "potentia/nash.h"
#include "potentia/potential.h"
#include "potentia/reports.h"
#include "potentia/seeds.h"
#include "potentia/spec_io.h"

namespace {

using namespace potentia;

enum Stage : std::uint64_t {
  kVerifyStage = 1,
  kPotentialStage = 2,
  kNashStage = 3,
  kCrosscheckStage = 4,
  kPathsStage = 5,
};

struct Common {
  std::string spec_path;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
  bool timings = false;
  std::vector<double> x0;
  std::optional<double> t0;
};

class Timer {
 public:
  explicit Timer(RunManifest* m) : manifest_(m) {}
  template <typename F>
  auto Run(const std::string& stage, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    auto result = f();
    const double s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    manifest_->stage_seconds[stage] = s;
    std::fprintf(stderr, "[%s] %.3f s\n", stage.c_str(), s);
    return result;
  }

 private:
  RunManifest* manifest_;
};

void Emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error("cannot write '" + out + "'");
  f << text;
}

RunManifest Manifest(const Common& c, const std::string& sub,
                     const std::string& raw) {
  RunManifest m;
  m.input_sha256 = Sha256Hex(raw);
  m.subcommand = sub;
  m.include_timings = c.timings;
  m.seeds["seed"] = c.seed;
  return m;
}

double StartTime(const Common& c, const GameFile& f) {
  if (c.t0) return *c.t0;
  if (f.t0) return *f.t0;
  return f.spec.grid.start();
}

std::optional<Eigen::VectorXd> StartState(const Common& c, const GameFile& f) {
  if (!c.x0.empty()) {
    Eigen::VectorXd x(c.x0.size());
    for (size_t k = 0; k < c.x0.size(); ++k) x(k) = c.x0[k];
    if (x.size() != f.spec.state_dim()) {
      throw DimensionError("--x0 has " + std::to_string(x.size()) +
                           " entries, expected " +
                           std::to_string(f.spec.state_dim()));
    }
    return x;
  }
  return f.x0;
}

PolicyProfile StartPolicy(const GameFile& f) {
  return f.policy ? *f.policy : PolicyProfile::Zero(f.spec);
}

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("spec", c.spec_path, "game file (TOML or JSON)")
      ->required();
  app->add_option("--out,-o", c.out, "output file (default stdout)");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--threads", c.threads,
                  "worker threads (default POTENTIA_THREADS or all cores)");
  app->add_flag("--timings", c.timings,
                "embed wall-clock stage times in the manifest");
}

void AddStart(CLI::App* app, Common& c) {
  app->add_option("--t0", c.t0, "start time (a grid node)");
  app->add_option("--x0", c.x0, "start state, comma separated")
      ->delimiter(',');
}

// ---- verify

struct VerifyArgs {
  Common c;
  int probes = 8;
  double tol = 1e-7;
  int profiles = 2;
};

int Verify(const VerifyArgs& a) {
  std::string raw;
  const GameFile f = LoadGameFile(a.c.spec_path, &raw);
  RunManifest m = Manifest(a.c, "verify", raw);
  SymmetryOptions so;
  so.probes = a.probes;
  so.relative_tolerance = a.tol;
  so.seed = DeriveSeed(a.c.seed, kVerifyStage, 0);
  std::vector<PolicyProfile> profiles{StartPolicy(f)};
  for (int p = 0; p < a.profiles; ++p) {
    profiles.push_back(
        RandomProfile(f.spec, DeriveSeed(a.c.seed, kVerifyStage, p + 1), 0.5));
  }
  if (auto x = StartState(a.c, f)) {
    so.t = StartTime(a.c, f);
    so.x = *x;
  }
  m.seeds["symmetry"] = so.seed;
  m.options = {{"probes", a.probes},
               {"relative_tolerance", a.tol},
               {"random_profiles", a.profiles}};
  Timer timer(&m);
  const SymmetryReport r =
      timer.Run("check_symmetry", [&] { return CheckSymmetry(f.spec, profiles, so); });
  Emit(a.c.out, DumpJson(WithManifest(m, "symmetry", ToJson(r))));
  std::fprintf(stderr, "verdict: %s (max discrepancy %.3g)\n",
               VerdictName(r.verdict), r.max_discrepancy);
  switch (r.verdict) {
    case Verdict::kMpg:
      return 0;
    case Verdict::kClpg:
      return 2;
    case Verdict::kNotPotential:
      return 3;
  }
  return 1;
}

// ---- potential

struct PotentialArgs {
  Common c;
  std::string base = "policy";
  int n_quad = 16;
  int probes = 8;
  bool force = false;
};

int Potential(const PotentialArgs& a) {
  std::string raw;
  const GameFile f = LoadGameFile(a.c.spec_path, &raw);
  RunManifest m = Manifest(a.c, "potential", raw);
  m.options = {{"base", a.base}, {"n_quad", a.n_quad}, {"probes", a.probes},
               {"force", a.force}};
  Timer timer(&m);
  nlohmann::json body;
  std::optional<PotentialFunction> phi;
  if (f.distributed) {
    phi = BuildDistributedPotential(*f.distributed);
  } else if (AllCostsEqual(f.spec)) {
    phi = PotentialFunction::Team(0);
  } else {
    if (a.base != "policy" && a.base != "zero") {
      throw Error("--base must be 'policy' or 'zero'");
    }
    const PolicyProfile base =
        a.base == "zero" ? PolicyProfile::Zero(f.spec) : StartPolicy(f);
    SymmetryOptions so;
    so.probes = a.probes;
    so.seed = DeriveSeed(a.c.seed, kPotentialStage, 0);
    m.seeds["symmetry"] = so.seed;
    const SymmetryReport r = timer.Run(
        "check_symmetry", [&] { return CheckSymmetry(f.spec, base, so); });
    body["symmetry"] = ToJson(r);
    try {
      phi = BuildLineIntegralPotential(f.spec, base, a.n_quad, r, a.force);
    } catch (const RefusalError& e) {
      body["refused"] = e.what();
      Emit(a.c.out, DumpJson(WithManifest(m, "potential", body)));
      std::fprintf(stderr, "refused: %s\n", e.what());
      return 3;
    }
  }
  body["function"] = PotentialToJson(*phi);
  if (auto x = StartState(a.c, f)) {
    const double t = StartTime(a.c, f);
    body["value_at_start"] = timer.Run("evaluate", [&] {
      return phi->Evaluate(f.spec, StartPolicy(f), t, *x);
    });
  }
  Emit(a.c.out, DumpJson(WithManifest(m, "potential", body)));
  return 0;
}

// ---- nash

struct NashArgs {
  Common c;
  int probes = 50;
  double tol = 1e-5;
  double grad_tol = 1e-6;
  int max_iter = 2000;
  std::string objective = "auto";
  std::string trace;
};

int Nash(const NashArgs& a) {
  std::string raw;
  const GameFile f = LoadGameFile(a.c.spec_path, &raw);
  RunManifest m = Manifest(a.c, "nash", raw);
  const double t0 = StartTime(a.c, f);
  auto x0 = StartState(a.c, f);
  if (a.objective == "normal") {
    x0.reset();
  } else if (a.objective == "point") {
    if (!x0) throw Error("--objective point needs x0 (--x0 or [initial])");
  } else if (a.objective != "auto") {
    throw Error("--objective must be auto, point or normal");
  }
  const Objective obj = x0 ? Objective::AtPoint(f.spec, t0, *x0)
                           : Objective::Distributional(f.spec, t0);
  NashOptions no;
  no.max_iter = a.max_iter;
  no.tol = a.grad_tol;
  no.seed = DeriveSeed(a.c.seed, kNashStage, 0);
  no.verify.probes = a.probes;
  no.verify.tolerance = a.tol;
  no.verify.seed = DeriveSeed(a.c.seed, kNashStage, 1);
  if (f.distributed) no.potential = BuildDistributedPotential(*f.distributed);
  m.seeds["descent"] = no.seed;
  m.seeds["verify"] = no.verify.seed;
  m.options = {{"probes", a.probes},
               {"tolerance", a.tol},
               {"gradient_tolerance", a.grad_tol},
               {"max_iter", a.max_iter},
               {"t0", t0},
               {"objective", x0 ? "point" : "standard-normal"}};
  if (x0) m.options["x0"] = VectorToJson(*x0);
  Timer timer(&m);
  NashCertificate cert;
  try {
    cert = timer.Run("solve_nash",
                     [&] { return SolveNash(f.spec, StartPolicy(f), obj, no); });
  } catch (const RefusalError& e) {
    nlohmann::json body;
    body["refused"] = e.what();
    Emit(a.c.out, DumpJson(WithManifest(m, "certificate", body)));
    std::fprintf(stderr, "refused: %s\n", e.what());
    return 3;
  }
  if (!a.trace.empty()) {
    std::ofstream t(a.trace);
    if (!t) throw Error("cannot write '" + a.trace + "'");
    WriteTraceCsv(t, cert.trace);
  }
  Emit(a.c.out, DumpJson(WithManifest(m, "certificate", ToJson(cert))));
  std::fprintf(stderr, "%s: worst improvement %.3g after %d iterations\n",
               cert.certified ? "certified" : "not certified",
               cert.worst_improvement, cert.iterations);
  return cert.certified ? 0 : 5;
}

// ---- crosscheck

struct CrosscheckArgs {
  Common c;
  int paths = 20000;
  double theta_scale = 1.0;
};

int Crosscheck(const CrosscheckArgs& a) {
  std::string raw;
  const GameFile f = LoadGameFile(a.c.spec_path, &raw);
  RunManifest m = Manifest(a.c, "crosscheck", raw);
  const double t0 = StartTime(a.c, f);
  auto x0 = StartState(a.c, f);
  if (!x0) x0 = Eigen::VectorXd::Ones(f.spec.state_dim());
  CrosscheckOptions co;
  co.paths = a.paths;
  co.seed = DeriveSeed(a.c.seed, kCrosscheckStage, 0);
  co.threads = a.c.threads;
  co.theta_forcing_scale = a.theta_scale;
  m.options = {{"paths", a.paths}, {"t0", t0}, {"x0", VectorToJson(*x0)}};
  if (a.theta_scale != 1.0) m.options["theta_forcing_scale"] = a.theta_scale;
  Timer timer(&m);
  const CrosscheckReport r = timer.Run("crosscheck", [&] {
    return RunCrosscheck(f.spec, StartPolicy(f), t0, *x0, co);
  });
  m.seeds["directions"] = r.direction_seed;
  m.seeds["paths"] = r.path_seed;
  Emit(a.c.out, DumpJson(WithManifest(m, "crosscheck", ToJson(r))));
  std::fprintf(stderr, "%s: %zu entries, max |z| %.3g, %.1f%% within 2\n",
               r.pass ? "PASS" : "FAIL", r.entries.size(), r.max_abs_z,
               100.0 * r.fraction_within_2);
  return r.pass ? 0 : 4;
}

// ---- paths-dump

struct PathsArgs {
  Common c;
  int paths = 10;
};

int PathsDump(const PathsArgs& a) {
  const GameFile f = LoadGameFile(a.c.spec_path);
  const double t0 = StartTime(a.c, f);
  auto x0 = StartState(a.c, f);
  if (!x0) x0 = Eigen::VectorXd::Ones(f.spec.state_dim());
  McConfig cfg;
  cfg.n_paths = a.paths;
  cfg.seed = DeriveSeed(a.c.seed, kPathsStage, 0);
  cfg.threads = a.c.threads;
  std::ostringstream os;
  WritePathsCsv(os, f.spec, StartPolicy(f), {}, {}, t0, *x0, cfg, a.paths);
  Emit(a.c.out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Potential-game analysis of linear-quadratic stochastic "
               "differential games"};
  app.set_version_flag("--version", std::string(POTENTIA_VERSION));
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "symmetric-Jacobian test");
  AddCommon(verify, va.c);
  AddStart(verify, va.c);
  verify->add_option("--probes", va.probes, "random probes per pair");
  verify->add_option("--tol", va.tol, "relative tolerance");
  verify->add_option("--profiles", va.profiles,
                     "random base profiles besides the file's policy");

  PotentialArgs pa;
  auto* potential = app.add_subcommand("potential", "build a potential");
  AddCommon(potential, pa.c);
  AddStart(potential, pa.c);
  potential->add_option("--base", pa.base, "line-integral base: policy|zero");
  potential->add_option("--nquad", pa.n_quad, "Gauss-Legendre nodes");
  potential->add_option("--probes", pa.probes, "symmetry probes");
  potential->add_flag("--force", pa.force,
                      "build even if the symmetry test fails (marked)");

  NashArgs na;
  auto* nash = app.add_subcommand("nash", "Nash equilibrium by potential descent");
  AddCommon(nash, na.c);
  AddStart(nash, na.c);
  nash->add_option("--probes", na.probes, "deviation probes per agent and radius");
  nash->add_option("--tol", na.tol, "certification tolerance");
  nash->add_option("--grad-tol", na.grad_tol, "gradient stopping tolerance");
  nash->add_option("--max-iter", na.max_iter, "descent iterations");
  nash->add_option("--objective", na.objective,
                   "auto (point if x0 is known), point, or normal (x0 ~ N(0, I))");
  nash->add_option("--trace", na.trace, "CSV of the descent trace");

  CrosscheckArgs ca;
  auto* cross = app.add_subcommand("crosscheck", "ODE vs Monte Carlo derivatives");
  AddCommon(cross, ca.c);
  AddStart(cross, ca.c);
  cross->add_option("--paths", ca.paths, "Monte Carlo paths");
  cross->add_option("--theta-scale", ca.theta_scale)->group("");

  PathsArgs da;
  auto* dump = app.add_subcommand("paths-dump", "CSV of simulated paths");
  AddCommon(dump, da.c);
  AddStart(dump, da.c);
  dump->add_option("--paths", da.paths, "number of paths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    if (*verify) return Verify(va);
    if (*potential) return Potential(pa);
    if (*nash) return Nash(na);
    if (*cross) return Crosscheck(ca);
    if (*dump) return PathsDump(da);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
