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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles.h"
#include "potentia/json_writer.h"
#include "potentia/spec_io.h"

namespace potentia {
namespace {

using testing::TestData;

std::string Tmp(const std::string& name) {
  return ::testing::TempDir() + "potentia_cli_" + name;
}

// Runs the CLI with `args`; stdout and stderr go to files.
int Cli(const std::string& args, const std::string& tag = "run",
        const std::string& env = "") {
  const std::string cmd = env + " " + POTENTIA_CLI + " " + args + " >" +
                          Tmp(tag + ".stdout") + " 2>" + Tmp(tag + ".stderr");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const std::string& path) { return ReadFile(path); }

nlohmann::json ReadJson(const std::string& path) {
  return nlohmann::json::parse(Slurp(path));
}

// A random noisy game written as JSON.
std::string RandomGameFile(std::uint64_t seed, int steps) {
  testing::RandomSpecOptions o;
  o.steps = steps;
  o.a_scale = 0.3;
  o.b_scale = 0.5;
  o.sigma_scale = 0.8;
  GameFile f;
  f.spec = testing::RandomSpec(seed, o);
  f.x0 = Eigen::VectorXd::LinSpaced(2, 0.6, -0.4);
  const std::string path = Tmp("random" + std::to_string(seed) + ".json");
  std::ofstream(path) << DumpJson(GameFileToJson(f));
  return path;
}

TEST(Cli, VerifyExitCodes) {
  EXPECT_EQ(Cli("verify " + TestData("team.toml") + " -o " + Tmp("v.json")), 0);
  const auto report = ReadJson(Tmp("v.json"));
  EXPECT_EQ(report["symmetry"]["verdict"], "MPG");
  EXPECT_TRUE(report.contains("manifest"));
  EXPECT_EQ(Cli("verify " + TestData("distributed-mf.toml")), 0);
  EXPECT_EQ(Cli("verify " + TestData("asymmetric-R.toml")), 3);
  EXPECT_EQ(Cli("verify " + TestData("zero-noise.toml")), 0);
  EXPECT_EQ(Cli("verify " + TestData("malformed.toml"), "bad"), 1);
  const std::string err = Slurp(Tmp("bad.stderr"));
  EXPECT_NE(err.find("agents.1.cost.R"), std::string::npos) << err;
  EXPECT_NE(err.find("line 14"), std::string::npos) << err;
  EXPECT_EQ(Cli("verify " + Tmp("missing.toml")), 1);
  EXPECT_EQ(Cli("frobnicate"), 1);
}

TEST(Cli, PotentialOutputs) {
  EXPECT_EQ(Cli("potential " + TestData("distributed-mf.toml") + " -o " +
                Tmp("p.json")),
            0);
  const auto p = ReadJson(Tmp("p.json"))["potential"]["function"];
  EXPECT_EQ(p["kind"], "quadratic");
  const nlohmann::json want = {{2.0, -0.5}, {-0.5, 3.0}};
  EXPECT_EQ(p["Q"], want);
  EXPECT_EQ(Cli("potential " + TestData("team.toml") + " -o " + Tmp("t.json")),
            0);
  EXPECT_EQ(ReadJson(Tmp("t.json"))["potential"]["function"]["kind"], "team");
  EXPECT_EQ(Cli("potential " + TestData("asymmetric-R.toml")), 3);
  EXPECT_EQ(Cli("potential " + TestData("asymmetric-R.toml") + " --force -o " +
                Tmp("f.json")),
            0);
  EXPECT_EQ(ReadJson(Tmp("f.json"))["potential"]["function"]["not_a_potential"], true);
}

TEST(Cli, NashTeamMatchesRiccati) {
  EXPECT_EQ(Cli("nash " + TestData("team.toml") + " --objective normal -o " +
                Tmp("n.json") + " --trace " + Tmp("trace.csv")),
            0);
  const auto cert = ReadJson(Tmp("n.json"))["certificate"];
  EXPECT_TRUE(cert["certified"].get<bool>());
  const LqGameSpec s = LoadGameFile(TestData("team.toml")).spec;
  const auto oracle =
      testing::OracleLqrGain(s.A.at(0), s.B.at(0), s.costs[0].Q.at(0),
                             s.costs[0].R.at(0), s.costs[0].G, s.grid);
  double gap = 0.0;
  for (int i = 0; i < 2; ++i) {
    const auto& g = cert["K"][std::to_string(i + 1)];
    ASSERT_EQ(g.size(), oracle.size());
    for (size_t m = 0; m < oracle.size(); ++m) {
      for (int q = 0; q < 2; ++q) {
        gap = std::max(gap, std::abs(g[m][0][q].get<double>() - oracle[m](i, q)));
      }
    }
  }
  EXPECT_LE(gap, 1e-4);
  const std::string trace = Slurp(Tmp("trace.csv"));
  EXPECT_EQ(trace.substr(0, trace.find('\n')),
            "iteration,potential,gradient_norm,step");

  EXPECT_EQ(Cli("nash " + TestData("asymmetric-R.toml")), 3);
  EXPECT_EQ(Cli("nash " + TestData("distributed-mf.toml")), 0);
}

TEST(Cli, ReportsAreReproducible) {
  const std::string spec = TestData("distributed-mf.toml");
  ASSERT_EQ(Cli("nash " + spec + " --seed 5 -o " + Tmp("r1.json")), 0);
  ASSERT_EQ(Cli("nash " + spec + " --seed 5 -o " + Tmp("r2.json")), 0);
  EXPECT_EQ(Slurp(Tmp("r1.json")), Slurp(Tmp("r2.json")));
  ASSERT_EQ(Cli("verify " + spec + " --seed 5 -o " + Tmp("r3.json")), 0);
  ASSERT_EQ(Cli("verify " + spec + " --seed 6 -o " + Tmp("r4.json")), 0);
  EXPECT_NE(ReadJson(Tmp("r3.json"))["manifest"]["seeds"],
            ReadJson(Tmp("r4.json"))["manifest"]["seeds"]);
  // Timings only appear on request.
  EXPECT_FALSE(ReadJson(Tmp("r1.json"))["manifest"].contains("stage_seconds"));
  ASSERT_EQ(Cli("verify " + spec + " --timings -o " + Tmp("r5.json")), 0);
  EXPECT_TRUE(ReadJson(Tmp("r5.json"))["manifest"].contains("stage_seconds"));
}

TEST(Cli, CrosscheckZeroNoiseIsExact) {
  ASSERT_EQ(Cli("crosscheck " + TestData("zero-noise.toml") +
                " --paths 200 -o " + Tmp("z.json")),
            0);
  const auto r = ReadJson(Tmp("z.json"))["crosscheck"];
  EXPECT_TRUE(r["pass"].get<bool>());
  for (const auto& e : r["entries"]) {
    EXPECT_EQ(e["stderr"].get<double>(), 0.0);
    const double ode = e["ode"], mc = e["mc"];
    EXPECT_LE(std::abs(ode - mc), 1e-8 * (1.0 + std::abs(ode)));
  }
}

TEST(Cli, CrosscheckDetectsCorruptedSensitivity) {
  const std::string spec = RandomGameFile(41, 50);
  // With 16 entries a single |z| > 2 already fails the 95% rule, so only
  // the size of the deviations is compared here.
  Cli("crosscheck " + spec + " --paths 4000 --seed 2 -o " + Tmp("ok.json"));
  EXPECT_LT(ReadJson(Tmp("ok.json"))["crosscheck"]["max_abs_z"].get<double>(),
            4.0);
  ASSERT_EQ(Cli("crosscheck " + spec + " --paths 4000 --seed 2 --theta-scale 1.5 -o " +
                Tmp("bad.json")),
            4);
  const auto r = ReadJson(Tmp("bad.json"))["crosscheck"];
  EXPECT_FALSE(r["pass"].get<bool>());
  EXPECT_GT(r["max_abs_z"].get<double>(), 5.0);
}

TEST(Cli, CrosscheckIdenticalAcrossThreadCounts) {
  const std::string spec = RandomGameFile(42, 40);
  const std::string args = "crosscheck " + spec + " --paths 2000 --seed 9 -o ";
  Cli(args + Tmp("t1.json"), "t1", "POTENTIA_THREADS=1");
  Cli(args + Tmp("t8.json"), "t8", "POTENTIA_THREADS=8");
  Cli(args + Tmp("f3.json") + " --threads 3", "f3");
  const std::string one = Slurp(Tmp("t1.json"));
  EXPECT_FALSE(one.empty());
  EXPECT_EQ(one, Slurp(Tmp("t8.json")));
  EXPECT_EQ(one, Slurp(Tmp("f3.json")));
}

TEST(Cli, PathsDump) {
  ASSERT_EQ(Cli("paths-dump " + TestData("team.toml") + " --paths 2 -o " +
                Tmp("paths.csv")),
            0);
  const std::string csv = Slurp(Tmp("paths.csv"));
  EXPECT_EQ(csv.substr(0, csv.find(',')), "path");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 101);
}

}  // namespace
}  // namespace potentia
