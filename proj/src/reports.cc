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

#include "potentia/reports.h"

#include <cstdio>

#include <openssl/evp.h>

#include "potentia/errors.h"
#include "potentia/json_writer.h"

namespace potentia {

using nlohmann::json;

std::string Sha256Hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[k]);
    hex += buf;
  }
  return hex;
}

json RunManifest::ToJson() const {
  json j;
  j["input_sha256"] = input_sha256;
  j["subcommand"] = subcommand;
  j["options"] = options;
  j["seeds"] = json::object();
  for (const auto& [k, v] : seeds) j["seeds"][k] = v;
  j["version"] = version;
  if (include_timings) {
    j["stage_seconds"] = json::object();
    for (const auto& [k, v] : stage_seconds) j["stage_seconds"][k] = v;
  }
  return j;
}

json WithManifest(const RunManifest& m, const std::string& key, json body) {
  json j;
  j["manifest"] = m.ToJson();
  j[key] = std::move(body);
  return j;
}

json ToJson(const SymmetryReport& r) {
  json j;
  j["verdict"] = VerdictName(r.verdict);
  j["probes"] = r.probes_used;
  j["basis_swept"] = r.basis_swept;
  j["max_discrepancy"] = r.max_discrepancy;
  j["relative_tolerance"] = r.tolerance;
  json pairs = json::array();
  for (const auto& p : r.pairs) {
    json q;
    q["i"] = p.i + 1;
    q["j"] = p.j + 1;
    q["max_matrix_gap"] = p.max_matrix_gap;
    q["max_scalar_gap"] = p.max_scalar_gap;
    q["lambda_scale"] = p.lambda_scale;
    q["point_gap"] = p.point_gap;
    q["point_scale"] = p.point_scale;
    q["matrix_gap"] = p.matrix_gap;
    q["scalar_gap"] = p.scalar_gap;
    pairs.push_back(std::move(q));
  }
  j["pairs"] = pairs;
  return j;
}

json ToJson(const NashCertificate& c) {
  json j;
  j["certified"] = c.certified;
  j["verdict"] = c.verdict;
  j["potential_kind"] = c.potential_kind;
  j["converged"] = c.converged;
  j["iterations"] = c.iterations;
  j["final_gradient_norm"] = c.final_gradient_norm;
  j["final_potential"] = c.final_potential;
  j["worst_improvement"] = c.worst_improvement;
  j["tolerance"] = c.tolerance;
  if (c.worst_potential_change) {
    j["worst_potential_change"] = *c.worst_potential_change;
  }
  j["potential_consistent"] = c.potential_consistent;
  json gaps = json::array();
  for (const auto& g : c.gaps) {
    json a;
    a["agent"] = g.agent + 1;
    a["worst_improvement"] = g.worst_improvement;
    a["probes"] = g.probes;
    a["best_response_checked"] = g.best_response_checked;
    if (g.best_response_checked) {
      a["best_response_improvement"] = g.best_response_improvement;
    }
    if (!g.notice.empty()) a["notice"] = g.notice;
    gaps.push_back(std::move(a));
  }
  j["agents"] = gaps;
  j["notices"] = c.notices;
  json K = json::object();
  for (int i = 0; i < c.profile.agents(); ++i) {
    K[std::to_string(i + 1)] = SeriesToJson(c.profile.gain(i));
  }
  j["K"] = K;
  return j;
}

json ToJson(const CrosscheckReport& r) {
  json j;
  j["pass"] = r.pass;
  j["paths"] = r.paths;
  j["t0"] = r.t0;
  j["x0"] = VectorToJson(r.x0);
  j["max_abs_z"] = r.max_abs_z;
  j["fraction_within_2"] = r.fraction_within_2;
  json rows = json::array();
  for (const auto& e : r.entries) {
    json row;
    row["order"] = e.order;
    row["i"] = e.i + 1;
    row["h"] = e.h + 1;
    if (e.order == 2) row["l"] = e.l + 1;
    row["direction"] = e.direction;
    row["ode"] = e.ode;
    row["mc"] = e.mc;
    row["stderr"] = e.standard_error;
    row["z"] = e.z;
    row["flagged"] = e.flagged;
    row["ok"] = e.ok;
    if (!e.error.empty()) row["error"] = e.error;
    rows.push_back(std::move(row));
  }
  j["entries"] = rows;
  return j;
}

json PotentialToJson(const PotentialFunction& p) {
  json j;
  switch (p.kind()) {
    case PotentialFunction::Kind::kTeam:
      j["kind"] = "team";
      j["agent"] = p.team_agent() + 1;
      break;
    case PotentialFunction::Kind::kQuadratic:
      j["kind"] = "quadratic";
      j["Q"] = SeriesToJson(p.joint().Q);
      j["R"] = SeriesToJson(p.joint().R);
      j["G"] = MatrixToJson(p.joint().G);
      break;
    case PotentialFunction::Kind::kLineIntegral: {
      j["kind"] = "line-integral";
      j["n_quad"] = p.n_quad();
      j["not_a_potential"] = p.not_a_potential();
      json base = json::object();
      for (int i = 0; i < p.base().agents(); ++i) {
        base[std::to_string(i + 1)] = SeriesToJson(p.base().gain(i));
      }
      j["base"] = base;
      break;
    }
  }
  return j;
}

namespace {

Eigen::MatrixXd MatrixFromJson(const json& j) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  const int rows = static_cast<int>(j.size());
  const int cols = rows ? static_cast<int>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) {
      throw ParseError("potential: ragged matrix");
    }
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

TimeSeries SeriesFromJson(const json& j) {
  if (j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() &&
      j[0][0].is_array()) {
    std::vector<Eigen::MatrixXd> s;
    for (const auto& m : j) s.push_back(MatrixFromJson(m));
    return TimeSeries(std::move(s));
  }
  return TimeSeries(MatrixFromJson(j));
}

}  // namespace

PotentialFunction PotentialFromJson(const json& in) {
  // Accept a bare potential or a report wrapping it.
  const json& j = in.contains("potential") ? in.at("potential") : in;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "team") {
      return PotentialFunction::Team(j.at("agent").get<int>() - 1);
    }
    if (kind == "quadratic") {
      AgentCost c;
      c.Q = SeriesFromJson(j.at("Q"));
      c.R = SeriesFromJson(j.at("R"));
      c.G = MatrixFromJson(j.at("G"));
      return PotentialFunction::Quadratic(std::move(c));
    }
    if (kind == "line-integral") {
      const json& b = j.at("base");
      std::vector<TimeSeries> g(b.size());
      for (size_t i = 0; i < b.size(); ++i) {
        g[i] = SeriesFromJson(b.at(std::to_string(i + 1)));
      }
      return PotentialFunction::LineIntegral(PolicyProfile(std::move(g)),
                                             j.at("n_quad").get<int>(),
                                             j.at("not_a_potential").get<bool>());
    }
    throw ParseError("potential: unknown kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ParseError(std::string("potential: ") + e.what());
  }
}

}  // namespace potentia
