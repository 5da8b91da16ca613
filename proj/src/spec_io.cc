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

#include "potentia/spec_io.h"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "potentia/errors.h"
#include "potentia/json_writer.h"

namespace potentia {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

// TOML is converted to the JSON tree; field paths keep their source lines.
json FromToml(const toml::node& n, const std::string& path,
              std::map<std::string, int>& lines) {
  if (!path.empty()) lines[path] = static_cast<int>(n.source().begin.line);
  if (const auto* t = n.as_table()) {
    json out = json::object();
    for (const auto& [k, v] : *t) {
      const std::string key(k.str());
      out[key] = FromToml(v, path.empty() ? key : path + "." + key, lines);
    }
    return out;
  }
  if (const auto* a = n.as_array()) {
    json out = json::array();
    for (size_t i = 0; i < a->size(); ++i) {
      out.push_back(FromToml(*a->get(i), path + "[" + std::to_string(i) + "]",
                             lines));
    }
    return out;
  }
  if (const auto* v = n.as_integer()) return json(v->get());
  if (const auto* v = n.as_floating_point()) return json(v->get());
  if (const auto* v = n.as_boolean()) return json(v->get());
  if (const auto* v = n.as_string()) return json(v->get());
  return json();
}

class Reader {
 public:
  explicit Reader(const std::map<std::string, int>* lines) : lines_(lines) {}

  [[noreturn]] void Fail(const std::string& path, const std::string& msg) const {
    std::ostringstream os;
    os << "field '" << path << "'";
    if (lines_) {
      auto it = lines_->find(path);
      if (it != lines_->end()) os << " (line " << it->second << ")";
    }
    os << ": " << msg;
    throw ParseError(os.str());
  }

  const json& Table(const json& parent, const std::string& path,
                    const std::string& key) const {
    const std::string p = Join(path, key);
    if (!parent.contains(key)) Fail(p, "missing");
    const json& j = parent.at(key);
    if (!j.is_object()) Fail(p, "expected a table");
    return j;
  }

  const json& Field(const json& parent, const std::string& path,
                    const std::string& key) const {
    if (!parent.contains(key)) Fail(Join(path, key), "missing");
    return parent.at(key);
  }

  void Allow(const json& obj, const std::string& path,
             std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!ok.count(it.key())) Fail(Join(path, it.key()), "unknown field");
    }
  }

  double Number(const json& j, const std::string& path) const {
    if (!j.is_number()) Fail(path, "expected a number");
    return j.get<double>();
  }

  int Integer(const json& j, const std::string& path) const {
    if (!j.is_number_integer()) Fail(path, "expected an integer");
    return j.get<int>();
  }

  VectorXd Vector(const json& j, const std::string& path) const {
    if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
    if (!j.is_array()) Fail(path, "expected an array of numbers");
    VectorXd v(j.size());
    for (size_t k = 0; k < j.size(); ++k) {
      v(k) = Number(j[k], path + "[" + std::to_string(k) + "]");
    }
    return v;
  }

  std::vector<int> Integers(const json& j, const std::string& path) const {
    if (!j.is_array()) Fail(path, "expected an array of integers");
    std::vector<int> out;
    for (size_t k = 0; k < j.size(); ++k) {
      out.push_back(Integer(j[k], path + "[" + std::to_string(k) + "]"));
    }
    return out;
  }

  MatrixXd Matrix(const json& j, const std::string& path) const {
    if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty()) Fail(path, "expected a nested array");
    const size_t rows = j.size();
    if (!j[0].is_array()) Fail(path, "expected a nested array (matrix rows)");
    const size_t cols = j[0].size();
    MatrixXd m(rows, cols);
    for (size_t r = 0; r < rows; ++r) {
      const std::string rp = path + "[" + std::to_string(r) + "]";
      if (!j[r].is_array()) Fail(rp, "expected a matrix row");
      if (j[r].size() != cols) Fail(rp, "ragged matrix row");
      for (size_t c = 0; c < cols; ++c) {
        m(r, c) = Number(j[r][c], rp + "[" + std::to_string(c) + "]");
      }
    }
    return m;
  }

  // Matrix or array of `nodes` matrices.
  TimeSeries Series(const json& j, const std::string& path, int nodes) const {
    if (j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() &&
        j[0][0].is_array()) {
      if (static_cast<int>(j.size()) != nodes) {
        Fail(path, "expected " + std::to_string(nodes) + " node samples, got " +
                       std::to_string(j.size()));
      }
      std::vector<MatrixXd> s;
      for (size_t m = 0; m < j.size(); ++m) {
        s.push_back(Matrix(j[m], path + "[" + std::to_string(m) + "]"));
        if (s.back().rows() != s[0].rows() || s.back().cols() != s[0].cols()) {
          Fail(path + "[" + std::to_string(m) + "]",
               "sample shape differs from node 0");
        }
      }
      return TimeSeries(std::move(s));
    }
    return TimeSeries(Matrix(j, path));
  }

  // Number or array of `nodes` numbers, as a 1x1 series.
  TimeSeries ScalarSeries(const json& j, const std::string& path,
                          int nodes) const {
    if (j.is_number()) return TimeSeries::Scalar(j.get<double>());
    const VectorXd v = Vector(j, path);
    if (v.size() != nodes) {
      Fail(path, "expected a number or " + std::to_string(nodes) + " numbers");
    }
    std::vector<MatrixXd> s;
    for (int m = 0; m < nodes; ++m) s.push_back(MatrixXd::Constant(1, 1, v(m)));
    return TimeSeries(std::move(s));
  }

  // Agent tables keyed "1".."N".
  std::vector<const json*> Agents(const json& table, const std::string& path,
                                  int count) const {
    std::vector<const json*> out(count, nullptr);
    for (auto it = table.begin(); it != table.end(); ++it) {
      int idx = 0;
      try {
        size_t used = 0;
        idx = std::stoi(it.key(), &used);
        if (used != it.key().size()) idx = 0;
      } catch (const std::exception&) {
        idx = 0;
      }
      if (idx < 1 || idx > count) {
        Fail(Join(path, it.key()),
             "agent keys must be 1.." + std::to_string(count));
      }
      if (!it.value().is_object()) Fail(Join(path, it.key()), "expected a table");
      out[idx - 1] = &it.value();
    }
    return out;
  }

  static std::string Join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  const std::map<std::string, int>* lines_;
};

GameFile Parse(const json& root, const std::map<std::string, int>* lines) {
  Reader rd(lines);
  if (!root.is_object()) rd.Fail("<root>", "expected a table");
  rd.Allow(root, "", {"grid", "dynamics", "agents", "initial", "distributed"});
  const json& g = rd.Table(root, "", "grid");
  rd.Allow(g, "grid", {"t0", "T", "M"});
  const double t0 = rd.Number(rd.Field(g, "grid", "t0"), "grid.t0");
  const double T = rd.Number(rd.Field(g, "grid", "T"), "grid.T");
  const int M = rd.Integer(rd.Field(g, "grid", "M"), "grid.M");
  GameFile file;
  try {
    file.spec.grid = TimeGrid(t0, T, M);
  } catch (const DimensionError& e) {
    rd.Fail("grid", e.what());
  }
  const int nodes = M + 1;
  const bool distributed = root.contains("distributed");
  if (distributed && root.contains("dynamics")) {
    rd.Fail("dynamics", "not allowed together with [distributed]");
  }

  int agents = 0;
  if (distributed) {
    const json& d = rd.Table(root, "", "distributed");
    rd.Allow(d, "distributed", {"N", "n", "k", "Qbar", "Rbar", "Gbar", "gamma",
                                "kappa", "eta", "agents"});
    DistributedQuadraticSpec ds;
    ds.grid = file.spec.grid;
    ds.agents = rd.Integer(rd.Field(d, "distributed", "N"), "distributed.N");
    ds.state_dim = rd.Integer(rd.Field(d, "distributed", "n"), "distributed.n");
    ds.control_dim =
        rd.Integer(rd.Field(d, "distributed", "k"), "distributed.k");
    if (ds.agents < 1) rd.Fail("distributed.N", "must be >= 1");
    ds.Qbar = rd.Series(rd.Field(d, "distributed", "Qbar"), "distributed.Qbar",
                        nodes);
    ds.Rbar = rd.Series(rd.Field(d, "distributed", "Rbar"), "distributed.Rbar",
                        nodes);
    ds.Gbar = rd.Matrix(rd.Field(d, "distributed", "Gbar"), "distributed.Gbar");
    ds.gamma = rd.ScalarSeries(rd.Field(d, "distributed", "gamma"),
                               "distributed.gamma", nodes);
    ds.kappa = rd.ScalarSeries(rd.Field(d, "distributed", "kappa"),
                               "distributed.kappa", nodes);
    ds.eta = rd.Number(rd.Field(d, "distributed", "eta"), "distributed.eta");
    const json& at = rd.Table(d, "distributed", "agents");
    const auto tables = rd.Agents(at, "distributed.agents", ds.agents);
    std::vector<AgentDynamics> dyn;
    for (int i = 0; i < ds.agents; ++i) {
      const std::string p = "distributed.agents." + std::to_string(i + 1);
      if (!tables[i]) rd.Fail(p, "missing");
      const json& a = *tables[i];
      rd.Allow(a, p, {"Q", "R", "G", "A", "B", "sigma"});
      AgentCost c;
      c.Q = rd.Series(rd.Field(a, p, "Q"), p + ".Q", nodes);
      c.R = rd.Series(rd.Field(a, p, "R"), p + ".R", nodes);
      c.G = rd.Matrix(rd.Field(a, p, "G"), p + ".G");
      ds.own.push_back(std::move(c));
      AgentDynamics ad;
      ad.A = rd.Series(rd.Field(a, p, "A"), p + ".A", nodes);
      ad.B = rd.Series(rd.Field(a, p, "B"), p + ".B", nodes);
      ad.sigma = rd.Matrix(rd.Field(a, p, "sigma"), p + ".sigma");
      dyn.push_back(std::move(ad));
    }
    for (const auto* s : {&ds.Qbar, &ds.Rbar}) {
      for (const auto& m : s->samples()) {
        if (!IsSymmetric(m, 1e-12)) {
          throw DimensionError(std::string("distributed game: ") +
                               (s == &ds.Qbar ? "Qbar" : "Rbar") +
                               " not symmetric");
        }
      }
    }
    if (!IsSymmetric(ds.Gbar, 1e-12)) {
      throw DimensionError("distributed game: Gbar not symmetric");
    }
    file.spec = LiftDistributed(ds, dyn);
    file.distributed = std::move(ds);
    file.distributed_dynamics = std::move(dyn);
    agents = file.spec.agents();
  } else {
    const json& dy = rd.Table(root, "", "dynamics");
    rd.Allow(dy, "dynamics", {"k", "A", "B", "sigma"});
    file.spec.control_dims = rd.Integers(rd.Field(dy, "dynamics", "k"),
                                         "dynamics.k");
    agents = static_cast<int>(file.spec.control_dims.size());
    if (agents < 1) rd.Fail("dynamics.k", "need at least one agent");
    for (int k : file.spec.control_dims) {
      if (k < 1) rd.Fail("dynamics.k", "control dimensions must be >= 1");
    }
    file.spec.A = rd.Series(rd.Field(dy, "dynamics", "A"), "dynamics.A", nodes);
    file.spec.B = rd.Series(rd.Field(dy, "dynamics", "B"), "dynamics.B", nodes);
    file.spec.sigma =
        rd.Matrix(rd.Field(dy, "dynamics", "sigma"), "dynamics.sigma");
  }

  // Agent tables: costs (non-distributed), feedback, initial gains.
  std::vector<const json*> tables(agents, nullptr);
  if (root.contains("agents")) {
    tables = rd.Agents(rd.Table(root, "", "agents"), "agents", agents);
  } else if (!distributed) {
    rd.Fail("agents", "missing");
  }
  std::vector<TimeSeries> gains;
  bool any_gain = false;
  if (!distributed) file.spec.costs.resize(agents);
  for (int i = 0; i < agents; ++i) {
    const std::string p = "agents." + std::to_string(i + 1);
    if (!tables[i]) {
      if (!distributed) rd.Fail(p, "missing");
      gains.push_back(TimeSeries::Zero(file.spec.control_dims[i],
                                       file.spec.state_dim()));
      continue;
    }
    const json& a = *tables[i];
    if (distributed) {
      rd.Allow(a, p, {"K"});
    } else {
      rd.Allow(a, p, {"cost", "feedback", "K"});
      const json& c = rd.Table(a, p, "cost");
      rd.Allow(c, p + ".cost", {"Q", "R", "G"});
      auto& cost = file.spec.costs[i];
      cost.Q = rd.Series(rd.Field(c, p + ".cost", "Q"), p + ".cost.Q", nodes);
      cost.R = rd.Series(rd.Field(c, p + ".cost", "R"), p + ".cost.R", nodes);
      cost.G = rd.Matrix(rd.Field(c, p + ".cost", "G"), p + ".cost.G");
      if (a.contains("feedback")) {
        if (file.spec.feedback.empty()) file.spec.feedback.resize(agents);
        for (int col : rd.Integers(a.at("feedback"), p + ".feedback")) {
          file.spec.feedback[i].push_back(col - 1);
        }
      }
    }
    if (a.contains("K")) {
      any_gain = true;
      gains.push_back(rd.Series(a.at("K"), p + ".K", nodes));
    } else {
      gains.push_back(TimeSeries::Zero(file.spec.control_dims.empty()
                                           ? 0
                                           : file.spec.control_dims[i],
                                       file.spec.A.rows()));
    }
  }
  if (root.contains("initial")) {
    const json& in = rd.Table(root, "", "initial");
    rd.Allow(in, "initial", {"t0", "x0"});
    if (in.contains("t0")) file.t0 = rd.Number(in.at("t0"), "initial.t0");
    if (in.contains("x0")) file.x0 = rd.Vector(in.at("x0"), "initial.x0");
  }
  RequireValid(file.spec);
  if (any_gain) {
    file.policy = PolicyProfile(std::move(gains));
    file.policy->CheckAgainst(file.spec);
  }
  if (file.x0 && file.x0->size() != file.spec.state_dim()) {
    rd.Fail("initial.x0", "expected " + std::to_string(file.spec.state_dim()) +
                              " entries");
  }
  return file;
}

}  // namespace

GameFile ParseGameFile(const std::string& text, FileFormat format) {
  if (format == FileFormat::kJson) {
    json root;
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("JSON syntax: ") + e.what());
    }
    return Parse(root, nullptr);
  }
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "TOML syntax (line " << e.source().begin.line << ", column "
       << e.source().begin.column << "): " << e.description();
    throw ParseError(os.str());
  }
  std::map<std::string, int> lines;
  const json root = FromToml(tbl, "", lines);
  return Parse(root, &lines);
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GameFile LoadGameFile(const std::string& path, std::string* raw) {
  const std::string text = ReadFile(path);
  if (raw) *raw = text;
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool is_json =
      (path.size() >= 5 && path.substr(path.size() - 5) == ".json") ||
      (first != std::string::npos && text[first] == '{');
  return ParseGameFile(text, is_json ? FileFormat::kJson : FileFormat::kToml);
}

nlohmann::json SpecToJson(const LqGameSpec& spec) {
  json j;
  j["grid"] = {{"t0", spec.grid.start()},
               {"T", spec.grid.horizon()},
               {"M", spec.grid.steps()}};
  j["dynamics"] = {{"k", spec.control_dims},
                   {"A", SeriesToJson(spec.A)},
                   {"B", SeriesToJson(spec.B)},
                   {"sigma", MatrixToJson(spec.sigma)}};
  json agents = json::object();
  for (int i = 0; i < spec.agents(); ++i) {
    json a;
    a["cost"] = {{"Q", SeriesToJson(spec.costs[i].Q)},
                 {"R", SeriesToJson(spec.costs[i].R)},
                 {"G", MatrixToJson(spec.costs[i].G)}};
    if (!spec.feedback.empty() && !spec.feedback[i].empty()) {
      json cols = json::array();
      for (int c : spec.feedback[i]) cols.push_back(c + 1);
      a["feedback"] = cols;
    }
    agents[std::to_string(i + 1)] = a;
  }
  j["agents"] = agents;
  return j;
}

nlohmann::json GameFileToJson(const GameFile& file) {
  json j;
  if (file.distributed) {
    const auto& d = *file.distributed;
    j["grid"] = {{"t0", d.grid.start()},
                 {"T", d.grid.horizon()},
                 {"M", d.grid.steps()}};
    auto scalar = [](const TimeSeries& s) -> json {
      if (s.is_constant()) return s.scalar(0);
      json a = json::array();
      for (int m = 0; m < s.size(); ++m) a.push_back(s.scalar(m));
      return a;
    };
    json dj = {{"N", d.agents},
               {"n", d.state_dim},
               {"k", d.control_dim},
               {"Qbar", SeriesToJson(d.Qbar)},
               {"Rbar", SeriesToJson(d.Rbar)},
               {"Gbar", MatrixToJson(d.Gbar)},
               {"gamma", scalar(d.gamma)},
               {"kappa", scalar(d.kappa)},
               {"eta", d.eta}};
    json agents = json::object();
    for (int i = 0; i < d.agents; ++i) {
      const auto& dyn = file.distributed_dynamics[i];
      agents[std::to_string(i + 1)] = {{"Q", SeriesToJson(d.own[i].Q)},
                                       {"R", SeriesToJson(d.own[i].R)},
                                       {"G", MatrixToJson(d.own[i].G)},
                                       {"A", SeriesToJson(dyn.A)},
                                       {"B", SeriesToJson(dyn.B)},
                                       {"sigma", MatrixToJson(dyn.sigma)}};
    }
    dj["agents"] = agents;
    j["distributed"] = dj;
  } else {
    j = SpecToJson(file.spec);
  }
  if (file.policy) {
    for (int i = 0; i < file.policy->agents(); ++i) {
      j["agents"][std::to_string(i + 1)]["K"] =
          SeriesToJson(file.policy->gain(i));
    }
  }
  if (file.t0 || file.x0) {
    json in = json::object();
    if (file.t0) in["t0"] = *file.t0;
    if (file.x0) in["x0"] = VectorToJson(*file.x0);
    j["initial"] = in;
  }
  return j;
}

GameFile GameFileFromJson(const nlohmann::json& j) { return Parse(j, nullptr); }

}  // namespace potentia
