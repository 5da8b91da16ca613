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

#include "potentia/json_writer.h"

#include <cmath>
#include <cstdio>

namespace potentia {
namespace {

void Write(const nlohmann::json& j, int depth, std::string& out) {
  const std::string pad(2 * depth, ' ');
  const std::string inner(2 * (depth + 1), ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + nlohmann::json(it.key()).dump() + ": ";
        Write(it.value(), depth + 1, out);
      }
      out += "\n" + pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      if (flat) {
        out += "[";
        for (size_t k = 0; k < j.size(); ++k) {
          if (k) out += ", ";
          Write(j[k], depth + 1, out);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (size_t k = 0; k < j.size(); ++k) {
        if (k) out += ",\n";
        out += inner;
        Write(j[k], depth + 1, out);
      }
      out += "\n" + pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      std::string s(buf);
      // Keep a float marker so the value parses back as a float.
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
      out += s;
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string DumpJson(const nlohmann::json& j) {
  std::string out;
  Write(j, 0, out);
  out += "\n";
  return out;
}

nlohmann::json MatrixToJson(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json VectorToJson(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

nlohmann::json SeriesToJson(const TimeSeries& s) {
  if (s.is_constant()) return MatrixToJson(s.at(0));
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : s.samples()) out.push_back(MatrixToJson(m));
  return out;
}

}  // namespace potentia
