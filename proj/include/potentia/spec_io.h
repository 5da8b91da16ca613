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

#ifndef POTENTIA_SPEC_IO_H_
#define POTENTIA_SPEC_IO_H_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "potentia/game.h"

// Game files, TOML or JSON:
//
//   [grid]        t0, T, M
//   [dynamics]    k (per-agent control dims), A, B, sigma
//   [agents.<i>]  feedback (1-based state columns, optional), K (optional
//                 initial gain)
//   [agents.<i>.cost]  Q, R, G
//   [initial]     t0, x0 (optional)
//   [distributed] N, n, k, Qbar, Rbar, Gbar, gamma, kappa, eta
//   [distributed.agents.<i>]  Q, R, G, A, B, sigma
//
// A file has either [dynamics] with [agents.<i>.cost] tables, or a
// [distributed] section that is lifted to the joint game. Matrices are
// row-major nested arrays; a time-varying entry is a matrix or an array of
// M+1 node samples; gamma and kappa are a number or M+1 numbers.
namespace potentia {

struct GameFile {
  LqGameSpec spec;
  std::optional<DistributedQuadraticSpec> distributed;
  std::vector<AgentDynamics> distributed_dynamics;
  std::optional<PolicyProfile> policy;
  std::optional<double> t0;
  std::optional<Eigen::VectorXd> x0;
};

enum class FileFormat { kToml, kJson };

// Throws ParseError naming the field (and line, for TOML), or
// DimensionError if the parsed game violates an invariant.
GameFile ParseGameFile(const std::string& text, FileFormat format);
// Format chosen from the extension (.json) or leading '{'.
GameFile LoadGameFile(const std::string& path, std::string* raw = nullptr);

// Round-trip serialisation (bit-exact through DumpJson).
nlohmann::json GameFileToJson(const GameFile& file);
nlohmann::json SpecToJson(const LqGameSpec& spec);
GameFile GameFileFromJson(const nlohmann::json& j);

std::string ReadFile(const std::string& path);

}  // namespace potentia

#endif  // POTENTIA_SPEC_IO_H_
