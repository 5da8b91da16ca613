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

#ifndef POTENTIA_REPORTS_H_
#define POTENTIA_REPORTS_H_

#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "potentia/crosscheck.h"
#include "potentia/nash.h"
#include "potentia/potential.h"

namespace potentia {

// Provenance of one CLI run. Wall-clock times are kept out of the JSON by
// default so that equal manifests give byte-identical reports.
struct RunManifest {
  std::string input_sha256;
  std::string subcommand;
  nlohmann::json options = nlohmann::json::object();
  std::map<std::string, std::uint64_t> seeds;
  std::string version = POTENTIA_VERSION;
  std::map<std::string, double> stage_seconds;  // only with include_timings
  bool include_timings = false;

  nlohmann::json ToJson() const;
};

std::string Sha256Hex(const std::string& data);

nlohmann::json ToJson(const SymmetryReport& r);
nlohmann::json ToJson(const NashCertificate& c);
nlohmann::json ToJson(const CrosscheckReport& r);

nlohmann::json PotentialToJson(const PotentialFunction& p);
PotentialFunction PotentialFromJson(const nlohmann::json& j);

// {"manifest": ..., <key>: body}.
nlohmann::json WithManifest(const RunManifest& m, const std::string& key,
                            nlohmann::json body);

}  // namespace potentia

#endif  // POTENTIA_REPORTS_H_
