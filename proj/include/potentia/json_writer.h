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

#ifndef POTENTIA_JSON_WRITER_H_
#define POTENTIA_JSON_WRITER_H_

#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "potentia/grid.h"

namespace potentia {

// Deterministic JSON text: object keys in the json's own (sorted) order,
// two-space indent, floating-point numbers as %.17g, non-finite as null.
std::string DumpJson(const nlohmann::json& j);

nlohmann::json MatrixToJson(const Eigen::MatrixXd& m);
nlohmann::json VectorToJson(const Eigen::VectorXd& v);
// A constant series is one matrix; otherwise an array of node samples.
nlohmann::json SeriesToJson(const TimeSeries& s);

}  // namespace potentia

#endif  // POTENTIA_JSON_WRITER_H_
