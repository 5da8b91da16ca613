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

#ifndef POTENTIA_ERRORS_H_
#define POTENTIA_ERRORS_H_

#include <stdexcept>
#include <string>

namespace potentia {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Inconsistent matrix shapes or agent counts.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Evaluation time outside the grid.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during integration or simulation.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// A precondition on the game structure failed (e.g. not a potential game).
class RefusalError : public Error {
 public:
  using Error::Error;
};

// Line search could not make progress.
class StallError : public Error {
 public:
  using Error::Error;
};

// Malformed input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace potentia

#endif  // POTENTIA_ERRORS_H_
