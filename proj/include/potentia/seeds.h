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

#ifndef POTENTIA_SEEDS_H_
#define POTENTIA_SEEDS_H_

#include <cstdint>

namespace potentia {

inline std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Sub-seed for (stage, index) under a run seed.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stage,
                                std::uint64_t index) {
  return Mix64(Mix64(Mix64(seed) ^ stage) + index);
}

}  // namespace potentia

#endif  // POTENTIA_SEEDS_H_
