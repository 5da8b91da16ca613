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

#ifndef POTENTIA_QUADRATURE_H_
#define POTENTIA_QUADRATURE_H_

#include <vector>

namespace potentia {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [0, 1]. Exact for polynomials of degree
// 2n - 1.
QuadratureRule GaussLegendre(int n);

// Sum of `values` by recursive halving. The order of additions depends only
// on values.size(), so results do not depend on how values were produced.
double PairwiseSum(const double* values, int count);

}  // namespace potentia

#endif  // POTENTIA_QUADRATURE_H_
