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

#include "potentia/quadrature.h"

#include <cmath>
#include <numbers>

#include "potentia/errors.h"

namespace potentia {

QuadratureRule GaussLegendre(int n) {
  if (n < 1) throw RangeError("gauss-legendre: need at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int k = 0; k < (n + 1) / 2; ++k) {
    // Newton on P_n from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= n; ++j) {
      const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map [-1, 1] to [0, 1]; nodes ascending.
    rule.nodes[k] = 0.5 * (1.0 - x);
    rule.nodes[n - 1 - k] = 0.5 * (1.0 + x);
    rule.weights[k] = 0.5 * w;
    rule.weights[n - 1 - k] = 0.5 * w;
  }
  return rule;
}

double PairwiseSum(const double* values, int count) {
  if (count <= 0) return 0.0;
  if (count <= 8) {
    double s = 0.0;
    for (int k = 0; k < count; ++k) s += values[k];
    return s;
  }
  const int half = count / 2;
  return PairwiseSum(values, half) + PairwiseSum(values + half, count - half);
}

}  // namespace potentia
