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

#ifndef POTENTIA_GRID_H_
#define POTENTIA_GRID_H_

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace potentia {

// Uniform time grid t0 < t1 < ... < tM = T.
class TimeGrid {
 public:
  TimeGrid(double start, double horizon, int steps);

  double start() const { return start_; }
  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double dt() const { return dt_; }

  // Node m; node M is exactly the horizon.
  double node(int m) const;
  double midpoint(int m) const { return 0.5 * (node(m) + node(m + 1)); }

  // Returns (m, w) with t = (1 - w) t_m + w t_{m+1}, m in [0, M-1], w in
  // [0, 1]. Throws RangeError outside [t0, T] (beyond a 1e-12 relative slack).
  std::pair<int, double> Locate(double t) const;

  // Index of the node equal to t within `tol`, if any.
  std::optional<int> NodeIndex(double t, double tol = 1e-12) const;

  bool operator==(const TimeGrid& other) const {
    return start_ == other.start_ && horizon_ == other.horizon_ &&
           steps_ == other.steps_;
  }

 private:
  double start_;
  double horizon_;
  int steps_;
  double dt_;
};

// A matrix-valued function of time stored as node samples, evaluated by
// piecewise-linear interpolation. A series built from a single matrix is
// constant and stores one sample.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(Eigen::MatrixXd constant);
  explicit TimeSeries(std::vector<Eigen::MatrixXd> samples);

  static TimeSeries Zero(int rows, int cols);
  static TimeSeries Scalar(double value);

  bool is_constant() const { return samples_.size() == 1; }
  int rows() const;
  int cols() const;
  // Number of stored samples (1 for constant series).
  int size() const { return static_cast<int>(samples_.size()); }

  // Sample at node m (any m for constant series).
  const Eigen::MatrixXd& at(int m) const {
    return samples_[is_constant() ? 0 : m];
  }
  double scalar(int m) const { return at(m)(0, 0); }
  // Average of nodes m and m+1.
  Eigen::MatrixXd mid(int m) const;
  // Interpolated value at time t.
  Eigen::MatrixXd Evaluate(const TimeGrid& grid, double t) const;

  const std::vector<Eigen::MatrixXd>& samples() const { return samples_; }

  // this + alpha * other, samplewise. Constant if both are constant.
  TimeSeries Axpy(double alpha, const TimeSeries& other, int nodes) const;
  // Expanded to exactly `nodes` samples.
  TimeSeries Expanded(int nodes) const;

  bool operator==(const TimeSeries& other) const;

 private:
  std::vector<Eigen::MatrixXd> samples_;
};

}  // namespace potentia

#endif  // POTENTIA_GRID_H_
