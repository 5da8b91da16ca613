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

#include "potentia/grid.h"

#include <cmath>
#include <sstream>

#include "potentia/errors.h"

namespace potentia {

TimeGrid::TimeGrid(double start, double horizon, int steps)
    : start_(start), horizon_(horizon), steps_(steps) {
  if (!std::isfinite(start) || !std::isfinite(horizon) || !(horizon > start)) {
    std::ostringstream os;
    os << "grid: need finite t0 < T, got t0=" << start << " T=" << horizon;
    throw DimensionError(os.str());
  }
  if (steps < 2) {
    throw DimensionError("grid: need M >= 2 steps, got " +
                         std::to_string(steps));
  }
  dt_ = (horizon - start) / steps;
}

double TimeGrid::node(int m) const {
  if (m == steps_) return horizon_;
  return start_ + m * dt_;
}

std::pair<int, double> TimeGrid::Locate(double t) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(horizon_ - start_));
  if (!(t >= start_ - slack && t <= horizon_ + slack)) {
    std::ostringstream os;
    os << "time " << t << " outside grid [" << start_ << ", " << horizon_
       << "]";
    throw RangeError(os.str());
  }
  double s = (t - start_) / dt_;
  int m = static_cast<int>(std::floor(s));
  if (m < 0) m = 0;
  if (m > steps_ - 1) m = steps_ - 1;
  double w = s - m;
  if (w < 0.0) w = 0.0;
  if (w > 1.0) w = 1.0;
  return {m, w};
}

std::optional<int> TimeGrid::NodeIndex(double t, double tol) const {
  const long m = std::lround((t - start_) / dt_);
  if (m < 0 || m > steps_) return std::nullopt;
  if (std::abs(node(static_cast<int>(m)) - t) >
      tol * std::max(1.0, std::abs(t))) {
    return std::nullopt;
  }
  return static_cast<int>(m);
}

TimeSeries::TimeSeries(Eigen::MatrixXd constant)
    : samples_{std::move(constant)} {}

TimeSeries::TimeSeries(std::vector<Eigen::MatrixXd> samples)
    : samples_(std::move(samples)) {
  if (samples_.empty()) throw DimensionError("time series: no samples");
  for (const auto& s : samples_) {
    if (s.rows() != samples_[0].rows() || s.cols() != samples_[0].cols()) {
      throw DimensionError("time series: samples have inconsistent shapes");
    }
  }
}

TimeSeries TimeSeries::Zero(int rows, int cols) {
  return TimeSeries(Eigen::MatrixXd::Zero(rows, cols));
}

TimeSeries TimeSeries::Scalar(double value) {
  return TimeSeries(Eigen::MatrixXd::Constant(1, 1, value));
}

int TimeSeries::rows() const {
  return samples_.empty() ? 0 : static_cast<int>(samples_[0].rows());
}

int TimeSeries::cols() const {
  return samples_.empty() ? 0 : static_cast<int>(samples_[0].cols());
}

Eigen::MatrixXd TimeSeries::mid(int m) const {
  if (is_constant()) return samples_[0];
  return 0.5 * (samples_[m] + samples_[m + 1]);
}

Eigen::MatrixXd TimeSeries::Evaluate(const TimeGrid& grid, double t) const {
  auto [m, w] = grid.Locate(t);
  if (is_constant()) return samples_[0];
  return (1.0 - w) * samples_[m] + w * samples_[m + 1];
}

TimeSeries TimeSeries::Axpy(double alpha, const TimeSeries& other,
                            int nodes) const {
  if (rows() != other.rows() || cols() != other.cols()) {
    throw DimensionError("time series: shape mismatch in axpy");
  }
  if (is_constant() && other.is_constant()) {
    return TimeSeries(Eigen::MatrixXd(samples_[0] + alpha * other.at(0)));
  }
  std::vector<Eigen::MatrixXd> out(nodes);
  for (int m = 0; m < nodes; ++m) out[m] = at(m) + alpha * other.at(m);
  return TimeSeries(std::move(out));
}

TimeSeries TimeSeries::Expanded(int nodes) const {
  if (!is_constant()) return *this;
  return TimeSeries(std::vector<Eigen::MatrixXd>(nodes, samples_[0]));
}

bool TimeSeries::operator==(const TimeSeries& other) const {
  if (samples_.size() != other.samples_.size()) return false;
  for (size_t m = 0; m < samples_.size(); ++m) {
    const auto& a = samples_[m];
    const auto& b = other.samples_[m];
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (!(a.array() == b.array()).all()) return false;
  }
  return true;
}

}  // namespace potentia
