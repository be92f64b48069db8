// Copyright 2026 The vpcorch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace vpc::testing {

// Reference PID kept deliberately naive: it stores every error seen and
// recomputes the integral from the full history at each step.
class PidOracle {
 public:
  PidOracle(double kp, double ki, double kd, double setpoint, double dt)
      : kp_(kp), ki_(ki), kd_(kd), setpoint_(setpoint), dt_(dt) {}

  double step(double x) {
    errors_.push_back(setpoint_ - x);
    double sum = 0.0;
    for (double e : errors_) sum += e;
    const double e = errors_.back();
    const double prev = errors_.size() > 1 ? errors_[errors_.size() - 2] : 0.0;
    return kp_ * e + ki_ * sum * dt_ + kd_ * (e - prev) / dt_;
  }

 private:
  double kp_, ki_, kd_, setpoint_, dt_;
  std::vector<double> errors_;
};

inline bool within_relative(double got, double want, double tol = 1e-12) {
  if (got == want) return true;
  return std::abs(got - want) <= tol * std::max(std::abs(got), std::abs(want));
}

// First-order tank: level rises with inflow and drains through a valve that
// saturates at fully shut and fully open.
inline double tank_step(double level, double valve) {
  const double opening = std::clamp(valve, 0.0, 10.0);
  return level + 0.01 * (2.0 - 0.5 * opening - 0.1 * level);
}

}  // namespace vpc::testing
