// Copyright 2026 The hsmm Authors.
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

#include <Eigen/Dense>

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace hsmm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance for probability vectors and stochastic columns.
inline constexpr double kProbabilityTolerance = 1e-12;

/// Smallest total mass a rescaled recursion may produce before it is
/// treated as a numerical fault.
inline constexpr double kMassFloor = 1e-300;

/// Thrown when a model, configuration or input violates a documented
/// constraint. `field()` names the offending field (e.g. "sojourns[1].pmf").
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Thrown when a numerical guard trips (mass underflow, division by an
/// unvisited state's occupation).
class NumericalGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index of the largest entry; ties go to the lowest index.
inline int argmax(const Vector& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

/// 17 significant digits, enough for any double to round-trip.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace hsmm
