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

#include "hsmm/filter.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace hsmm {

struct BackwardPass {
  std::vector<Vector> v;          // v_{k,T}, k = 0..T, rescaled
  std::vector<double> log_scale;  // log of the factor removed from v_{k,T}
};

/// v_{T,T} = 1, v_{k,T} = A(h_k)' B(y_{k+1}) v_{k+1,T}, with the clock
/// estimates frozen from the forward pass. Each v_{k,T} (k < T) is divided
/// by its mean; `log_scale` accumulates what was removed.
inline BackwardPass backward_pass(const SemiMarkovModel& model, const ObservationModel& obs,
                                  std::span<const double> y, std::span<const int> h_hat) {
  check_inputs(model, obs, y);
  if (h_hat.size() != y.size()) {
    throw std::invalid_argument("backward_pass: clock estimates and observations differ in length");
  }
  const std::size_t T = y.size() - 1;
  BackwardPass pass;
  pass.v.assign(y.size(), Vector());
  pass.log_scale.assign(y.size(), 0.0);
  pass.v[T] = Vector::Ones(model.n_states());
  for (std::size_t k = T; k-- > 0;) {
    const auto sw = scaled_weights(log_b_matrix(obs, y[k + 1]), pass.v[k + 1]);
    Vector v = clock_transition(model, h_hat[k]).transpose() * sw.weights.cwiseProduct(pass.v[k + 1]);
    const double mean = checked_mass(v, "backward_pass") / static_cast<double>(v.size());
    pass.v[k] = v / mean;
    pass.log_scale[k] = pass.log_scale[k + 1] + sw.log_shift + std::log(mean);
  }
  return pass;
}

/// Normalized q_k (.) v_{k,T}.
inline std::vector<Vector> smooth(std::span<const Vector> q, std::span<const Vector> v) {
  if (q.size() != v.size()) throw std::invalid_argument("smooth: sequences are not aligned");
  std::vector<Vector> out;
  out.reserve(q.size());
  for (std::size_t k = 0; k < q.size(); ++k) {
    const Vector joint = q[k].cwiseProduct(v[k]);
    out.push_back(joint / joint.sum());
  }
  return out;
}

struct SmootherPass {
  FilterRun filter;
  BackwardPass backward;
  std::vector<Vector> smoothed;
};

inline SmootherPass run_smoother(const SemiMarkovModel& model, const ObservationModel& obs,
                                 std::span<const double> y, InitMode mode = InitMode::kBayes) {
  SmootherPass out;
  out.filter = run_filter(model, obs, y, mode);
  const auto h = out.filter.h_hat();
  out.backward = backward_pass(model, obs, y, h);
  std::vector<Vector> q;
  q.reserve(out.filter.states.size());
  for (const auto& s : out.filter.states) q.push_back(s.q);
  out.smoothed = smooth(q, out.backward.v);
  return out;
}

}  // namespace hsmm
