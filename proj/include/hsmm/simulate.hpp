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

#include "hsmm/model.hpp"
#include "hsmm/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace hsmm {

// Stream indices used with a single user seed.
inline constexpr std::uint64_t kStateStream = 0;
inline constexpr std::uint64_t kObservationStream = 1;
inline constexpr std::uint64_t kDiagnosticStream = 2;

/// Sojourn clock h_k: 1 at k = 0 and after every jump, otherwise h_{k-1} + 1.
inline std::vector<int> occupation_clock(std::span<const int> states) {
  if (states.empty()) throw std::invalid_argument("occupation_clock: empty state sequence");
  std::vector<int> h(states.size());
  h[0] = 1;
  for (std::size_t k = 1; k < states.size(); ++k) {
    h[k] = (states[k] == states[k - 1]) ? h[k - 1] + 1 : 1;
  }
  return h;
}

/// The k >= 1 with X_k != X_{k-1}.
inline std::vector<int> jump_times(std::span<const int> states) {
  std::vector<int> out;
  for (std::size_t k = 1; k < states.size(); ++k) {
    if (states[k] != states[k - 1]) out.push_back(static_cast<int>(k));
  }
  return out;
}

struct PathRecord {
  std::vector<int> states;       // X_0..X_T
  std::vector<int> clock;        // h_0..h_T
  std::vector<int> jumps;        // tau_1 < tau_2 < ...
  std::optional<std::vector<double>> observations;  // y_0..y_T

  int horizon() const { return static_cast<int>(states.size()) - 1; }

  /// h^i_k: the clock when X_k = e_i, otherwise 0.
  int state_clock(int k, int i) const { return states[k] == i ? clock[k] : 0; }
};

/// Draws the state following (e_i, clock): stays with probability
/// 1 - exit_probability(clock), otherwise lands on j with probability p_ji.
inline int step_state(const SemiMarkovModel& model, int i, int clock, Rng& rng) {
  if (!rng.bernoulli(model.sojourn(i).exit_probability(clock))) return i;
  const auto& p = model.kernel().matrix();
  return rng.categorical(std::span<const double>(p.col(i).data(), p.rows()));
}

inline PathRecord simulate_path(const SemiMarkovModel& model, int horizon, std::uint64_t seed) {
  if (horizon < 0) throw std::invalid_argument("simulate_path: horizon must be >= 0");
  Rng rng(seed, kStateStream);
  PathRecord path;
  path.states.reserve(horizon + 1);
  path.clock.reserve(horizon + 1);
  const Vector& p0 = model.p0();
  int x = rng.categorical(std::span<const double>(p0.data(), p0.size()));
  int h = 1;
  path.states.push_back(x);
  path.clock.push_back(h);
  for (int k = 1; k <= horizon; ++k) {
    const int next = step_state(model, x, h, rng);
    if (next == x) {
      ++h;
    } else {
      h = 1;
      path.jumps.push_back(k);
    }
    x = next;
    path.states.push_back(x);
    path.clock.push_back(h);
  }
  return path;
}

/// y_k = c[X_k] + d[X_k] w_k with w_k i.i.d. N(0,1).
inline std::vector<double> observe_path(const PathRecord& path, const ObservationModel& obs,
                                        std::uint64_t seed) {
  if (path.states.empty()) throw std::invalid_argument("observe_path: empty path");
  Rng rng(seed, kObservationStream);
  std::vector<double> y(path.states.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    const int x = path.states[k];
    y[k] = obs.c()[x] + obs.d()[x] * rng.normal();
  }
  return y;
}

/// Counts of the next state over `n_samples` one-step draws from (e_i, clock).
inline Vector sample_transitions(const SemiMarkovModel& model, int i, int clock, int n_samples,
                                 Rng& rng) {
  Vector counts = Vector::Zero(model.n_states());
  for (int s = 0; s < n_samples; ++s) counts[step_state(model, i, clock, rng)] += 1.0;
  return counts;
}

/// Empirical mean of M_{k+1} = X_{k+1} - A e_i from (e_i, clock); every
/// component has expectation zero.
inline Vector martingale_diagnostic(const SemiMarkovModel& model, int i, int clock,
                                    int n_samples, std::uint64_t seed) {
  if (i < 0 || i >= model.n_states()) {
    throw std::out_of_range("martingale_diagnostic: state out of range");
  }
  if (clock < 1 || clock > model.sojourn(i).support()) {
    throw std::out_of_range("martingale_diagnostic: clock outside the sojourn support");
  }
  if (n_samples < 1) throw std::invalid_argument("martingale_diagnostic: n_samples must be >= 1");
  Rng rng(seed, kDiagnosticStream);
  const Vector mean = sample_transitions(model, i, clock, n_samples, rng) / n_samples;
  return mean - clock_transition(model, clock).col(i);
}

}  // namespace hsmm
