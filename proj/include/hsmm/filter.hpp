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

// Reference-probability forward filter with a MAP estimate of the sojourn
// clock.
//
// The unnormalized vector q_k = E[Lambda_{0,k} X_k | y_0..y_k] follows
// q_{k+1} = B(y_{k+1}) A(h_k) q_k where B(y) = diag(gamma_j(y)) and h_k is
// the clock estimate. The clock estimate increments while argmax q stays
// put and resets to 1 when it moves. q is kept at unit sum; the discarded
// scale accumulates in `log_norm`, so q * exp(log_norm) is the raw
// recursion.

#pragma once

#include "hsmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace hsmm {

/// How q_0 is formed: `bayes` weights p_0 by B(y_0); `prior` uses p_0 as is.
enum class InitMode { kBayes, kPrior };

/// Diagonal of B(y).
inline Vector b_matrix(const ObservationModel& obs, double y) {
  Vector b(obs.n_states());
  for (int j = 0; j < obs.n_states(); ++j) b[j] = gamma(obs, j, y);
  return b;
}

inline Vector log_b_matrix(const ObservationModel& obs, double y) {
  Vector b(obs.n_states());
  for (int j = 0; j < obs.n_states(); ++j) b[j] = log_gamma(obs, j, y);
  return b;
}

/// Scaled diagonal exp(log_b - shift), with `shift` the largest log weight
/// among states carrying mass in `support`. Keeps the dominant weight at 1
/// so a sharply informative observation cannot underflow every entry.
struct ScaledWeights {
  Vector weights;
  double log_shift = 0.0;
};

inline ScaledWeights scaled_weights(const Vector& log_b, const Vector& support) {
  double shift = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < log_b.size(); ++j) {
    if (support[j] > 0.0) shift = std::max(shift, log_b[j]);
  }
  if (!std::isfinite(shift)) shift = log_b.maxCoeff();
  ScaledWeights out;
  out.log_shift = shift;
  out.weights = (log_b.array() - shift).exp().matrix();
  return out;
}

/// One application of B(y) A, with B carried as `weights = B / exp(log_shift)`.
struct StepOperator {
  Matrix transition;
  Vector weights;
  double log_shift = 0.0;

  Vector apply(const Vector& v) const { return weights.cwiseProduct(transition * v); }
};

/// Operator taking q_k to q_{k+1} given the clock estimate and y_{k+1}.
inline StepOperator make_step(const SemiMarkovModel& model, const ObservationModel& obs,
                              int clock, double y_next, const Vector& q) {
  StepOperator op;
  op.transition = clock_transition(model, clock);
  auto sw = scaled_weights(log_b_matrix(obs, y_next), op.transition * q);
  op.weights = std::move(sw.weights);
  op.log_shift = sw.log_shift;
  return op;
}

struct FilterState {
  Vector q;               // unit-sum after every step
  double log_norm = 0.0;  // log of the scale removed from q so far
  int h_hat = 1;          // MAP sojourn clock estimate
  int map_state = 0;      // argmax q, lowest index on ties

  Vector posterior() const { return q / q.sum(); }
};

/// Total mass of an operator image; throws when it falls below kMassFloor.
inline double checked_mass(const Vector& raw, const char* where) {
  const double s = raw.sum();
  if (!(s > kMassFloor) || !std::isfinite(s)) {
    throw NumericalGuardError(std::string(where) + ": total mass " + format_double(s) +
                              " outside the representable range");
  }
  return s;
}

/// Clock-estimate rule: advance while the MAP state is unchanged, capped at
/// that state's sojourn support; reset to 1 when the MAP state moves.
inline int next_clock_estimate(const SemiMarkovModel& model, int h_hat, int map_before,
                               int map_after) {
  if (map_before != map_after) return 1;
  return std::min(h_hat + 1, model.sojourn(map_after).support());
}

/// Applies a prepared operator; `scale` receives the normalizer removed
/// from the image so companion recursions can divide by the same value.
inline FilterState advance(const SemiMarkovModel& model, const FilterState& state,
                           const StepOperator& op, double* scale = nullptr) {
  const Vector raw = op.apply(state.q);
  const double s = checked_mass(raw, "filter_step");
  FilterState next;
  next.q = raw / s;
  next.log_norm = state.log_norm + op.log_shift + std::log(s);
  next.map_state = argmax(next.q);
  next.h_hat = next_clock_estimate(model, state.h_hat, argmax(state.q), next.map_state);
  if (scale) *scale = s;
  return next;
}

inline FilterState filter_step(const FilterState& state, const SemiMarkovModel& model,
                               const ObservationModel& obs, double y_next) {
  return advance(model, state, make_step(model, obs, state.h_hat, y_next, state.q));
}

inline FilterState initial_filter_state(const SemiMarkovModel& model,
                                        const ObservationModel& obs, double y0,
                                        InitMode mode = InitMode::kBayes) {
  FilterState s;
  if (mode == InitMode::kPrior) {
    s.q = model.p0();
  } else {
    auto sw = scaled_weights(log_b_matrix(obs, y0), model.p0());
    const Vector raw = sw.weights.cwiseProduct(model.p0());
    const double mass = checked_mass(raw, "filter initialization");
    s.q = raw / mass;
    s.log_norm = sw.log_shift + std::log(mass);
  }
  s.h_hat = 1;
  s.map_state = argmax(s.q);
  return s;
}

struct FilterRun {
  std::vector<FilterState> states;  // k = 0..T
  std::vector<Vector> posteriors;   // q_k / <q_k, 1>

  std::vector<int> h_hat() const {
    std::vector<int> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s.h_hat);
    return out;
  }
  double log_likelihood_ratio() const { return states.back().log_norm; }
};

inline void check_inputs(const SemiMarkovModel& model, const ObservationModel& obs,
                         std::span<const double> y) {
  if (y.empty()) throw ValidationError("observations", "sequence is empty");
  if (obs.n_states() != model.n_states()) {
    throw ValidationError("observation", "dimension does not match the model's state count");
  }
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!std::isfinite(y[k])) {
      throw ValidationError("observations[" + std::to_string(k) + "]", "must be finite");
    }
  }
}

inline FilterRun run_filter(const SemiMarkovModel& model, const ObservationModel& obs,
                            std::span<const double> y, InitMode mode = InitMode::kBayes) {
  check_inputs(model, obs, y);
  FilterRun run;
  run.states.reserve(y.size());
  run.posteriors.reserve(y.size());
  run.states.push_back(initial_filter_state(model, obs, y[0], mode));
  for (std::size_t k = 1; k < y.size(); ++k) {
    run.states.push_back(filter_step(run.states.back(), model, obs, y[k]));
  }
  for (const auto& s : run.states) run.posteriors.push_back(s.posterior());
  return run;
}

}  // namespace hsmm
