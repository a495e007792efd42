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

// Recursive unnormalized estimators of path statistics, run alongside the
// forward filter and sharing its per-step normalizer:
//
//   N^{ji}_k  = #{l <= k : X_{l-1} = e_i, X_l = e_j}       jumps i -> j
//   J^i_k     = #{l <= k : X_{l-1} = e_i}                  occupation
//   G^i_k(f)  = sum_{l <= k} f(y_l) [X_{l-1} = e_i]         lagged functional
//   E^i_k(f)  = sum_{l <= k} f(y_l) [X_l = e_i], from l = 0 aligned functional
//
// Each sigma vector estimates E[Lambda S_k X_k | y_0..y_k]; dividing its
// total by <q_k, 1> gives E[S_k | y_0..y_k]. The aligned family pairs each
// observation with the state that emitted it and feeds the c/d
// re-estimates; the lagged family pairs y_l with X_{l-1}.

#pragma once

#include "hsmm/filter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace hsmm {

enum class Functional { kOne = 0, kY = 1, kYSquared = 2 };

inline constexpr std::array<Functional, 3> kFunctionals = {Functional::kOne, Functional::kY,
                                                           Functional::kYSquared};

inline double evaluate(Functional f, double y) {
  switch (f) {
    case Functional::kOne: return 1.0;
    case Functional::kY: return y;
    case Functional::kYSquared: return y * y;
  }
  return 0.0;
}

struct StatisticState {
  int n = 0;
  std::vector<Vector> sigma_N;                  // [j * n + i]; diagonal slots stay zero
  std::vector<Vector> sigma_J;                  // [i]
  std::array<std::vector<Vector>, 3> sigma_G;   // [f][i], lagged
  std::array<std::vector<Vector>, 3> sigma_E;   // [f][i], aligned

  const Vector& jumps(int j, int i) const { return sigma_N[j * n + i]; }

  /// Multiplies every sigma vector by `factor`.
  void scale(double factor) {
    for (auto& v : sigma_N) v *= factor;
    for (auto& v : sigma_J) v *= factor;
    for (auto& fam : sigma_G) for (auto& v : fam) v *= factor;
    for (auto& fam : sigma_E) for (auto& v : fam) v *= factor;
  }
};

/// Zero lagged statistics; aligned statistics hold f(y_0) q_0^i e_i.
inline StatisticState initial_statistics(const Vector& q0, double y0) {
  const int n = static_cast<int>(q0.size());
  StatisticState s;
  s.n = n;
  s.sigma_N.assign(n * n, Vector::Zero(n));
  s.sigma_J.assign(n, Vector::Zero(n));
  for (auto& fam : s.sigma_G) fam.assign(n, Vector::Zero(n));
  for (Functional f : kFunctionals) {
    auto& fam = s.sigma_E[static_cast<int>(f)];
    fam.assign(n, Vector::Zero(n));
    for (int i = 0; i < n; ++i) fam[i][i] = evaluate(f, y0) * q0[i];
  }
  return s;
}

/// sigma(N^{ji}_{k+1} X_{k+1}) = B A sigma(N^{ji}_k X_k) + a_ji q_k^i gamma_j e_j
/// for every j != i, before division by the shared normalizer.
inline std::vector<Vector> step_N(const StatisticState& stat, const Vector& q_k,
                                  const StepOperator& op) {
  const int n = stat.n;
  std::vector<Vector> out(n * n, Vector::Zero(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      Vector v = op.apply(stat.jumps(j, i));
      v[j] += op.transition(j, i) * q_k[i] * op.weights[j];
      out[j * n + i] = std::move(v);
    }
  }
  return out;
}

/// sigma(G^i_{k+1} X_{k+1}) = B A sigma(G^i_k X_k) + f(y_{k+1}) q_k^i B A e_i,
/// before division by the shared normalizer. f = 1 gives J^i.
inline std::vector<Vector> step_G(std::span<const Vector> sigma, const Vector& q_k,
                                  const StepOperator& op, double f_value) {
  std::vector<Vector> out;
  out.reserve(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    out.push_back(op.apply(sigma[i]) +
                  (f_value * q_k[i]) * op.weights.cwiseProduct(op.transition.col(i)));
  }
  return out;
}

/// Aligned form: sigma(E^i_{k+1} X_{k+1}) = B A sigma(E^i_k X_k)
/// + f(y_{k+1}) <B A q_k, e_i> e_i, before division by the shared normalizer.
inline std::vector<Vector> step_E(std::span<const Vector> sigma, const Vector& q_k,
                                  const StepOperator& op, double f_value) {
  const Vector predicted = op.apply(q_k);
  std::vector<Vector> out;
  out.reserve(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    Vector v = op.apply(sigma[i]);
    v[static_cast<Eigen::Index>(i)] += f_value * predicted[static_cast<Eigen::Index>(i)];
    out.push_back(std::move(v));
  }
  return out;
}

/// Filter state and statistics advanced together.
struct EstimatorState {
  FilterState filter;
  StatisticState stats;

  /// Multiplies q and every sigma vector by `factor` (ratios are unchanged).
  void scale(double factor) {
    filter.q *= factor;
    stats.scale(factor);
  }
};

inline EstimatorState initial_estimator(const SemiMarkovModel& model,
                                        const ObservationModel& obs, double y0,
                                        InitMode mode = InitMode::kBayes) {
  EstimatorState s;
  s.filter = initial_filter_state(model, obs, y0, mode);
  s.stats = initial_statistics(s.filter.q, y0);
  return s;
}

inline EstimatorState estimator_step(const EstimatorState& state, const SemiMarkovModel& model,
                                     const ObservationModel& obs, double y_next) {
  const Vector& q = state.filter.q;
  const StepOperator op = make_step(model, obs, state.filter.h_hat, y_next, q);
  EstimatorState next;
  double scale = 1.0;
  next.filter = advance(model, state.filter, op, &scale);
  const double inv = 1.0 / scale;

  StatisticState& st = next.stats;
  st.n = state.stats.n;
  st.sigma_N = step_N(state.stats, q, op);
  st.sigma_J = step_G(state.stats.sigma_J, q, op, 1.0);
  for (Functional f : kFunctionals) {
    const int fi = static_cast<int>(f);
    st.sigma_G[fi] = step_G(state.stats.sigma_G[fi], q, op, evaluate(f, y_next));
    st.sigma_E[fi] = step_E(state.stats.sigma_E[fi], q, op, evaluate(f, y_next));
  }
  st.scale(inv);
  return next;
}

/// Statistics normalized by <q, 1>, i.e. conditional expectations given
/// y_0..y_k.
struct NormalizedStatistics {
  Matrix N_hat;                        // (j, i), zero diagonal
  Vector J_hat;
  std::array<Vector, 3> G_hat;         // lagged, [f]
  std::array<Vector, 3> E_hat;         // aligned, [f]
};

inline NormalizedStatistics normalized_statistics(const EstimatorState& s) {
  const int n = s.stats.n;
  const double mass = s.filter.q.sum();
  NormalizedStatistics out;
  out.N_hat = Matrix::Zero(n, n);
  out.J_hat = Vector(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) out.N_hat(j, i) = s.stats.jumps(j, i).sum() / mass;
    }
    out.J_hat[i] = s.stats.sigma_J[i].sum() / mass;
  }
  for (int f = 0; f < 3; ++f) {
    out.G_hat[f] = Vector(n);
    out.E_hat[f] = Vector(n);
    for (int i = 0; i < n; ++i) {
      out.G_hat[f][i] = s.stats.sigma_G[f][i].sum() / mass;
      out.E_hat[f][i] = s.stats.sigma_E[f][i].sum() / mass;
    }
  }
  return out;
}

/// A state whose expected occupation falls below this fraction of the total
/// mass is treated as unvisited.
inline constexpr double kUnvisitedFraction = 1e-12;

/// Off-diagonal a_ji = <sigma(N^{ji}), 1> / <sigma(J^i), 1>, clamped to
/// [0, 1]; the diagonal holds the implied stay probability 1 - sum_j a_ji.
/// Columns of unvisited states are std::nullopt.
struct TransitionEstimate {
  int n = 0;
  std::vector<std::optional<double>> entries;  // [j * n + i]
  std::vector<int> undefined_states;

  const std::optional<double>& operator()(int j, int i) const { return entries[j * n + i]; }
};

inline TransitionEstimate reestimate_a(const EstimatorState& s) {
  const int n = s.stats.n;
  const double mass = s.filter.q.sum();
  TransitionEstimate est;
  est.n = n;
  est.entries.assign(n * n, std::nullopt);
  for (int i = 0; i < n; ++i) {
    const double occupation = s.stats.sigma_J[i].sum();
    if (!(occupation >= kUnvisitedFraction * mass) || occupation <= 0.0) {
      est.undefined_states.push_back(i);
      continue;
    }
    double leave = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double a = std::clamp(s.stats.jumps(j, i).sum() / occupation, 0.0, 1.0);
      est.entries[j * n + i] = a;
      leave += a;
    }
    est.entries[i * n + i] = std::clamp(1.0 - leave, 0.0, 1.0);
  }
  return est;
}

/// Which occupation weights feed the observation re-estimates.
enum class ObservationAlignment {
  kAligned,  // y_l weighed by P(X_l = e_i | y), l = 0..T
  kLagged,   // y_l weighed by P(X_{l-1} = e_i | y), l = 1..T (the G^i / J^i ratios)
};

inline constexpr double kVarianceFloor = 1e-8;

struct ObservationEstimate {
  std::vector<std::optional<double>> c;
  std::vector<std::optional<double>> d;
  std::vector<int> undefined_states;
};

/// c_i = S(y) / S(1), d_i^2 = S(y^2) / S(1) - c_i^2 floored at 1e-8.
inline ObservationEstimate reestimate_observation(
    const EstimatorState& s, ObservationAlignment alignment = ObservationAlignment::kAligned) {
  const int n = s.stats.n;
  const double mass = s.filter.q.sum();
  const auto& fam = alignment == ObservationAlignment::kAligned ? s.stats.sigma_E : s.stats.sigma_G;
  ObservationEstimate est;
  est.c.assign(n, std::nullopt);
  est.d.assign(n, std::nullopt);
  for (int i = 0; i < n; ++i) {
    const double weight = fam[0][i].sum();
    if (!(weight >= kUnvisitedFraction * mass) || weight <= 0.0) {
      est.undefined_states.push_back(i);
      continue;
    }
    const double c = fam[1][i].sum() / weight;
    const double var = std::max(fam[2][i].sum() / weight - c * c, kVarianceFloor);
    est.c[i] = c;
    est.d[i] = std::sqrt(var);
  }
  return est;
}

struct EstimationRun {
  std::vector<EstimatorState> states;  // k = 0..T

  const EstimatorState& final() const { return states.back(); }
};

inline EstimationRun run_estimation(const SemiMarkovModel& model, const ObservationModel& obs,
                                    std::span<const double> y,
                                    InitMode mode = InitMode::kBayes) {
  check_inputs(model, obs, y);
  EstimationRun run;
  run.states.reserve(y.size());
  run.states.push_back(initial_estimator(model, obs, y[0], mode));
  for (std::size_t k = 1; k < y.size(); ++k) {
    run.states.push_back(estimator_step(run.states.back(), model, obs, y[k]));
  }
  return run;
}

}  // namespace hsmm
