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

// Markov embedding of the semi-Markov chain on (state, clock) pairs.
//
// The pair (e_i, r) moves to (e_i, r+1) with probability 1 - exit_i(r) and
// to (e_j, 1) with probability p_ji exit_i(r), where exit_i(r) is the exit
// probability at clock r. Clock levels run 1..M with M the largest sojourn
// support, and every state leaves with certainty at level M, so the
// truncated chain is exact for finite-support models.
//
// Lifted index of (i, r) is (r - 1) * N + i: level-major blocks of N
// states. In block form C has Pi(1), Pi(2), ... along the first block row
// (jumps, landing at level 1) and D(1), D(2), ... on the block subdiagonal
// (continuations).

#pragma once

#include "hsmm/filter.hpp"

#include <Eigen/SparseCore>

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace hsmm {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

class EmbeddedModel {
 public:
  EmbeddedModel(SemiMarkovModel base, int depth, SparseMatrix c)
      : base_(std::move(base)), depth_(depth), c_(std::move(c)) {}

  const SemiMarkovModel& base() const { return base_; }
  int n_states() const { return base_.n_states(); }
  int depth() const { return depth_; }
  int size() const { return n_states() * depth_; }
  const SparseMatrix& matrix() const { return c_; }

  /// Lifted index of (state i, clock level r), 0-based i, r >= 1.
  int index(int i, int r) const { return (r - 1) * n_states() + i; }

  /// Dense N x N block of C at (row level, column level).
  Matrix block(int row_level, int col_level) const {
    const int n = n_states();
    return Matrix(c_).block((row_level - 1) * n, (col_level - 1) * n, n, n);
  }

  /// Probability vector over lifted states with p_0 placed at level 1.
  Vector lift(const Vector& dist) const {
    Vector out = Vector::Zero(size());
    out.head(n_states()) = dist;
    return out;
  }

  /// Sums a lifted vector over clock levels.
  Vector marginal(const Vector& lifted) const {
    Vector out = Vector::Zero(n_states());
    for (int r = 1; r <= depth_; ++r) out += lifted.segment((r - 1) * n_states(), n_states());
    return out;
  }

 private:
  SemiMarkovModel base_;
  int depth_;
  SparseMatrix c_;
};

/// Builds C with depth M = max sojourn support, or `depth` when given.
/// Throws ValidationError when a support exceeds the requested depth.
inline EmbeddedModel build_embedded(const SemiMarkovModel& model, int depth = 0) {
  const int support = model.max_support();
  if (depth == 0) depth = support;
  if (depth < support) {
    throw ValidationError("sojourns", "support " + std::to_string(support) +
                                          " exceeds embedding depth " + std::to_string(depth));
  }
  const int n = model.n_states();
  const int size = n * depth;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(size) * n);
  for (int r = 1; r <= depth; ++r) {
    for (int i = 0; i < n; ++i) {
      const int col = (r - 1) * n + i;
      const double leave = (r == depth) ? 1.0 : model.sojourn(i).exit_probability(r);
      for (int j = 0; j < n; ++j) {
        const double p = model.kernel()(j, i) * leave;
        if (j != i && p > 0.0) entries.emplace_back(j, col, p);
      }
      if (leave < 1.0) entries.emplace_back(r * n + i, col, 1.0 - leave);
    }
  }
  SparseMatrix c(size, size);
  c.setFromTriplets(entries.begin(), entries.end());
  c.makeCompressed();
  return EmbeddedModel(model, depth, std::move(c));
}

/// C^steps applied to a lifted probability vector.
inline Vector embedded_predict(const EmbeddedModel& em, const Vector& dist, int steps) {
  if (dist.size() != em.size()) throw std::invalid_argument("embedded_predict: size mismatch");
  if (steps < 0) throw std::invalid_argument("embedded_predict: steps must be >= 0");
  if (std::abs(dist.sum() - 1.0) > 1e-10) {
    throw std::invalid_argument("embedded_predict: distribution does not sum to 1");
  }
  Vector out = dist;
  for (int s = 0; s < steps; ++s) out = em.matrix() * out;
  return out;
}

/// Lifted observation vectors: c and d repeated across clock levels.
struct LiftedObservation {
  Vector c_bar;
  Vector d_bar;
};

inline LiftedObservation lift_observation(const EmbeddedModel& em, const ObservationModel& obs) {
  LiftedObservation out{Vector(em.size()), Vector(em.size())};
  for (int r = 1; r <= em.depth(); ++r) {
    out.c_bar.segment(em.index(0, r), em.n_states()) = obs.c();
    out.d_bar.segment(em.index(0, r), em.n_states()) = obs.d();
  }
  return out;
}

struct EmbeddedFilterRun {
  std::vector<Vector> q;          // unit-sum lifted vectors, k = 0..T
  std::vector<double> log_norm;   // log of the scale removed up to k
  std::vector<Vector> marginals;  // state posteriors summed over levels
};

/// Exact filter on the lifted chain: q_{k+1} = B(y_{k+1}) C q_k, rescaled
/// to unit sum each step.
inline EmbeddedFilterRun embedded_filter(const EmbeddedModel& em, const ObservationModel& obs,
                                         std::span<const double> y,
                                         InitMode mode = InitMode::kBayes) {
  check_inputs(em.base(), obs, y);
  const auto lifted = lift_observation(em, obs);
  const int size = em.size();

  auto weigh = [&](const Vector& u, double y_k, double& log_norm) {
    Vector log_b(size);
    for (int a = 0; a < size; ++a) {
      const double z = (y_k - lifted.c_bar[a]) / lifted.d_bar[a];
      log_b[a] = 0.5 * (y_k * y_k - z * z) - std::log(lifted.d_bar[a]);
    }
    const auto sw = scaled_weights(log_b, u);
    const Vector raw = sw.weights.cwiseProduct(u);
    const double s = checked_mass(raw, "embedded_filter");
    log_norm += sw.log_shift + std::log(s);
    return Vector(raw / s);
  };

  EmbeddedFilterRun run;
  double log_norm = 0.0;
  Vector q = em.lift(em.base().p0());
  if (mode == InitMode::kBayes) q = weigh(q, y[0], log_norm);
  run.q.push_back(q);
  run.log_norm.push_back(log_norm);
  for (std::size_t k = 1; k < y.size(); ++k) {
    q = weigh(em.matrix() * q, y[k], log_norm);
    run.q.push_back(q);
    run.log_norm.push_back(log_norm);
  }
  for (const auto& v : run.q) {
    const Vector m = em.marginal(v);
    run.marginals.push_back(m / m.sum());
  }
  return run;
}

/// Exact posteriors from summing over every state path.
struct ExactPosterior {
  std::vector<Vector> filtered;  // P(X_k | y_0..y_k)
  std::vector<Vector> smoothed;  // P(X_k | y_0..y_T)
  double log_evidence = 0.0;     // log density of y_0..y_T
};

inline constexpr double kEnumerationLimit = 1e7;

/// Brute-force Bayes over all N^(T+1) paths. Path probabilities come from
/// the sojourn exit probabilities along each path's own clock; likelihoods
/// are Gaussian densities. With `kPrior`, y_0 is not weighed, matching the
/// filters' prior initialization.
inline ExactPosterior enumerate_posterior(const SemiMarkovModel& model,
                                          const ObservationModel& obs,
                                          std::span<const double> y,
                                          InitMode mode = InitMode::kBayes) {
  check_inputs(model, obs, y);
  const int n = model.n_states();
  const int steps = static_cast<int>(y.size());
  if (std::pow(static_cast<double>(n), steps) > kEnumerationLimit) {
    throw ValidationError("observations", "N^(T+1) exceeds the enumeration limit of 1e7 paths");
  }
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  auto log_density = [&](int j, double yk) {
    const double z = (yk - obs.c()[j]) / obs.d()[j];
    return -0.5 * z * z - std::log(obs.d()[j]) - 0.5 * std::log(2.0 * std::numbers::pi);
  };
  auto log_add = [](double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
  };

  std::vector<std::vector<double>> prefix(steps, std::vector<double>(n, neg_inf));
  std::vector<std::vector<double>> full(steps, std::vector<double>(n, neg_inf));
  std::vector<int> path(steps);
  double evidence = neg_inf;

  // Depth-first over paths; `logw` covers X_0..X_k and y_0..y_k.
  auto visit = [&](auto&& self, int k, int clock, double logw) -> void {
    prefix[k][path[k]] = log_add(prefix[k][path[k]], logw);
    if (k + 1 == steps) {
      evidence = log_add(evidence, logw);
      for (int t = 0; t < steps; ++t) full[t][path[t]] = log_add(full[t][path[t]], logw);
      return;
    }
    const int i = path[k];
    const double leave = model.sojourn(i).exit_probability(clock);
    for (int j = 0; j < n; ++j) {
      const double p = (j == i) ? 1.0 - leave : model.kernel()(j, i) * leave;
      if (p <= 0.0) continue;
      path[k + 1] = j;
      self(self, k + 1, j == i ? clock + 1 : 1, logw + std::log(p) + log_density(j, y[k + 1]));
    }
  };
  for (int i = 0; i < n; ++i) {
    if (model.p0()[i] <= 0.0) continue;
    path[0] = i;
    const double w0 = std::log(model.p0()[i]) + (mode == InitMode::kBayes ? log_density(i, y[0]) : 0.0);
    visit(visit, 0, 1, w0);
  }

  auto normalize = [n](const std::vector<double>& logs) {
    double m = neg_inf;
    for (double v : logs) m = std::max(m, v);
    Vector out(n);
    for (int i = 0; i < n; ++i) out[i] = std::exp(logs[i] - m);
    return Vector(out / out.sum());
  };
  ExactPosterior post;
  for (int k = 0; k < steps; ++k) {
    post.filtered.push_back(normalize(prefix[k]));
    post.smoothed.push_back(normalize(full[k]));
  }
  post.log_evidence = evidence;
  return post;
}

}  // namespace hsmm
