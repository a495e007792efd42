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

// Semi-Markov model primitives.
//
// Conventions used throughout the library:
//  * States are 0-based internally (`0 .. N-1`); files and the CLI print
//    them 1-based.
//  * Matrices are column-stochastic: column i is the law of the next state
//    given the current state i, so distributions are column vectors acted
//    on from the left.
//  * The sojourn clock h counts the periods spent in the current state
//    including the current one, so h = 1 on arrival.  A sojourn of length
//    m occupies clocks 1..m.  The hazard Delta(k) = pi(k+1) / F(k) is the
//    exit probability after k completed periods, so a chain at clock h
//    leaves with probability Delta(h - 1) and moves by A(h - 1).
//    `clock_transition` applies that offset; `transition_matrix` is the
//    raw I + Pi D(k).

#pragma once

#include "hsmm/common.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace hsmm {

/// Sojourn-time law with finite support 1..L.
class SojournLaw {
 public:
  /// Builds a law from pi(1), ..., pi(L). Trailing zeros are dropped.
  /// Throws ValidationError (with `field`) on negative or non-finite mass or
  /// a total differing from 1 by more than kProbabilityTolerance.
  static SojournLaw from_pmf(std::vector<double> pmf,
                             const std::string& field = "pmf") {
    for (std::size_t m = 0; m < pmf.size(); ++m) {
      if (!std::isfinite(pmf[m]) || pmf[m] < 0.0) {
        throw ValidationError(field + "[" + std::to_string(m) + "]",
                              "sojourn mass must be finite and >= 0");
      }
    }
    while (!pmf.empty() && pmf.back() == 0.0) pmf.pop_back();
    if (pmf.empty()) throw ValidationError(field, "sojourn law has no mass");
    double total = 0.0;
    for (double p : pmf) total += p;
    if (std::abs(total - 1.0) > kProbabilityTolerance) {
      throw ValidationError(field, "sojourn masses sum to " +
                                       format_double(total) + ", expected 1");
    }
    SojournLaw law;
    law.pmf_ = std::move(pmf);
    law.build_tables();
    return law;
  }

  /// Geometric law pi(m) = (1-rho)^(m-1) rho truncated at `support`, with
  /// the tail mass folded into pi(support). The hazard is exactly rho below
  /// the last level.
  static SojournLaw geometric(double rho, int support,
                              const std::string& field = "geometric") {
    if (!(rho > 0.0 && rho <= 1.0)) {
      throw ValidationError(field, "geometric exit probability must be in (0,1]");
    }
    if (support < 1) throw ValidationError(field, "support must be >= 1");
    SojournLaw law;
    law.pmf_.resize(static_cast<std::size_t>(support));
    double stay = 1.0;
    for (int m = 1; m < support; ++m) {
      law.pmf_[m - 1] = stay * rho;
      stay *= 1.0 - rho;
    }
    law.pmf_[support - 1] = stay;
    while (law.pmf_.size() > 1 && law.pmf_.back() == 0.0) law.pmf_.pop_back();
    law.build_tables();
    for (std::size_t k = 0; k + 1 < law.hazard_.size(); ++k) law.hazard_[k] = rho;
    return law;
  }

  /// Sojourn of exactly `length` periods.
  static SojournLaw deterministic(int length) {
    if (length < 1) throw ValidationError("deterministic", "length must be >= 1");
    std::vector<double> pmf(static_cast<std::size_t>(length), 0.0);
    pmf.back() = 1.0;
    return from_pmf(std::move(pmf));
  }

  int support() const { return static_cast<int>(pmf_.size()); }
  const std::vector<double>& pmf() const { return pmf_; }

  /// pi(m); zero outside 1..L.
  double mass(int m) const {
    return (m >= 1 && m <= support()) ? pmf_[m - 1] : 0.0;
  }

  /// G(k) = P(sojourn <= k).
  double cdf(int k) const { return 1.0 - survival(k); }

  /// F(k) = P(sojourn > k), computed as a tail sum so F(L) = 0 exactly.
  double survival(int k) const {
    if (k <= 0) return 1.0;
    if (k >= support()) return 0.0;
    return tail_[k];
  }

  /// Delta(k) = pi(k+1) / F(k) for k >= 0. Equals 1 once the support is
  /// exhausted (F(k) = 0 or k >= L).
  double hazard(int k) const {
    if (k < 0) throw std::out_of_range("hazard: k must be >= 0");
    if (k >= support()) return 1.0;
    return hazard_[k];
  }

  /// Probability of leaving at the end of the current period when the
  /// sojourn clock reads `clock` (clock = 1 on arrival).
  double exit_probability(int clock) const { return hazard(clock - 1); }

 private:
  SojournLaw() = default;

  void build_tables() {
    const std::size_t L = pmf_.size();
    tail_.assign(L + 1, 0.0);
    for (std::size_t k = L; k-- > 0;) tail_[k] = tail_[k + 1] + pmf_[k];
    tail_[0] = 1.0;
    // Rounding in a pmf that sums to 1 + eps must not push F above 1.
    for (std::size_t k = 1; k <= L; ++k) tail_[k] = std::min(tail_[k], tail_[k - 1]);
    hazard_.assign(L, 1.0);
    for (std::size_t k = 0; k < L; ++k) {
      if (tail_[k] > 0.0) hazard_[k] = std::min(1.0, pmf_[k] / tail_[k]);
    }
  }

  std::vector<double> pmf_;
  std::vector<double> tail_;    // tail_[k] = F(k), k = 0..L
  std::vector<double> hazard_;  // hazard_[k] = Delta(k), k = 0..L-1
};

/// p_{ji}: probability that a jump out of state i lands in state j.
/// Stored as a column-stochastic matrix with zero diagonal.
class JumpKernel {
 public:
  explicit JumpKernel(Matrix p, const std::string& field = "jump_kernel")
      : p_(std::move(p)) {
    if (p_.rows() != p_.cols()) throw ValidationError(field, "must be square");
    if (p_.rows() < 2) {
      throw ValidationError(field,
                            "needs at least 2 states (a column with zero "
                            "diagonal cannot sum to 1 otherwise)");
    }
    for (Eigen::Index i = 0; i < p_.cols(); ++i) {
      double total = 0.0;
      for (Eigen::Index j = 0; j < p_.rows(); ++j) {
        const double v = p_(j, i);
        const std::string at = field + "[" + std::to_string(j) + "][" +
                               std::to_string(i) + "]";
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
          throw ValidationError(at, "entry must lie in [0,1]");
        }
        if (i == j && v != 0.0) throw ValidationError(at, "diagonal must be 0");
        total += v;
      }
      if (std::abs(total - 1.0) > kProbabilityTolerance) {
        throw ValidationError(field + " column " + std::to_string(i),
                              "sums to " + format_double(total) + ", expected 1");
      }
    }
  }

  int n_states() const { return static_cast<int>(p_.rows()); }
  double operator()(int j, int i) const { return p_(j, i); }
  const Matrix& matrix() const { return p_; }

 private:
  Matrix p_;
};

class SemiMarkovModel {
 public:
  SemiMarkovModel(JumpKernel kernel, std::vector<SojournLaw> sojourns, Vector p0)
      : kernel_(std::move(kernel)), sojourns_(std::move(sojourns)), p0_(std::move(p0)) {
    const int n = kernel_.n_states();
    if (static_cast<int>(sojourns_.size()) != n) {
      throw ValidationError("sojourns", "expected " + std::to_string(n) + " laws, got " +
                                            std::to_string(sojourns_.size()));
    }
    if (p0_.size() != n) {
      throw ValidationError("p0", "expected " + std::to_string(n) + " entries");
    }
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(p0_[i]) || p0_[i] < 0.0) {
        throw ValidationError("p0[" + std::to_string(i) + "]", "must be >= 0");
      }
    }
    if (std::abs(p0_.sum() - 1.0) > kProbabilityTolerance) {
      throw ValidationError("p0", "sums to " + format_double(p0_.sum()) + ", expected 1");
    }
  }

  int n_states() const { return kernel_.n_states(); }
  const JumpKernel& kernel() const { return kernel_; }
  const SojournLaw& sojourn(int i) const { return sojourns_[i]; }
  const std::vector<SojournLaw>& sojourns() const { return sojourns_; }
  const Vector& p0() const { return p0_; }

  int max_support() const {
    int m = 1;
    for (const auto& s : sojourns_) m = std::max(m, s.support());
    return m;
  }

 private:
  JumpKernel kernel_;
  std::vector<SojournLaw> sojourns_;
  Vector p0_;
};

/// Observation levels and noise scales: y = c[X] + d[X] w, w ~ N(0,1).
class ObservationModel {
 public:
  ObservationModel(Vector c, Vector d) : c_(std::move(c)), d_(std::move(d)) {
    if (c_.size() != d_.size()) {
      throw ValidationError("observation", "c and d must have equal length");
    }
    for (Eigen::Index i = 0; i < d_.size(); ++i) {
      if (!std::isfinite(c_[i])) {
        throw ValidationError("observation.c[" + std::to_string(i) + "]", "must be finite");
      }
      if (!std::isfinite(d_[i]) || !(d_[i] > 0.0)) {
        throw ValidationError("observation.d[" + std::to_string(i) + "]", "must be > 0");
      }
    }
  }

  int n_states() const { return static_cast<int>(c_.size()); }
  const Vector& c() const { return c_; }
  const Vector& d() const { return d_; }

 private:
  Vector c_;
  Vector d_;
};

inline double hazard(const SojournLaw& law, int k) { return law.hazard(k); }

/// D(k) = diag(Delta^1(k), ..., Delta^N(k)) as a vector.
inline Vector hazard_diagonal(const SemiMarkovModel& model, int k) {
  Vector h(model.n_states());
  for (int i = 0; i < model.n_states(); ++i) h[i] = model.sojourn(i).hazard(k);
  return h;
}

/// Pi: p_{ji} off the diagonal, -1 on it.
inline Matrix generator_matrix(const SemiMarkovModel& model) {
  Matrix pi = model.kernel().matrix();
  pi.diagonal().setConstant(-1.0);
  return pi;
}

/// A(k): a_ii = 1 - Delta^i(k), a_ji = p_ji Delta^i(k).
inline Matrix transition_matrix(const SemiMarkovModel& model, int k) {
  const int n = model.n_states();
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    const double delta = model.sojourn(i).hazard(k);
    for (int j = 0; j < n; ++j) {
      a(j, i) = (i == j) ? 1.0 - delta : model.kernel()(j, i) * delta;
    }
  }
  return a;
}

/// Transition matrix for a chain whose sojourn clock reads `clock` >= 1.
inline Matrix clock_transition(const SemiMarkovModel& model, int clock) {
  return transition_matrix(model, clock - 1);
}

/// log gamma_j(y) = log phi((y - c_j)/d_j) - log d_j - log phi(y).
inline double log_gamma(const ObservationModel& obs, int j, double y) {
  const double z = (y - obs.c()[j]) / obs.d()[j];
  return 0.5 * (y * y - z * z) - std::log(obs.d()[j]);
}

/// Likelihood ratio of state j's observation density against N(0,1),
/// evaluated through log_gamma so it stays finite for large |y|.
inline double gamma(const ObservationModel& obs, int j, double y) {
  return std::exp(log_gamma(obs, j, y));
}

/// The same ratio evaluated literally as a quotient of normal densities.
/// Underflows to 0/0 once exp(-y^2/2) does.
inline double gamma_direct(const ObservationModel& obs, int j, double y) {
  constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  const double z = (y - obs.c()[j]) / obs.d()[j];
  const double num = inv_sqrt_2pi * std::exp(-0.5 * z * z);
  const double den = obs.d()[j] * inv_sqrt_2pi * std::exp(-0.5 * y * y);
  return num / den;
}

}  // namespace hsmm
