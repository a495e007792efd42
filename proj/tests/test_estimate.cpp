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

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

namespace hsmm {
namespace {

const std::string kModels = HSMM_MODELS_DIR;

SemiMarkovModel two_state(std::vector<double> pi1, std::vector<double> pi2) {
  Matrix p(2, 2);
  p << 0.0, 1.0, 1.0, 0.0;
  return SemiMarkovModel(JumpKernel(p), {SojournLaw::from_pmf(pi1), SojournLaw::from_pmf(pi2)},
                         Vector::Constant(2, 0.5));
}

TEST(Statistics, StartAtZero) {
  const auto mf = load_model(kModels + "/mixed3.json");
  const auto s = initial_estimator(mf.model, *mf.observation, 0.4);
  for (const auto& v : s.stats.sigma_N) EXPECT_EQ(v, Vector::Zero(3));
  for (const auto& v : s.stats.sigma_J) EXPECT_EQ(v, Vector::Zero(3));
  for (const auto& fam : s.stats.sigma_G)
    for (const auto& v : fam) EXPECT_EQ(v, Vector::Zero(3));
  const auto norm = normalized_statistics(s);
  EXPECT_LE((norm.E_hat[0] - s.filter.posterior()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((norm.E_hat[1] - 0.4 * s.filter.posterior()).cwiseAbs().maxCoeff(), 1e-15);
}

// The vector recursion summed after the step equals the scalar update
// <B A sigma, 1> + a_ji q^i gamma_j divided by the same normalizer.
TEST(StepN, VectorAndScalarOrdersAgree) {
  const auto mf = load_model(kModels + "/mixed3.json");
  const auto y = observe_path(simulate_path(mf.model, 200, 5), *mf.observation, 5);
  auto state = initial_estimator(mf.model, *mf.observation, y[0]);
  for (std::size_t k = 1; k < y.size(); ++k) {
    const auto op = make_step(mf.model, *mf.observation, state.filter.h_hat, y[k], state.filter.q);
    const double s = op.apply(state.filter.q).sum();
    const auto next = estimator_step(state, mf.model, *mf.observation, y[k]);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        const double scalar = (op.apply(state.stats.jumps(j, i)).sum() +
                               op.transition(j, i) * state.filter.q[i] * op.weights[j]) / s;
        const double vector = next.stats.jumps(j, i).sum();
        EXPECT_LE(std::abs(scalar - vector), 1e-12 * std::max(1.0, std::abs(vector)));
      }
    }
    state = next;
  }
}

TEST(Statistics, OccupationsPartitionTime) {
  for (const char* name : {"geometric2.json", "deterministic3.json", "mixed3.json"}) {
    const auto mf = load_model(kModels + "/" + name);
    const auto y = observe_path(simulate_path(mf.model, 3000, 8), *mf.observation, 8);
    const auto run = run_estimation(mf.model, *mf.observation, y);
    for (std::size_t k = 0; k < y.size(); k += 250) {
      const auto norm = normalized_statistics(run.states[k]);
      EXPECT_NEAR(norm.J_hat.sum(), double(k), 1e-6) << name;
      for (int i = 0; i < norm.J_hat.size(); ++i) EXPECT_LE(norm.J_hat[i], double(k) + 1e-9);
    }
  }
}

TEST(Statistics, NonNegative) {
  const auto mf = load_model(kModels + "/mixed3.json");
  const auto y = observe_path(simulate_path(mf.model, 500, 2), *mf.observation, 2);
  const auto run = run_estimation(mf.model, *mf.observation, y);
  for (const auto& s : run.states) {
    for (const auto& v : s.stats.sigma_N) EXPECT_GE(v.minCoeff(), 0.0);
    for (const auto& v : s.stats.sigma_J) EXPECT_GE(v.minCoeff(), 0.0);
    for (int f : {0, 2}) {
      for (const auto& v : s.stats.sigma_G[f]) EXPECT_GE(v.minCoeff(), 0.0);
      for (const auto& v : s.stats.sigma_E[f]) EXPECT_GE(v.minCoeff(), 0.0);
    }
  }
}

TEST(Statistics, GeometricMatchesEStep) {
  std::mt19937_64 g(90);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 2 + trial % 3;
    const auto setup = testing::random_geometric(g, n);
    const auto model = setup.model(1024);
    const auto obs = setup.observation();
    const auto y = observe_path(simulate_path(model, 1000, trial), obs, trial);
    const auto run = run_estimation(model, obs, y);
    const auto norm = normalized_statistics(run.final());
    const auto ex = testing::e_step(testing::forward_backward(setup.reference(), y), y);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) EXPECT_NEAR(norm.N_hat(j, i), ex.jumps[j][i], 1e-10);
      }
      EXPECT_NEAR(norm.J_hat[i], ex.occupation[i], 1e-10);
      for (int f = 0; f < 3; ++f) {
        EXPECT_NEAR(norm.G_hat[f][i], ex.lagged[f][i], 1e-10) << "f=" << f;
        EXPECT_NEAR(norm.E_hat[f][i], ex.aligned[f][i], 1e-10) << "f=" << f;
      }
    }
  }
}

// Sharp observations make the counts nearly certain; compare against the
// path's own counts.
TEST(Statistics, RecoverGroundTruthCounts) {
  const auto model = two_state({0.1, 0.2, 0.3, 0.2, 0.2}, {0.3, 0.4, 0.3});
  const ObservationModel obs(Vector{{0.0, 1.0}}, Vector{{0.02, 0.02}});
  bool found_jumps = false, found_occupation = false;
  for (std::uint64_t seed = 0; seed < 500 && !(found_jumps && found_occupation); ++seed) {
    const int horizon = 10 + static_cast<int>(seed % 3) * 2;
    const auto path = simulate_path(model, horizon, seed);
    int jumps_01 = 0, occupation_0 = 0;
    for (int l = 1; l <= horizon; ++l) {
      jumps_01 += path.states[l - 1] == 0 && path.states[l] == 1;
      occupation_0 += path.states[l - 1] == 0;
    }
    const auto y = observe_path(path, obs, seed);
    const auto norm = normalized_statistics(run_estimation(model, obs, y).final());
    if (jumps_01 == 3) {
      found_jumps = true;
      EXPECT_NEAR(norm.N_hat(1, 0), 3.0, 0.05) << seed;
    }
    if (horizon == 10 && occupation_0 == 7) {
      found_occupation = true;
      EXPECT_NEAR(norm.J_hat[0], 7.0, 0.5) << seed;
    }
  }
  EXPECT_TRUE(found_jumps);
  EXPECT_TRUE(found_occupation);
}

TEST(Statistics, TotalJumpsMatchPath) {
  const auto mf = load_model(kModels + "/mixed3.json");
  const ObservationModel sharp(mf.observation->c(), Vector::Constant(3, 0.05));
  const auto path = simulate_path(mf.model, 2000, 12);
  const auto y = observe_path(path, sharp, 12);
  const auto norm = normalized_statistics(run_estimation(mf.model, sharp, y).final());
  const double truth = static_cast<double>(path.jumps.size());
  EXPECT_NEAR(norm.N_hat.sum(), truth, 0.05 * truth);
}

TEST(Statistics, CenteredNoiseGivesCenteredLaggedMean) {
  const auto model = two_state({0.2, 0.3, 0.5}, {0.5, 0.5});
  const ObservationModel obs(Vector::Zero(2), Vector{{1.0, 2.0}});
  std::vector<double> values;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto y = observe_path(simulate_path(model, 100, seed), obs, seed);
    values.push_back(normalized_statistics(run_estimation(model, obs, y).final()).G_hat[1][0]);
  }
  double mean = 0.0, sq = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  for (double v : values) sq += (v - mean) * (v - mean);
  const double mc = std::sqrt(sq / (values.size() - 1) / values.size());
  EXPECT_LE(std::abs(mean), 3 * mc);
}

TEST(Reestimate, UnvisitedStateIsUndefined) {
  Matrix p(3, 3);
  p << 0.0, 1.0, 0.5,
       1.0, 0.0, 0.5,
       0.0, 0.0, 0.0;
  const SemiMarkovModel model(JumpKernel(p),
                              {SojournLaw::from_pmf({0.5, 0.5}), SojournLaw::from_pmf({0.5, 0.5}),
                               SojournLaw::deterministic(1)},
                              Vector{{0.5, 0.5, 0.0}});
  const ObservationModel obs(Vector{{0.0, 1.0, 2.0}}, Vector::Constant(3, 0.3));
  const auto y = observe_path(simulate_path(model, 100, 1), obs, 1);
  const auto s = run_estimation(model, obs, y).final();
  const auto a = reestimate_a(s);
  EXPECT_EQ(a.undefined_states, std::vector<int>{2});
  for (int j = 0; j < 3; ++j) EXPECT_FALSE(a(j, 2).has_value());
  ASSERT_TRUE(a(1, 0).has_value());
  double column = 0.0;
  for (int j = 0; j < 3; ++j) column += *a(j, 0);
  EXPECT_NEAR(column, 1.0, 1e-12);
  const auto o = reestimate_observation(s);
  EXPECT_EQ(o.undefined_states, std::vector<int>{2});
  EXPECT_FALSE(o.c[2].has_value());
  EXPECT_FALSE(o.d[2].has_value());
  EXPECT_TRUE(o.c[0].has_value());
}

TEST(Reestimate, ConstantObservationsHitVarianceFloor) {
  const auto model = two_state({0.0, 0.0, 0.0, 1.0}, {1.0});
  const ObservationModel obs(Vector{{0.0, 3.0}}, Vector{{0.5, 0.5}});
  const std::vector<double> y(4, 0.0);
  const auto o = reestimate_observation(run_estimation(model, obs, y).final());
  ASSERT_TRUE(o.d[0].has_value());
  EXPECT_EQ(*o.c[0], 0.0);
  EXPECT_EQ(*o.d[0], std::sqrt(kVarianceFloor));
}

TEST(Reestimate, SingleStateOccupancyGivesSampleMean) {
  Matrix p(2, 2);
  p << 0.0, 1.0, 1.0, 0.0;
  const SemiMarkovModel model(JumpKernel(p), {SojournLaw::geometric(0.001, 1000), SojournLaw::from_pmf({0.5, 0.5})},
                              Vector{{0.9, 0.1}});
  const ObservationModel obs(Vector{{0.0, 100.0}}, Vector{{1.0, 1.0}});
  std::vector<double> y(200);
  std::mt19937_64 g(3);
  std::normal_distribution<double> noise;
  double mean = 0.0, sq = 0.0;
  for (auto& v : y) mean += (v = noise(g));
  mean /= y.size();
  for (double v : y) sq += (v - mean) * (v - mean);
  const auto s = run_estimation(model, obs, y).final();
  const auto o = reestimate_observation(s);
  EXPECT_NEAR(*o.c[0], mean, 1e-10);
  EXPECT_NEAR(*o.d[0], std::sqrt(sq / y.size()), 1e-10);
  EXPECT_EQ(o.undefined_states, std::vector<int>{1});
  const auto lagged = reestimate_observation(s, ObservationAlignment::kLagged);
  double lag_mean = 0.0;
  for (std::size_t l = 1; l < y.size(); ++l) lag_mean += y[l];
  EXPECT_NEAR(*lagged.c[0], lag_mean / (y.size() - 1), 1e-10);
}

TEST(Reestimate, GeometricConsistency) {
  const auto mf = load_model(kModels + "/geometric2.json");
  const auto path = simulate_path(mf.model, 10000, 17);
  const auto y = observe_path(path, *mf.observation, 17);
  const auto s = run_estimation(mf.model, *mf.observation, y).final();
  const auto a = reestimate_a(s);
  for (int i = 0; i < 2; ++i) {
    const double rho = mf.model.sojourn(i).hazard(0);
    for (int j = 0; j < 2; ++j) {
      if (i != j) EXPECT_NEAR(*a(j, i), rho * mf.model.kernel()(j, i), 0.02);
    }
  }
  const auto o = reestimate_observation(s);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(*o.c[i], mf.observation->c()[i], 0.05);
    EXPECT_NEAR(*o.d[i], mf.observation->d()[i], 0.05);
  }
}

TEST(Reestimate, InvariantToPowerOfTwoScaling) {
  const auto mf = load_model(kModels + "/mixed3.json");
  const auto y = observe_path(simulate_path(mf.model, 300, 4), *mf.observation, 4);
  const auto run = run_estimation(mf.model, *mf.observation, y);
  auto scaled = run.final();
  scaled.scale(0x1.0p-330);
  const auto a = reestimate_a(run.final()), b = reestimate_a(scaled);
  EXPECT_EQ(a.entries, b.entries);
  const auto oa = reestimate_observation(run.final()), ob = reestimate_observation(scaled);
  EXPECT_EQ(oa.c, ob.c);
  EXPECT_EQ(oa.d, ob.d);
  auto mid = run.states[150];
  mid.scale(0x1.0p+300);
  const auto next = estimator_step(mid, mf.model, *mf.observation, y[151]);
  EXPECT_EQ(next.filter.q, run.states[151].filter.q);
  EXPECT_EQ(next.stats.sigma_N, run.states[151].stats.sigma_N);
}

}  // namespace
}  // namespace hsmm
