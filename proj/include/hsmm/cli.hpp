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

// Command runner behind the `hsmm` executable. Kept in the library so the
// commands can be exercised in-process.

#pragma once

#include "hsmm/embedding.hpp"
#include "hsmm/estimate.hpp"
#include "hsmm/filter.hpp"
#include "hsmm/io.hpp"
#include "hsmm/simulate.hpp"
#include "hsmm/smoother.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace hsmm {

enum class Command { kSimulate, kFilter, kSmooth, kEstimate, kEmbedFilter, kCrosscheck };

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct RunConfig {
  Command command = Command::kSimulate;
  std::string model_path;
  std::string observations_path;  // empty: crosscheck simulates instead
  std::string output_path;        // empty: the `out` stream
  std::string log_norm_path;      // embed-filter sidecar; default <output>.lognorm.csv
  int horizon = -1;
  std::optional<std::uint64_t> seed;
  InitMode init_mode = InitMode::kBayes;
  int depth = 0;  // embedding depth; 0 = largest sojourn support
};

struct CrosscheckReport {
  double max_tv = 0.0;
  int worst_k = 0;
  double log_norm_filter = 0.0;
  double log_norm_embedded = 0.0;
};

/// Largest total-variation distance between the clock-estimate filter and
/// the exact embedded filter over k.
inline CrosscheckReport crosscheck(const SemiMarkovModel& model, const ObservationModel& obs,
                                   std::span<const double> y, InitMode mode, int depth = 0) {
  const auto approx = run_filter(model, obs, y, mode);
  const auto exact = embedded_filter(build_embedded(model, depth), obs, y, mode);
  CrosscheckReport r;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double tv = 0.5 * (approx.posteriors[k] - exact.marginals[k]).cwiseAbs().sum();
    if (tv > r.max_tv) {
      r.max_tv = tv;
      r.worst_k = static_cast<int>(k);
    }
  }
  r.log_norm_filter = approx.states.back().log_norm;
  r.log_norm_embedded = exact.log_norm.back();
  return r;
}

namespace detail {

inline const ObservationModel& need_observation(const ModelFile& mf) {
  if (!mf.observation) throw ValidationError("observation", "model has no observation section");
  return *mf.observation;
}

inline std::uint64_t need_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw ValidationError("seed", "required for this command");
  return *cfg.seed;
}

template <typename Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw ValidationError("output", "cannot open " + path);
  fn(file);
}

inline PathRecord simulate_observed(const ModelFile& mf, int horizon, std::uint64_t seed) {
  if (horizon < 0) throw ValidationError("horizon", "must be given and >= 0");
  PathRecord path = simulate_path(mf.model, horizon, seed);
  if (mf.observation) path.observations = observe_path(path, *mf.observation, seed);
  return path;
}

}  // namespace detail

/// Runs one command. Returns 0 on success, 2 on configuration or validation
/// errors, 3 when a numerical guard trips (including unvisited states in
/// `estimate`, whose JSON is still written).
inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const ModelFile mf = load_model(cfg.model_path);
    switch (cfg.command) {
      case Command::kSimulate: {
        const auto path = detail::simulate_observed(mf, cfg.horizon, detail::need_seed(cfg));
        detail::with_output(cfg.output_path, out, [&](std::ostream& o) { write_simulation_csv(o, path); });
        return kExitOk;
      }
      case Command::kFilter: {
        const auto y = read_observations(cfg.observations_path);
        const auto runf = run_filter(mf.model, detail::need_observation(mf), y, cfg.init_mode);
        detail::with_output(cfg.output_path, out, [&](std::ostream& o) { write_filter_csv(o, runf); });
        return kExitOk;
      }
      case Command::kSmooth: {
        const auto y = read_observations(cfg.observations_path);
        const auto pass = run_smoother(mf.model, detail::need_observation(mf), y, cfg.init_mode);
        detail::with_output(cfg.output_path, out, [&](std::ostream& o) { write_smoothed_csv(o, pass.smoothed); });
        return kExitOk;
      }
      case Command::kEstimate: {
        const auto y = read_observations(cfg.observations_path);
        const auto est = run_estimation(mf.model, detail::need_observation(mf), y, cfg.init_mode);
        const json doc = estimate_json(est.final());
        detail::with_output(cfg.output_path, out, [&](std::ostream& o) { o << dump_json(doc) << '\n'; });
        if (!doc["undefined_states"].empty()) {
          err << "estimate: states " << doc["undefined_states"].dump()
              << " were never visited; their re-estimates are undefined\n";
          return kExitNumerical;
        }
        return kExitOk;
      }
      case Command::kEmbedFilter: {
        const auto y = read_observations(cfg.observations_path);
        const auto em = build_embedded(mf.model, cfg.depth);
        const auto runf = embedded_filter(em, detail::need_observation(mf), y, cfg.init_mode);
        detail::with_output(cfg.output_path, out, [&](std::ostream& o) { write_embedded_csv(o, runf); });
        std::string sidecar = cfg.log_norm_path;
        if (sidecar.empty() && !cfg.output_path.empty()) sidecar = cfg.output_path + ".lognorm.csv";
        if (!sidecar.empty()) {
          detail::with_output(sidecar, out, [&](std::ostream& o) { write_log_norm_csv(o, runf.log_norm); });
        }
        return kExitOk;
      }
      case Command::kCrosscheck: {
        const auto& obs = detail::need_observation(mf);
        std::vector<double> y;
        if (!cfg.observations_path.empty()) {
          y = read_observations(cfg.observations_path);
        } else {
          y = *detail::simulate_observed(mf, cfg.horizon, detail::need_seed(cfg)).observations;
        }
        const auto r = crosscheck(mf.model, obs, y, cfg.init_mode, cfg.depth);
        json doc;
        doc["max_tv"] = r.max_tv;
        doc["worst_k"] = r.worst_k;
        doc["log_norm_filter"] = r.log_norm_filter;
        doc["log_norm_embedded"] = r.log_norm_embedded;
        doc["log_norm_difference"] = r.log_norm_filter - r.log_norm_embedded;
        detail::with_output(cfg.output_path, out, [&](std::ostream& o) { o << dump_json(doc) << '\n'; });
        return kExitOk;
      }
    }
    return kExitConfig;
  } catch (const NumericalGuardError& e) {
    err << "numerical guard: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace hsmm
