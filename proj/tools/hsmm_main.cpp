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

#include "hsmm/cli.hpp"

#include <CLI11.hpp>

#include <map>

int main(int argc, char** argv) {
  CLI::App app{"Hidden semi-Markov filtering, smoothing and estimation"};
  app.require_subcommand(1);

  hsmm::RunConfig cfg;
  std::uint64_t seed = 0;
  std::string init = "bayes0";
  const std::map<std::string, hsmm::InitMode> init_modes{{"bayes0", hsmm::InitMode::kBayes},
                                                         {"prior", hsmm::InitMode::kPrior}};

  auto add_common = [&](CLI::App* sub, bool needs_obs) {
    sub->add_option("-m,--model", cfg.model_path, "Model JSON")->required()->check(CLI::ExistingFile);
    if (needs_obs) {
      sub->add_option("-y,--obs", cfg.observations_path, "Observations CSV (column 'y')")
          ->required()
          ->check(CLI::ExistingFile);
    }
    sub->add_option("-o,--out", cfg.output_path, "Output file (default: stdout)");
    sub->add_option("--init", init, "q_0 = B(y_0) p_0 (bayes0) or p_0 (prior)")
        ->check(CLI::IsMember({"bayes0", "prior"}));
  };

  auto* sim = app.add_subcommand("simulate", "Sample a path; CSV k,state,h[,y]");
  add_common(sim, false);
  sim->add_option("-T,--horizon", cfg.horizon, "Last time index T")->required()->check(CLI::NonNegativeNumber);
  sim->add_option("-s,--seed", seed, "Random seed")->required();

  auto* filt = app.add_subcommand("filter", "Forward filter; CSV k,hhat,map_state,post_1..post_N,log_norm");
  add_common(filt, true);

  auto* smo = app.add_subcommand("smooth", "Fixed-interval smoother; CSV k,smoothed_1..smoothed_N");
  add_common(smo, true);

  auto* est = app.add_subcommand("estimate", "Path statistics and re-estimates; JSON");
  add_common(est, true);

  auto* emb = app.add_subcommand("embed-filter", "Exact embedded filter; CSV k,i,posterior");
  add_common(emb, true);
  emb->add_option("--lognorm-out", cfg.log_norm_path, "Log-normalizer CSV (default: <out>.lognorm.csv)");
  emb->add_option("--depth", cfg.depth, "Embedding depth (default: largest sojourn support)");

  auto* cross = app.add_subcommand("crosscheck", "Clock-estimate filter against the exact filter; JSON");
  add_common(cross, false);
  cross->add_option("-y,--obs", cfg.observations_path, "Observations CSV (simulated when omitted)")
      ->check(CLI::ExistingFile);
  cross->add_option("-T,--horizon", cfg.horizon, "Horizon when simulating");
  cross->add_option("-s,--seed", seed, "Seed when simulating");
  cross->add_option("--depth", cfg.depth, "Embedding depth (default: largest sojourn support)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hsmm::kExitConfig;
  }

  if (sim->parsed()) cfg.command = hsmm::Command::kSimulate;
  if (filt->parsed()) cfg.command = hsmm::Command::kFilter;
  if (smo->parsed()) cfg.command = hsmm::Command::kSmooth;
  if (est->parsed()) cfg.command = hsmm::Command::kEstimate;
  if (emb->parsed()) cfg.command = hsmm::Command::kEmbedFilter;
  if (cross->parsed()) cfg.command = hsmm::Command::kCrosscheck;
  if (sim->count("--seed") || cross->count("--seed")) cfg.seed = seed;
  cfg.init_mode = init_modes.at(init);

  return hsmm::run(cfg);
}
