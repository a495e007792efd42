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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace hsmm {
namespace {

namespace fs = std::filesystem;

const std::string kModels = HSMM_MODELS_DIR;
const std::string kBinary = HSMM_CLI_PATH;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hsmm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static void write(const std::string& p, const std::string& text) { std::ofstream(p) << text; }

  int shell(const std::string& args) const {
    const std::string cmd = kBinary + " " + args + " > " + path("stdout.txt") + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

TEST_F(CliTest, SimulateIsReproducible) {
  const std::string model = kModels + "/mixed3.json";
  ASSERT_EQ(shell("simulate -m " + model + " --horizon 100 --seed 7 -o " + path("a.csv")), 0);
  ASSERT_EQ(shell("simulate -m " + model + " --horizon 100 --seed 7 -o " + path("b.csv")), 0);
  ASSERT_EQ(shell("simulate -m " + model + " --horizon 100 --seed 8 -o " + path("c.csv")), 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
  EXPECT_EQ(slurp(path("a.csv")).rfind("k,state,h,y\n", 0), 0u);
}

TEST_F(CliTest, CrosscheckOnGeometricModel) {
  ASSERT_EQ(shell("crosscheck -m " + kModels + "/geometric2.json --horizon 200 --seed 3 -o " + path("x.json")), 0);
  const json doc = json::parse(slurp(path("x.json")));
  EXPECT_LE(doc["max_tv"].get<double>(), 1e-10);
}

TEST_F(CliTest, EmptyObservationsAreRejected) {
  write(path("empty.csv"), "y\n");
  EXPECT_EQ(shell("filter -m " + kModels + "/mixed3.json -y " + path("empty.csv")), kExitConfig);
  write(path("blank.csv"), "");
  EXPECT_EQ(shell("filter -m " + kModels + "/mixed3.json -y " + path("blank.csv")), kExitConfig);
}

TEST_F(CliTest, MalformedModelNamesTheField) {
  write(path("y.csv"), "y\n0.1\n0.2\n");
  write(path("bad.json"), R"({"states": 2, "p0": [0.5, 0.5], "jump_kernel": [[0, 1], [1, 0]],
    "sojourns": [{"pmf": [0.5, 0.6]}, {"pmf": [1.0]}], "observation": {"c": [0, 1], "d": [1, 1]}})");
  std::ostringstream out, err;
  RunConfig cfg;
  cfg.command = Command::kFilter;
  cfg.model_path = path("bad.json");
  cfg.observations_path = path("y.csv");
  EXPECT_EQ(run(cfg, out, err), kExitConfig);
  EXPECT_NE(err.str().find("sojourns[0]"), std::string::npos) << err.str();

  write(path("broken.json"), "{\"states\": 2,");
  EXPECT_EQ(shell("filter -m " + path("broken.json") + " -y " + path("y.csv")), kExitConfig);
}

TEST_F(CliTest, MissingSeedIsAConfigError) {
  std::ostringstream out, err;
  RunConfig cfg;
  cfg.command = Command::kSimulate;
  cfg.model_path = kModels + "/mixed3.json";
  cfg.horizon = 10;
  EXPECT_EQ(run(cfg, out, err), kExitConfig);
  EXPECT_EQ(shell("simulate -m " + kModels + "/mixed3.json --horizon 10"), kExitConfig);
}

TEST_F(CliTest, RoundTripOnBundledModels) {
  for (const char* name : {"geometric2", "deterministic3", "mixed3"}) {
    const std::string model = kModels + "/" + name + ".json";
    const std::string sim = path(std::string(name) + "_sim.csv");
    ASSERT_EQ(shell("simulate -m " + model + " -T 500 -s 11 -o " + sim), 0) << name;
    ASSERT_EQ(shell("filter -m " + model + " -y " + sim + " -o " + path("f.csv")), 0) << name;
    ASSERT_EQ(shell("smooth -m " + model + " -y " + sim + " -o " + path("s.csv")), 0) << name;
    ASSERT_EQ(shell("filter --init prior -m " + model + " -y " + sim + " -o " + path("p.csv")), 0) << name;

    std::istringstream filtered(slurp(path("f.csv")));
    std::string line;
    std::getline(filtered, line);
    EXPECT_EQ(line.rfind("k,hhat,map_state,post_1", 0), 0u);
    int rows = 0;
    while (std::getline(filtered, line)) ++rows;
    EXPECT_EQ(rows, 501);
    EXPECT_EQ(slurp(path("s.csv")).rfind("k,smoothed_1", 0), 0u);
  }
}

TEST_F(CliTest, EstimateWritesAllFields) {
  const std::string model = kModels + "/geometric2.json";
  ASSERT_EQ(shell("simulate -m " + model + " -T 400 -s 2 -o " + path("sim.csv")), 0);
  ASSERT_EQ(shell("estimate -m " + model + " -y " + path("sim.csv") + " -o " + path("e.json")), 0);
  const json doc = json::parse(slurp(path("e.json")));
  for (const char* key : {"a_hat", "N_hat", "J_hat", "c_hat", "d_hat", "undefined_states"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  EXPECT_EQ(doc["a_hat"].size(), 2u);
  EXPECT_TRUE(doc["undefined_states"].empty());
  EXPECT_NEAR(doc["J_hat"][0].get<double>() + doc["J_hat"][1].get<double>(), 400.0, 1e-6);
}

TEST_F(CliTest, EstimateFlagsUnvisitedStates) {
  write(path("m.json"), R"({"states": 3, "p0": [0.5, 0.5, 0.0],
    "jump_kernel": [[0, 1, 0.5], [1, 0, 0.5], [0, 0, 0]],
    "sojourns": [{"pmf": [0.5, 0.5]}, {"pmf": [0.5, 0.5]}, {"deterministic": 1}],
    "observation": {"c": [0, 1, 2], "d": [0.3, 0.3, 0.3]}})");
  ASSERT_EQ(shell("simulate -m " + path("m.json") + " -T 50 -s 1 -o " + path("sim.csv")), 0);
  EXPECT_EQ(shell("estimate -m " + path("m.json") + " -y " + path("sim.csv") + " -o " + path("e.json")),
            kExitNumerical);
  const json doc = json::parse(slurp(path("e.json")));
  EXPECT_EQ(doc["undefined_states"], json::array({3}));
  EXPECT_TRUE(doc["c_hat"][2].is_null());
}

TEST_F(CliTest, EmbedFilterWritesSidecar) {
  const std::string model = kModels + "/mixed3.json";
  ASSERT_EQ(shell("simulate -m " + model + " -T 30 -s 4 -o " + path("sim.csv")), 0);
  ASSERT_EQ(shell("embed-filter -m " + model + " -y " + path("sim.csv") + " -o " + path("emb.csv")), 0);
  EXPECT_EQ(slurp(path("emb.csv")).rfind("k,i,posterior\n", 0), 0u);
  EXPECT_EQ(slurp(path("emb.csv.lognorm.csv")).rfind("k,log_norm\n", 0), 0u);
  EXPECT_EQ(shell("embed-filter -m " + model + " -y " + path("sim.csv") + " --depth 3"), kExitConfig);
}

TEST_F(CliTest, NumericalGuardExitCode) {
  write(path("y.csv"), "y\n0\n10000\n");
  write(path("m.json"), R"({"states": 2, "p0": [0.5, 0.5], "jump_kernel": [[0, 1], [1, 0]],
    "sojourns": [{"deterministic": 2}, {"deterministic": 2}], "observation": {"c": [0, 1], "d": [0.001, 0.001]}})");
  EXPECT_EQ(shell("filter -m " + path("m.json") + " -y " + path("y.csv")), kExitNumerical);
}

TEST_F(CliTest, HelpAndUsage) {
  EXPECT_EQ(shell("--help"), 0);
  EXPECT_NE(slurp(path("stdout.txt")).find("crosscheck"), std::string::npos);
  EXPECT_EQ(shell("filter --help"), 0);
  EXPECT_NE(slurp(path("stdout.txt")).find("--init"), std::string::npos);
  EXPECT_EQ(shell("nonsense"), kExitConfig);
  EXPECT_EQ(shell(""), kExitConfig);
}

}  // namespace
}  // namespace hsmm
