// Copyright 2026 The bevmotion Authors
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

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "bevmotion/grid_io.hpp"

namespace fs = std::filesystem;

namespace
{

std::string slurp(const fs::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path & p, const std::string & text)
{
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::size_t count_lines(const std::string & s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class CliTest : public ::testing::Test
{
protected:
  static void SetUpTestSuite()
  {
    dir_ = new fs::path(fs::path(::testing::TempDir()) / "bevmotion_cli_test");
    fs::remove_all(*dir_);
    fs::create_directories(*dir_);
    spit(*dir_ / "spec.json",
         R"({"seed": 3, "num_scenarios": 4, "num_actors": 10,
             "class_ratios": {"vehicle": 1, "pedestrian": 0.3, "bicyclist": 0.1}})");
    spit(*dir_ / "train.toml", R"(seed = 5
[data]
scenarios = "scenes"
[train]
iterations = 50
profile = "kl_laplace"
stage_mode = "two_stage"
[output]
model = "model.json"
loss_curve = "loss.csv"
)");
    ASSERT_EQ(run("generate --spec spec.json --out scenes"), 0);
  }
  static void TearDownTestSuite()
  {
    fs::remove_all(*dir_);
    delete dir_;
  }

  // Runs the tool inside the test directory; stdout and stderr go to files.
  static int run(const std::string & args)
  {
    const std::string cmd = "cd '" + dir_->string() + "' && '" BEVMOTION_CLI "' " + args +
                            " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  static std::string err() { return slurp(*dir_ / "stderr.txt"); }

  static fs::path * dir_;
};

fs::path * CliTest::dir_ = nullptr;

TEST_F(CliTest, UsageErrors)
{
  EXPECT_EQ(run("--version"), 0);
  EXPECT_NE(slurp(*dir_ / "stdout.txt").find('.'), std::string::npos);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("generate --spec missing.json --out x"), 2);
  EXPECT_EQ(run("rasterize --scenario scenes/scene_00000.json --threads 0 --out -"), 2);
}

TEST_F(CliTest, GenerateIsDeterministic)
{
  ASSERT_EQ(run("generate --spec spec.json --out scenes2"), 0);
  for (const char * name : {"scene_00000.json", "scene_00003.json", "scene_00003.pts"}) {
    EXPECT_EQ(slurp(*dir_ / "scenes" / name), slurp(*dir_ / "scenes2" / name)) << name;
  }
  EXPECT_FALSE(fs::exists(*dir_ / "scenes" / "scene_00004.json"));
  ASSERT_EQ(run("generate --spec spec.json --seed 4 --out scenes3"), 0);
  EXPECT_NE(slurp(*dir_ / "scenes" / "scene_00000.json"), slurp(*dir_ / "scenes3" / "scene_00000.json"));

  const auto manifest = nlohmann::json::parse(slurp(*dir_ / "scenes" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "generate");
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["config_hash"].get<std::string>().rfind("fnv1a64:", 0), 0u);
  for (const char * key : {"version", "inputs", "outputs", "duration_s"}) {
    EXPECT_TRUE(manifest.contains(key)) << key;
  }
}

TEST_F(CliTest, RasterizeProducesDefaultGrid)
{
  ASSERT_EQ(run("rasterize --scenario scenes/scene_00001.json --out g.bvg --threads 3"), 0);
  const std::string bytes = slurp(*dir_ / "g.bvg");
  EXPECT_EQ(bytes.size(), bevmotion::bvg_byte_size(bevmotion::GridConfig{}));
  std::istringstream in(bytes, std::ios::binary);
  const auto grid = bevmotion::read_bvg(in);
  EXPECT_EQ(grid.shape().rows, 938u);
  EXPECT_EQ(grid.shape().cols, 625u);
  EXPECT_EQ(grid.shape().channels, 160u);
  EXPECT_GT(grid.popcount(), 0u);
  ASSERT_EQ(run("rasterize --scenario scenes/scene_00001.json --out g1.bvg"), 0);
  EXPECT_EQ(slurp(*dir_ / "g1.bvg"), bytes);
  EXPECT_TRUE(fs::exists(*dir_ / "g.bvg.manifest.json"));

  EXPECT_EQ(run("rasterize --scenario scenes/scene_00001.json --frame 40 --out -"), 2);
  EXPECT_NE(err().find("out of range"), std::string::npos);
  EXPECT_EQ(run("rasterize --scenario scenes/nope.json --out -"), 2);
}

TEST_F(CliTest, EmptyScenarioGivesZeroGrid)
{
  spit(*dir_ / "empty.json",
       R"({"seed": 1, "num_scenarios": 1, "num_actors": 0, "include_map": false,
           "clutter_points": 0})");
  ASSERT_EQ(run("generate --spec empty.json --out empty"), 0) << err();
  ASSERT_EQ(run("rasterize --scenario empty/scene_00000.json --out e.bvg"), 0) << err();
  const std::string bytes = slurp(*dir_ / "e.bvg");
  ASSERT_EQ(bytes.size(), bevmotion::bvg_byte_size(bevmotion::GridConfig{}));
  EXPECT_TRUE(std::all_of(bytes.begin() + 72, bytes.end(), [](char c) { return c == 0; }));
}

TEST_F(CliTest, TrainEvalCalibrate)
{
  ASSERT_EQ(run("train train.toml"), 0) << err();
  EXPECT_EQ(count_lines(slurp(*dir_ / "loss.csv")), 51u);
  const std::string model = slurp(*dir_ / "model.json");
  ASSERT_EQ(run("train train.toml --threads 4"), 0) << err();
  EXPECT_EQ(slurp(*dir_ / "model.json"), model);

  ASSERT_EQ(run("eval --model model.json --scenarios scenes --out report.csv"), 0) << err();
  const std::string csv = slurp(*dir_ / "report.csv");
  EXPECT_EQ(count_lines(csv), 7u);
  EXPECT_EQ(csv.rfind("class,variant,ap,", 0), 0u);
  EXPECT_NE(err().find("vehicle"), std::string::npos);
  ASSERT_EQ(run("eval --model model.json --scenarios scenes --out -"), 0);
  EXPECT_EQ(slurp(*dir_ / "stdout.txt"), csv);

  ASSERT_EQ(run("calibrate --model model.json --scenarios scenes --out cal"), 0) << err();
  const std::string cal = slurp(*dir_ / "cal" / "calibration_vehicle_cross_track.csv");
  EXPECT_EQ(count_lines(cal), 20u);
  const std::string svg = slurp(*dir_ / "cal" / "calibration_vehicle_along_track.svg");
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<svg xmlns="), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_TRUE(fs::exists(*dir_ / "cal" / "manifest.json"));

  EXPECT_EQ(run("eval --model missing.json --scenarios scenes --out -"), 2);
}

TEST_F(CliTest, ConfigErrorsExitWithUsageCode)
{
  spit(*dir_ / "bad_profile.toml", "[data]\nscenarios = \"scenes\"\n[train]\nprofile = \"bogus\"\n");
  EXPECT_EQ(run("train bad_profile.toml"), 2);
  EXPECT_NE(err().find("kl_laplace"), std::string::npos);
  spit(*dir_ / "typo.toml", "[data]\nscenarios = \"scenes\"\n[train]\nlerning_rate = 0.1\n");
  EXPECT_EQ(run("train typo.toml"), 2);
  EXPECT_NE(err().find("lerning_rate"), std::string::npos);
  spit(*dir_ / "both.toml", "[data]\nscenarios = \"scenes\"\nspec = \"spec.json\"\n");
  EXPECT_EQ(run("train both.toml"), 2);
  spit(*dir_ / "diverge.toml",
       "[data]\nscenarios = \"scenes\"\n[train]\niterations = 20\nlearning_rate = 1e5\n"
       "[output]\nmodel = \"d.json\"\nloss_curve = \"d.csv\"\n");
  EXPECT_EQ(run("train diverge.toml"), 3);
  EXPECT_NE(err().find("diverged"), std::string::npos);
}

}  // namespace
