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

#include <bit>
#include <cstring>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "bevmotion/error.hpp"
#include "bevmotion/grid_io.hpp"
#include "bevmotion/scenario_io.hpp"
#include "bevmotion/synth.hpp"
#include "bevmotion/toml_lite.hpp"

namespace bevmotion
{
namespace
{

std::string bytes_of(const BevGrid & g)
{
  std::ostringstream out(std::ios::binary);
  write_bvg(out, g);
  return out.str();
}

TEST(Bvg, LayoutAndRoundTrip)
{
  GridConfig cfg;
  cfg.length_m = 3.2;
  cfg.width_m = 1.6;
  cfg.height_m = 0.4;
  cfg.dl = 0.16;
  cfg.dw = 0.16;
  cfg.dv = 0.2;
  cfg.num_sweeps = 2;
  BevGrid g(cfg);
  g.set(0, 0, 0);
  g.set(19, 9, 3);
  g.set(7, 3, 1);
  const std::string bytes = bytes_of(g);
  ASSERT_EQ(bytes.size(), bvg_byte_size(cfg));
  EXPECT_EQ(std::memcmp(bytes.data(), "BVG1\0\0\0\0", 8), 0);
  const std::vector<std::uint8_t> raw(bytes.begin(), bytes.end());
  EXPECT_EQ(get_u64(raw, 8), 1u);
  EXPECT_EQ(get_f64(raw, 16), 3.2);
  EXPECT_EQ(get_f64(raw, 56), 0.2);
  EXPECT_EQ(get_u64(raw, 64), 2u);
  // Bit 0 of the first payload word is cell (0, 0) channel 0.
  EXPECT_EQ(raw[72] & 1u, 1u);

  std::istringstream in(bytes, std::ios::binary);
  const BevGrid back = read_bvg(in);
  EXPECT_TRUE(back == g);
  EXPECT_EQ(back.popcount(), 3u);
  EXPECT_EQ(bytes_of(back), bytes);
}

TEST(Bvg, RejectsCorruptInput)
{
  GridConfig cfg;
  cfg.length_m = 1.6;
  cfg.width_m = 1.6;
  cfg.height_m = 0.2;
  cfg.num_sweeps = 1;
  const std::string good = bytes_of(BevGrid(cfg));
  auto fails = [](std::string s) {
    std::istringstream in(s, std::ios::binary);
    EXPECT_THROW(read_bvg(in), InputError);
  };
  fails(good.substr(0, good.size() - 1));
  fails(good + "x");
  std::string magic = good;
  magic[0] = 'X';
  fails(magic);
  std::string version = good;
  version[8] = 2;
  fails(version);
  fails("");
  EXPECT_THROW(read_bvg(std::filesystem::path("/nonexistent/grid.bvg")), InputError);
}

TEST(Pts, RoundTripsAtFloatPrecision)
{
  std::vector<FrameSweep> sweeps(2);
  sweeps[0].frame = 3;
  sweeps[0].points = {{1.5, -2.25, 0.125}, {0.1, 0.2, 0.3}};
  sweeps[1].frame = 9;
  std::ostringstream out(std::ios::binary);
  write_pts(out, sweeps);
  const std::string bytes = out.str();
  EXPECT_EQ(bytes.size(), 4u + 4 + 4 + 2 * 16 + 2 * 12);
  EXPECT_EQ(bytes.substr(0, 4), "PTS1");
  std::istringstream in(bytes, std::ios::binary);
  const auto back = read_pts(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].frame, 3u);
  EXPECT_EQ(back[1].frame, 9u);
  EXPECT_TRUE(back[1].points.empty());
  EXPECT_EQ(back[0].points[0].y, -2.25);
  EXPECT_EQ(back[0].points[1].x, static_cast<double>(0.1f));

  std::istringstream truncated(bytes.substr(0, bytes.size() - 3), std::ios::binary);
  EXPECT_THROW(read_pts(truncated), InputError);
  std::istringstream bad("PTS2", std::ios::binary);
  EXPECT_THROW(read_pts(bad), InputError);
}

TEST(Scn1, RoundTripIsExact)
{
  ScenarioSpec spec;
  spec.seed = 41;
  const Scenario scn = generate(spec, 2);
  const std::string text = scenario_to_json(scn);
  const Scenario back = scenario_from_json(text);
  EXPECT_EQ(scenario_to_json(back), text);
  ASSERT_EQ(back.actors.size(), scn.actors.size());
  for (std::size_t i = 0; i < scn.actors.size(); ++i) {
    EXPECT_EQ(back.actors[i].cls, scn.actors[i].cls);
    EXPECT_EQ(back.actors[i].maneuver, scn.actors[i].maneuver);
    for (std::size_t f = 0; f < scn.num_frames(); ++f) {
      EXPECT_EQ(back.actors[i].poses[f].cx, scn.actors[i].poses[f].cx);
      EXPECT_EQ(back.actors[i].poses[f].heading, scn.actors[i].poses[f].heading);
    }
  }
  EXPECT_EQ(back.map.size(), scn.map.size());
  EXPECT_EQ(back.sdv_track.size(), scn.num_frames());
}

TEST(Scn1, RejectsMalformedDocuments)
{
  EXPECT_THROW(scenario_from_json("{"), InputError);
  EXPECT_THROW(scenario_from_json(R"({"version": "scn-2"})"), InputError);
  ScenarioSpec spec;
  spec.num_actors = 1;
  std::string text = scenario_to_json(generate(spec, 0));
  const auto pos = text.find("\"vehicle\"");
  const auto alt = text.find("\"pedestrian\"");
  const auto at = pos != std::string::npos ? pos : alt;
  ASSERT_NE(at, std::string::npos);
  text.replace(at + 1, 3, "zzz");
  EXPECT_THROW(scenario_from_json(text), InputError);
  EXPECT_THROW(read_scenario("/nonexistent/scene.json"), InputError);
}

TEST(ScenarioSpecJson, FieldsAndErrors)
{
  const ScenarioSpec spec = scenario_spec_from_json(R"({
    "seed": 5, "num_scenarios": 3, "num_actors": 7,
    "class_ratios": {"vehicle": 1, "pedestrian": 0, "bicyclist": 0},
    "classes": {"vehicle": {"speed_min": 8, "speed_max": 9}}
  })");
  EXPECT_EQ(spec.seed, 5u);
  EXPECT_EQ(spec.num_scenarios, 3u);
  EXPECT_EQ(spec.class_ratios[1], 0.0);
  EXPECT_EQ(spec.classes[0].speed_min, 8.0);
  try {
    scenario_spec_from_json(R"({"num_actors": 3, "colour": "red"})");
    FAIL();
  } catch (const ConfigError & e) {
    EXPECT_NE(std::string(e.what()).find("colour"), std::string::npos);
  }
  EXPECT_THROW(scenario_spec_from_json(R"({"num_actors": "three"})"), ConfigError);
  EXPECT_THROW(scenario_spec_from_json(R"({"dropout": 1.5})"), ConfigError);
}

TEST(Toml, ParsesSupportedSubset)
{
  const auto doc = TomlDocument::parse(R"(
# comment
seed = 7
[train]
learning_rate = 2.5e-2   # trailing comment
profile = "kl_laplace"
num_modes = [3, 1, 1]
enabled = true
[schedule.at]
alpha = 0.2
name = "a \"quoted\" \t value"
)");
  EXPECT_EQ(doc.get_int("seed", 0), 7);
  EXPECT_EQ(doc.get_double("train.learning_rate", 0.0), 0.025);
  EXPECT_EQ(doc.get_string("train.profile", ""), "kl_laplace");
  EXPECT_EQ(doc.get_double_array("train.num_modes", {}), (std::vector<double>{3, 1, 1}));
  EXPECT_TRUE(doc.get_bool("train.enabled", false));
  EXPECT_EQ(doc.get_double("schedule.at.alpha", 0.0), 0.2);
  EXPECT_EQ(doc.get_string("schedule.at.name", ""), "a \"quoted\" \t value");
  // Integers are accepted where a float is expected.
  EXPECT_EQ(doc.get_double("seed", 0.0), 7.0);
  EXPECT_EQ(doc.get_double("missing.key", 1.5), 1.5);
  EXPECT_NO_THROW(doc.reject_unused());
}

TEST(Toml, ErrorsNameTheProblem)
{
  auto message = [](std::string_view text) -> std::string {
    try {
      TomlDocument::parse(text);
    } catch (const ConfigError & e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message("a = 1\nb = \n").find("line 2"), std::string::npos);
  EXPECT_NE(message("[t\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("a = 1\na = 2\n"), "");
  EXPECT_NE(message("a = [[1]]\n"), "");

  const auto doc = TomlDocument::parse("x = \"s\"\ny = 1\n");
  EXPECT_THROW(doc.get_double("x", 0.0), ConfigError);
  EXPECT_THROW(doc.get_bool("y", false), ConfigError);
  const auto unused = TomlDocument::parse("[train]\nlerning_rate = 1\n");
  try {
    unused.reject_unused();
    FAIL();
  } catch (const ConfigError & e) {
    EXPECT_NE(std::string(e.what()).find("train.lerning_rate"), std::string::npos);
  }
}

TEST(Toml, CanonicalFormIsOrderIndependent)
{
  const auto a = TomlDocument::parse("b = 2\n[t]\nx = 1.0\n");
  const auto b = TomlDocument::parse("[t]\nx = 1.0 # c\n[ignored]\n");
  const auto c = TomlDocument::parse("t.x = 1.0\nb = 2\n");
  EXPECT_EQ(canonical_toml(a), canonical_toml(c));
  EXPECT_NE(canonical_toml(a), canonical_toml(b));
}

}  // namespace
}  // namespace bevmotion
