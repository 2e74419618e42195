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

#ifndef BEVMOTION__SCENARIO_IO_HPP_
#define BEVMOTION__SCENARIO_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "bevmotion/raster.hpp"
#include "bevmotion/synth.hpp"

namespace bevmotion
{

inline constexpr std::string_view kScenarioFormat = "scn-1";
inline constexpr std::uint32_t kPts1Version = 1;

/// Serializes a scenario as scn-1 JSON. Doubles are written in shortest round-trip form.
std::string scenario_to_json(const Scenario & scenario);
/// Throws InputError on malformed documents or an unsupported version.
Scenario scenario_from_json(std::string_view text);

void write_scenario(const std::filesystem::path & path, const Scenario & scenario);
Scenario read_scenario(const std::filesystem::path & path);

/// One sweep tagged with the frame it was captured at.
struct FrameSweep
{
  std::uint64_t frame = 0;
  std::vector<Point3> points;
};

/// PTS1 container: "PTS1", u32 version, u32 sweep count, then per sweep u64 frame,
/// u64 point count and little-endian f32 (x, y, z) triples.
void write_pts(std::ostream & out, const std::vector<FrameSweep> & sweeps);
void write_pts(const std::filesystem::path & path, const std::vector<FrameSweep> & sweeps);
std::vector<FrameSweep> read_pts(std::istream & in);
std::vector<FrameSweep> read_pts(const std::filesystem::path & path);

/// Parses a scenario spec JSON object. Unknown or ill-typed fields raise ConfigError naming
/// the field; the result is validated.
ScenarioSpec scenario_spec_from_json(std::string_view text);
ScenarioSpec read_scenario_spec(const std::filesystem::path & path);

/// Reads a whole file; throws InputError when it cannot be opened.
std::string read_text_file(const std::filesystem::path & path);
/// Writes atomically enough for our purposes (truncate + write); throws InputError on failure.
void write_text_file(const std::filesystem::path & path, std::string_view text);

}  // namespace bevmotion

#endif  // BEVMOTION__SCENARIO_IO_HPP_
