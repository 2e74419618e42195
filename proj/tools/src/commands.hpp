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

#ifndef BEVMOTION_TOOLS__COMMANDS_HPP_
#define BEVMOTION_TOOLS__COMMANDS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bevmotion::cli
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

struct CommonOptions
{
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string manifest;  // empty: next to the primary output
};

struct GenerateOptions
{
  std::string spec;
  std::string out_dir;
};

struct RasterizeOptions
{
  std::string scenario;
  std::string points;  // empty: the .pts file next to the scenario
  std::string grid;    // empty: default grid
  std::optional<std::int64_t> frame;
  std::string out;
};

struct TrainOptions
{
  std::string config;
};

struct EvalOptions
{
  std::string model;
  std::string config;
  std::string scenarios;
  std::string out;
};

struct CalibrateOptions
{
  std::string model;
  std::string config;
  std::string scenarios;
  std::string out_dir;
};

// Each command returns its exit code; library exceptions are mapped by run_guarded.
int cmd_generate(const GenerateOptions & opts, const CommonOptions & common);
int cmd_rasterize(const RasterizeOptions & opts, const CommonOptions & common);
int cmd_train(const TrainOptions & opts, const CommonOptions & common);
int cmd_eval(const EvalOptions & opts, const CommonOptions & common);
int cmd_calibrate(const CalibrateOptions & opts, const CommonOptions & common);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace bevmotion::cli

#endif  // BEVMOTION_TOOLS__COMMANDS_HPP_
