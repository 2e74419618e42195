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

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "bevmotion/error.hpp"
#include "commands.hpp"

namespace
{

using namespace bevmotion;

template <typename Fn>
int run_guarded(Fn fn)
{
  try {
    return fn();
  } catch (const ConfigError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  } catch (const InputError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  } catch (const ArgumentError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  } catch (const std::exception & e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return cli::kExitRuntime;
  }
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"bevmotion: synthetic BEV detection and motion-prediction pipeline"};
  app.set_version_flag("--version", BEVMOTION_VERSION);
  app.require_subcommand(1);

  cli::CommonOptions common;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App * sub) {
    sub->add_option("--seed", seed, "Seed overriding the one in the config");
    sub->add_option("--threads", common.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::Range(1u, 1024u));
    sub->add_option("--manifest", common.manifest, "Run manifest path");
  };

  cli::GenerateOptions gen;
  auto * generate = app.add_subcommand("generate", "Generate scn-1 scenarios and PTS1 sweeps");
  generate->add_option("--spec", gen.spec, "Scenario spec JSON")->required();
  generate->add_option("--out", gen.out_dir, "Output directory")->required();
  add_common(generate);

  cli::RasterizeOptions ras;
  std::int64_t frame = 0;
  auto * rasterize = app.add_subcommand("rasterize", "Rasterize sweeps into a BVG1 occupancy grid");
  rasterize->add_option("--scenario", ras.scenario, "scn-1 file")->required();
  rasterize->add_option("--points", ras.points, "PTS1 file (default: next to the scenario)");
  rasterize->add_option("--grid", ras.grid, "Grid config (TOML [grid] table)");
  auto * frame_opt = rasterize->add_option("--frame", frame, "Frame index (default: current frame)");
  rasterize->add_option("--out", ras.out, "BVG1 output path or -")->required();
  add_common(rasterize);

  cli::TrainOptions tr;
  auto * train = app.add_subcommand("train", "Fit prediction heads");
  train->add_option("config", tr.config, "Training config (TOML)")->required();
  add_common(train);

  cli::EvalOptions ev;
  auto * eval = app.add_subcommand("eval", "Detection and prediction metrics");
  eval->add_option("--model", ev.model, "Model JSON")->required();
  eval->add_option("--config", ev.config, "Evaluation config (TOML)");
  eval->add_option("--scenarios", ev.scenarios, "Scenario directory (overrides the config)");
  eval->add_option("--out", ev.out, "Report CSV path or -")->required();
  add_common(eval);

  cli::CalibrateOptions cal;
  auto * calibrate = app.add_subcommand("calibrate", "Reliability diagrams per class and axis");
  calibrate->add_option("--model", cal.model, "Model JSON")->required();
  calibrate->add_option("--config", cal.config, "Evaluation config (TOML)");
  calibrate->add_option("--scenarios", cal.scenarios, "Scenario directory (overrides the config)");
  calibrate->add_option("--out", cal.out_dir, "Output directory")->required();
  add_common(calibrate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  for (auto * sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) {
      common.seed = seed;
    }
  }
  if (frame_opt->count() > 0) {
    ras.frame = frame;
  }

  if (generate->parsed()) {
    return run_guarded([&] { return cli::cmd_generate(gen, common); });
  }
  if (rasterize->parsed()) {
    return run_guarded([&] { return cli::cmd_rasterize(ras, common); });
  }
  if (train->parsed()) {
    return run_guarded([&] { return cli::cmd_train(tr, common); });
  }
  if (eval->parsed()) {
    return run_guarded([&] { return cli::cmd_eval(ev, common); });
  }
  return run_guarded([&] { return cli::cmd_calibrate(cal, common); });
}
