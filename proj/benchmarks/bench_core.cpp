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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "bevmotion/geometry.hpp"
#include "bevmotion/losses.hpp"
#include "bevmotion/raster.hpp"

namespace
{

using namespace bevmotion;  // NOLINT

std::vector<LidarSweep> random_sweeps(const GridConfig & cfg, std::size_t total_points)
{
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> x(-80.0, 80.0), y(-55.0, 55.0), z(-2.0, 2.0);
  std::vector<LidarSweep> sweeps(cfg.num_sweeps);
  for (std::size_t k = 0; k < sweeps.size(); ++k) {
    sweeps[k].pose = {0.5 * static_cast<double>(k), 0.0, 0.001 * static_cast<double>(k), 1.8};
    for (std::size_t i = 0; i < total_points / sweeps.size(); ++i) {
      sweeps[k].points.push_back({x(gen), y(gen), z(gen)});
    }
  }
  return sweeps;
}

void BM_RasterizeSweeps(benchmark::State & state)
{
  const GridConfig cfg;
  const auto points = static_cast<std::size_t>(state.range(0));
  const auto threads = static_cast<unsigned>(state.range(1));
  const auto sweeps = random_sweeps(cfg, points);
  for (auto _ : state) {
    BevGrid g = rasterize_sweeps(sweeps, sweeps.back().pose, cfg, threads);
    benchmark::DoNotOptimize(g.words().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(points));
}
BENCHMARK(BM_RasterizeSweeps)
  ->Args({100000, 1})
  ->Args({100000, 4})
  ->Args({1000000, 1})
  ->Args({1000000, 4})
  ->UseRealTime()
  ->Unit(benchmark::kMillisecond);

void BM_RotatedIou(benchmark::State & state)
{
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> c(-2.0, 2.0), s(0.5, 5.0), a(-kPi, kPi);
  std::vector<std::pair<OrientedBox, OrientedBox>> pairs;
  for (int i = 0; i < 1024; ++i) {
    pairs.emplace_back(OrientedBox({c(gen), c(gen)}, s(gen), s(gen), a(gen)),
                       OrientedBox({c(gen), c(gen)}, s(gen), s(gen), a(gen)));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const auto & [p, q] = pairs[i++ & 1023];
    benchmark::DoNotOptimize(rotated_iou(p, q));
  }
}
BENCHMARK(BM_RotatedIou);

void BM_RroiCrop(benchmark::State & state)
{
  FeatureGrid grid(600, 600, 1, 0.16, {-48.0, -48.0});
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double & v : grid.data) {
    v = u(gen);
  }
  const auto cells = static_cast<std::size_t>(state.range(0));
  double heading = 0.0;
  for (auto _ : state) {
    heading += 0.01;
    RroiPatch patch = rroi_crop(grid, {3.0, -2.0}, heading, 40.0, cells);
    benchmark::DoNotOptimize(patch);
  }
}
BENCHMARK(BM_RroiCrop)->Arg(20)->Arg(40)->Arg(128);

void BM_LaplaceKl(benchmark::State & state)
{
  double e = 0.1;
  for (auto _ : state) {
    e += 1e-9;
    benchmark::DoNotOptimize(laplace_kl(e, 0.7, 0.4));
  }
}
BENCHMARK(BM_LaplaceKl);

}  // namespace

BENCHMARK_MAIN();
