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

#ifndef BEVMOTION__RNG_HPP_
#define BEVMOTION__RNG_HPP_

#include <cstdint>

namespace bevmotion
{

/// SplitMix64 output finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z)
{
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Well-known stream identifiers so independent consumers never share draws.
enum class RngStream : std::uint64_t
{
  kScenario = 1,
  kActorSetup = 2,
  kSweep = 3,
  kLabelNoise = 4,
  kDetectionCorruption = 5,
  kTraining = 6,
  kMapLayout = 7,
  kScenarioSeeds = 8,
};

/**
 * @brief Counter-based generator keyed by (seed, stream, a, b).
 *
 * Draw number n is mix64(key + (n + 1) * golden_gamma): a pure function of the key and the
 * counter, so entity streams (per frame, per actor) are independent of evaluation order.
 */
class CounterRng
{
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t a = 0, std::uint64_t b = 0);
  CounterRng(std::uint64_t seed, RngStream stream, std::uint64_t a = 0, std::uint64_t b = 0)
  : CounterRng(seed, static_cast<std::uint64_t>(stream), a, b)
  {
  }

  /// Output at an arbitrary counter position; does not advance.
  std::uint64_t at(std::uint64_t counter) const;
  std::uint64_t next_u64() { return at(counter_++); }
  std::uint64_t counter() const { return counter_; }
  std::uint64_t key() const { return key_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform on the open interval (-1/2, 1/2); never returns the endpoints.
  double uniform_centered();
  /// Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller (one pair of uniforms per draw).
  double normal();
  /// Laplace(0, b) by inverse CDF: b * sign(u) * ln(1 - 2|u|), u ~ U(-1/2, 1/2).
  double laplace(double b);

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Inverse-CDF Laplace transform of a centered uniform, shared with the test oracle.
double laplace_from_uniform(double u, double b);

}  // namespace bevmotion

#endif  // BEVMOTION__RNG_HPP_
