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

#include "bevmotion/rng.hpp"

#include <cmath>

#include "bevmotion/geometry.hpp"

namespace bevmotion
{
namespace
{

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b)
{
  std::uint64_t k = mix64(seed ^ 0x6a09e667f3bcc908ULL);
  k = mix64(k ^ (stream * kGoldenGamma + 0xbb67ae8584caa73bULL));
  k = mix64(k ^ (a * 0xd1b54a32d192ed03ULL + 0x3c6ef372fe94f82bULL));
  k = mix64(k ^ (b * 0xaef17502108ef2d9ULL + 0xa54ff53a5f1d36f1ULL));
  key_ = k;
}

std::uint64_t CounterRng::at(std::uint64_t counter) const
{
  return mix64(key_ + (counter + 1) * kGoldenGamma);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * kTwoPow53Inv; }

double CounterRng::uniform_centered()
{
  // (k + 1/2) / 2^53 - 1/2 is never 0 or +-1/2 exactly.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * kTwoPow53Inv - 0.5;
}

std::uint64_t CounterRng::uniform_index(std::uint64_t n)
{
  if (n <= 1) {
    return 0;
  }
  // Lemire-style multiply-high; bias is below 2^-64 * n and irrelevant here.
  __extension__ using u128 = unsigned __int128;
  return static_cast<std::uint64_t>((static_cast<u128>(next_u64()) * n) >> 64);
}

double CounterRng::normal()
{
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double CounterRng::laplace(double b) { return laplace_from_uniform(uniform_centered(), b); }

double laplace_from_uniform(double u, double b)
{
  const double sign = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
  return b * sign * std::log(1.0 - 2.0 * std::abs(u));
}

}  // namespace bevmotion
