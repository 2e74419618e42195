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

#ifndef BEVMOTION__ACTOR_HPP_
#define BEVMOTION__ACTOR_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "bevmotion/error.hpp"

namespace bevmotion
{

enum class ActorClass : int
{
  kVehicle = 0,
  kPedestrian = 1,
  kBicyclist = 2,
};

inline constexpr std::size_t kNumActorClasses = 3;
inline constexpr std::array<ActorClass, kNumActorClasses> kAllActorClasses = {
  ActorClass::kVehicle, ActorClass::kPedestrian, ActorClass::kBicyclist};

inline std::string_view actor_class_name(ActorClass cls)
{
  switch (cls) {
    case ActorClass::kVehicle:
      return "vehicle";
    case ActorClass::kPedestrian:
      return "pedestrian";
    case ActorClass::kBicyclist:
      return "bicyclist";
  }
  return "unknown";
}

inline ActorClass actor_class_from_name(std::string_view name)
{
  for (const ActorClass c : kAllActorClasses) {
    if (actor_class_name(c) == name) {
      return c;
    }
  }
  throw InputError("unknown actor class '" + std::string(name) + "'");
}

/// IoU needed for a detection to count as a true positive.
inline double default_iou_threshold(ActorClass cls)
{
  switch (cls) {
    case ActorClass::kVehicle:
      return 0.7;
    case ActorClass::kPedestrian:
      return 0.1;
    case ActorClass::kBicyclist:
      return 0.3;
  }
  return 0.5;
}

/// Number of predicted trajectory modes per class (multimodal for vehicles only).
inline int default_num_modes(ActorClass cls) { return cls == ActorClass::kVehicle ? 3 : 1; }

inline std::size_t class_index(ActorClass cls) { return static_cast<std::size_t>(cls); }

}  // namespace bevmotion

#endif  // BEVMOTION__ACTOR_HPP_
