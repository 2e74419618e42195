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

#ifndef BEVMOTION__ERROR_HPP_
#define BEVMOTION__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace bevmotion
{

/// Mathematical domain violation (non-finite angle, zero-length direction, ...).
class DomainError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// A caller passed arguments that violate an operation's precondition.
class ArgumentError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration (grid, scenario spec, training config).
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (files, polygons, JSON documents).
class InputError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Training diverged or another unrecoverable runtime condition occurred.
class RuntimeFailure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace bevmotion

#endif  // BEVMOTION__ERROR_HPP_
