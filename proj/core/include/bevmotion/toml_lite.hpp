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

#ifndef BEVMOTION__TOML_LITE_HPP_
#define BEVMOTION__TOML_LITE_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bevmotion
{

/**
 * @brief The subset of TOML used by configuration files.
 *
 * Supported: `# comments`, `[table]` and `[dotted.table]` headers, `key = value` with bare
 * or dotted keys, basic strings with the usual escapes, integers, floats, booleans and flat
 * arrays of those scalars. Anything else is a ConfigError naming the line.
 */
using TomlScalar = std::variant<bool, std::int64_t, double, std::string>;
using TomlValue = std::variant<bool, std::int64_t, double, std::string, std::vector<TomlScalar>>;

class TomlDocument
{
public:
  static TomlDocument parse(std::string_view text);

  bool contains(const std::string & key) const { return values_.count(key) != 0; }
  const std::map<std::string, TomlValue> & values() const { return values_; }

  // Typed lookups on fully qualified keys ("table.key"). Missing keys keep `fallback`;
  // present keys of the wrong type raise ConfigError. Every lookup marks the key as used.
  double get_double(const std::string & key, double fallback) const;
  std::int64_t get_int(const std::string & key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string & key, std::uint64_t fallback) const;
  bool get_bool(const std::string & key, bool fallback) const;
  std::string get_string(const std::string & key, const std::string & fallback) const;
  std::vector<double> get_double_array(const std::string & key, const std::vector<double> & fallback) const;
  std::vector<std::string> get_string_array(
    const std::string & key, const std::vector<std::string> & fallback) const;

  /// Throws ConfigError for the first key no lookup asked for.
  void reject_unused() const;

private:
  const TomlValue * find(const std::string & key) const;

  std::map<std::string, TomlValue> values_;
  mutable std::set<std::string> used_;
};

/// Canonical text form (sorted keys, shortest round-trip numbers) used for config hashing.
std::string canonical_toml(const TomlDocument & doc);

}  // namespace bevmotion

#endif  // BEVMOTION__TOML_LITE_HPP_
