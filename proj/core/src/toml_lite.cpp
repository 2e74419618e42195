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

#include "bevmotion/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "bevmotion/error.hpp"

namespace bevmotion
{
namespace
{

class LineParser
{
public:
  LineParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  void skip_space()
  {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) {
      ++pos_;
    }
  }

  bool at_end_or_comment()
  {
    skip_space();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  void expect(char c)
  {
    skip_space();
    if (peek() != c) {
      fail(std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  std::string key()
  {
    std::string out;
    for (;;) {
      skip_space();
      std::string part;
      if (peek() == '"') {
        part = basic_string();
      } else {
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) != 0 || s_[pos_] == '_' ||
                s_[pos_] == '-')) {
          part.push_back(s_[pos_++]);
        }
      }
      if (part.empty()) {
        fail("expected a key");
      }
      out += part;
      skip_space();
      if (peek() != '.') {
        return out;
      }
      ++pos_;
      out.push_back('.');
    }
  }

  TomlValue value()
  {
    skip_space();
    if (peek() == '[') {
      ++pos_;
      std::vector<TomlScalar> items;
      for (;;) {
        skip_space();
        if (peek() == ']') {
          ++pos_;
          return items;
        }
        items.push_back(scalar());
        skip_space();
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
    }
    return std::visit([](auto && v) -> TomlValue { return v; }, scalar());
  }

  [[noreturn]] void fail(const std::string & why) const
  {
    throw ConfigError("config line " + std::to_string(line_) + ": " + why);
  }

private:
  TomlScalar scalar()
  {
    skip_space();
    const char c = peek();
    if (c == '"') {
      return basic_string();
    }
    if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    std::string token;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) != 0 || s_[pos_] == '+' ||
            s_[pos_] == '-' || s_[pos_] == '.' || s_[pos_] == '_')) {
      if (s_[pos_] != '_') {
        token.push_back(s_[pos_]);
      }
      ++pos_;
    }
    if (token.empty()) {
      fail("expected a value");
    }
    const bool is_float = token.find_first_of(".eE") != std::string::npos || token == "inf" ||
                          token == "+inf" || token == "-inf" || token == "nan";
    if (!is_float) {
      std::int64_t v = 0;
      const char * begin = token.data() + (token[0] == '+' ? 1 : 0);
      const auto [ptr, ec] = std::from_chars(begin, token.data() + token.size(), v);
      if (ec == std::errc() && ptr == token.data() + token.size()) {
        return v;
      }
      fail("invalid integer '" + token + "'");
    }
    double v = 0.0;
    const char * begin = token.data() + (token[0] == '+' ? 1 : 0);
    const auto [ptr, ec] = std::from_chars(begin, token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      fail("invalid number '" + token + "'");
    }
    return v;
  }

  std::string basic_string()
  {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) {
          break;
        }
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) {
      fail("unterminated string");
    }
    ++pos_;
    return out;
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

const char * type_name(const TomlValue & v)
{
  switch (v.index()) {
    case 0: return "boolean";
    case 1: return "integer";
    case 2: return "float";
    case 3: return "string";
    default: return "array";
  }
}

[[noreturn]] void wrong_type(const std::string & key, const TomlValue & v, const char * want)
{
  throw ConfigError(
    "config key '" + key + "': expected " + want + ", found " + type_name(v));
}

double scalar_as_double(const TomlScalar & s, const std::string & key)
{
  if (const auto * d = std::get_if<double>(&s)) {
    return *d;
  }
  if (const auto * i = std::get_if<std::int64_t>(&s)) {
    return static_cast<double>(*i);
  }
  throw ConfigError("config key '" + key + "': expected an array of numbers");
}

std::string format_double(double v)
{
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  std::string s = ss.str();
  if (s.find_first_of(".eEn") == std::string::npos) {
    s += ".0";
  }
  return s;
}

std::string quote(const std::string & s)
{
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"' || c == '\\') {
      out.push_back('\\');
    }
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

std::string scalar_text(const TomlScalar & s)
{
  return std::visit(
    [](auto && v) -> std::string {
      using T = std::decay_t<decltype(v)>;
      if constexpr (std::is_same_v<T, bool>) {
        return v ? "true" : "false";
      } else if constexpr (std::is_same_v<T, std::int64_t>) {
        return std::to_string(v);
      } else if constexpr (std::is_same_v<T, double>) {
        return format_double(v);
      } else {
        return quote(v);
      }
    },
    s);
}

}  // namespace

TomlDocument TomlDocument::parse(std::string_view text)
{
  TomlDocument doc;
  std::string table;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    ++line_no;
    LineParser p(line, line_no);
    if (!p.at_end_or_comment()) {
      if (p.peek() == '[') {
        p.expect('[');
        if (p.peek() == '[') {
          p.fail("arrays of tables are not supported");
        }
        table = p.key();
        p.expect(']');
      } else {
        const std::string key = table.empty() ? p.key() : table + "." + p.key();
        p.expect('=');
        TomlValue v = p.value();
        if (doc.values_.count(key) != 0) {
          p.fail("duplicate key '" + key + "'");
        }
        doc.values_.emplace(key, std::move(v));
      }
      if (!p.at_end_or_comment()) {
        p.fail("unexpected trailing characters");
      }
    }
    if (end == text.size()) {
      break;
    }
    start = end + 1;
  }
  return doc;
}

const TomlValue * TomlDocument::find(const std::string & key) const
{
  used_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

double TomlDocument::get_double(const std::string & key, double fallback) const
{
  const TomlValue * v = find(key);
  if (v == nullptr) {
    return fallback;
  }
  if (const auto * d = std::get_if<double>(v)) {
    return *d;
  }
  if (const auto * i = std::get_if<std::int64_t>(v)) {
    return static_cast<double>(*i);
  }
  wrong_type(key, *v, "a number");
}

std::int64_t TomlDocument::get_int(const std::string & key, std::int64_t fallback) const
{
  const TomlValue * v = find(key);
  if (v == nullptr) {
    return fallback;
  }
  if (const auto * i = std::get_if<std::int64_t>(v)) {
    return *i;
  }
  wrong_type(key, *v, "an integer");
}

std::uint64_t TomlDocument::get_uint(const std::string & key, std::uint64_t fallback) const
{
  const TomlValue * v = find(key);
  if (v == nullptr) {
    return fallback;
  }
  const auto * i = std::get_if<std::int64_t>(v);
  if (i == nullptr || *i < 0) {
    wrong_type(key, *v, "a non-negative integer");
  }
  return static_cast<std::uint64_t>(*i);
}

bool TomlDocument::get_bool(const std::string & key, bool fallback) const
{
  const TomlValue * v = find(key);
  if (v == nullptr) {
    return fallback;
  }
  if (const auto * b = std::get_if<bool>(v)) {
    return *b;
  }
  wrong_type(key, *v, "a boolean");
}

std::string TomlDocument::get_string(const std::string & key, const std::string & fallback) const
{
  const TomlValue * v = find(key);
  if (v == nullptr) {
    return fallback;
  }
  if (const auto * s = std::get_if<std::string>(v)) {
    return *s;
  }
  wrong_type(key, *v, "a string");
}

std::vector<double> TomlDocument::get_double_array(
  const std::string & key, const std::vector<double> & fallback) const
{
  const TomlValue * v = find(key);
  if (v == nullptr) {
    return fallback;
  }
  const auto * arr = std::get_if<std::vector<TomlScalar>>(v);
  if (arr == nullptr) {
    wrong_type(key, *v, "an array of numbers");
  }
  std::vector<double> out;
  for (const TomlScalar & s : *arr) {
    out.push_back(scalar_as_double(s, key));
  }
  return out;
}

std::vector<std::string> TomlDocument::get_string_array(
  const std::string & key, const std::vector<std::string> & fallback) const
{
  const TomlValue * v = find(key);
  if (v == nullptr) {
    return fallback;
  }
  const auto * arr = std::get_if<std::vector<TomlScalar>>(v);
  if (arr == nullptr) {
    wrong_type(key, *v, "an array of strings");
  }
  std::vector<std::string> out;
  for (const TomlScalar & s : *arr) {
    const auto * str = std::get_if<std::string>(&s);
    if (str == nullptr) {
      throw ConfigError("config key '" + key + "': expected an array of strings");
    }
    out.push_back(*str);
  }
  return out;
}

void TomlDocument::reject_unused() const
{
  for (const auto & [key, value] : values_) {
    if (used_.count(key) == 0) {
      throw ConfigError("config key '" + key + "': unknown key");
    }
  }
}

std::string canonical_toml(const TomlDocument & doc)
{
  std::string out;
  for (const auto & [key, value] : doc.values()) {
    out += key;
    out += " = ";
    if (const auto * arr = std::get_if<std::vector<TomlScalar>>(&value)) {
      out += "[";
      for (std::size_t i = 0; i < arr->size(); ++i) {
        out += (i == 0 ? "" : ", ") + scalar_text((*arr)[i]);
      }
      out += "]";
    } else {
      out += std::visit([](auto && v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::vector<TomlScalar>>) {
          return {};
        } else {
          return scalar_text(TomlScalar(v));
        }
      }, value);
    }
    out += "\n";
  }
  return out;
}

}  // namespace bevmotion
