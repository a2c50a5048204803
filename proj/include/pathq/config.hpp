/*
 * Copyright 2026 The pathq Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PATHQ_CONFIG_HPP_
#define PATHQ_CONFIG_HPP_

#include <charconv>
#include <istream>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>

#include "pathq/error.hpp"

namespace pathq {

// Flat `key = value` file. '#' starts a comment; blank lines are ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source) {
    KeyValueConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) {
        line.erase(hash);
      }
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string_view::npos) {
        throw DataError(source + ":" + std::to_string(line_no) +
                        ": expected key=value");
      }
      const auto key = std::string(trim(trimmed.substr(0, eq)));
      if (key.empty()) {
        throw DataError(source + ":" + std::to_string(line_no) + ": empty key");
      }
      cfg.values_[key] = std::string(trim(trimmed.substr(eq + 1)));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return parse(in, path.string());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, std::string value) {
    values_[key] = std::move(value);
  }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  template <typename Number>
  Number get(const std::string& key, Number fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    Number out{};
    const auto& s = it->second;
    if constexpr (std::is_floating_point_v<Number>) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        out = static_cast<Number>(v);
      } catch (const std::logic_error&) {
        throw DataError("config key '" + key + "': '" + s +
                        "' is not a number");
      }
    } else {
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw DataError("config key '" + key + "': '" + s +
                        "' is not an integer");
      }
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  // Keys present in the file but never read.
  std::set<std::string> unused_keys() const {
    std::set<std::string> out;
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) out.insert(k);
    }
    return out;
  }

 private:
  static std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace pathq

#endif  // PATHQ_CONFIG_HPP_
