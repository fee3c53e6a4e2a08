// Copyright 2026  The tlab authors
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

#ifndef TLAB_CONFIG_H_
#define TLAB_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>

namespace tlab {

/// Flat `key = value` configuration with dotted keys. Lines starting with '#'
/// and blank lines are ignored. Typed getters parse on demand and report the
/// offending key on failure.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig from_file(const std::string& path);
  /// Parses a single "key=value" override as passed to --set.
  void apply_override(const std::string& assignment);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Sorted `key = value` rendering; written next to run outputs so every
  /// run records its resolved configuration.
  std::string render() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace tlab

#endif  // TLAB_CONFIG_H_
