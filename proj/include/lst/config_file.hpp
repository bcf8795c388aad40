// lst/config_file.hpp
//
// Flat key = value configuration files: one pair per line, # comments,
// blank lines ignored.  Values stay strings until a typed getter parses
// them; unknown keys can be audited via unused().

// Copyright 2026 LST Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace lst::config {

class ConfigMap {
 public:
  static ConfigMap parse_string(const std::string& text);
  static ConfigMap parse_file(const std::string& path);

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);

  // Typed getters: return the default when the key is absent; a present but
  // unparsable value is an error naming the key.
  std::string get_string(const std::string& key, const std::string& def) const;
  int get_int(const std::string& key, int def) const;
  uint64_t get_u64(const std::string& key, uint64_t def) const;
  double get_double(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;

  // Keys never touched by any getter (catches typos in config files).
  std::vector<std::string> unused() const;
  // All pairs in key order (for config echo in reports).
  std::vector<std::pair<std::string, std::string>> items() const;

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> consumed_;

  const std::string* find(const std::string& key) const;
};

}  // namespace lst::config
