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

#include "lst/config_file.hpp"

#include <fstream>
#include <sstream>

#include "lst/common.hpp"

namespace lst::config {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

ConfigMap ConfigMap::parse_string(const std::string& text) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    LST_CHECK(eq != std::string::npos,
              "config line " + std::to_string(lineno) + " is not key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    LST_CHECK(!key.empty(),
              "config line " + std::to_string(lineno) + " has an empty key");
    cfg.kv_[key] = value;
  }
  return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  std::ifstream in(path);
  LST_CHECK(in.good(), "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

const std::string* ConfigMap::find(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return nullptr;
  consumed_.insert(key);
  return &it->second;
}

std::string ConfigMap::get_string(const std::string& key,
                                  const std::string& def) const {
  const std::string* v = find(key);
  return v ? *v : def;
}

int ConfigMap::get_int(const std::string& key, int def) const {
  const std::string* v = find(key);
  if (!v) return def;
  try {
    size_t pos = 0;
    int x = std::stoi(*v, &pos);
    LST_CHECK(pos == v->size(), "trailing junk");
    return x;
  } catch (const std::exception&) {
    fail("config key '" + key + "' is not an integer: " + *v);
  }
}

uint64_t ConfigMap::get_u64(const std::string& key, uint64_t def) const {
  const std::string* v = find(key);
  if (!v) return def;
  try {
    size_t pos = 0;
    unsigned long long x = std::stoull(*v, &pos);
    LST_CHECK(pos == v->size(), "trailing junk");
    return static_cast<uint64_t>(x);
  } catch (const std::exception&) {
    fail("config key '" + key + "' is not an unsigned integer: " + *v);
  }
}

double ConfigMap::get_double(const std::string& key, double def) const {
  const std::string* v = find(key);
  if (!v) return def;
  try {
    size_t pos = 0;
    double x = std::stod(*v, &pos);
    LST_CHECK(pos == v->size(), "trailing junk");
    return x;
  } catch (const std::exception&) {
    fail("config key '" + key + "' is not a number: " + *v);
  }
}

bool ConfigMap::get_bool(const std::string& key, bool def) const {
  const std::string* v = find(key);
  if (!v) return def;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  fail("config key '" + key + "' is not a boolean: " + *v);
}

std::vector<std::string> ConfigMap::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : kv_) {
    (void)v;
    if (consumed_.count(k) == 0) out.push_back(k);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> ConfigMap::items() const {
  return {kv_.begin(), kv_.end()};
}

}  // namespace lst::config
