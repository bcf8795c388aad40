// lst/vocab.cpp

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

#include "lst/vocab.hpp"

#include <cctype>
#include <cstdlib>

namespace lst {

int Vocabulary::id(const std::string& s) const {
  LST_CHECK(!s.empty(), "Vocabulary: empty token string");
  if (s == "<unk>") return unk();
  if (s == "<eos>" || s == "<sos>") return eos();
  if (s[0] == 'w' && s.size() > 1) {
    char* end = nullptr;
    long n = std::strtol(s.c_str() + 1, &end, 10);
    if (end != nullptr && *end == '\0' && n >= 1 && n <= num_normal) {
      return static_cast<int>(n) - 1;
    }
  }
  // Bare integer id.
  if (std::isdigit(static_cast<unsigned char>(s[0]))) {
    char* end = nullptr;
    long n = std::strtol(s.c_str(), &end, 10);
    if (end != nullptr && *end == '\0' && n >= 0 && n < size()) {
      return static_cast<int>(n);
    }
  }
  fail("Vocabulary: unknown token '" + s + "'");
}

}  // namespace lst
