// lst/vocab.hpp
//
// Token id layout.  Normal tokens occupy ids 0..U-1; they double as CTC
// posterior columns.  unk and the joint sos/eos symbol exist only on the
// decoder/LM side; blank exists only as the last CTC posterior column and
// has no sequence id at all.

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

#include <string>

#include "lst/common.hpp"

namespace lst {

struct Vocabulary {
  int num_normal = 0;  // U

  explicit Vocabulary(int u = 0) : num_normal(u) {
    LST_CHECK(u >= 1, "Vocabulary: need at least one normal token");
  }

  int unk() const { return num_normal; }
  int eos() const { return num_normal + 1; }  // joint sos/eos symbol
  int size() const { return num_normal + 2; }  // decoder/LM logit width V

  int ctc_blank() const { return num_normal; }      // last posterior column
  int ctc_width() const { return num_normal + 1; }  // U normal + blank

  bool is_normal(int id) const { return id >= 0 && id < num_normal; }

  std::string name(int id) const {
    LST_CHECK(id >= 0 && id < size(), "Vocabulary: id out of range");
    if (id == unk()) return "<unk>";
    if (id == eos()) return "<eos>";
    return "w" + std::to_string(id + 1);
  }

  // Accepts "w<N>" names, "<unk>"/"<eos>", or bare integer ids.
  int id(const std::string& s) const;
};

}  // namespace lst
