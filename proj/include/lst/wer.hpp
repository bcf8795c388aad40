// lst/wer.hpp
//
// Word-error-rate scoring: unit-cost Levenshtein alignment with ties broken
// toward substitutions, aggregated over utterance pairs matched by id.

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

#include <map>
#include <string>
#include <vector>

namespace lst::wer {

struct WerStats {
  long long subs = 0;
  long long dels = 0;
  long long ins = 0;
  long long hits = 0;
  long long ref_len = 0;
  int pairs = 0;
  int missing = 0;  // hypotheses absent for a reference id (counted as
                    // all-deletions and flagged here)

  double wer() const {
    return ref_len > 0
               ? static_cast<double>(subs + dels + ins) /
                     static_cast<double>(ref_len)
               : 0.0;
  }
  long long edits() const { return subs + dels + ins; }

  WerStats& operator+=(const WerStats& o);
};

// Alignment counts for one pair.  When edit paths tie, the diagonal
// (match/substitution) is preferred over deletion, then insertion.
WerStats levenshtein_stats(const std::vector<int>& ref,
                           const std::vector<int>& hyp);

// Aggregate over references; a missing hypothesis id scores as all
// deletions and increments `missing`.
WerStats eval_wer(
    const std::vector<std::pair<std::string, std::vector<int>>>& refs,
    const std::map<std::string, std::vector<int>>& hyps);

}  // namespace lst::wer
