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

#include "lst/wer.hpp"

namespace lst::wer {

WerStats& WerStats::operator+=(const WerStats& o) {
  subs += o.subs;
  dels += o.dels;
  ins += o.ins;
  hits += o.hits;
  ref_len += o.ref_len;
  pairs += o.pairs;
  missing += o.missing;
  return *this;
}

WerStats levenshtein_stats(const std::vector<int>& ref,
                           const std::vector<int>& hyp) {
  const size_t n = ref.size();
  const size_t m = hyp.size();
  // d[i][j]: edit distance between ref[0,i) and hyp[0,j).
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      int diag = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      int del = d[i - 1][j] + 1;
      int ins = d[i][j - 1] + 1;
      d[i][j] = std::min(diag, std::min(del, ins));
    }
  }
  WerStats s;
  s.ref_len = static_cast<long long>(n);
  s.pairs = 1;
  // Backtrace preferring the diagonal on ties (the substitution-leaning
  // convention), then deletion, then insertion.
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      int diag = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      if (d[i][j] == diag) {
        if (ref[i - 1] == hyp[j - 1]) {
          ++s.hits;
        } else {
          ++s.subs;
        }
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++s.dels;
      --i;
      continue;
    }
    ++s.ins;
    --j;
  }
  return s;
}

WerStats eval_wer(
    const std::vector<std::pair<std::string, std::vector<int>>>& refs,
    const std::map<std::string, std::vector<int>>& hyps) {
  WerStats total;
  for (const auto& [id, ref] : refs) {
    auto it = hyps.find(id);
    if (it == hyps.end()) {
      WerStats s;
      s.ref_len = static_cast<long long>(ref.size());
      s.dels = s.ref_len;
      s.pairs = 1;
      s.missing = 1;
      total += s;
    } else {
      total += levenshtein_stats(ref, it->second);
    }
  }
  return total;
}

}  // namespace lst::wer
