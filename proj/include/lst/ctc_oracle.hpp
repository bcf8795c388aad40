// lst/ctc_oracle.hpp
//
// Brute-force reference for CTC quantities, used by tests and the
// oracle-check CLI.  Deliberately independent of src/ctc.cpp: it enumerates
// every frame-level path, collapses it (remove repeats, then blanks) and
// accumulates linear-domain masses per collapsed label sequence.  Only
// viable for tiny T.

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
#include <vector>

#include "lst/matrix.hpp"

namespace lst::ctc_oracle {

// Sum of linear path probabilities per collapsed label sequence, over all
// (U+1)^T frame paths.  log_probs: T x (U+1), blank in blank_col.
std::map<std::vector<int>, double> enumerate_collapsed(const Matrix& log_probs,
                                                       int blank_col);

// Log of the summed mass of all collapsed sequences that start with `prefix`
// (the prefix itself included).  Returns -infinity (as -1e30) for zero mass.
double prefix_log_mass(const std::map<std::vector<int>, double>& table,
                       const std::vector<int>& prefix);

// Log mass of exactly `seq`.
double complete_log_mass(const std::map<std::vector<int>, double>& table,
                         const std::vector<int>& seq);

// ---- posterior dump files ----
//
// Text format: header line "T U", then T lines of U+1 log-probabilities
// (normal tokens first, blank last).  Human-inspectable debug interface.

void write_posterior_dump(const std::string& path, const Matrix& log_probs);
Matrix read_posterior_dump(const std::string& path);

}  // namespace lst::ctc_oracle
