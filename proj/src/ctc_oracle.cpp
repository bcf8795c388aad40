// lst/ctc_oracle.cpp

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

#include "lst/ctc_oracle.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lst::ctc_oracle {

namespace {

void walk(const Matrix& lp, int blank_col, int t, double prob,
          std::vector<int>& path,
          std::map<std::vector<int>, double>& out) {
  if (t == lp.rows) {
    // Collapse: drop consecutive repeats, then blanks.
    std::vector<int> collapsed;
    int prev = -1;
    for (int sym : path) {
      if (sym != prev && sym != blank_col) collapsed.push_back(sym);
      prev = sym;
    }
    out[collapsed] += prob;
    return;
  }
  const double* row = lp.row(t);
  for (int k = 0; k < lp.cols; ++k) {
    path.push_back(k);
    walk(lp, blank_col, t + 1, prob * std::exp(row[k]), path, out);
    path.pop_back();
  }
}

}  // namespace

std::map<std::vector<int>, double> enumerate_collapsed(const Matrix& log_probs,
                                                       int blank_col) {
  LST_CHECK(log_probs.rows <= 12,
            "ctc_oracle: path enumeration limited to tiny T");
  std::map<std::vector<int>, double> out;
  std::vector<int> path;
  walk(log_probs, blank_col, 0, 1.0, path, out);
  return out;
}

double prefix_log_mass(const std::map<std::vector<int>, double>& table,
                       const std::vector<int>& prefix) {
  double mass = 0.0;
  for (const auto& [seq, p] : table) {
    if (seq.size() < prefix.size()) continue;
    bool is_prefix = true;
    for (size_t i = 0; i < prefix.size(); ++i) {
      if (seq[i] != prefix[i]) {
        is_prefix = false;
        break;
      }
    }
    if (is_prefix) mass += p;
  }
  return mass > 0.0 ? std::log(mass) : -1e30;
}

double complete_log_mass(const std::map<std::vector<int>, double>& table,
                         const std::vector<int>& seq) {
  auto it = table.find(seq);
  if (it == table.end() || it->second <= 0.0) return -1e30;
  return std::log(it->second);
}

void write_posterior_dump(const std::string& path, const Matrix& log_probs) {
  LST_CHECK(log_probs.rows >= 1 && log_probs.cols >= 2,
            "posterior dump needs at least one frame and one token + blank");
  std::ofstream out(path);
  LST_CHECK(out.good(), "cannot write posterior dump " + path);
  out << log_probs.rows << ' ' << (log_probs.cols - 1) << '\n';
  char buf[64];
  for (int t = 0; t < log_probs.rows; ++t) {
    for (int k = 0; k < log_probs.cols; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", log_probs.at(t, k));
      if (k) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  LST_CHECK(out.good(), "short write on posterior dump " + path);
}

Matrix read_posterior_dump(const std::string& path) {
  std::ifstream in(path);
  LST_CHECK(in.good(), "cannot open posterior dump " + path);
  int t = 0, u = 0;
  in >> t >> u;
  LST_CHECK(in.good() && t >= 1 && u >= 1,
            "bad posterior dump header in " + path);
  Matrix lp(t, u + 1);
  for (double& x : lp.data) in >> x;
  LST_CHECK(!in.fail(), "posterior dump truncated: " + path);
  return lp;
}

}  // namespace lst::ctc_oracle
