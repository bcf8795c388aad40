// lst/align.cpp

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

#include "lst/align.hpp"

#include <algorithm>
#include <cmath>

namespace lst::align {

namespace {
// Tolerance for closing the final label on scaled weights, where the sum
// equals target_len only up to accumulated roundoff.
constexpr double kScaledFinalSlack = 1e-6;
}  // namespace

std::vector<double> compute_fire_weights(const Matrix& encoder_states) {
  LST_CHECK(encoder_states.cols >= 2,
            "compute_fire_weights: need at least 2 columns (content + weight "
            "channel), got " +
                std::to_string(encoder_states.cols));
  const double lo = std::nextafter(0.0, 1.0);
  const double hi = std::nextafter(1.0, 0.0);
  std::vector<double> alpha(static_cast<size_t>(encoder_states.rows));
  for (int t = 0; t < encoder_states.rows; ++t) {
    double a = sigmoid(encoder_states.at(t, encoder_states.cols - 1));
    alpha[static_cast<size_t>(t)] = std::clamp(a, lo, hi);
  }
  return alpha;
}

ScaledWeights cif_scale(const std::vector<double>& alpha, int target_len) {
  LST_CHECK(target_len >= 1, "cif_scale: target_len must be >= 1");
  double total = 0.0;
  for (double a : alpha) {
    LST_CHECK(a >= 0.0, "cif_scale: negative weight");
    total += a;
  }
  LST_CHECK(total > 0.0, "cif_scale: degenerate input, sum of weights is 0");
  double factor = static_cast<double>(target_len) / total;
  ScaledWeights out;
  out.target_len = target_len;
  out.alpha_hat.resize(alpha.size());
  for (size_t i = 0; i < alpha.size(); ++i) out.alpha_hat[i] = alpha[i] * factor;
  return out;
}

double quantity_loss_value(const std::vector<double>& alpha, int target_len) {
  double total = 0.0;
  for (double a : alpha) total += a;
  return std::fabs(total - static_cast<double>(target_len));
}

namespace {

// Shared scan.  expected_len < 0 means "unscaled mode": partial tail is
// discarded (or emitted when emit_partial).  expected_len >= 1 means scaled
// mode: a tail within kScaledFinalSlack of a full label is closed so roundoff
// in the scaling factor cannot drop the final firing.
CifResult cif_scan(const std::vector<double>& alpha, const Matrix& content,
                   bool emit_partial, int expected_len) {
  LST_CHECK(static_cast<int>(alpha.size()) == content.rows,
            "cif_integrate_fire: weight count " +
                std::to_string(alpha.size()) + " != frame count " +
                std::to_string(content.rows));
  CifResult res;
  std::vector<std::vector<double>> labels;  // rows collected before packing
  std::vector<double> cur(static_cast<size_t>(content.cols), 0.0);
  double acc = 0.0;
  bool cur_nonempty = false;
  for (size_t t = 0; t < alpha.size(); ++t) {
    double a = alpha[t];
    LST_CHECK(a >= 0.0, "cif_integrate_fire: negative weight");
    const double* frame = content.row(static_cast<int>(t));
    // A frame may finish several labels when its weight exceeds the space
    // left under the threshold (scaled weights can be > 1): each pass takes
    // exactly the missing weight and the remainder seeds the next label.
    while (acc + a >= 1.0) {
      double take = 1.0 - acc;
      for (int j = 0; j < content.cols; ++j) cur[static_cast<size_t>(j)] += take * frame[j];
      labels.push_back(cur);
      res.fire_frames.push_back(static_cast<int>(t) + 1);
      std::fill(cur.begin(), cur.end(), 0.0);
      cur_nonempty = false;
      a = (acc + a) - 1.0;
      acc = 0.0;
    }
    if (a > 0.0) {
      acc += a;
      for (int j = 0; j < content.cols; ++j) cur[static_cast<size_t>(j)] += a * frame[j];
      cur_nonempty = true;
    }
  }
  res.leftover = acc;
  if (expected_len >= 1 && static_cast<int>(labels.size()) == expected_len - 1 &&
      acc >= 1.0 - kScaledFinalSlack && cur_nonempty) {
    // Scaled mode: the missing mass is pure roundoff; close the final label.
    labels.push_back(cur);
    res.fire_frames.push_back(static_cast<int>(alpha.size()));
    res.leftover = 0.0;
  } else if (expected_len < 0 && emit_partial && cur_nonempty && acc > 0.0) {
    labels.push_back(cur);
    res.fire_frames.push_back(static_cast<int>(alpha.size()));
    res.emitted_partial = true;
  }
  res.labels = Matrix(static_cast<int>(labels.size()), content.cols, 0.0);
  for (size_t i = 0; i < labels.size(); ++i) {
    double* row = res.labels.row(static_cast<int>(i));
    for (int j = 0; j < content.cols; ++j) row[j] = labels[i][static_cast<size_t>(j)];
  }
  return res;
}

}  // namespace

CifResult cif_integrate_fire(const std::vector<double>& alpha,
                             const Matrix& content, bool emit_partial) {
  return cif_scan(alpha, content, emit_partial, -1);
}

CifResult cif_integrate_fire(const ScaledWeights& weights,
                             const Matrix& content) {
  CifResult res = cif_scan(weights.alpha_hat, content, false, weights.target_len);
  LST_CHECK(res.labels.rows == weights.target_len,
            "cif_integrate_fire(scaled): fired " +
                std::to_string(res.labels.rows) + " labels, expected " +
                std::to_string(weights.target_len));
  return res;
}

int locate_boundary(const std::vector<double>& alpha, int j) {
  LST_CHECK(j >= 1, "locate_boundary: label index must be >= 1");
  double acc = 0.0;
  for (size_t t = 0; t < alpha.size(); ++t) {
    acc += alpha[t];
    if (acc > static_cast<double>(j)) return static_cast<int>(t);  // T_j = t (1-based t+1 minus 1)
  }
  return static_cast<int>(alpha.size());
}

int locate_boundary_cumsum(const std::vector<double>& cumsum, int j) {
  LST_CHECK(j >= 1, "locate_boundary_cumsum: label index must be >= 1");
  for (size_t t = 0; t < cumsum.size(); ++t) {
    if (cumsum[t] > static_cast<double>(j)) return static_cast<int>(t);
  }
  return static_cast<int>(cumsum.size());
}

std::vector<int> boundary_table(const std::vector<double>& alpha, int count) {
  std::vector<double> cumsum(alpha.size());
  double acc = 0.0;
  for (size_t t = 0; t < alpha.size(); ++t) {
    acc += alpha[t];
    cumsum[t] = acc;
  }
  std::vector<int> bounds(static_cast<size_t>(count));
  for (int j = 1; j <= count; ++j) {
    bounds[static_cast<size_t>(j - 1)] = locate_boundary_cumsum(cumsum, j);
  }
  return bounds;
}

namespace {
Matrix fc_map(const Matrix& content, const Matrix& fc_w, const Matrix& fc_b) {
  return add_row_broadcast(matmul(content, fc_w), fc_b);
}
}  // namespace

Matrix aif_attend(const Matrix& query, const Matrix& mapped_keys,
                  const Matrix& mapped_values, int t_j) {
  LST_CHECK(query.rows == 1, "aif_attend: query must be a single row");
  LST_CHECK(t_j >= 1 && t_j <= mapped_keys.rows && t_j <= mapped_values.rows,
            "aif_attend: boundary out of range: " + std::to_string(t_j));
  Matrix keys = slice_rows(mapped_keys, 0, t_j);
  Matrix values = slice_rows(mapped_values, 0, t_j);
  Matrix scores = matmul_nt(query, keys);  // 1 x t_j, plain dot products
  Matrix attw = softmax_rows(scores);
  return matmul(attw, values);  // 1 x d'
}

Matrix aif_extract(const Matrix& query, const Matrix& content, int t_j,
                   const Matrix& fc_w, const Matrix& fc_b) {
  LST_CHECK(t_j >= 1 && t_j <= content.rows,
            "aif_extract: boundary out of range: " + std::to_string(t_j));
  Matrix prefix = slice_rows(content, 0, t_j);
  Matrix mapped = fc_map(prefix, fc_w, fc_b);
  return aif_attend(query, mapped, mapped, t_j);
}

Matrix aif_extract_parallel(const Matrix& queries, const Matrix& content,
                            const std::vector<int>& bounds, const Matrix& fc_w,
                            const Matrix& fc_b) {
  LST_CHECK(static_cast<int>(bounds.size()) == queries.rows,
            "aif_extract_parallel: boundary table length " +
                std::to_string(bounds.size()) + " != query count " +
                std::to_string(queries.rows));
  Matrix mapped = fc_map(content, fc_w, fc_b);
  Matrix allow(queries.rows, content.rows, 0.0);
  for (int j = 0; j < queries.rows; ++j) {
    int b = bounds[static_cast<size_t>(j)];
    LST_CHECK(b >= 1 && b <= content.rows,
              "aif_extract_parallel: boundary out of range: " + std::to_string(b));
    for (int t = 0; t < b; ++t) allow.at(j, t) = 1.0;
  }
  Matrix scores = matmul_nt(queries, mapped);  // L x T
  Matrix attw = masked_softmax_rows(scores, allow);
  return matmul(attw, mapped);  // L x d'
}

}  // namespace lst::align
