// lst/align.hpp
//
// Monotonic alignment between encoder frames and output labels.
//
// Two mechanisms live here:
//   * integrate-and-fire (CIF): a sequential scan accumulates per-frame fire
//     weights and emits a weighted sum of content frames every time the
//     accumulator crosses 1.0, splitting the crossing weight between the
//     finished label and the next one;
//   * attention-based extraction (AIF): per-label boundaries T_j are located
//     on the running weight sum, and label representation c_j is a dot-product
//     attention readout over the FC-mapped frame prefix 1..T_j.
//
// Everything here is value-level (plain matrices); the training graph builds
// the same math through Tape ops and the tests assert both paths agree.

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

#include <vector>

#include "lst/matrix.hpp"

namespace lst::align {

// Per-frame fire weights alpha_t = sigmoid(e_{t,d}) from the last encoder
// column.  Results are clamped into the open interval (0,1) so downstream
// accumulation code can rely on 0 < alpha_t < 1 even at sigmoid saturation.
// Requires d >= 2 (columns 1..d-1 carry content, column d the weight channel).
std::vector<double> compute_fire_weights(const Matrix& encoder_states);

// Scaled weights carry the target length they were normalized to:
// alpha_hat_t = alpha_t * L / sum(alpha).
struct ScaledWeights {
  std::vector<double> alpha_hat;
  int target_len = 0;
};

ScaledWeights cif_scale(const std::vector<double>& alpha, int target_len);

// |sum(alpha) - target_len|.  The differentiable version lives in the model
// graph; this is the value-level reference.
double quantity_loss_value(const std::vector<double>& alpha, int target_len);

struct CifResult {
  Matrix labels;                  // fired x content_cols, weighted frame sums
  std::vector<int> fire_frames;   // 1-based frame at which each label fired
  double leftover = 0.0;          // accumulated weight left after the scan
  bool emitted_partial = false;   // true when the trailing partial was kept
};

// Sequential integrate-and-fire scan over unscaled weights.  Crossing the
// threshold splits the crossing frame's weight so each finished label's
// weights sum to exactly 1.0; exact accumulation 1.0 fires with zero
// remainder.  A trailing partial accumulation is discarded unless
// emit_partial is set (diagnostics only).
CifResult cif_integrate_fire(const std::vector<double>& alpha,
                             const Matrix& content, bool emit_partial = false);

// Scan over scaled weights: fires exactly target_len labels.  The sum of
// scaled weights equals L only up to roundoff, so a final accumulation
// within 1e-6 of the threshold closes the last label.
CifResult cif_integrate_fire(const ScaledWeights& weights,
                             const Matrix& content);

// Right boundary of label j (1-based): T_j + 1 is the first frame where the
// running sum of alpha strictly exceeds j; if that never happens, T_j = T.
// Returned index is 1-based in [1, T].
int locate_boundary(const std::vector<double>& alpha, int j);
// Same rule over a precomputed inclusive cumulative sum.
int locate_boundary_cumsum(const std::vector<double>& cumsum, int j);

// Boundaries for labels 1..count.  Monotone nondecreasing by construction.
std::vector<int> boundary_table(const std::vector<double>& alpha, int count);

// Attention readout over the first t_j rows of pre-mapped keys/values:
//   softmax(query . keys[0:t_j]^T) . values[0:t_j]
// The dot product is unscaled.  Used directly by the decoder, which maps
// keys/values once per utterance.
Matrix aif_attend(const Matrix& query, const Matrix& mapped_keys,
                  const Matrix& mapped_values, int t_j);

// Label representation for one query: both keys and values are the FC-mapped
// content prefix rows 1..t_j (the left boundary is always frame 1):
//   c = softmax(query . map(prefix)^T) . map(prefix)
// where map(x) = x * fc_w + fc_b.  The dot product is unscaled.
// query: 1 x d'; content: T x (d-1); fc_w: (d-1) x d'; fc_b: 1 x d'.
Matrix aif_extract(const Matrix& query, const Matrix& content, int t_j,
                   const Matrix& fc_w, const Matrix& fc_b);

// Batched teacher-forced extraction: one masked attention where query row j
// may only attend frames 1..bounds[j].  Row j equals aif_extract for label j.
Matrix aif_extract_parallel(const Matrix& queries, const Matrix& content,
                            const std::vector<int>& bounds, const Matrix& fc_w,
                            const Matrix& fc_b);

}  // namespace lst::align
