// lst/ctc.hpp
//
// CTC machinery:
//   * forward-algorithm loss with an analytic gradient (exposed as a tape
//     node for training);
//   * incremental prefix scoring for decoding: per-prefix forward variables
//     gamma_n / gamma_b (paths ending non-blank / blank) kept for every
//     frame, extensible by one label or by more frames without recomputing
//     anything already done;
//   * the streaming end-of-sentence rule: eos has no CTC column, so an eos
//     hypothesis scores -inf until the full audio horizon is reached, where
//     it scores log(gamma_n + gamma_b) of its prefix.
//
// Log domain throughout.  -inf is the documented finite sentinel kLogZero so
// score arithmetic stays NaN-free.

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
#include "lst/tape.hpp"

namespace lst::ctc {

// Log-domain zero.  Any log probability at or below kLogZeroThreshold is
// treated as exactly zero probability; products clamp to the sentinel so the
// value never drifts.
inline constexpr double kLogZero = -1e30;
inline constexpr double kLogZeroThreshold = -1e29;

inline bool is_log_zero(double x) { return x <= kLogZeroThreshold; }

// log(exp(a) + exp(b)) with sentinel awareness.
double log_add(double a, double b);
// a + b clamped to the sentinel when either side is log-zero.
double log_mul(double a, double b);

// ---- CTC loss ----

struct CtcLossResult {
  double loss = 0.0;     // -log p(target | posterior); kInfeasibleLoss if no path
  Matrix grad;           // d(loss)/d(log_probs), zero when infeasible
  bool feasible = true;
};

// Loss value used when no valid alignment exists (probability zero).
inline constexpr double kInfeasibleLoss = 1e30;

// log_probs: T x (U+1), each row a log distribution, blank in the last
// column.  target: token column indices in [0, U).  Standard blank-
// interleaved forward/backward recursion.
CtcLossResult ctc_loss_with_grad(const Matrix& log_probs,
                                 const std::vector<int>& target, int blank_col);

// Tape node for the same loss (training path).
Var ctc_loss_node(Tape& tape, Var log_probs, std::vector<int> target,
                  int blank_col);

// ---- prefix scoring ----

// Forward state of one prefix over a growing frame horizon.  Level k holds
// the variables of the first k tokens; level 0 is the empty prefix.  The
// full chain is kept because extending by a token needs the parent level's
// per-frame values.
struct PrefixState {
  std::vector<int> tokens;                    // CTC column ids, length K
  int horizon = 0;                            // frames consumed
  std::vector<std::vector<double>> gamma_n;   // [K+1][horizon]
  std::vector<std::vector<double>> gamma_b;   // [K+1][horizon]
  std::vector<double> psi;                    // running prefix score per level

  int len() const { return static_cast<int>(tokens.size()); }
  // Prefix score at the current horizon: log total probability that the
  // emitted label sequence starts with this prefix.  0 for the empty prefix.
  double score() const;
  // log(gamma_n[t] + gamma_b[t]) of the full prefix, t in [1, horizon]
  // (1-based frame count).
  double complete_log_prob(int t) const;
};

// State of the empty prefix at horizon 0.
PrefixState prefix_initial();

// Advance the recursions of every level to new_horizon using rows
// [state.horizon, new_horizon) of log_probs.  Shrinking is an error;
// advancing by zero rows is the identity.
void grow_horizon(PrefixState* state, const Matrix& log_probs, int new_horizon,
                  int blank_col);

struct PrefixExtension {
  PrefixState state;
  double score = kLogZero;  // prefix score of the extended prefix at t_h
};

// Extend prefix g by normal token q, evaluated at frame horizon t_h (which
// must be >= g's current horizon; g is grown internally on a copy).
// q == blank_col is an error.
PrefixExtension prefix_extend(const PrefixState& g, int q,
                              const Matrix& log_probs, int t_h, int blank_col);

// Score of the extension only (no state construction); equals
// prefix_extend(...).score.  Requires g already grown to t_h.
double prefix_extend_score(const PrefixState& g, int q, const Matrix& log_probs,
                           int t_h, int blank_col);

// Streaming eos score for hypothesis g + eos at horizon t_h with full-audio
// length total_frames: the sentinel while t_h < total_frames, and the
// complete-sequence probability log(gamma_n + gamma_b) at t_h == total_frames.
// t_h > total_frames is an error.  Requires g grown to at least t_h.
double prefix_score_eos(const PrefixState& g, int t_h, int total_frames);

}  // namespace lst::ctc
