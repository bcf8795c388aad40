// lst/ctc.cpp

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

#include "lst/ctc.hpp"

#include <algorithm>
#include <cmath>

namespace lst::ctc {

double log_add(double a, double b) {
  if (is_log_zero(a)) return is_log_zero(b) ? kLogZero : b;
  if (is_log_zero(b)) return a;
  double hi = std::max(a, b);
  double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

double log_mul(double a, double b) {
  if (is_log_zero(a) || is_log_zero(b)) return kLogZero;
  return a + b;
}

// ---- loss ----

namespace {

void check_target(const std::vector<int>& target, int blank_col, int width) {
  for (int q : target) {
    LST_CHECK(q >= 0 && q < width, "ctc: target id out of posterior range");
    LST_CHECK(q != blank_col, "ctc: target contains the blank symbol");
  }
}

}  // namespace

CtcLossResult ctc_loss_with_grad(const Matrix& log_probs,
                                 const std::vector<int>& target,
                                 int blank_col) {
  const int T = log_probs.rows;
  const int W = log_probs.cols;
  LST_CHECK(T >= 1, "ctc_loss: empty posterior");
  LST_CHECK(blank_col >= 0 && blank_col < W, "ctc_loss: bad blank column");
  check_target(target, blank_col, W);

  const int L = static_cast<int>(target.size());
  const int S = 2 * L + 1;  // blank-interleaved: blank q1 blank q2 ... blank
  auto lab = [&](int s) -> int {
    return (s % 2 == 0) ? blank_col : target[static_cast<size_t>(s / 2)];
  };
  auto can_skip = [&](int s) -> bool {
    // Diagonal skip s-2 -> s allowed for label states not repeating the
    // previous label.
    return s >= 2 && s % 2 == 1 && lab(s) != lab(s - 2);
  };

  std::vector<std::vector<double>> alpha(
      static_cast<size_t>(T), std::vector<double>(static_cast<size_t>(S), kLogZero));
  alpha[0][0] = log_probs.at(0, blank_col);
  if (S > 1) alpha[0][1] = log_probs.at(0, lab(1));
  for (int t = 1; t < T; ++t) {
    const double* row = log_probs.row(t);
    for (int s = 0; s < S; ++s) {
      double acc = alpha[static_cast<size_t>(t - 1)][static_cast<size_t>(s)];
      if (s >= 1) acc = log_add(acc, alpha[static_cast<size_t>(t - 1)][static_cast<size_t>(s - 1)]);
      if (can_skip(s)) acc = log_add(acc, alpha[static_cast<size_t>(t - 1)][static_cast<size_t>(s - 2)]);
      alpha[static_cast<size_t>(t)][static_cast<size_t>(s)] = log_mul(acc, row[lab(s)]);
    }
  }
  double log_p = alpha[static_cast<size_t>(T - 1)][static_cast<size_t>(S - 1)];
  if (S > 1) {
    log_p = log_add(log_p, alpha[static_cast<size_t>(T - 1)][static_cast<size_t>(S - 2)]);
  }

  CtcLossResult res;
  res.grad = Matrix(T, W, 0.0);
  if (is_log_zero(log_p)) {
    res.loss = kInfeasibleLoss;
    res.feasible = false;
    return res;
  }
  res.loss = -log_p;

  // beta[t][s] includes the emission at (t, s), like alpha.
  std::vector<std::vector<double>> beta(
      static_cast<size_t>(T), std::vector<double>(static_cast<size_t>(S), kLogZero));
  beta[static_cast<size_t>(T - 1)][static_cast<size_t>(S - 1)] =
      log_probs.at(T - 1, lab(S - 1));
  if (S > 1) {
    beta[static_cast<size_t>(T - 1)][static_cast<size_t>(S - 2)] =
        log_probs.at(T - 1, lab(S - 2));
  }
  for (int t = T - 2; t >= 0; --t) {
    const double* row = log_probs.row(t);
    for (int s = 0; s < S; ++s) {
      double acc = beta[static_cast<size_t>(t + 1)][static_cast<size_t>(s)];
      if (s + 1 < S) acc = log_add(acc, beta[static_cast<size_t>(t + 1)][static_cast<size_t>(s + 1)]);
      if (s + 2 < S && can_skip(s + 2)) {
        acc = log_add(acc, beta[static_cast<size_t>(t + 1)][static_cast<size_t>(s + 2)]);
      }
      beta[static_cast<size_t>(t)][static_cast<size_t>(s)] = log_mul(acc, row[lab(s)]);
    }
  }

  // d(-log p)/d(log_probs[t][k]) = -sum_{s: lab(s)=k} alpha[t][s]*beta[t][s]
  //                                 / (p * y[t][k])       in linear domain.
  for (int t = 0; t < T; ++t) {
    const double* row = log_probs.row(t);
    double* grow = res.grad.row(t);
    std::vector<double> acc(static_cast<size_t>(W), kLogZero);
    for (int s = 0; s < S; ++s) {
      double ab = log_mul(alpha[static_cast<size_t>(t)][static_cast<size_t>(s)],
                          beta[static_cast<size_t>(t)][static_cast<size_t>(s)]);
      acc[static_cast<size_t>(lab(s))] = log_add(acc[static_cast<size_t>(lab(s))], ab);
    }
    for (int k = 0; k < W; ++k) {
      double a = acc[static_cast<size_t>(k)];
      if (is_log_zero(a)) continue;
      grow[k] = -std::exp(a - log_p - row[k]);
    }
  }
  return res;
}

Var ctc_loss_node(Tape& tape, Var log_probs, std::vector<int> target,
                  int blank_col) {
  return tape.custom_scalar(
      log_probs, [target = std::move(target), blank_col](const Matrix& lp,
                                                         Matrix* grad_in) {
        CtcLossResult r = ctc_loss_with_grad(lp, target, blank_col);
        *grad_in = r.grad;
        return r.loss;
      });
}

// ---- prefix scoring ----

double PrefixState::score() const {
  if (tokens.empty()) return 0.0;
  return psi.back();
}

double PrefixState::complete_log_prob(int t) const {
  LST_CHECK(t >= 0 && t <= horizon, "PrefixState: frame out of horizon");
  if (t == 0) return tokens.empty() ? 0.0 : kLogZero;
  const size_t k = tokens.size();
  return log_add(gamma_n[k][static_cast<size_t>(t - 1)],
                 gamma_b[k][static_cast<size_t>(t - 1)]);
}

PrefixState prefix_initial() {
  PrefixState s;
  s.horizon = 0;
  s.gamma_n.emplace_back();
  s.gamma_b.emplace_back();
  s.psi.push_back(0.0);  // empty prefix: probability 1
  return s;
}

namespace {

// One recursion step for level k at frame t (0-based), assuming all levels
// below k are available at frame t and level k is available at t-1.
// Updates gamma arrays (by push_back at index t) and the running psi.
void advance_level(PrefixState* s, int k, int t, const double* row,
                   int blank_col) {
  std::vector<double>& gn = s->gamma_n[static_cast<size_t>(k)];
  std::vector<double>& gb = s->gamma_b[static_cast<size_t>(k)];
  if (k == 0) {
    // Empty prefix: no non-blank endings; blank run probability.
    double prev = (t == 0) ? 0.0 : gb[static_cast<size_t>(t - 1)];
    gn.push_back(kLogZero);
    gb.push_back(log_mul(prev, row[blank_col]));
    return;
  }
  const int q = s->tokens[static_cast<size_t>(k - 1)];
  if (t == 0) {
    double gn0 = (k == 1) ? row[q] : kLogZero;
    gn.push_back(gn0);
    gb.push_back(kLogZero);
    s->psi[static_cast<size_t>(k)] =
        log_add(s->psi[static_cast<size_t>(k)], gn0);
    return;
  }
  const std::vector<double>& pn = s->gamma_n[static_cast<size_t>(k - 1)];
  const std::vector<double>& pb = s->gamma_b[static_cast<size_t>(k - 1)];
  const bool repeated =
      k >= 2 && s->tokens[static_cast<size_t>(k - 2)] == q;
  // Probability of the parent prefix being complete at t-1 in a way that may
  // be followed directly by q: blank endings always qualify; non-blank
  // endings only when the previous label differs from q.
  double phi = repeated ? pb[static_cast<size_t>(t - 1)]
                        : log_add(pb[static_cast<size_t>(t - 1)],
                                  pn[static_cast<size_t>(t - 1)]);
  double new_n = log_mul(log_add(gn[static_cast<size_t>(t - 1)], phi), row[q]);
  double new_b = log_mul(log_add(gb[static_cast<size_t>(t - 1)],
                                 gn[static_cast<size_t>(t - 1)]),
                         row[blank_col]);
  gn.push_back(new_n);
  gb.push_back(new_b);
  s->psi[static_cast<size_t>(k)] = log_add(
      s->psi[static_cast<size_t>(k)], log_mul(phi, row[q]));
}

}  // namespace

void grow_horizon(PrefixState* state, const Matrix& log_probs, int new_horizon,
                  int blank_col) {
  LST_CHECK(state != nullptr, "grow_horizon: null state");
  LST_CHECK(new_horizon >= state->horizon,
            "grow_horizon: horizon may not shrink (" +
                std::to_string(state->horizon) + " -> " +
                std::to_string(new_horizon) + ")");
  LST_CHECK(new_horizon <= log_probs.rows,
            "grow_horizon: horizon beyond posterior rows");
  LST_CHECK(blank_col >= 0 && blank_col < log_probs.cols,
            "grow_horizon: bad blank column");
  for (int t = state->horizon; t < new_horizon; ++t) {
    const double* row = log_probs.row(t);
    for (int k = 0; k <= state->len(); ++k) {
      advance_level(state, k, t, row, blank_col);
    }
  }
  state->horizon = new_horizon;
}

PrefixExtension prefix_extend(const PrefixState& g, int q,
                              const Matrix& log_probs, int t_h, int blank_col) {
  LST_CHECK(q != blank_col, "prefix_extend: cannot extend with blank");
  LST_CHECK(q >= 0 && q < log_probs.cols, "prefix_extend: token out of range");
  LST_CHECK(t_h >= g.horizon,
            "prefix_extend: evaluation horizon below state horizon");
  PrefixExtension ext;
  ext.state = g;
  grow_horizon(&ext.state, log_probs, t_h, blank_col);
  PrefixState* s = &ext.state;
  s->tokens.push_back(q);
  s->gamma_n.emplace_back();
  s->gamma_b.emplace_back();
  s->gamma_n.back().reserve(static_cast<size_t>(t_h));
  s->gamma_b.back().reserve(static_cast<size_t>(t_h));
  s->psi.push_back(kLogZero);
  const int k = s->len();
  for (int t = 0; t < t_h; ++t) {
    advance_level(s, k, t, log_probs.row(t), blank_col);
  }
  ext.score = s->psi.back();
  return ext;
}

double prefix_extend_score(const PrefixState& g, int q, const Matrix& log_probs,
                           int t_h, int blank_col) {
  LST_CHECK(q != blank_col, "prefix_extend_score: cannot extend with blank");
  LST_CHECK(q >= 0 && q < log_probs.cols,
            "prefix_extend_score: token out of range");
  LST_CHECK(t_h == g.horizon,
            "prefix_extend_score: state must be grown to the evaluation "
            "horizon");
  if (t_h == 0) return kLogZero;
  const size_t kp = g.tokens.size();  // parent level
  const bool repeated = !g.tokens.empty() && g.tokens.back() == q;
  double psi = kLogZero;
  double gn_prev = kLogZero;  // gamma_n of the extended prefix at t-1
  for (int t = 0; t < t_h; ++t) {
    const double* row = log_probs.row(t);
    double gn_t;
    if (t == 0) {
      gn_t = g.tokens.empty() ? row[q] : kLogZero;
      psi = log_add(psi, gn_t);
    } else {
      double phi = repeated
                       ? g.gamma_b[kp][static_cast<size_t>(t - 1)]
                       : log_add(g.gamma_b[kp][static_cast<size_t>(t - 1)],
                                 g.gamma_n[kp][static_cast<size_t>(t - 1)]);
      gn_t = log_mul(log_add(gn_prev, phi), row[q]);
      psi = log_add(psi, log_mul(phi, row[q]));
    }
    gn_prev = gn_t;
  }
  return psi;
}

double prefix_score_eos(const PrefixState& g, int t_h, int total_frames) {
  LST_CHECK(t_h <= total_frames,
            "prefix_score_eos: horizon beyond the full audio length");
  if (t_h < total_frames) return kLogZero;
  return g.complete_log_prob(t_h);
}

}  // namespace lst::ctc
