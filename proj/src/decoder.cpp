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

#include "lst/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "lst/align.hpp"
#include "lst/tape.hpp"

namespace lst::decode {

void DecodeConfig::validate() const {
  LST_CHECK(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  LST_CHECK(beam_size >= 1, "beam_size must be >= 1");
  LST_CHECK(max_labels >= 0, "max_labels must be >= 0 (0 = derived)");
  LST_CHECK(std::isfinite(lm_weight) && lm_weight >= 0.0,
            "lm_weight must be finite and >= 0");
  if (mode == ScoreMode::kCtcOnly) {
    LST_CHECK(beta > 0.0, "CTC-only scoring contradicts beta = 0");
  }
  if (mode == ScoreMode::kTransducerOnly) {
    LST_CHECK(beta < 1.0, "transducer-only scoring contradicts beta = 1");
  }
}

double combine_scores(double s_ctc, double s_lst, double beta) {
  if (beta <= 0.0) return s_lst;
  if (beta >= 1.0) return s_ctc;
  if (ctc::is_log_zero(s_ctc) || ctc::is_log_zero(s_lst)) return ctc::kLogZero;
  return beta * s_ctc + (1.0 - beta) * s_lst;
}

DecoderContext make_decoder_context(const model::LsTransducer& m,
                                    const Matrix& encoder_out) {
  const int dm = m.cfg.d_model;
  LST_CHECK(encoder_out.cols == dm + 1, "encoder output width mismatch");
  DecoderContext ctx;
  ctx.frames = encoder_out.rows;
  ctx.content = slice_cols(encoder_out, 0, dm);
  ctx.alpha = align::compute_fire_weights(encoder_out);
  ctx.alpha_cum.resize(static_cast<size_t>(ctx.frames));
  double acc = 0.0;
  for (int t = 0; t < ctx.frames; ++t) {
    acc += ctx.alpha[static_cast<size_t>(t)];
    ctx.alpha_cum[static_cast<size_t>(t)] = acc;
  }
  ctx.keys = add_row_broadcast(matmul(ctx.content, m.aif_key_w.value),
                               m.aif_key_b.value);
  ctx.values = m.cfg.aif_separate_kv
                   ? add_row_broadcast(matmul(ctx.content, m.aif_val_w.value),
                                       m.aif_val_b.value)
                   : ctx.keys;
  Matrix ctc_logits =
      add_row_broadcast(matmul(ctx.content, m.ctc_w.value), m.ctc_b.value);
  ctx.ctc_log_probs = log_softmax_rows(ctc_logits);
  return ctx;
}

Matrix transducer_row(model::LsTransducer& m, const DecoderContext& ctx,
                      const std::vector<int>& prefix, int t_h) {
  LST_CHECK(t_h >= 1 && t_h <= ctx.frames, "horizon out of range");
  const Vocabulary vocab = m.cfg.vocab();
  std::vector<int> in;
  in.reserve(prefix.size() + 1);
  in.push_back(vocab.eos());  // doubles as the sequence-start symbol
  for (int q : prefix) {
    LST_CHECK(q >= 0 && q < vocab.size(), "prefix token out of range");
    in.push_back(q);
  }
  Tape tape;
  model::PredOut po = model::predict_t(tape, m, in);
  const Matrix& tap = tape.val(po.tap);
  const Matrix& pred_logits = tape.val(po.logits);
  int last = tap.rows - 1;
  Matrix query = Matrix::row_vector(
      std::vector<double>(tap.row(last), tap.row(last) + tap.cols));
  Matrix label_enc = align::aif_attend(query, ctx.keys, ctx.values, t_h);
  Matrix acoustic = add_row_broadcast(matmul(label_enc, m.joint_w.value),
                                      m.joint_b.value);
  Matrix pl(1, pred_logits.cols);
  for (int v = 0; v < pred_logits.cols; ++v) pl.at(0, v) = pred_logits.at(last, v);
  Matrix joint = add(pl, acoustic);
  return log_softmax_rows(joint);
}

StepOutput transducer_step(model::LsTransducer& m, const DecoderContext& ctx,
                           const std::vector<int>& prefix) {
  LST_CHECK(ctx.frames >= 1, "empty decoder context");
  int label_index = static_cast<int>(prefix.size()) + 1;
  int t_h = align::locate_boundary_cumsum(ctx.alpha_cum, label_index);
  StepOutput out;
  out.boundary = t_h;
  out.log_probs = transducer_row(m, ctx, prefix, t_h);
  return out;
}

namespace {

// Strict total orders used for deterministic ranking.  Candidate identity is
// (parent tokens, extension token), which is unique within a step.
bool tokens_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

StreamingSession::StreamingSession(model::LsTransducer* m,
                                   const DecodeConfig& cfg,
                                   model::LmModel* fusion_lm)
    : model_(m), lm_(fusion_lm), cfg_(cfg), vocab_(m->cfg.vocab()),
      buffered_(0, m->cfg.input_dim) {
  cfg_.validate();
  if (lm_ != nullptr) {
    LST_CHECK(lm_->cfg.num_normal == model_->cfg.num_normal,
              "fusion LM vocabulary does not match the transducer");
  }
  if (cfg_.max_labels > 0) max_labels_ = cfg_.max_labels;
  Hyp root;
  root.cstate = ctc::prefix_initial();
  active_.push_back(std::move(root));
}

void StreamingSession::push(const Matrix& frames) {
  LST_CHECK(!audio_done_, "push after finish");
  if (frames.rows == 0) return;
  LST_CHECK(frames.cols == model_->cfg.input_dim, "frame width mismatch");
  Matrix merged(buffered_.rows + frames.rows, buffered_.cols);
  std::copy(buffered_.data.begin(), buffered_.data.end(), merged.data.begin());
  std::copy(frames.data.begin(), frames.data.end(),
            merged.data.begin() + buffered_.size());
  buffered_ = std::move(merged);
  refinalize();
  advance();
}

void StreamingSession::refinalize() {
  // Encoder rows are final once their chunk is complete (or at audio end).
  int complete = audio_done_
                     ? buffered_.rows
                     : (buffered_.rows / model_->cfg.chunk_size) *
                           model_->cfg.chunk_size;
  if (complete <= finalized_) return;
  Matrix prefix = slice_rows(buffered_, 0, complete);
  Tape tape;
  Var enc = model::encode_t(tape, *model_, prefix);
  ctx_ = make_decoder_context(*model_, tape.val(enc));
  finalized_ = complete;
}

Matrix StreamingSession::fusion_row(const std::vector<int>& prefix) const {
  std::vector<int> in;
  in.reserve(prefix.size() + 1);
  in.push_back(vocab_.eos());
  in.insert(in.end(), prefix.begin(), prefix.end());
  Tape tape;
  Var logits = model::lm_forward_t(tape, lm_->cfg, lm_->net, in);
  Var lp = tape.log_softmax_rows(logits);
  const Matrix& all = tape.val(lp);
  Matrix row(1, all.cols);
  for (int v = 0; v < all.cols; ++v) row.at(0, v) = all.at(all.rows - 1, v);
  return row;
}

double StreamingSession::combined(double s_ctc, double s_lst,
                                  double s_lm) const {
  double base;
  switch (cfg_.mode) {
    case ScoreMode::kTransducerOnly: base = s_lst; break;
    case ScoreMode::kCtcOnly: base = s_ctc; break;
    default: base = combine_scores(s_ctc, s_lst, cfg_.beta); break;
  }
  if (lm_ != nullptr && cfg_.lm_weight != 0.0 && !ctc::is_log_zero(base)) {
    base += cfg_.lm_weight * s_lm;
  }
  return base;
}

void StreamingSession::finish_hyp(const Hyp& h) {
  const int total = ctx_.frames;
  double s_ctc_f = 0.0;
  if (cfg_.mode != ScoreMode::kTransducerOnly) {
    ctc::PrefixState state = h.cstate;
    if (state.horizon < total) {
      ctc::grow_horizon(&state, ctx_.ctc_log_probs, total, vocab_.ctc_blank());
    }
    s_ctc_f = ctc::prefix_score_eos(state, total, total);
  }
  double s_lst_f = h.s_lst;
  if (cfg_.mode != ScoreMode::kCtcOnly) {
    Matrix row = transducer_row(*model_, ctx_, h.tokens, total);
    s_lst_f += row.at(0, vocab_.eos());
  }
  double s_lm_f = h.s_lm;
  if (lm_ != nullptr) {
    Matrix row = fusion_row(h.tokens);
    s_lm_f += row.at(0, vocab_.eos());
  }
  DecodedHypothesis out;
  out.tokens = h.tokens;
  out.emissions = h.emissions;
  out.s_lst = s_lst_f;
  out.s_ctc = s_ctc_f;
  out.s_lm = s_lm_f;
  out.combined = combined(s_ctc_f, s_lst_f, s_lm_f);
  finished_.push_back(std::move(out));
}

void StreamingSession::step(int t_next) {
  // The current prefixes become eos candidates for the full horizon.  Once
  // the audio has ended they can be scored right away; mid-stream they wait.
  if (audio_done_) {
    for (const Hyp& h : active_) finish_hyp(h);
  } else {
    for (const Hyp& h : active_) pending_eos_.push_back(h);
  }

  struct Candidate {
    double combined;
    int parent;
    int token;
    double s_lst, s_ctc, s_lm;
  };
  std::vector<Candidate> cands;
  cands.reserve(active_.size() * static_cast<size_t>(vocab_.num_normal));
  std::vector<Matrix> lm_rows(active_.size());
  for (size_t i = 0; i < active_.size(); ++i) {
    Hyp& h = active_[i];
    if (cfg_.mode != ScoreMode::kTransducerOnly &&
        h.cstate.horizon < t_next) {
      ctc::grow_horizon(&h.cstate, ctx_.ctc_log_probs, t_next,
                        vocab_.ctc_blank());
    }
    Matrix row(0, 0);
    if (cfg_.mode != ScoreMode::kCtcOnly) {
      row = transducer_row(*model_, ctx_, h.tokens, t_next);
    }
    if (lm_ != nullptr) lm_rows[i] = fusion_row(h.tokens);
    for (int q = 0; q < vocab_.num_normal; ++q) {
      Candidate c;
      c.parent = static_cast<int>(i);
      c.token = q;
      c.s_lst = h.s_lst + (row.empty() ? 0.0 : row.at(0, q));
      c.s_ctc = (cfg_.mode == ScoreMode::kTransducerOnly)
                    ? 0.0
                    : ctc::prefix_extend_score(h.cstate, q, ctx_.ctc_log_probs,
                                               t_next, vocab_.ctc_blank());
      c.s_lm = h.s_lm + (lm_ != nullptr ? lm_rows[i].at(0, q) : 0.0);
      c.combined = combined(c.s_ctc, c.s_lst, c.s_lm);
      cands.push_back(c);
    }
  }
  std::sort(cands.begin(), cands.end(),
            [this](const Candidate& a, const Candidate& b) {
              if (a.combined != b.combined) return a.combined > b.combined;
              const std::vector<int>& pa = active_[static_cast<size_t>(a.parent)].tokens;
              const std::vector<int>& pb = active_[static_cast<size_t>(b.parent)].tokens;
              if (pa != pb) return tokens_less(pa, pb);
              return a.token < b.token;
            });
  size_t keep = std::min(cands.size(), static_cast<size_t>(cfg_.beam_size));
  std::vector<Hyp> next;
  next.reserve(keep);
  for (size_t i = 0; i < keep; ++i) {
    const Candidate& c = cands[i];
    Hyp child = active_[static_cast<size_t>(c.parent)];
    child.tokens.push_back(c.token);
    child.emissions.push_back(TokenEmission{c.token, t_next});
    child.s_lst = c.s_lst;
    child.s_lm = c.s_lm;
    if (cfg_.mode != ScoreMode::kTransducerOnly) {
      child.cstate = ctc::prefix_extend(child.cstate, c.token,
                                        ctx_.ctc_log_probs, t_next,
                                        vocab_.ctc_blank())
                         .state;
    }
    next.push_back(std::move(child));
  }
  active_ = std::move(next);
  ++steps_;
}

void StreamingSession::advance() {
  while (!active_.empty()) {
    if (max_labels_ >= 0 && steps_ >= max_labels_) {
      capped_ = true;
      break;
    }
    int label_index = steps_ + 1;
    int t_next = align::locate_boundary_cumsum(ctx_.alpha_cum, label_index);
    if (t_next >= ctx_.frames) {
      // No crossing within the finalized frames.  Mid-stream the true
      // boundary lies further right, so wait for more audio; at audio end
      // this is the fallback T_j = T.
      if (!audio_done_) break;
      t_next = ctx_.frames;
    }
    LST_CHECK(t_next >= 1, "label boundary before the first frame");
    step(t_next);
  }
}

void StreamingSession::drain_and_finish() {
  for (const Hyp& h : pending_eos_) finish_hyp(h);
  pending_eos_.clear();
  for (const Hyp& h : active_) finish_hyp(h);

  std::sort(finished_.begin(), finished_.end(),
            [](const DecodedHypothesis& a, const DecodedHypothesis& b) {
              if (a.combined != b.combined) return a.combined > b.combined;
              if (a.tokens.size() != b.tokens.size()) {
                return a.tokens.size() < b.tokens.size();
              }
              return tokens_less(a.tokens, b.tokens);
            });
  result_ = DecodeResult{};
  result_.finished = finished_;
  result_.capped = capped_;
  if (capped_) {
    result_.warning = "label cap reached before every hypothesis emitted eos";
  }
  if (!finished_.empty()) {
    result_.best = finished_.front();
    result_.complete = true;
  } else {
    result_.warning = "no finished hypothesis; returning empty output";
  }
  done_ = true;
}

void StreamingSession::finish() {
  LST_CHECK(!done_, "finish called twice");
  audio_done_ = true;
  if (buffered_.rows == 0) {
    result_ = DecodeResult{};
    result_.complete = false;
    result_.warning = "zero-length audio; empty output";
    done_ = true;
    return;
  }
  refinalize();
  if (max_labels_ < 0) {
    double total = ctx_.alpha_cum.empty() ? 0.0 : ctx_.alpha_cum.back();
    max_labels_ = static_cast<int>(std::ceil(total)) + 5;
  }
  advance();
  drain_and_finish();
}

const DecodeResult& StreamingSession::result() const {
  LST_CHECK(done_, "result requested before finish");
  return result_;
}

DecodeResult decode_offline(model::LsTransducer& m, const Matrix& frames,
                            const DecodeConfig& cfg,
                            model::LmModel* fusion_lm) {
  StreamingSession s(&m, cfg, fusion_lm);
  s.push(frames);
  s.finish();
  return s.result();
}

DecodeResult decode_streaming(model::LsTransducer& m, const Matrix& frames,
                              int chunk_rows, const DecodeConfig& cfg,
                              model::LmModel* fusion_lm) {
  LST_CHECK(chunk_rows >= 1, "chunk_rows must be >= 1");
  StreamingSession s(&m, cfg, fusion_lm);
  for (int start = 0; start < frames.rows; start += chunk_rows) {
    int end = std::min(frames.rows, start + chunk_rows);
    s.push(slice_rows(frames, start, end));
  }
  s.finish();
  return s.result();
}

DecodeResult greedy_decode(model::LsTransducer& m, const Matrix& frames,
                           int max_labels) {
  DecodeResult res;
  if (frames.rows == 0) {
    res.warning = "zero-length audio; empty output";
    return res;
  }
  Tape tape;
  Var enc = model::encode_t(tape, m, frames);
  DecoderContext ctx = make_decoder_context(m, tape.val(enc));
  const Vocabulary vocab = m.cfg.vocab();
  const int total = ctx.frames;
  int cap = max_labels > 0
                ? max_labels
                : static_cast<int>(std::ceil(ctx.alpha_cum.back())) + 5;

  std::vector<int> tokens;
  std::vector<TokenEmission> emissions;
  double s_lst = 0.0;
  bool have_best = false;
  DecodedHypothesis best;

  for (int n = 0;; ++n) {
    // Evaluate the eos completion of the current prefix (optimal stopping).
    Matrix row_t = transducer_row(m, ctx, tokens, total);
    double comp = s_lst + row_t.at(0, vocab.eos());
    if (!have_best || comp > best.combined) {
      best = DecodedHypothesis{};
      best.tokens = tokens;
      best.emissions = emissions;
      best.s_lst = comp;
      best.combined = comp;
      have_best = true;
    }
    if (n >= cap) {
      res.capped = true;
      res.warning = "label cap reached before eos";
      break;
    }
    int t_next = align::locate_boundary_cumsum(ctx.alpha_cum, n + 1);
    LST_CHECK(t_next >= 1 && t_next <= total, "bad label boundary");
    Matrix row = transducer_row(m, ctx, tokens, t_next);
    int q_best = 0;
    for (int q = 1; q < vocab.num_normal; ++q) {
      if (row.at(0, q) > row.at(0, q_best)) q_best = q;
    }
    tokens.push_back(q_best);
    emissions.push_back(TokenEmission{q_best, t_next});
    s_lst += row.at(0, q_best);
  }
  res.best = best;
  res.finished.push_back(best);
  res.complete = true;
  return res;
}

}  // namespace lst::decode
