// lst/decoder.hpp
//
// Label-synchronous joint beam search.
//
// The beam advances one label at a time.  For step n+1 the alignment
// boundary T_{n+1} is located on the accumulated fire weights; every active
// hypothesis is scored for every normal-token extension at exactly that
// frame horizon, by both the transducer chain score and the incremental CTC
// prefix score, combined as beta * s_ctc + (1 - beta) * s_lst.  eos is
// handled by the streaming rule: it can only be scored once the full audio
// has arrived (its CTC score is the -inf sentinel earlier), so finished
// hypotheses never occupy beam slots and the active-beam trajectory is
// identical whether audio arrives chunk by chunk or all at once.

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
#include <vector>

#include "lst/ctc.hpp"
#include "lst/matrix.hpp"
#include "lst/model.hpp"

namespace lst::decode {

// Score composition variants.  The non-default modes exist to verify the
// beta boundaries: kTransducerOnly ranks by s_lst and never touches the CTC
// machinery; kCtcOnly ranks by s_ctc and never evaluates the transducer.
enum class ScoreMode { kCombined, kTransducerOnly, kCtcOnly };

struct DecodeConfig {
  double beta = 0.3;      // CTC weight in the combined score
  int beam_size = 10;
  double lm_weight = 0.0; // shallow-fusion weight
  int max_labels = 0;     // 0: derived as ceil(sum alpha) + 5 at audio end
  ScoreMode mode = ScoreMode::kCombined;

  void validate() const;
};

// S = beta * s_ctc + (1 - beta) * s_lst.  At the exact boundaries the
// zero-weight component is ignored entirely (so a -inf sentinel there cannot
// leak in); otherwise any sentinel input yields the sentinel.
double combine_scores(double s_ctc, double s_lst, double beta);

struct TokenEmission {
  int token = -1;
  int boundary = 0;  // T_i, 1-based frame count at emission
};

struct DecodedHypothesis {
  std::vector<int> tokens;  // normal tokens only (no sos/eos)
  std::vector<TokenEmission> emissions;
  double s_lst = 0.0;
  double s_ctc = 0.0;  // complete-sequence CTC score (eos rule)
  double s_lm = 0.0;   // fusion LM chain score (unweighted)
  double combined = 0.0;
};

struct DecodeResult {
  DecodedHypothesis best;
  std::vector<DecodedHypothesis> finished;  // sorted best-first
  bool complete = false;  // best hypothesis ended via eos
  bool capped = false;    // the label cap stopped the beam
  std::string warning;
};

// Per-utterance immutable artifacts over the finalized frames.
struct DecoderContext {
  Matrix content;        // T x d_model
  Matrix keys, values;   // FC-mapped frames
  Matrix ctc_log_probs;  // T x (U+1)
  std::vector<double> alpha;
  std::vector<double> alpha_cum;  // inclusive cumulative sum
  int frames = 0;
};

// Builds the context from an encoder output matrix (T x (d_model + 1)).
DecoderContext make_decoder_context(const model::LsTransducer& m,
                                    const Matrix& encoder_out);

struct StepOutput {
  Matrix log_probs;  // 1 x V log-softmax row
  int boundary = 0;  // horizon the row was evaluated at
};

// Next-label distribution for `prefix`, evaluated at the AIF boundary of
// label |prefix|+1 (falling back to all context frames when the accumulated
// weight never exceeds the label index).  The model reference is non-const
// because the forward pass is built through the shared autodiff graph code;
// decoding never runs backward, so parameters and gradients are untouched.
StepOutput transducer_step(model::LsTransducer& m, const DecoderContext& ctx,
                           const std::vector<int>& prefix);

// Same distribution at an explicit horizon (used for eos at the full
// horizon).  t_h must be in [1, ctx.frames].
Matrix transducer_row(model::LsTransducer& m, const DecoderContext& ctx,
                      const std::vector<int>& prefix, int t_h);

class StreamingSession {
 public:
  // `fusion_lm` may be null; when given, its vocabulary must match.
  StreamingSession(model::LsTransducer* m, const DecodeConfig& cfg,
                   model::LmModel* fusion_lm = nullptr);

  // Feed any number of frame rows (possibly zero).
  void push(const Matrix& frames);
  // Declare the audio finished and drain the beam.
  void finish();
  bool done() const { return done_; }
  const DecodeResult& result() const;

 private:
  struct Hyp {
    std::vector<int> tokens;
    std::vector<TokenEmission> emissions;
    double s_lst = 0.0;
    double s_lm = 0.0;
    ctc::PrefixState cstate;
  };

  model::LsTransducer* model_;
  model::LmModel* lm_;
  DecodeConfig cfg_;
  Vocabulary vocab_;

  Matrix buffered_;  // every frame received so far
  int finalized_ = 0;
  bool audio_done_ = false;
  bool done_ = false;
  int max_labels_ = -1;  // resolved cap (at audio end for the derived rule)

  DecoderContext ctx_;  // over the finalized prefix

  std::vector<Hyp> active_;
  std::vector<Hyp> pending_eos_;  // prefixes awaiting the full horizon
  std::vector<DecodedHypothesis> finished_;
  int steps_ = 0;
  bool capped_ = false;
  DecodeResult result_;

  void refinalize();
  void advance();
  void step(int t_next);
  void finish_hyp(const Hyp& h);
  double combined(double s_ctc, double s_lst, double s_lm) const;
  Matrix fusion_row(const std::vector<int>& prefix) const;
  void drain_and_finish();
};

// Whole-utterance decode: one push + finish.
DecodeResult decode_offline(model::LsTransducer& m, const Matrix& frames,
                            const DecodeConfig& cfg,
                            model::LmModel* fusion_lm = nullptr);

// Streaming decode feeding `chunk_rows` frames at a time.
DecodeResult decode_streaming(model::LsTransducer& m, const Matrix& frames,
                              int chunk_rows, const DecodeConfig& cfg,
                              model::LmModel* fusion_lm = nullptr);

// Independent greedy decoder (transducer score only): follows the argmax
// extension at every step and returns the best eos completion seen along
// that path.  Used to cross-check beam_size = 1 at beta = 0.
DecodeResult greedy_decode(model::LsTransducer& m, const Matrix& frames,
                           int max_labels = 0);

}  // namespace lst::decode
