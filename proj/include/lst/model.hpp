// lst/model.hpp
//
// The transducer model: a chunked-causal transformer encoder whose last
// output channel drives fire weights, a causal transformer prediction
// network with an intermediate tap (the attention queries), an FC pair for
// alignment keys/values, a CTC head on the encoder, and an additive joint
// over prediction logits and label-encoding logits.  Training combines
// CE over the joint output, CTC over the encoder, and the quantity loss:
//
//   l_all = gamma * l_ctc + (1 - gamma) * l_ce + mu * l_qua * L
//
// All forward math is built on a Tape; decoding uses the same builders on
// throwaway tapes and never calls backward.

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

#include <cstdint>
#include <string>
#include <vector>

#include "lst/matrix.hpp"
#include "lst/tape.hpp"
#include "lst/vocab.hpp"

namespace lst::model {

struct ModelConfig {
  int input_dim = 8;     // synthetic feature channels
  int d_model = 32;      // content width d' (encoder emits d_model + 1)
  int enc_layers = 2;
  int pred_layers = 4;
  int tap_layer = 2;     // 1-based prediction layer whose output is the query
  int ffn_hidden = 64;
  int num_normal = 25;   // U
  int chunk_size = 4;    // encoder streaming granularity, frames
  double gamma = 0.5;    // CTC weight in the composite loss
  double mu = 0.05;      // quantity-loss weight
  bool aif_separate_kv = false;  // separate key/value projections (ablation)
  uint64_t init_seed = 1;

  int d() const { return d_model + 1; }  // encoder output width
  Vocabulary vocab() const { return Vocabulary(num_normal); }
  void validate() const;
};

// One pre-LN self-attention + feed-forward block.
struct BlockParams {
  Parameter ln1_g, ln1_b;
  Parameter wq, bq, wk, bk, wv, bv, wo, bo;
  Parameter ln2_g, ln2_b;
  Parameter w1, b1, w2, b2;

  void collect(std::vector<Parameter*>* out);
};

// The prediction network doubles as a standalone causal LM (shared output
// head), so it is its own sub-structure: LM pretraining, adaptation, and
// shallow fusion all operate on a PredictionNet.
struct PredictionNet {
  Parameter embed;  // V x d_model
  std::vector<BlockParams> blocks;
  Parameter out_w, out_b;  // d_model -> V, tied LM/joint output head

  void collect(std::vector<Parameter*>* out);
};

struct LsTransducer {
  ModelConfig cfg;

  Parameter enc_in_w, enc_in_b;  // input_dim -> d_model
  std::vector<BlockParams> enc_blocks;
  Parameter enc_out_w, enc_out_b;  // d_model -> d_model + 1
  Parameter ctc_w, ctc_b;          // d_model -> U + 1 (blank last)
  PredictionNet pred;
  Parameter aif_key_w, aif_key_b;  // d_model -> d_model
  Parameter aif_val_w, aif_val_b;  // used when cfg.aif_separate_kv
  Parameter joint_w, joint_b;      // d_model -> V

  static LsTransducer init(const ModelConfig& cfg);

  std::vector<Parameter*> all_params();
  std::vector<Parameter*> prediction_params();  // embed + blocks + output head
  Vocabulary vocab() const { return cfg.vocab(); }
};

// Standalone LM = prediction-network shape with its own weights.
struct LmModel {
  ModelConfig cfg;  // only the prediction-side fields are meaningful
  PredictionNet net;

  static LmModel init(const ModelConfig& cfg, uint64_t seed);
  std::vector<Parameter*> params();
  Vocabulary vocab() const { return cfg.vocab(); }
};

// ---- mask / encoding helpers ----

// allow(t, s) = 1 iff frame s lies in a chunk no later than frame t's chunk:
// rows may see their whole own chunk (bounded lookahead) and everything
// before it.
Matrix chunk_allow_mask(int frames, int chunk_size);
// allow(j, i) = 1 iff i <= j.
Matrix causal_allow_mask(int rows);
Matrix positional_encoding(int rows, int d_model);

// ---- graph builders ----

// frames: T x input_dim -> T x (d_model + 1).  Appending future chunks never
// changes rows of already-complete chunks.
Var encode_t(Tape& tape, LsTransducer& m, const Matrix& frames);

struct PredOut {
  Var tap;     // L x d_model, output of block cfg.tap_layer (the queries)
  Var logits;  // L x V
};

// Shared by the transducer prediction branch and standalone LMs.
PredOut prediction_forward_t(Tape& tape, const ModelConfig& cfg,
                             PredictionNet& net,
                             const std::vector<int>& in_tokens);

// Prediction branch of the transducer (input must already carry the leading
// sos).
PredOut predict_t(Tape& tape, LsTransducer& m,
                  const std::vector<int>& in_tokens);

// Additive joint: FC(label_encoding) + pred_logits, L x V.
Var joint_t(Tape& tape, LsTransducer& m, Var label_encoding, Var pred_logits);

// Causal LM logits (used for pretraining/adaptation/fusion/perplexity).
Var lm_forward_t(Tape& tape, const ModelConfig& cfg, PredictionNet& net,
                 const std::vector<int>& in_tokens);

// ---- training forward ----

// Borrowed views into an utterance: normal-token targets + feature frames.
struct TrainExample {
  const std::vector<int>* tokens = nullptr;
  const Matrix* frames = nullptr;
};

struct LossBundle {
  double l_ctc = 0.0;
  double l_ce = 0.0;
  double l_qua = 0.0;
  // l_qua * L as computed on the graph (for a batch: the mean of per-
  // utterance products).
  double qua_term = 0.0;
  int target_len = 0;  // 0 for batch-level bundles
  double gamma = 0.0;
  double mu = 0.0;
  double l_all = 0.0;

  // Recomposes l_all from the stored components with the exact operation
  // order used on the graph; the identity l_all == compose() is exact.
  double compose() const {
    return (gamma * l_ctc + (1.0 - gamma) * l_ce) + mu * qua_term;
  }
};

struct TrainingForward {
  Var loss;                         // batch-mean composite loss
  LossBundle batch;                 // components read off the graph
  std::vector<LossBundle> per_utt;  // per-utterance components
  std::vector<std::vector<int>> boundaries;  // per utt: T_1..T_L, then T for eos
};

// Builds the full training graph for a batch.  Empty targets or empty frame
// matrices are errors.
TrainingForward forward_training(Tape& tape, LsTransducer& m,
                                 const std::vector<TrainExample>& batch,
                                 double gamma, double mu);

// ---- checkpoints ----

// Versioned container: text manifest (format line, config key-values, tensor
// names + shapes) followed by raw little-endian doubles in manifest order.
// Round-trips byte-exactly.
void save_model(const std::string& path, const LsTransducer& m);
LsTransducer load_model(const std::string& path);
void save_lm(const std::string& path, const LmModel& lm);
LmModel load_lm(const std::string& path);

// Copies LM weights into the transducer's prediction network.
// Dimensions/vocabulary must match exactly.
void load_lm_into_model(LsTransducer* m, const LmModel& lm);

}  // namespace lst::model
