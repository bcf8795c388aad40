// lst/adapt.hpp
//
// Text-only training of the prediction network.
//
// The prediction network doubles as a causal LM (the output head is shared
// with the joint), so target-domain text can train it directly without any
// audio: LM pretraining builds a standalone LM, and domain adaptation
// fine-tunes the transducer's prediction branch on new text while the
// embedding and the lower blocks stay frozen to protect the acoustic
// coupling learned during joint training.

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
#include <vector>

#include "lst/model.hpp"

namespace lst::adapt {

struct TextTrainConfig {
  int epochs = 10;
  double lr = 0.1;
  int batch_size = 8;
  double clip_norm = 5.0;
  uint64_t seed = 1;  // epoch shuffling
};

struct TextTrainReport {
  std::vector<double> epoch_loss;  // mean per-token cross entropy per epoch
};

// Trains `net` as a causal LM on token sequences (normal tokens only; the
// model conditions on a leading start symbol and predicts through eos).
// An empty text list or an out-of-range token is an error.
TextTrainReport train_text_lm(const model::ModelConfig& cfg,
                              model::PredictionNet& net,
                              const std::vector<std::vector<int>>& texts,
                              const TextTrainConfig& tcfg);

inline TextTrainReport pretrain_lm(model::LmModel& lm,
                                   const std::vector<std::vector<int>>& texts,
                                   const TextTrainConfig& tcfg) {
  return train_text_lm(lm.cfg, lm.net, texts, tcfg);
}

struct AdaptPlan {
  // Blocks [0, freeze_lower) of the prediction network stay frozen, and the
  // token embedding is frozen along with them whenever freeze_lower > 0.
  int freeze_lower = 2;
  TextTrainConfig train;
};

// Parameters the plan freezes (embedding + lower blocks).  Exposed so tests
// and tools can snapshot/compare the frozen tensors.
std::vector<Parameter*> frozen_params(model::LsTransducer& m,
                                      int freeze_lower);

// Fine-tunes the transducer's prediction branch on text.  Frozen parameters
// receive no updates; their trainable flags are restored afterwards.
TextTrainReport adapt_prediction(model::LsTransducer& m,
                                 const std::vector<std::vector<int>>& texts,
                                 const AdaptPlan& plan);

// exp(mean negative log-likelihood per token), eos included: an utterance of
// L tokens contributes L+1 prediction events.
double lm_perplexity(const model::ModelConfig& cfg, model::PredictionNet& net,
                     const std::vector<std::vector<int>>& texts);

inline double lm_perplexity(model::LmModel& lm,
                            const std::vector<std::vector<int>>& texts) {
  return lm_perplexity(lm.cfg, lm.net, texts);
}

// Perplexity of the transducer's internal LM (its prediction branch).
inline double prediction_perplexity(model::LsTransducer& m,
                                    const std::vector<std::vector<int>>& texts) {
  return lm_perplexity(m.cfg, m.pred, texts);
}

}  // namespace lst::adapt
