// lst/train.hpp
//
// Mini-batch training loop for the transducer: composite loss (CTC branch +
// label-level CE + quantity regularizer) with SGD and global-norm clipping.

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

#include "lst/corpus.hpp"
#include "lst/model.hpp"

namespace lst::train {

struct TrainConfig {
  int epochs = 12;
  double lr = 0.1;
  int batch_size = 8;
  double clip_norm = 5.0;
  uint64_t seed = 1;  // epoch shuffling
};

struct EpochStats {
  double l_all = 0.0;
  double l_ctc = 0.0;
  double l_ce = 0.0;
  double l_qua = 0.0;
  double grad_norm = 0.0;  // mean pre-clip norm over the epoch's steps
};

struct TrainReport {
  std::vector<EpochStats> epochs;
};

// Trains in place.  Loss weights come from m.cfg (gamma, mu).  Empty corpus
// is an error.
TrainReport train_asr(model::LsTransducer& m,
                      const std::vector<corpus::SyntheticUtterance>& data,
                      const TrainConfig& cfg);

// Mean composite loss over a dataset without updating anything (evaluation).
model::LossBundle eval_loss(model::LsTransducer& m,
                            const std::vector<corpus::SyntheticUtterance>& data,
                            int batch_size = 8);

}  // namespace lst::train
