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

#include "lst/train.hpp"

#include <numeric>

#include "lst/optim.hpp"
#include "lst/rng.hpp"
#include "lst/tape.hpp"

namespace lst::train {

namespace {

std::vector<model::TrainExample> make_batch(
    const std::vector<corpus::SyntheticUtterance>& data,
    const std::vector<size_t>& order, size_t start, size_t end) {
  std::vector<model::TrainExample> batch;
  batch.reserve(end - start);
  for (size_t i = start; i < end; ++i) {
    const corpus::SyntheticUtterance& u = data[order[i]];
    batch.push_back(model::TrainExample{&u.tokens, &u.frames});
  }
  return batch;
}

}  // namespace

TrainReport train_asr(model::LsTransducer& m,
                      const std::vector<corpus::SyntheticUtterance>& data,
                      const TrainConfig& cfg) {
  LST_CHECK(!data.empty(), "training corpus is empty");
  LST_CHECK(cfg.epochs >= 1, "epochs must be >= 1");
  LST_CHECK(cfg.batch_size >= 1, "batch_size must be >= 1");
  std::vector<Parameter*> params = m.all_params();
  optim::SgdConfig opt{cfg.lr, cfg.clip_norm};
  Rng rng(cfg.seed);

  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainReport report;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    EpochStats st;
    int steps = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      size_t end =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<model::TrainExample> batch =
          make_batch(data, order, start, end);
      Tape tape;
      model::TrainingForward fwd =
          model::forward_training(tape, m, batch, m.cfg.gamma, m.cfg.mu);
      tape.backward(fwd.loss);
      optim::SgdStepInfo info = optim::sgd_step(params, opt);
      st.l_all += fwd.batch.l_all;
      st.l_ctc += fwd.batch.l_ctc;
      st.l_ce += fwd.batch.l_ce;
      st.l_qua += fwd.batch.l_qua;
      st.grad_norm += info.grad_norm;
      ++steps;
    }
    st.l_all /= steps;
    st.l_ctc /= steps;
    st.l_ce /= steps;
    st.l_qua /= steps;
    st.grad_norm /= steps;
    report.epochs.push_back(st);
  }
  return report;
}

model::LossBundle eval_loss(model::LsTransducer& m,
                            const std::vector<corpus::SyntheticUtterance>& data,
                            int batch_size) {
  LST_CHECK(!data.empty(), "evaluation corpus is empty");
  LST_CHECK(batch_size >= 1, "batch_size must be >= 1");
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  model::LossBundle total;
  total.gamma = m.cfg.gamma;
  total.mu = m.cfg.mu;
  long long utts = 0;
  for (size_t start = 0; start < order.size();
       start += static_cast<size_t>(batch_size)) {
    size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
    std::vector<model::TrainExample> batch = make_batch(data, order, start, end);
    Tape tape;
    model::TrainingForward fwd =
        model::forward_training(tape, m, batch, m.cfg.gamma, m.cfg.mu);
    for (const model::LossBundle& b : fwd.per_utt) {
      total.l_ctc += b.l_ctc;
      total.l_ce += b.l_ce;
      total.l_qua += b.l_qua;
      total.qua_term += b.qua_term;
      ++utts;
    }
  }
  total.l_ctc /= static_cast<double>(utts);
  total.l_ce /= static_cast<double>(utts);
  total.l_qua /= static_cast<double>(utts);
  total.qua_term /= static_cast<double>(utts);
  total.l_all = total.compose();
  return total;
}

}  // namespace lst::train
