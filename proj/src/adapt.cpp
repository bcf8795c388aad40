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

#include "lst/adapt.hpp"

#include <cmath>
#include <numeric>

#include "lst/optim.hpp"
#include "lst/rng.hpp"
#include "lst/tape.hpp"

namespace lst::adapt {

namespace {

void validate_texts(const model::ModelConfig& cfg,
                    const std::vector<std::vector<int>>& texts) {
  LST_CHECK(!texts.empty(), "text training set is empty");
  for (const std::vector<int>& t : texts) {
    LST_CHECK(!t.empty(), "empty text utterance");
    for (int q : t) {
      LST_CHECK(q >= 0 && q < cfg.num_normal,
                "text token " + std::to_string(q) +
                    " outside the normal-token range");
    }
  }
}

// Mean per-token cross entropy of one utterance: input [sos, y...], targets
// [y..., eos], both L+1 long.
Var utterance_nll(Tape& tape, const model::ModelConfig& cfg,
                  model::PredictionNet& net, const std::vector<int>& tokens) {
  const Vocabulary vocab = cfg.vocab();
  std::vector<int> in, targets;
  in.reserve(tokens.size() + 1);
  targets.reserve(tokens.size() + 1);
  in.push_back(vocab.eos());  // doubles as the start symbol
  for (int q : tokens) {
    in.push_back(q);
    targets.push_back(q);
  }
  targets.push_back(vocab.eos());
  Var logits = model::lm_forward_t(tape, cfg, net, in);
  return tape.cross_entropy_mean(logits, targets);
}

}  // namespace

TextTrainReport train_text_lm(const model::ModelConfig& cfg,
                              model::PredictionNet& net,
                              const std::vector<std::vector<int>>& texts,
                              const TextTrainConfig& tcfg) {
  validate_texts(cfg, texts);
  LST_CHECK(tcfg.epochs >= 1, "epochs must be >= 1");
  LST_CHECK(tcfg.batch_size >= 1, "batch_size must be >= 1");

  std::vector<Parameter*> params;
  net.collect(&params);
  optim::SgdConfig opt{tcfg.lr, tcfg.clip_norm};
  Rng rng(tcfg.seed);

  std::vector<size_t> order(texts.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TextTrainReport report;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_sum = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(tcfg.batch_size)) {
      size_t end = std::min(order.size(),
                            start + static_cast<size_t>(tcfg.batch_size));
      Tape tape;
      Var sum = tape.constant(Matrix(1, 1, 0.0));
      for (size_t i = start; i < end; ++i) {
        sum = tape.add(sum, utterance_nll(tape, cfg, net, texts[order[i]]));
      }
      Var loss = tape.scale(sum, 1.0 / static_cast<double>(end - start));
      epoch_sum += tape.val(loss).at(0, 0);
      ++batches;
      tape.backward(loss);
      optim::sgd_step(params, opt);
    }
    report.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
  }
  return report;
}

std::vector<Parameter*> frozen_params(model::LsTransducer& m,
                                      int freeze_lower) {
  LST_CHECK(freeze_lower >= 0 &&
                freeze_lower <= static_cast<int>(m.pred.blocks.size()),
            "freeze_lower out of range");
  std::vector<Parameter*> out;
  if (freeze_lower > 0) {
    out.push_back(&m.pred.embed);
    for (int b = 0; b < freeze_lower; ++b) m.pred.blocks[static_cast<size_t>(b)].collect(&out);
  }
  return out;
}

TextTrainReport adapt_prediction(model::LsTransducer& m,
                                 const std::vector<std::vector<int>>& texts,
                                 const AdaptPlan& plan) {
  std::vector<Parameter*> frozen = frozen_params(m, plan.freeze_lower);
  std::vector<bool> saved;
  saved.reserve(frozen.size());
  for (Parameter* p : frozen) {
    saved.push_back(p->trainable);
    p->trainable = false;
  }
  TextTrainReport report;
  try {
    report = train_text_lm(m.cfg, m.pred, texts, plan.train);
  } catch (...) {
    for (size_t i = 0; i < frozen.size(); ++i) frozen[i]->trainable = saved[i];
    throw;
  }
  for (size_t i = 0; i < frozen.size(); ++i) frozen[i]->trainable = saved[i];
  return report;
}

double lm_perplexity(const model::ModelConfig& cfg, model::PredictionNet& net,
                     const std::vector<std::vector<int>>& texts) {
  validate_texts(cfg, texts);
  const Vocabulary vocab = cfg.vocab();
  double nll = 0.0;
  long long events = 0;
  for (const std::vector<int>& tokens : texts) {
    std::vector<int> in;
    in.reserve(tokens.size() + 1);
    in.push_back(vocab.eos());
    in.insert(in.end(), tokens.begin(), tokens.end());
    Tape tape;
    Var logits = model::lm_forward_t(tape, cfg, net, in);
    Var lp = tape.log_softmax_rows(logits);
    const Matrix& rows = tape.val(lp);
    for (size_t i = 0; i < tokens.size(); ++i) {
      nll -= rows.at(static_cast<int>(i), tokens[i]);
    }
    nll -= rows.at(static_cast<int>(tokens.size()), vocab.eos());
    events += static_cast<long long>(tokens.size()) + 1;
  }
  return std::exp(nll / static_cast<double>(events));
}

}  // namespace lst::adapt
