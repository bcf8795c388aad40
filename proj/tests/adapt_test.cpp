// Tests for text-only training of the prediction branch: LM pretraining,
// perplexity accounting, domain adaptation with frozen lower layers, and
// transplanting a pretrained LM into the transducer.

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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>
#include <vector>

#include "lst/adapt.hpp"
#include "lst/matrix.hpp"
#include "lst/model.hpp"
#include "lst/rng.hpp"
#include "lst/tape.hpp"

namespace {

lst::model::ModelConfig tiny_config(int num_normal = 5, uint64_t seed = 11) {
  lst::model::ModelConfig mc;
  mc.input_dim = 3;
  mc.d_model = 8;
  mc.enc_layers = 1;
  mc.pred_layers = 2;
  mc.tap_layer = 1;
  mc.ffn_hidden = 10;
  mc.num_normal = num_normal;
  mc.chunk_size = 3;
  mc.init_seed = seed;
  mc.validate();
  return mc;
}

std::vector<std::vector<int>> random_texts(lst::Rng& rng, int n, int num_normal,
                                           int max_len) {
  std::vector<std::vector<int>> texts;
  for (int i = 0; i < n; ++i) {
    int len = rng.uniform_int(1, max_len);
    std::vector<int> t;
    for (int j = 0; j < len; ++j) t.push_back(rng.uniform_int(0, num_normal - 1));
    texts.push_back(t);
  }
  return texts;
}

std::vector<lst::Matrix> snapshot(const std::vector<lst::Parameter*>& ps) {
  std::vector<lst::Matrix> out;
  for (const lst::Parameter* p : ps) out.push_back(p->value);
  return out;
}

bool bitwise_equal(const lst::Matrix& a, const lst::Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols) return false;
  return std::memcmp(a.data.data(), b.data.data(),
                     a.data.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("LM pretraining reduces training loss and held-in perplexity") {
  lst::model::ModelConfig mc = tiny_config();
  lst::model::LmModel lm = lst::model::LmModel::init(mc, 5);
  lst::Rng rng(41);
  std::vector<std::vector<int>> texts = random_texts(rng, 24, mc.num_normal, 6);

  double ppl0 = lst::adapt::lm_perplexity(lm, texts);
  CHECK(ppl0 > 1.0);

  lst::adapt::TextTrainConfig tcfg;
  tcfg.epochs = 6;
  tcfg.lr = 0.15;
  tcfg.batch_size = 8;
  tcfg.seed = 3;
  lst::adapt::TextTrainReport report = lst::adapt::pretrain_lm(lm, texts, tcfg);
  REQUIRE(report.epoch_loss.size() == 6);
  for (double l : report.epoch_loss) CHECK(l > 0.0);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());
  CHECK(lst::adapt::lm_perplexity(lm, texts) < ppl0);
}

TEST_CASE("perplexity is exp of the pooled mean cross entropy") {
  lst::model::ModelConfig mc = tiny_config(4, 17);
  lst::model::LmModel lm = lst::model::LmModel::init(mc, 9);
  lst::Rng rng(42);
  std::vector<std::vector<int>> texts = random_texts(rng, 7, mc.num_normal, 5);
  const lst::Vocabulary vocab = mc.vocab();

  double nll = 0.0;
  long long events = 0;
  for (const std::vector<int>& t : texts) {
    std::vector<int> in;
    in.push_back(vocab.eos());
    in.insert(in.end(), t.begin(), t.end());
    lst::Tape tape;
    lst::Matrix rows = lst::log_softmax_rows(
        tape.val(lst::model::lm_forward_t(tape, mc, lm.net, in)));
    for (size_t i = 0; i < t.size(); ++i) nll -= rows.at(static_cast<int>(i), t[i]);
    nll -= rows.at(static_cast<int>(t.size()), vocab.eos());
    events += static_cast<long long>(t.size()) + 1;
  }
  double want = std::exp(nll / static_cast<double>(events));
  double got = lst::adapt::lm_perplexity(lm, texts);
  CHECK(std::fabs(got - want) <= 1e-12 * want);
}

TEST_CASE("a deterministic alternating corpus is memorized") {
  lst::model::ModelConfig mc = tiny_config(4, 23);
  lst::model::LmModel lm = lst::model::LmModel::init(mc, 13);
  std::vector<int> pattern = {0, 1, 0, 1, 0, 1};
  std::vector<std::vector<int>> texts(8, pattern);

  lst::adapt::TextTrainConfig tcfg;
  tcfg.epochs = 40;
  tcfg.lr = 0.25;
  tcfg.batch_size = 4;
  tcfg.seed = 7;
  lst::adapt::pretrain_lm(lm, texts, tcfg);

  const lst::Vocabulary vocab = mc.vocab();
  std::vector<int> in;
  in.push_back(vocab.eos());
  in.insert(in.end(), pattern.begin(), pattern.end());
  lst::Tape tape;
  lst::Matrix rows =
      tape.val(lst::model::lm_forward_t(tape, mc, lm.net, in));
  std::vector<int> expected = pattern;
  expected.push_back(vocab.eos());
  for (size_t i = 0; i < expected.size(); ++i) {
    int argmax = 0;
    for (int v = 1; v < rows.cols; ++v) {
      if (rows.at(static_cast<int>(i), v) > rows.at(static_cast<int>(i), argmax)) {
        argmax = v;
      }
    }
    CHECK(argmax == expected[i]);
  }
  CHECK(lst::adapt::lm_perplexity(lm, texts) < 1.3);
}

TEST_CASE("adaptation trains only the unfrozen prediction parameters") {
  lst::model::ModelConfig mc = tiny_config();
  lst::model::LsTransducer m = lst::model::LsTransducer::init(mc);
  lst::Rng rng(43);
  std::vector<std::vector<int>> texts = random_texts(rng, 16, mc.num_normal, 6);

  // Partition the parameters: frozen (embedding + lower blocks), the rest of
  // the prediction branch, and everything outside the prediction branch.
  lst::adapt::AdaptPlan plan;
  plan.freeze_lower = 1;
  plan.train.epochs = 4;
  plan.train.lr = 0.12;
  plan.train.batch_size = 4;
  plan.train.seed = 9;

  std::vector<lst::Parameter*> frozen = lst::adapt::frozen_params(m, 1);
  REQUIRE(!frozen.empty());
  std::set<const lst::Parameter*> in_pred;
  for (lst::Parameter* p : m.prediction_params()) in_pred.insert(p);
  for (lst::Parameter* p : frozen) CHECK(in_pred.count(p) == 1);

  std::vector<lst::Parameter*> outside;
  for (lst::Parameter* p : m.all_params()) {
    if (in_pred.count(p) == 0) outside.push_back(p);
  }
  REQUIRE(!outside.empty());

  std::set<const lst::Parameter*> frozen_set(frozen.begin(), frozen.end());
  std::vector<lst::Parameter*> unfrozen_pred;
  for (lst::Parameter* p : m.prediction_params()) {
    if (frozen_set.count(p) == 0) unfrozen_pred.push_back(p);
  }
  REQUIRE(!unfrozen_pred.empty());

  std::vector<lst::Matrix> frozen_before = snapshot(frozen);
  std::vector<lst::Matrix> outside_before = snapshot(outside);
  std::vector<lst::Matrix> unfrozen_before = snapshot(unfrozen_pred);
  double ppl_before = lst::adapt::prediction_perplexity(m, texts);

  lst::adapt::TextTrainReport report = lst::adapt::adapt_prediction(m, texts, plan);
  REQUIRE(report.epoch_loss.size() == 4);

  for (size_t i = 0; i < frozen.size(); ++i) {
    CHECK(bitwise_equal(frozen[i]->value, frozen_before[i]));
  }
  for (size_t i = 0; i < outside.size(); ++i) {
    CHECK(bitwise_equal(outside[i]->value, outside_before[i]));
  }
  for (lst::Parameter* p : m.all_params()) CHECK(p->trainable);
  CHECK(lst::adapt::prediction_perplexity(m, texts) < ppl_before);

  // Something must actually have moved: the upper block or the output head.
  bool moved = false;
  for (size_t i = 0; i < unfrozen_pred.size(); ++i) {
    if (!bitwise_equal(unfrozen_pred[i]->value, unfrozen_before[i])) moved = true;
  }
  CHECK(moved);
}

TEST_CASE("the freeze plan covers exactly the embedding and lower blocks") {
  lst::model::ModelConfig mc = tiny_config();
  lst::model::LsTransducer m = lst::model::LsTransducer::init(mc);
  CHECK(lst::adapt::frozen_params(m, 0).empty());

  std::vector<lst::Parameter*> one = lst::adapt::frozen_params(m, 1);
  std::vector<lst::Parameter*> two = lst::adapt::frozen_params(m, 2);
  CHECK(one.size() > 1);             // embedding plus a block's tensors
  CHECK(two.size() > one.size());    // one more block
  CHECK(one.front() == &m.pred.embed);
  // The output head is never frozen: adaptation must be able to move it.
  for (lst::Parameter* p : two) {
    CHECK(p != &m.pred.out_w);
    CHECK(p != &m.pred.out_b);
  }
  CHECK_THROWS_AS((void)lst::adapt::frozen_params(m, mc.pred_layers + 1),
                  lst::Error);
}

TEST_CASE("a pretrained LM transplants bitwise into the prediction branch") {
  lst::model::ModelConfig mc = tiny_config(6, 29);
  lst::model::LsTransducer m = lst::model::LsTransducer::init(mc);
  lst::model::LmModel lm = lst::model::LmModel::init(mc, 31);
  lst::Rng rng(44);
  std::vector<std::vector<int>> texts = random_texts(rng, 10, mc.num_normal, 5);

  lst::adapt::TextTrainConfig tcfg;
  tcfg.epochs = 2;
  tcfg.lr = 0.1;
  tcfg.batch_size = 4;
  lst::adapt::pretrain_lm(lm, texts, tcfg);

  lst::model::load_lm_into_model(&m, lm);
  std::vector<lst::Parameter*> dst = m.prediction_params();
  std::vector<lst::Parameter*> src = lm.params();
  REQUIRE(dst.size() == src.size());
  for (size_t i = 0; i < dst.size(); ++i) {
    CHECK(bitwise_equal(dst[i]->value, src[i]->value));
  }
  CHECK(lst::adapt::prediction_perplexity(m, texts) ==
        lst::adapt::lm_perplexity(lm, texts));
}

TEST_CASE("invalid text corpora are rejected") {
  lst::model::ModelConfig mc = tiny_config();
  lst::model::LmModel lm = lst::model::LmModel::init(mc, 3);
  lst::adapt::TextTrainConfig tcfg;
  tcfg.epochs = 1;

  std::vector<std::vector<int>> empty;
  CHECK_THROWS_AS((void)lst::adapt::pretrain_lm(lm, empty, tcfg), lst::Error);

  std::vector<std::vector<int>> bad = {{0, mc.num_normal}};
  CHECK_THROWS_AS((void)lst::adapt::pretrain_lm(lm, bad, tcfg), lst::Error);
  CHECK_THROWS_AS((void)lst::adapt::lm_perplexity(lm, bad), lst::Error);

  std::vector<std::vector<int>> negative = {{-1}};
  CHECK_THROWS_AS((void)lst::adapt::pretrain_lm(lm, negative, tcfg), lst::Error);

  lst::model::LsTransducer m = lst::model::LsTransducer::init(mc);
  lst::adapt::AdaptPlan plan;
  plan.train.epochs = 1;
  CHECK_THROWS_AS((void)lst::adapt::adapt_prediction(m, empty, plan), lst::Error);
  for (lst::Parameter* p : m.all_params()) CHECK(p->trainable);
}
