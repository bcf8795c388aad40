// Tests for the label-synchronous joint beam search: score combination
// boundaries, streaming/offline bit-identity, greedy equivalence at beam 1,
// exhaustive-search agreement on tiny instances, shallow fusion, and the
// safety cap.

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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "lst/align.hpp"
#include "lst/ctc.hpp"
#include "lst/decoder.hpp"
#include "lst/matrix.hpp"
#include "lst/model.hpp"
#include "lst/rng.hpp"

namespace {

lst::model::ModelConfig tiny_config(int num_normal = 5, uint64_t seed = 3) {
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

lst::Matrix random_frames(lst::Rng& rng, int t, int dim) {
  lst::Matrix m(t, dim);
  for (double& x : m.data) x = rng.normal();
  return m;
}

bool hyp_equal(const lst::decode::DecodedHypothesis& a,
               const lst::decode::DecodedHypothesis& b) {
  if (a.tokens != b.tokens) return false;
  if (a.emissions.size() != b.emissions.size()) return false;
  for (size_t i = 0; i < a.emissions.size(); ++i) {
    if (a.emissions[i].token != b.emissions[i].token) return false;
    if (a.emissions[i].boundary != b.emissions[i].boundary) return false;
  }
  return a.s_lst == b.s_lst && a.s_ctc == b.s_ctc && a.s_lm == b.s_lm &&
         a.combined == b.combined;
}

}  // namespace

TEST_CASE("score combination") {
  using lst::decode::combine_scores;
  const double z = lst::ctc::kLogZero;
  CHECK(std::fabs(combine_scores(-2.0, -1.0, 0.3) - (-1.3)) <= 1e-15);

  // At the boundaries the zero-weight component is ignored entirely, so a
  // sentinel there cannot leak into the ranking.
  CHECK(combine_scores(z, -1.0, 0.0) == -1.0);
  CHECK(combine_scores(-2.0, z, 1.0) == -2.0);

  // Strictly inside (0,1), a sentinel on either side dominates.
  CHECK(lst::ctc::is_log_zero(combine_scores(z, -1.0, 0.5)));
  CHECK(lst::ctc::is_log_zero(combine_scores(-1.0, z, 0.5)));

  lst::decode::DecodeConfig bad;
  bad.beta = 1.5;
  CHECK_THROWS_AS(bad.validate(), lst::Error);
  bad.beta = -0.1;
  CHECK_THROWS_AS(bad.validate(), lst::Error);
  bad = {};
  bad.beam_size = 0;
  CHECK_THROWS_AS(bad.validate(), lst::Error);
  bad = {};
  bad.lm_weight = -0.2;
  CHECK_THROWS_AS(bad.validate(), lst::Error);
}

TEST_CASE("transducer step is a pure function of the prefix") {
  lst::model::LsTransducer m = lst::model::LsTransducer::init(tiny_config());
  lst::Rng rng(71);
  lst::Matrix frames = random_frames(rng, 9, m.cfg.input_dim);
  lst::Tape tape;
  lst::decode::DecoderContext ctx = lst::decode::make_decoder_context(
      m, tape.val(lst::model::encode_t(tape, m, frames)));

  std::vector<int> prefix = {1, 4};
  lst::decode::StepOutput a = lst::decode::transducer_step(m, ctx, prefix);
  lst::decode::StepOutput b = lst::decode::transducer_step(m, ctx, prefix);
  CHECK(a.boundary == b.boundary);
  REQUIRE(a.log_probs.size() == b.log_probs.size());
  for (int i = 0; i < a.log_probs.size(); ++i) {
    CHECK(a.log_probs.data[i] == b.log_probs.data[i]);
  }
  // The row is a log distribution over the decoder vocabulary.
  CHECK(a.log_probs.cols == m.vocab().size());
  double z = lst::ctc::kLogZero;
  for (double lp : a.log_probs.data) z = lst::ctc::log_add(z, lp);
  CHECK(std::fabs(z) <= 1e-12);
  // Boundary of label |prefix| + 1 from the shared cumulative-weight rule.
  CHECK(a.boundary == lst::align::locate_boundary_cumsum(ctx.alpha_cum, 3));
}

TEST_CASE("streaming decode is bit-identical to offline decode") {
  lst::model::LsTransducer m = lst::model::LsTransducer::init(tiny_config());
  lst::Rng rng(72);
  lst::decode::DecodeConfig cfg;
  cfg.beam_size = 4;
  cfg.beta = 0.3;

  for (int trial = 0; trial < 12; ++trial) {
    int t = rng.uniform_int(1, 14);
    lst::Matrix frames = random_frames(rng, t, m.cfg.input_dim);
    lst::decode::DecodeResult off = lst::decode::decode_offline(m, frames, cfg);
    for (int chunk : {1, 2, 3, 5, t}) {
      lst::decode::DecodeResult st =
          lst::decode::decode_streaming(m, frames, chunk, cfg);
      CHECK(hyp_equal(off.best, st.best));
      REQUIRE(off.finished.size() == st.finished.size());
      for (size_t i = 0; i < off.finished.size(); ++i) {
        CHECK(hyp_equal(off.finished[i], st.finished[i]));
      }
      CHECK(off.complete == st.complete);
      CHECK(off.capped == st.capped);
    }
  }
}

TEST_CASE("decoded hypotheses are well-formed") {
  lst::model::LsTransducer m = lst::model::LsTransducer::init(tiny_config());
  lst::Rng rng(73);
  lst::decode::DecodeConfig cfg;
  cfg.beam_size = 5;

  for (int trial = 0; trial < 8; ++trial) {
    int t = rng.uniform_int(2, 12);
    lst::Matrix frames = random_frames(rng, t, m.cfg.input_dim);
    lst::decode::DecodeResult r = lst::decode::decode_offline(m, frames, cfg);
    CHECK(r.complete);
    REQUIRE(!r.finished.empty());
    CHECK(hyp_equal(r.best, r.finished.front()));
    for (const lst::decode::DecodedHypothesis& h : r.finished) {
      CHECK(h.combined <= r.best.combined);
      REQUIRE(h.emissions.size() == h.tokens.size());
      int prev = 1;
      for (size_t i = 0; i < h.emissions.size(); ++i) {
        CHECK(h.emissions[i].token == h.tokens[i]);
        CHECK(h.emissions[i].boundary >= prev);
        CHECK(h.emissions[i].boundary <= t);
        prev = h.emissions[i].boundary;
      }
      // Scores are log probabilities (transducer chain is a product of
      // softmax entries; CTC is a complete-sequence probability).
      CHECK(h.s_lst <= 1e-12);
      CHECK(h.s_ctc <= 1e-12);
      for (int q : h.tokens) CHECK(m.vocab().is_normal(q));
    }
  }
}

TEST_CASE("the transducer chain score decreases monotonically") {
  lst::model::LsTransducer m = lst::model::LsTransducer::init(tiny_config());
  lst::Rng rng(74);
  lst::Matrix frames = random_frames(rng, 10, m.cfg.input_dim);
  lst::Tape tape;
  lst::decode::DecoderContext ctx = lst::decode::make_decoder_context(
      m, tape.val(lst::model::encode_t(tape, m, frames)));

  std::vector<int> prefix;
  double s_lst = 0.0;
  for (int step = 0; step < 5; ++step) {
    lst::decode::StepOutput out = lst::decode::transducer_step(m, ctx, prefix);
    int q = step % m.cfg.num_normal;
    double inc = out.log_probs.at(0, q);
    CHECK(inc <= 0.0);
    double next = s_lst + inc;
    CHECK(next <= s_lst);
    s_lst = next;
    prefix.push_back(q);
  }
}

TEST_CASE("beam size 1 equals greedy decoding at beta 0") {
  lst::model::LsTransducer m = lst::model::LsTransducer::init(tiny_config(5, 8));
  lst::Rng rng(75);
  lst::decode::DecodeConfig cfg;
  cfg.beam_size = 1;
  cfg.beta = 0.0;

  for (int trial = 0; trial < 15; ++trial) {
    int t = rng.uniform_int(1, 12);
    lst::Matrix frames = random_frames(rng, t, m.cfg.input_dim);
    lst::decode::DecodeResult beam = lst::decode::decode_offline(m, frames, cfg);
    lst::decode::DecodeResult greedy = lst::decode::greedy_decode(m, frames);
    CHECK(beam.best.tokens == greedy.best.tokens);
    CHECK(beam.best.s_lst == greedy.best.s_lst);
    REQUIRE(beam.best.emissions.size() == greedy.best.emissions.size());
    for (size_t i = 0; i < beam.best.emissions.size(); ++i) {
      CHECK(beam.best.emissions[i].boundary ==
            greedy.best.emissions[i].boundary);
    }
  }
}

TEST_CASE("beta boundaries ignore the zero-weight scorer entirely") {
  lst::model::LsTransducer m = lst::model::LsTransducer::init(tiny_config(4, 21));
  lst::Rng rng(76);

  for (int trial = 0; trial < 8; ++trial) {
    int t = rng.uniform_int(2, 10);
    lst::Matrix frames = random_frames(rng, t, m.cfg.input_dim);

    lst::decode::DecodeConfig at0;
    at0.beta = 0.0;
    at0.beam_size = 3;
    lst::decode::DecodeConfig lst_only = at0;
    lst_only.mode = lst::decode::ScoreMode::kTransducerOnly;
    lst::decode::DecodeResult a = lst::decode::decode_offline(m, frames, at0);
    lst::decode::DecodeResult b = lst::decode::decode_offline(m, frames, lst_only);
    REQUIRE(a.finished.size() == b.finished.size());
    for (size_t i = 0; i < a.finished.size(); ++i) {
      CHECK(a.finished[i].tokens == b.finished[i].tokens);
      CHECK(a.finished[i].s_lst == b.finished[i].s_lst);
      CHECK(a.finished[i].combined == b.finished[i].combined);
    }

    lst::decode::DecodeConfig at1;
    at1.beta = 1.0;
    at1.beam_size = 3;
    lst::decode::DecodeConfig ctc_only = at1;
    ctc_only.mode = lst::decode::ScoreMode::kCtcOnly;
    lst::decode::DecodeResult c = lst::decode::decode_offline(m, frames, at1);
    lst::decode::DecodeResult d = lst::decode::decode_offline(m, frames, ctc_only);
    REQUIRE(c.finished.size() == d.finished.size());
    for (size_t i = 0; i < c.finished.size(); ++i) {
      CHECK(c.finished[i].tokens == d.finished[i].tokens);
      CHECK(c.finished[i].combined == d.finished[i].combined);
    }
  }
}

TEST_CASE("beam search with a covering beam equals exhaustive search") {
  lst::model::LsTransducer m = lst::model::LsTransducer::init(tiny_config(3, 5));
  lst::Rng rng(77);
  const int U = 3;

  for (int trial = 0; trial < 6; ++trial) {
    int t = rng.uniform_int(2, 7);
    lst::Matrix frames = random_frames(rng, t, m.cfg.input_dim);
    lst::decode::DecodeConfig cfg;
    cfg.beam_size = 27;  // >= U^len candidates at every level: nothing pruned
    cfg.beta = 0.3;
    cfg.max_labels = 3;
    lst::decode::DecodeResult beam = lst::decode::decode_offline(m, frames, cfg);

    // Exhaustive oracle: score every token sequence of length <= 3 as
    // (transducer chain at the per-label boundaries + eos at the full
    // horizon, CTC complete-sequence probability), combined at beta.
    lst::Tape tape;
    lst::decode::DecoderContext ctx = lst::decode::make_decoder_context(
        m, tape.val(lst::model::encode_t(tape, m, frames)));
    std::vector<std::vector<int>> all = {{}};
    for (int len = 0; len < 3; ++len) {
      std::vector<std::vector<int>> next;
      for (const std::vector<int>& s : all) {
        if (static_cast<int>(s.size()) != len) continue;
        for (int q = 0; q < U; ++q) {
          std::vector<int> e = s;
          e.push_back(q);
          next.push_back(e);
        }
      }
      all.insert(all.end(), next.begin(), next.end());
    }
    bool have_best = false;
    std::vector<int> best_tokens;
    double best_score = 0.0;
    for (const std::vector<int>& seq : all) {
      double s_lst = 0.0;
      std::vector<int> prefix;
      lst::ctc::PrefixState cstate = lst::ctc::prefix_initial();
      for (int q : seq) {
        lst::decode::StepOutput out = lst::decode::transducer_step(m, ctx, prefix);
        s_lst += out.log_probs.at(0, q);
        lst::ctc::PrefixExtension ext = lst::ctc::prefix_extend(
            cstate, q, ctx.ctc_log_probs, out.boundary, m.vocab().ctc_blank());
        cstate = ext.state;
        prefix.push_back(q);
      }
      lst::ctc::grow_horizon(&cstate, ctx.ctc_log_probs, ctx.frames,
                             m.vocab().ctc_blank());
      double s_ctc = lst::ctc::prefix_score_eos(cstate, ctx.frames, ctx.frames);
      lst::Matrix eos_row = lst::decode::transducer_row(m, ctx, seq, ctx.frames);
      s_lst += eos_row.at(0, m.vocab().eos());
      double combined = lst::decode::combine_scores(s_ctc, s_lst, cfg.beta);
      if (!have_best || combined > best_score ||
          (combined == best_score && seq.size() < best_tokens.size()) ||
          (combined == best_score && seq.size() == best_tokens.size() &&
           seq < best_tokens)) {
        have_best = true;
        best_score = combined;
        best_tokens = seq;
      }
    }
    CHECK(beam.best.tokens == best_tokens);
    CHECK(beam.best.combined == best_score);
  }
}

TEST_CASE("shallow fusion") {
  lst::model::ModelConfig mc = tiny_config(4, 31);
  lst::model::LsTransducer m = lst::model::LsTransducer::init(mc);
  lst::Rng rng(78);
  lst::Matrix frames = random_frames(rng, 8, mc.input_dim);

  SUBCASE("weight zero with an LM present changes nothing but bookkeeping") {
    lst::model::LmModel lm = lst::model::LmModel::init(mc, 99);
    lst::decode::DecodeConfig cfg;
    cfg.beam_size = 3;
    lst::decode::DecodeResult plain = lst::decode::decode_offline(m, frames, cfg);
    lst::decode::DecodeResult fused =
        lst::decode::decode_offline(m, frames, cfg, &lm);
    CHECK(plain.best.tokens == fused.best.tokens);
    CHECK(plain.best.combined == fused.best.combined);
    CHECK(plain.best.s_lst == fused.best.s_lst);
  }

  SUBCASE("a uniform LM shifts every hypothesis by length, ranking within a "
          "length preserved") {
    lst::model::LmModel lm = lst::model::LmModel::init(mc, 99);
    for (lst::Parameter* p : lm.params()) {
      p->value = lst::Matrix(p->value.rows, p->value.cols, 0.0);
    }
    // Zeroed parameters include the layer-norm gains, making every logit row
    // constant: the LM is exactly uniform, log p = -log V.
    lst::decode::DecodeConfig cfg;
    cfg.beam_size = 4;
    cfg.lm_weight = 0.2;
    lst::decode::DecodeResult plain =
        lst::decode::decode_offline(m, frames, cfg, &lm);
    lst::decode::DecodeConfig nolm = cfg;
    nolm.lm_weight = 0.0;
    lst::decode::DecodeResult base = lst::decode::decode_offline(m, frames, nolm);

    const double lv = -std::log(static_cast<double>(m.vocab().size()));
    std::set<std::vector<int>> plain_set, base_set;
    for (const auto& h : plain.finished) plain_set.insert(h.tokens);
    for (const auto& h : base.finished) base_set.insert(h.tokens);
    CHECK(plain_set == base_set);
    for (const auto& h : plain.finished) {
      CHECK(h.s_lm ==
            doctest::Approx(lv * static_cast<double>(h.tokens.size() + 1))
                .epsilon(1e-12));
    }
  }

  SUBCASE("vocabulary mismatch is an error") {
    lst::model::ModelConfig other = mc;
    other.num_normal = mc.num_normal + 2;
    lst::model::LmModel lm = lst::model::LmModel::init(other, 99);
    lst::decode::DecodeConfig cfg;
    CHECK_THROWS_AS(
        (void)lst::decode::decode_offline(m, frames, cfg, &lm), lst::Error);
  }
}

TEST_CASE("zero-length audio yields an empty, flagged result") {
  lst::model::LsTransducer m = lst::model::LsTransducer::init(tiny_config());
  lst::decode::DecodeConfig cfg;
  lst::decode::DecodeResult r =
      lst::decode::decode_offline(m, lst::Matrix(), cfg);
  CHECK(r.best.tokens.empty());
  CHECK(!r.complete);
  CHECK(!r.warning.empty());
}

TEST_CASE("the label cap stops the beam and is reported") {
  lst::model::LsTransducer m = lst::model::LsTransducer::init(tiny_config(5, 77));
  lst::Rng rng(79);
  lst::Matrix frames = random_frames(rng, 12, m.cfg.input_dim);
  lst::decode::DecodeConfig free_cfg;
  free_cfg.beam_size = 3;
  lst::decode::DecodeResult free_run =
      lst::decode::decode_offline(m, frames, free_cfg);
  REQUIRE(free_run.best.tokens.size() >= 1);

  lst::decode::DecodeConfig capped_cfg = free_cfg;
  capped_cfg.max_labels = 1;
  lst::decode::DecodeResult capped =
      lst::decode::decode_offline(m, frames, capped_cfg);
  CHECK(capped.best.tokens.size() <= 1);
  if (free_run.best.tokens.size() > 1) {
    CHECK(capped.capped);
    CHECK(!capped.warning.empty());
  }
}

TEST_CASE("streaming session object behaves like the wrappers") {
  lst::model::LsTransducer m = lst::model::LsTransducer::init(tiny_config());
  lst::Rng rng(80);
  lst::Matrix frames = random_frames(rng, 7, m.cfg.input_dim);
  lst::decode::DecodeConfig cfg;
  cfg.beam_size = 2;

  lst::decode::StreamingSession s(&m, cfg);
  CHECK(!s.done());
  s.push(lst::slice_rows(frames, 0, 3));
  s.push(lst::Matrix());  // zero rows is legal
  s.push(lst::slice_rows(frames, 3, 7));
  s.finish();
  CHECK(s.done());
  lst::decode::DecodeResult off = lst::decode::decode_offline(m, frames, cfg);
  CHECK(hyp_equal(s.result().best, off.best));

  // Results are only available after finish().
  lst::decode::StreamingSession s2(&m, cfg);
  CHECK_THROWS_AS((void)s2.result(), lst::Error);
}
