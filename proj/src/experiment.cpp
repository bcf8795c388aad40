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

#include "lst/experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "lst/adapt.hpp"
#include "lst/train.hpp"

namespace lst::experiment {

using nlohmann::json;

std::vector<HypRecord> decode_corpus(
    model::LsTransducer& m,
    const std::vector<corpus::SyntheticUtterance>& utts,
    const decode::DecodeConfig& dcfg, model::LmModel* fusion_lm) {
  std::vector<HypRecord> out;
  out.reserve(utts.size());
  for (const corpus::SyntheticUtterance& u : utts) {
    decode::DecodeResult r = decode::decode_offline(m, u.frames, dcfg,
                                                    fusion_lm);
    HypRecord h;
    h.id = u.id;
    h.tokens = r.best.tokens;
    h.score = r.best.combined;
    h.emissions = r.best.emissions;
    out.push_back(std::move(h));
  }
  return out;
}

void write_hypotheses_jsonl(const std::string& path,
                            const std::vector<HypRecord>& hyps,
                            const Vocabulary& vocab) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  LST_CHECK(out.good(), "cannot write hypotheses file " + path);
  for (const HypRecord& h : hyps) {
    json rec;
    rec["id"] = h.id;
    json toks = json::array();
    for (int t : h.tokens) toks.push_back(vocab.name(t));
    rec["tokens"] = toks;
    rec["score"] = h.score;
    json ems = json::array();
    for (const decode::TokenEmission& e : h.emissions) {
      ems.push_back(json::array({vocab.name(e.token), e.boundary}));
    }
    rec["emissions"] = ems;
    out << rec.dump() << '\n';
  }
  LST_CHECK(out.good(), "short write on hypotheses file " + path);
}

std::vector<HypRecord> read_hypotheses_jsonl(const std::string& path,
                                             const Vocabulary& vocab) {
  std::ifstream in(path);
  LST_CHECK(in.good(), "cannot open hypotheses file " + path);
  std::vector<HypRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    LST_CHECK(!rec.is_discarded(), "malformed hypotheses line: " + line);
    HypRecord h;
    h.id = rec.at("id").get<std::string>();
    for (const json& t : rec.at("tokens")) {
      h.tokens.push_back(vocab.id(t.get<std::string>()));
    }
    h.score = rec.at("score").get<double>();
    if (rec.contains("emissions")) {
      for (const json& e : rec.at("emissions")) {
        decode::TokenEmission em;
        em.token = vocab.id(e.at(0).get<std::string>());
        em.boundary = e.at(1).get<int>();
        h.emissions.push_back(em);
      }
    }
    out.push_back(std::move(h));
  }
  return out;
}

LatencyStats emission_latency(
    const std::vector<corpus::SyntheticUtterance>& refs,
    const std::vector<HypRecord>& hyps) {
  std::map<std::string, const HypRecord*> by_id;
  for (const HypRecord& h : hyps) by_id[h.id] = &h;
  LatencyStats st;
  double sum = 0.0;
  for (const corpus::SyntheticUtterance& u : refs) {
    if (u.token_end_frames.empty()) continue;  // no alignment metadata
    auto it = by_id.find(u.id);
    if (it == by_id.end()) continue;
    const HypRecord& h = *it->second;
    size_t n = std::min(h.tokens.size(), u.tokens.size());
    for (size_t i = 0; i < n; ++i) {
      if (h.tokens[i] != u.tokens[i]) continue;
      if (i >= h.emissions.size()) break;
      int lat = h.emissions[i].boundary - u.token_end_frames[i];
      if (st.count == 0) {
        st.min = lat;
        st.max = lat;
      } else {
        st.min = std::min(st.min, lat);
        st.max = std::max(st.max, lat);
      }
      sum += lat;
      ++st.count;
    }
  }
  if (st.count > 0) st.mean = sum / static_cast<double>(st.count);
  return st;
}

wer::WerStats score_hypotheses(
    const std::vector<corpus::SyntheticUtterance>& refs,
    const std::vector<HypRecord>& hyps) {
  std::vector<std::pair<std::string, std::vector<int>>> ref_pairs;
  ref_pairs.reserve(refs.size());
  for (const corpus::SyntheticUtterance& u : refs) {
    ref_pairs.emplace_back(u.id, u.tokens);
  }
  std::map<std::string, std::vector<int>> hyp_map;
  for (const HypRecord& h : hyps) hyp_map[h.id] = h.tokens;
  return wer::eval_wer(ref_pairs, hyp_map);
}

namespace {

json wer_json(const wer::WerStats& s) {
  return json{{"wer", s.wer()},        {"subs", s.subs},
              {"dels", s.dels},        {"ins", s.ins},
              {"hits", s.hits},        {"ref_len", s.ref_len},
              {"pairs", s.pairs},      {"missing", s.missing}};
}

json latency_json(const LatencyStats& s) {
  return json{{"mean", s.mean}, {"min", s.min}, {"max", s.max},
              {"count", s.count}};
}

json train_epochs_json(const train::TrainReport& r) {
  json arr = json::array();
  for (const train::EpochStats& e : r.epochs) {
    arr.push_back(json{{"l_all", e.l_all},
                       {"l_ctc", e.l_ctc},
                       {"l_ce", e.l_ce},
                       {"l_qua", e.l_qua},
                       {"grad_norm", e.grad_norm}});
  }
  return arr;
}

}  // namespace

ExperimentOutcome run_experiment(const config::ConfigMap& cfg,
                                 const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string corpus_dir = (fs::path(out_dir) / "corpus").string();

  // ---- resolve configuration (echoed verbatim into the report) ----
  const uint64_t seed = cfg.get_u64("seed", 1);

  model::ModelConfig mc;
  mc.input_dim = cfg.get_int("input_dim", 8);
  mc.d_model = cfg.get_int("d_model", 32);
  mc.enc_layers = cfg.get_int("enc_layers", 2);
  mc.pred_layers = cfg.get_int("pred_layers", 4);
  mc.tap_layer = cfg.get_int("tap_layer", 2);
  mc.ffn_hidden = cfg.get_int("ffn_hidden", 64);
  mc.num_normal = cfg.get_int("num_normal", 25);
  mc.chunk_size = cfg.get_int("chunk_size", 4);
  mc.gamma = cfg.get_double("gamma", 0.5);
  mc.mu = cfg.get_double("mu", 0.05);
  mc.init_seed = seed;
  mc.validate();

  const int train_utts = cfg.get_int("train_utts", 600);
  const int test_utts = cfg.get_int("test_utts", 60);
  const int target_test_utts = cfg.get_int("target_test_utts", 60);
  const int lm_texts = cfg.get_int("lm_texts", 1200);
  const int adapt_texts = cfg.get_int("adapt_texts", 1200);
  const int ppl_texts = cfg.get_int("ppl_texts", 200);
  const double noise_sigma = cfg.get_double("noise_sigma", 0.3);
  const int dur_jitter = cfg.get_int("dur_jitter", 1);

  adapt::TextTrainConfig lmcfg;
  lmcfg.epochs = cfg.get_int("lm_epochs", 8);
  lmcfg.lr = cfg.get_double("lm_lr", 0.1);
  lmcfg.batch_size = cfg.get_int("lm_batch_size", 16);
  lmcfg.clip_norm = cfg.get_double("clip_norm", 5.0);
  lmcfg.seed = seed + 101;

  train::TrainConfig tc;
  tc.epochs = cfg.get_int("epochs", 8);
  tc.lr = cfg.get_double("lr", 0.08);
  tc.batch_size = cfg.get_int("batch_size", 8);
  tc.clip_norm = cfg.get_double("clip_norm", 5.0);
  tc.seed = seed + 202;

  decode::DecodeConfig dc;
  dc.beta = cfg.get_double("beta", 0.3);
  dc.beam_size = cfg.get_int("beam_size", 4);
  dc.lm_weight = cfg.get_double("lm_weight", 0.0);
  dc.max_labels = cfg.get_int("max_labels", 0);
  dc.validate();

  adapt::AdaptPlan plan;
  plan.freeze_lower = cfg.get_int("freeze_lower", 2);
  plan.train.epochs = cfg.get_int("adapt_epochs", 6);
  plan.train.lr = cfg.get_double("adapt_lr", 0.05);
  plan.train.batch_size = cfg.get_int("adapt_batch_size", 16);
  plan.train.clip_norm = cfg.get_double("clip_norm", 5.0);
  plan.train.seed = seed + 303;

  json report;
  report["seed"] = seed;
  json echo = json::object();
  for (const auto& [k, v] : cfg.items()) echo[k] = v;
  report["config"] = echo;
  json stages;
  json timing;
  bool ok = true;

  auto run_stage = [&](const std::string& name,
                       const std::function<json()>& fn) {
    if (!ok) {
      stages[name] = json{{"status", "skipped"}};
      return;
    }
    auto t0 = std::chrono::steady_clock::now();
    try {
      json r = fn();
      r["status"] = "ok";
      stages[name] = r;
    } catch (const std::exception& e) {
      stages[name] = json{{"status", "failed"}, {"error", e.what()}};
      ok = false;
    }
    auto t1 = std::chrono::steady_clock::now();
    timing[name] =
        std::chrono::duration_cast<std::chrono::duration<double>>(t1 - t0)
            .count();
  };

  const Vocabulary vocab = mc.vocab();
  corpus::DomainSpec source = corpus::make_source_domain(noise_sigma, dur_jitter);
  corpus::DomainSpec target = corpus::make_target_domain(noise_sigma, dur_jitter);
  source.input_dim = mc.input_dim;
  target.input_dim = mc.input_dim;
  source.num_normal = mc.num_normal;
  target.num_normal = mc.num_normal;

  std::vector<corpus::SyntheticUtterance> src_train, src_test, tgt_test;
  std::vector<std::vector<int>> src_lm_texts, src_ppl, tgt_adapt, tgt_ppl;

  run_stage("gen_data", [&]() -> json {
    src_train = corpus::gen_split(source, "train", train_utts, seed);
    src_test = corpus::gen_split(source, "test", test_utts, seed);
    tgt_test = corpus::gen_split(target, "test", target_test_utts, seed);
    src_lm_texts = corpus::gen_texts(source, "lmtext", lm_texts, seed);
    src_ppl = corpus::gen_texts(source, "ppltext", ppl_texts, seed);
    tgt_adapt = corpus::gen_texts(target, "adapttext", adapt_texts, seed);
    tgt_ppl = corpus::gen_texts(target, "ppltext", ppl_texts, seed);
    corpus::save_corpus(corpus_dir, "source_train", src_train, vocab);
    corpus::save_corpus(corpus_dir, "source_test", src_test, vocab);
    corpus::save_corpus(corpus_dir, "target_test", tgt_test, vocab);
    namespace fs = std::filesystem;
    corpus::save_texts((fs::path(corpus_dir) / "source_lm.txt").string(),
                       src_lm_texts, vocab);
    corpus::save_texts((fs::path(corpus_dir) / "source_ppl.txt").string(),
                       src_ppl, vocab);
    corpus::save_texts((fs::path(corpus_dir) / "target_adapt.txt").string(),
                       tgt_adapt, vocab);
    corpus::save_texts((fs::path(corpus_dir) / "target_ppl.txt").string(),
                       tgt_ppl, vocab);
    long long frames = 0;
    for (const auto& u : src_train) frames += u.frames.rows;
    return json{{"train_utts", src_train.size()},
                {"source_test_utts", src_test.size()},
                {"target_test_utts", tgt_test.size()},
                {"lm_texts", src_lm_texts.size()},
                {"adapt_texts", tgt_adapt.size()},
                {"train_frames", frames}};
  });

  model::LmModel lm;
  run_stage("pretrain_lm", [&]() -> json {
    lm = model::LmModel::init(mc, seed + 7);
    double ppl_before = adapt::lm_perplexity(lm, src_ppl);
    adapt::TextTrainReport r = adapt::pretrain_lm(lm, src_lm_texts, lmcfg);
    double ppl_after = adapt::lm_perplexity(lm, src_ppl);
    model::save_lm((fs::path(out_dir) / "lm.ckpt").string(), lm);
    json ep = json::array();
    for (double x : r.epoch_loss) ep.push_back(x);
    return json{{"epoch_loss", ep},
                {"source_ppl_before", ppl_before},
                {"source_ppl_after", ppl_after}};
  });

  model::LsTransducer asr;
  run_stage("train", [&]() -> json {
    asr = model::LsTransducer::init(mc);
    model::load_lm_into_model(&asr, lm);
    train::TrainReport r = train::train_asr(asr, src_train, tc);
    model::save_model((fs::path(out_dir) / "model.ckpt").string(), asr);
    return json{{"epochs", train_epochs_json(r)}};
  });

  run_stage("decode_source", [&]() -> json {
    std::vector<HypRecord> hyps = decode_corpus(asr, src_test, dc);
    write_hypotheses_jsonl((fs::path(out_dir) / "hyps_source.jsonl").string(),
                           hyps, vocab);
    wer::WerStats w = score_hypotheses(src_test, hyps);
    LatencyStats lat = emission_latency(src_test, hyps);
    return json{{"wer", wer_json(w)}, {"latency", latency_json(lat)}};
  });

  double tgt_wer_before = 0.0;
  run_stage("decode_target_before_adapt", [&]() -> json {
    std::vector<HypRecord> hyps = decode_corpus(asr, tgt_test, dc);
    write_hypotheses_jsonl(
        (fs::path(out_dir) / "hyps_target_before.jsonl").string(), hyps,
        vocab);
    wer::WerStats w = score_hypotheses(tgt_test, hyps);
    tgt_wer_before = w.wer();
    return json{{"wer", wer_json(w)}};
  });

  run_stage("adapt", [&]() -> json {
    double ppl_before = adapt::prediction_perplexity(asr, tgt_ppl);
    adapt::TextTrainReport r = adapt::adapt_prediction(asr, tgt_adapt, plan);
    double ppl_after = adapt::prediction_perplexity(asr, tgt_ppl);
    model::save_model((fs::path(out_dir) / "model_adapted.ckpt").string(),
                      asr);
    json ep = json::array();
    for (double x : r.epoch_loss) ep.push_back(x);
    return json{{"epoch_loss", ep},
                {"target_ppl_before", ppl_before},
                {"target_ppl_after", ppl_after},
                {"relative_ppl_gain",
                 ppl_before > 0.0 ? (ppl_before - ppl_after) / ppl_before
                                  : 0.0}};
  });

  run_stage("decode_target", [&]() -> json {
    std::vector<HypRecord> hyps = decode_corpus(asr, tgt_test, dc);
    write_hypotheses_jsonl(
        (fs::path(out_dir) / "hyps_target_after.jsonl").string(), hyps, vocab);
    wer::WerStats w = score_hypotheses(tgt_test, hyps);
    json out{{"wer", wer_json(w)}, {"wer_before_adapt", tgt_wer_before}};
    if (dc.lm_weight != 0.0) {
      // Shallow fusion with an LM trained on the adaptation text.
      model::LmModel fuse = model::LmModel::init(mc, seed + 17);
      adapt::TextTrainConfig fcfg = lmcfg;
      fcfg.seed = seed + 404;
      adapt::pretrain_lm(fuse, tgt_adapt, fcfg);
      model::save_lm((fs::path(out_dir) / "fusion_lm.ckpt").string(), fuse);
      std::vector<HypRecord> fhyps = decode_corpus(asr, tgt_test, dc, &fuse);
      write_hypotheses_jsonl(
          (fs::path(out_dir) / "hyps_target_fused.jsonl").string(), fhyps,
          vocab);
      wer::WerStats fw = score_hypotheses(tgt_test, fhyps);
      out["wer_fused"] = wer_json(fw);
      out["lm_weight"] = dc.lm_weight;
    }
    return out;
  });

  report["stages"] = stages;
  report["timing"] = timing;  // the only nondeterministic field

  ExperimentOutcome outcome;
  outcome.ok = ok;
  outcome.report_json = report.dump(2) + "\n";
  outcome.report_path = (fs::path(out_dir) / "report.json").string();
  std::ofstream rf(outcome.report_path);
  LST_CHECK(rf.good(), "cannot write report " + outcome.report_path);
  rf << outcome.report_json;
  LST_CHECK(rf.good(), "short write on report");
  return outcome;
}

}  // namespace lst::experiment
