// lst command-line interface.
//
// Subcommands: gen-data, pretrain-lm, train, decode, adapt, eval-wer,
// gradcheck, oracle-check, run-experiment.
// Exit codes: 0 success, 1 usage error, 2 stage failure, 3 check failure.

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

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lst/adapt.hpp"
#include "lst/config_file.hpp"
#include "lst/corpus.hpp"
#include "lst/ctc.hpp"
#include "lst/ctc_oracle.hpp"
#include "lst/decoder.hpp"
#include "lst/experiment.hpp"
#include "lst/grad_check.hpp"
#include "lst/model.hpp"
#include "lst/rng.hpp"
#include "lst/train.hpp"
#include "lst/wer.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStageFailure = 2;
constexpr int kExitCheckFailure = 3;

struct GlobalArgs {
  std::string config_path;
  uint64_t seed = 1;
  bool seed_given = false;
  std::string out_dir = "out";
};

lst::config::ConfigMap load_config(const GlobalArgs& g) {
  lst::config::ConfigMap cfg;
  if (!g.config_path.empty()) {
    cfg = lst::config::ConfigMap::parse_file(g.config_path);
  }
  if (g.seed_given || !cfg.has("seed")) {
    cfg.set("seed", std::to_string(g.seed));
  }
  return cfg;
}

// Output files may name not-yet-existing directories (e.g. out/model.ckpt on
// a fresh tree); create them instead of failing at open().
void ensure_parent_dir(const std::string& path) {
  std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

lst::model::ModelConfig model_config_from(const lst::config::ConfigMap& cfg) {
  lst::model::ModelConfig mc;
  mc.input_dim = cfg.get_int("input_dim", mc.input_dim);
  mc.d_model = cfg.get_int("d_model", mc.d_model);
  mc.enc_layers = cfg.get_int("enc_layers", mc.enc_layers);
  mc.pred_layers = cfg.get_int("pred_layers", mc.pred_layers);
  mc.tap_layer = cfg.get_int("tap_layer", mc.tap_layer);
  mc.ffn_hidden = cfg.get_int("ffn_hidden", mc.ffn_hidden);
  mc.num_normal = cfg.get_int("num_normal", mc.num_normal);
  mc.chunk_size = cfg.get_int("chunk_size", mc.chunk_size);
  mc.gamma = cfg.get_double("gamma", mc.gamma);
  mc.mu = cfg.get_double("mu", mc.mu);
  mc.init_seed = cfg.get_u64("seed", 1);
  mc.validate();
  return mc;
}

lst::decode::DecodeConfig decode_config_from(
    const lst::config::ConfigMap& cfg) {
  lst::decode::DecodeConfig dc;
  dc.beta = cfg.get_double("beta", dc.beta);
  dc.beam_size = cfg.get_int("beam_size", dc.beam_size);
  dc.lm_weight = cfg.get_double("lm_weight", dc.lm_weight);
  dc.max_labels = cfg.get_int("max_labels", dc.max_labels);
  dc.validate();
  return dc;
}

int cmd_gen_data(const GlobalArgs& g) {
  lst::config::ConfigMap cfg = load_config(g);
  const uint64_t seed = cfg.get_u64("seed", 1);
  const double sigma = cfg.get_double("noise_sigma", 0.3);
  const int jitter = cfg.get_int("dur_jitter", 1);
  lst::corpus::DomainSpec source = lst::corpus::make_source_domain(sigma, jitter);
  lst::corpus::DomainSpec target = lst::corpus::make_target_domain(sigma, jitter);
  const lst::Vocabulary vocab(cfg.get_int("num_normal", 25));
  const int train_n = cfg.get_int("train_utts", 600);
  const int test_n = cfg.get_int("test_utts", 60);
  const int tgt_test_n = cfg.get_int("target_test_utts", 60);
  const int lm_n = cfg.get_int("lm_texts", 1200);
  const int adapt_n = cfg.get_int("adapt_texts", 1200);

  namespace fs = std::filesystem;
  const std::string dir = g.out_dir;
  lst::corpus::save_corpus(dir, "source_train",
                           lst::corpus::gen_split(source, "train", train_n, seed),
                           vocab);
  lst::corpus::save_corpus(dir, "source_test",
                           lst::corpus::gen_split(source, "test", test_n, seed),
                           vocab);
  lst::corpus::save_corpus(dir, "target_test",
                           lst::corpus::gen_split(target, "test", tgt_test_n, seed),
                           vocab);
  lst::corpus::save_texts((fs::path(dir) / "source_lm.txt").string(),
                          lst::corpus::gen_texts(source, "lmtext", lm_n, seed),
                          vocab);
  lst::corpus::save_texts((fs::path(dir) / "target_adapt.txt").string(),
                          lst::corpus::gen_texts(target, "adapttext", adapt_n, seed),
                          vocab);
  std::cout << "wrote corpora under " << dir << "\n";
  return kExitOk;
}

int cmd_pretrain_lm(const GlobalArgs& g, const std::string& texts_path,
                    const std::string& out_ckpt) {
  lst::config::ConfigMap cfg = load_config(g);
  lst::model::ModelConfig mc = model_config_from(cfg);
  const lst::Vocabulary vocab = mc.vocab();
  std::vector<std::vector<int>> texts = lst::corpus::load_texts(texts_path, vocab);
  lst::adapt::TextTrainConfig tcfg;
  tcfg.epochs = cfg.get_int("lm_epochs", 8);
  tcfg.lr = cfg.get_double("lm_lr", 0.1);
  tcfg.batch_size = cfg.get_int("lm_batch_size", 16);
  tcfg.clip_norm = cfg.get_double("clip_norm", 5.0);
  tcfg.seed = cfg.get_u64("seed", 1) + 101;
  lst::model::LmModel lm =
      lst::model::LmModel::init(mc, cfg.get_u64("seed", 1) + 7);
  lst::adapt::TextTrainReport r = lst::adapt::pretrain_lm(lm, texts, tcfg);
  ensure_parent_dir(out_ckpt);
  lst::model::save_lm(out_ckpt, lm);
  json rep{{"epochs", r.epoch_loss.size()},
           {"final_loss", r.epoch_loss.back()},
           {"perplexity", lst::adapt::lm_perplexity(lm, texts)},
           {"checkpoint", out_ckpt}};
  std::cout << rep.dump(2) << "\n";
  return kExitOk;
}

int cmd_train(const GlobalArgs& g, const std::string& data_dir,
              const std::string& split, const std::string& lm_ckpt,
              const std::string& out_ckpt) {
  lst::config::ConfigMap cfg = load_config(g);
  lst::model::ModelConfig mc = model_config_from(cfg);
  const lst::Vocabulary vocab = mc.vocab();
  std::vector<lst::corpus::SyntheticUtterance> data =
      lst::corpus::load_corpus(data_dir, split, vocab);
  lst::model::LsTransducer m = lst::model::LsTransducer::init(mc);
  if (!lm_ckpt.empty()) {
    lst::model::LmModel lm = lst::model::load_lm(lm_ckpt);
    lst::model::load_lm_into_model(&m, lm);
  }
  lst::train::TrainConfig tc;
  tc.epochs = cfg.get_int("epochs", 8);
  tc.lr = cfg.get_double("lr", 0.08);
  tc.batch_size = cfg.get_int("batch_size", 8);
  tc.clip_norm = cfg.get_double("clip_norm", 5.0);
  tc.seed = cfg.get_u64("seed", 1) + 202;
  lst::train::TrainReport r = lst::train::train_asr(m, data, tc);
  ensure_parent_dir(out_ckpt);
  lst::model::save_model(out_ckpt, m);
  json epochs = json::array();
  for (const lst::train::EpochStats& e : r.epochs) {
    epochs.push_back(json{{"l_all", e.l_all},
                          {"l_ctc", e.l_ctc},
                          {"l_ce", e.l_ce},
                          {"l_qua", e.l_qua}});
  }
  json rep{{"epochs", epochs}, {"checkpoint", out_ckpt}};
  std::cout << rep.dump(2) << "\n";
  return kExitOk;
}

int cmd_decode(const GlobalArgs& g, const std::string& model_ckpt,
               const std::string& data_dir, const std::string& split,
               const std::string& out_path, const std::string& lm_ckpt,
               int stream_chunk) {
  lst::config::ConfigMap cfg = load_config(g);
  lst::model::LsTransducer m = lst::model::load_model(model_ckpt);
  const lst::Vocabulary vocab = m.vocab();
  std::vector<lst::corpus::SyntheticUtterance> data =
      lst::corpus::load_corpus(data_dir, split, vocab);
  lst::decode::DecodeConfig dc = decode_config_from(cfg);
  lst::model::LmModel lm;
  lst::model::LmModel* lm_ptr = nullptr;
  if (!lm_ckpt.empty()) {
    lm = lst::model::load_lm(lm_ckpt);
    lm_ptr = &lm;
  }
  std::vector<lst::experiment::HypRecord> hyps;
  hyps.reserve(data.size());
  for (const lst::corpus::SyntheticUtterance& u : data) {
    lst::decode::DecodeResult r =
        stream_chunk > 0
            ? lst::decode::decode_streaming(m, u.frames, stream_chunk, dc, lm_ptr)
            : lst::decode::decode_offline(m, u.frames, dc, lm_ptr);
    lst::experiment::HypRecord h;
    h.id = u.id;
    h.tokens = r.best.tokens;
    h.score = r.best.combined;
    h.emissions = r.best.emissions;
    hyps.push_back(std::move(h));
  }
  ensure_parent_dir(out_path);
  lst::experiment::write_hypotheses_jsonl(out_path, hyps, vocab);
  std::cout << "wrote " << hyps.size() << " hypotheses to " << out_path << "\n";
  return kExitOk;
}

int cmd_adapt(const GlobalArgs& g, const std::string& model_ckpt,
              const std::string& texts_path, const std::string& out_ckpt) {
  lst::config::ConfigMap cfg = load_config(g);
  lst::model::LsTransducer m = lst::model::load_model(model_ckpt);
  const lst::Vocabulary vocab = m.vocab();
  std::vector<std::vector<int>> texts = lst::corpus::load_texts(texts_path, vocab);
  lst::adapt::AdaptPlan plan;
  plan.freeze_lower = cfg.get_int("freeze_lower", 2);
  plan.train.epochs = cfg.get_int("adapt_epochs", 6);
  plan.train.lr = cfg.get_double("adapt_lr", 0.05);
  plan.train.batch_size = cfg.get_int("adapt_batch_size", 16);
  plan.train.clip_norm = cfg.get_double("clip_norm", 5.0);
  plan.train.seed = cfg.get_u64("seed", 1) + 303;
  double ppl_before = lst::adapt::prediction_perplexity(m, texts);
  lst::adapt::TextTrainReport r = lst::adapt::adapt_prediction(m, texts, plan);
  double ppl_after = lst::adapt::prediction_perplexity(m, texts);
  ensure_parent_dir(out_ckpt);
  lst::model::save_model(out_ckpt, m);
  json rep{{"epochs", r.epoch_loss.size()},
           {"adapt_text_ppl_before", ppl_before},
           {"adapt_text_ppl_after", ppl_after},
           {"checkpoint", out_ckpt}};
  std::cout << rep.dump(2) << "\n";
  return kExitOk;
}

int cmd_eval_wer(const std::string& data_dir, const std::string& split,
                 const std::string& hyps_path, int num_normal) {
  const lst::Vocabulary vocab(num_normal);
  std::vector<lst::corpus::SyntheticUtterance> refs =
      lst::corpus::load_corpus(data_dir, split, vocab);
  std::vector<lst::experiment::HypRecord> hyps =
      lst::experiment::read_hypotheses_jsonl(hyps_path, vocab);
  lst::wer::WerStats w = lst::experiment::score_hypotheses(refs, hyps);
  lst::experiment::LatencyStats lat = lst::experiment::emission_latency(refs, hyps);
  json rep{{"wer", w.wer()},
           {"subs", w.subs},
           {"dels", w.dels},
           {"ins", w.ins},
           {"hits", w.hits},
           {"ref_len", w.ref_len},
           {"pairs", w.pairs},
           {"missing", w.missing},
           {"latency",
            json{{"mean", lat.mean}, {"min", lat.min}, {"max", lat.max},
                 {"count", lat.count}}}};
  std::cout << rep.dump(2) << "\n";
  return kExitOk;
}

int cmd_gradcheck(const GlobalArgs& g) {
  lst::config::ConfigMap cfg = load_config(g);
  // A deliberately small model so central differences stay fast.
  lst::model::ModelConfig mc;
  mc.input_dim = 4;
  mc.d_model = 10;
  mc.enc_layers = 1;
  mc.pred_layers = 2;
  mc.tap_layer = 1;
  mc.ffn_hidden = 12;
  mc.num_normal = 6;
  mc.chunk_size = 3;
  mc.init_seed = cfg.get_u64("seed", 1);
  mc.validate();
  lst::model::LsTransducer m = lst::model::LsTransducer::init(mc);

  lst::Rng rng(mc.init_seed + 5);
  std::vector<std::vector<int>> tokens = {{2, 4, 1}, {0, 3}};
  std::vector<lst::Matrix> frames;
  for (const std::vector<int>& t : tokens) {
    lst::Matrix f(static_cast<int>(t.size()) * 3, mc.input_dim);
    for (double& x : f.data) x = rng.normal();
    frames.push_back(f);
  }
  std::vector<lst::model::TrainExample> batch;
  for (size_t i = 0; i < tokens.size(); ++i) {
    batch.push_back(lst::model::TrainExample{&tokens[i], &frames[i]});
  }
  auto loss_fn = [&](bool with_grad) {
    lst::Tape tape;
    lst::model::TrainingForward fwd =
        lst::model::forward_training(tape, m, batch, mc.gamma, mc.mu);
    double v = tape.val(fwd.loss).at(0, 0);
    if (with_grad) tape.backward(fwd.loss);
    return v;
  };
  lst::GradCheckConfig gc;
  gc.max_coords_per_param = cfg.get_int("gradcheck_coords", 60);
  lst::GradCheckResult res = lst::grad_check(loss_fn, m.all_params(), gc);
  const double tol = cfg.get_double("gradcheck_tol", 1e-4);
  json rep{{"max_rel_err", res.max_rel_err},
           {"coords_checked", res.coords_checked},
           {"worst_param", res.worst.param},
           {"worst_index", res.worst.index},
           {"analytic", res.worst.analytic},
           {"numeric", res.worst.numeric},
           {"tolerance", tol}};
  std::cout << rep.dump(2) << "\n";
  return res.max_rel_err <= tol ? kExitOk : kExitCheckFailure;
}

int cmd_oracle_check(const GlobalArgs& g, const std::string& posterior_path,
                     const std::string& dump_path) {
  lst::config::ConfigMap cfg = load_config(g);
  lst::Rng rng(cfg.get_u64("seed", 1));

  auto random_log_probs = [&](int t, int u) {
    lst::Matrix logits(t, u + 1);
    for (double& x : logits.data) x = rng.normal() * 1.5;
    return lst::log_softmax_rows(logits);
  };

  if (!dump_path.empty()) {
    lst::Matrix lp = random_log_probs(cfg.get_int("dump_frames", 5),
                                      cfg.get_int("dump_tokens", 3));
    lst::ctc_oracle::write_posterior_dump(dump_path, lp);
    std::cout << "wrote posterior dump to " << dump_path << "\n";
    return kExitOk;
  }

  std::vector<lst::Matrix> cases;
  if (!posterior_path.empty()) {
    cases.push_back(lst::ctc_oracle::read_posterior_dump(posterior_path));
  } else {
    cases.push_back(random_log_probs(3, 2));
    cases.push_back(random_log_probs(4, 3));
    cases.push_back(random_log_probs(5, 2));
    cases.push_back(random_log_probs(6, 3));
  }

  double worst = 0.0;
  long long checks = 0;
  for (const lst::Matrix& lp : cases) {
    const int blank = lp.cols - 1;
    const int total = lp.rows;
    LST_CHECK(total <= 12, "oracle-check requires <= 12 frames");
    std::map<std::vector<int>, double> table =
        lst::ctc_oracle::enumerate_collapsed(lp, blank);

    // Every prefix up to length 3 over the normal tokens.
    std::vector<std::vector<int>> prefixes = {{}};
    for (int len = 1; len <= 3; ++len) {
      std::vector<std::vector<int>> next;
      for (const std::vector<int>& p : prefixes) {
        if (static_cast<int>(p.size()) != len - 1) continue;
        for (int q = 0; q < blank; ++q) {
          std::vector<int> e = p;
          e.push_back(q);
          next.push_back(e);
        }
      }
      prefixes.insert(prefixes.end(), next.begin(), next.end());
    }
    for (const std::vector<int>& p : prefixes) {
      lst::ctc::PrefixState st = lst::ctc::prefix_initial();
      bool dead = false;
      for (int q : p) {
        lst::ctc::PrefixExtension ext =
            lst::ctc::prefix_extend(st, q, lp, total, blank);
        st = ext.state;
        if (lst::ctc::is_log_zero(ext.score)) dead = true;
      }
      if (st.horizon < total) {
        lst::ctc::grow_horizon(&st, lp, total, blank);
      }
      double got = st.score();
      double want = lst::ctc_oracle::prefix_log_mass(table, p);
      double err;
      if (lst::ctc::is_log_zero(want) || dead) {
        err = (lst::ctc::is_log_zero(got) == lst::ctc::is_log_zero(want)) ? 0.0
                                                                          : 1.0;
      } else {
        err = std::fabs(got - want);
      }
      worst = std::max(worst, err);
      ++checks;
      // Complete-sequence mass (the eos rule at the full horizon).
      double got_eos = lst::ctc::prefix_score_eos(st, total, total);
      double want_eos = lst::ctc_oracle::complete_log_mass(table, p);
      if (lst::ctc::is_log_zero(want_eos) || lst::ctc::is_log_zero(got_eos)) {
        err = (lst::ctc::is_log_zero(got_eos) == lst::ctc::is_log_zero(want_eos))
                  ? 0.0
                  : 1.0;
      } else {
        err = std::fabs(got_eos - want_eos);
      }
      worst = std::max(worst, err);
      ++checks;
    }
  }
  const double tol = cfg.get_double("oracle_tol", 1e-9);
  json rep{{"checks", checks}, {"max_abs_err", worst}, {"tolerance", tol}};
  std::cout << rep.dump(2) << "\n";
  return worst <= tol ? kExitOk : kExitCheckFailure;
}

int cmd_run_experiment(const GlobalArgs& g) {
  lst::config::ConfigMap cfg = load_config(g);
  lst::experiment::ExperimentOutcome out =
      lst::experiment::run_experiment(cfg, g.out_dir);
  std::cout << out.report_json;
  return out.ok ? kExitOk : kExitStageFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"label-synchronous transducer toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config_path, "flat key = value config file");
  auto* seed_opt = app.add_option("--seed", g.seed, "master random seed");
  app.add_option("--out", g.out_dir, "output directory");

  auto* gen = app.add_subcommand("gen-data", "synthesize the two-domain corpora");

  auto* pre = app.add_subcommand("pretrain-lm", "train a causal LM on text");
  std::string pre_texts, pre_out = "lm.ckpt";
  pre->add_option("--texts", pre_texts, "token text file")->required();
  pre->add_option("--model-out", pre_out, "checkpoint to write");

  auto* tr = app.add_subcommand("train", "train the transducer");
  std::string tr_data, tr_split = "source_train", tr_lm, tr_out = "model.ckpt";
  tr->add_option("--data", tr_data, "corpus directory")->required();
  tr->add_option("--split", tr_split, "corpus name to train on");
  tr->add_option("--lm", tr_lm, "LM checkpoint to initialize from");
  tr->add_option("--model-out", tr_out, "checkpoint to write");

  auto* de = app.add_subcommand("decode", "decode a corpus split");
  std::string de_model, de_data, de_split = "source_test",
              de_out = "hyps.jsonl", de_lm;
  int de_stream = 0;
  de->add_option("--model", de_model, "model checkpoint")->required();
  de->add_option("--data", de_data, "corpus directory")->required();
  de->add_option("--split", de_split, "corpus name to decode");
  de->add_option("--hyps-out", de_out, "hypotheses JSONL to write");
  de->add_option("--lm", de_lm, "fusion LM checkpoint");
  de->add_option("--stream", de_stream,
                 "feed frames in chunks of this many rows (0 = offline)");

  auto* ad = app.add_subcommand("adapt", "text-only domain adaptation");
  std::string ad_model, ad_texts, ad_out = "model_adapted.ckpt";
  ad->add_option("--model", ad_model, "model checkpoint")->required();
  ad->add_option("--texts", ad_texts, "adaptation text file")->required();
  ad->add_option("--model-out", ad_out, "checkpoint to write");

  auto* ew = app.add_subcommand("eval-wer", "score hypotheses against a split");
  std::string ew_data, ew_split = "source_test", ew_hyps;
  int ew_vocab = 25;
  ew->add_option("--data", ew_data, "corpus directory")->required();
  ew->add_option("--split", ew_split, "reference corpus name");
  ew->add_option("--hyps", ew_hyps, "hypotheses JSONL")->required();
  ew->add_option("--num-normal", ew_vocab, "vocabulary size");

  auto* gc = app.add_subcommand("gradcheck",
                                "verify analytic gradients numerically");

  auto* oc = app.add_subcommand(
      "oracle-check", "verify prefix scores against path enumeration");
  std::string oc_posterior, oc_dump;
  oc->add_option("--posterior", oc_posterior,
                 "posterior dump file to check (default: random cases)");
  oc->add_option("--dump", oc_dump, "write a random posterior dump and exit");

  auto* rx = app.add_subcommand("run-experiment", "full pipeline + report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (gen->parsed()) return cmd_gen_data(g);
    if (pre->parsed()) return cmd_pretrain_lm(g, pre_texts, pre_out);
    if (tr->parsed()) return cmd_train(g, tr_data, tr_split, tr_lm, tr_out);
    if (de->parsed())
      return cmd_decode(g, de_model, de_data, de_split, de_out, de_lm,
                        de_stream);
    if (ad->parsed()) return cmd_adapt(g, ad_model, ad_texts, ad_out);
    if (ew->parsed()) return cmd_eval_wer(ew_data, ew_split, ew_hyps, ew_vocab);
    if (gc->parsed()) return cmd_gradcheck(g);
    if (oc->parsed()) return cmd_oracle_check(g, oc_posterior, oc_dump);
    if (rx->parsed()) return cmd_run_experiment(g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStageFailure;
  }
  std::cerr << "no subcommand\n";
  return kExitUsage;
}
