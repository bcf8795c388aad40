// lst/model.cpp

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

#include "lst/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "lst/align.hpp"
#include "lst/ctc.hpp"
#include "lst/rng.hpp"

namespace lst::model {

void ModelConfig::validate() const {
  LST_CHECK(input_dim >= 1, "config: input_dim must be >= 1");
  LST_CHECK(d_model >= 2, "config: d_model must be >= 2");
  LST_CHECK(d_model % 2 == 0, "config: d_model must be even (positional encoding)");
  LST_CHECK(enc_layers >= 1, "config: enc_layers must be >= 1");
  LST_CHECK(pred_layers >= 1, "config: pred_layers must be >= 1");
  LST_CHECK(tap_layer >= 1 && tap_layer <= pred_layers,
            "config: tap_layer must lie in [1, pred_layers]");
  LST_CHECK(ffn_hidden >= 1, "config: ffn_hidden must be >= 1");
  LST_CHECK(num_normal >= 1, "config: num_normal must be >= 1");
  LST_CHECK(chunk_size >= 1, "config: chunk_size must be >= 1");
  LST_CHECK(gamma >= 0.0 && gamma <= 1.0, "config: gamma must be in [0,1]");
  LST_CHECK(mu >= 0.0, "config: mu must be >= 0");
}

// ---- parameter plumbing ----

void BlockParams::collect(std::vector<Parameter*>* out) {
  for (Parameter* p : {&ln1_g, &ln1_b, &wq, &bq, &wk, &bk, &wv, &bv, &wo, &bo,
                       &ln2_g, &ln2_b, &w1, &b1, &w2, &b2}) {
    out->push_back(p);
  }
}

void PredictionNet::collect(std::vector<Parameter*>* out) {
  out->push_back(&embed);
  for (BlockParams& b : blocks) b.collect(out);
  out->push_back(&out_w);
  out->push_back(&out_b);
}

namespace {

Parameter make_linear_w(const std::string& name, int fan_in, int fan_out,
                        Rng* rng) {
  double r = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix w(fan_in, fan_out, 0.0);
  for (double& v : w.data) v = rng->uniform(-r, r);
  return Parameter(name, std::move(w));
}

Parameter make_zeros(const std::string& name, int rows, int cols) {
  return Parameter(name, Matrix(rows, cols, 0.0));
}

Parameter make_ones(const std::string& name, int rows, int cols) {
  return Parameter(name, Matrix(rows, cols, 1.0));
}

BlockParams make_block(const std::string& prefix, int d_model, int ffn_hidden,
                       Rng* rng) {
  BlockParams b;
  b.ln1_g = make_ones(prefix + ".ln1.g", 1, d_model);
  b.ln1_b = make_zeros(prefix + ".ln1.b", 1, d_model);
  b.wq = make_linear_w(prefix + ".att.wq", d_model, d_model, rng);
  b.bq = make_zeros(prefix + ".att.bq", 1, d_model);
  b.wk = make_linear_w(prefix + ".att.wk", d_model, d_model, rng);
  b.bk = make_zeros(prefix + ".att.bk", 1, d_model);
  b.wv = make_linear_w(prefix + ".att.wv", d_model, d_model, rng);
  b.bv = make_zeros(prefix + ".att.bv", 1, d_model);
  b.wo = make_linear_w(prefix + ".att.wo", d_model, d_model, rng);
  b.bo = make_zeros(prefix + ".att.bo", 1, d_model);
  b.ln2_g = make_ones(prefix + ".ln2.g", 1, d_model);
  b.ln2_b = make_zeros(prefix + ".ln2.b", 1, d_model);
  b.w1 = make_linear_w(prefix + ".ffn.w1", d_model, ffn_hidden, rng);
  b.b1 = make_zeros(prefix + ".ffn.b1", 1, ffn_hidden);
  b.w2 = make_linear_w(prefix + ".ffn.w2", ffn_hidden, d_model, rng);
  b.b2 = make_zeros(prefix + ".ffn.b2", 1, d_model);
  return b;
}

PredictionNet make_prediction_net(const ModelConfig& cfg, Rng* rng) {
  PredictionNet net;
  const int v = cfg.vocab().size();
  net.embed = make_linear_w("pred.embed", v, cfg.d_model, rng);
  for (int i = 0; i < cfg.pred_layers; ++i) {
    net.blocks.push_back(
        make_block("pred.b" + std::to_string(i), cfg.d_model, cfg.ffn_hidden, rng));
  }
  net.out_w = make_linear_w("pred.out.w", cfg.d_model, v, rng);
  net.out_b = make_zeros("pred.out.b", 1, v);
  return net;
}

}  // namespace

LsTransducer LsTransducer::init(const ModelConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.init_seed);
  LsTransducer m;
  m.cfg = cfg;
  const int dm = cfg.d_model;
  m.enc_in_w = make_linear_w("enc.in.w", cfg.input_dim, dm, &rng);
  m.enc_in_b = make_zeros("enc.in.b", 1, dm);
  for (int i = 0; i < cfg.enc_layers; ++i) {
    m.enc_blocks.push_back(
        make_block("enc.b" + std::to_string(i), dm, cfg.ffn_hidden, &rng));
  }
  m.enc_out_w = make_linear_w("enc.out.w", dm, dm + 1, &rng);
  m.enc_out_b = make_zeros("enc.out.b", 1, dm + 1);
  m.ctc_w = make_linear_w("ctc.w", dm, cfg.vocab().ctc_width(), &rng);
  m.ctc_b = make_zeros("ctc.b", 1, cfg.vocab().ctc_width());
  m.pred = make_prediction_net(cfg, &rng);
  m.aif_key_w = make_linear_w("aif.key.w", dm, dm, &rng);
  m.aif_key_b = make_zeros("aif.key.b", 1, dm);
  m.aif_val_w = make_linear_w("aif.val.w", dm, dm, &rng);
  m.aif_val_b = make_zeros("aif.val.b", 1, dm);
  m.joint_w = make_linear_w("joint.w", dm, cfg.vocab().size(), &rng);
  m.joint_b = make_zeros("joint.b", 1, cfg.vocab().size());
  return m;
}

std::vector<Parameter*> LsTransducer::all_params() {
  std::vector<Parameter*> out;
  out.push_back(&enc_in_w);
  out.push_back(&enc_in_b);
  for (BlockParams& b : enc_blocks) b.collect(&out);
  out.push_back(&enc_out_w);
  out.push_back(&enc_out_b);
  out.push_back(&ctc_w);
  out.push_back(&ctc_b);
  pred.collect(&out);
  out.push_back(&aif_key_w);
  out.push_back(&aif_key_b);
  if (cfg.aif_separate_kv) {
    out.push_back(&aif_val_w);
    out.push_back(&aif_val_b);
  }
  out.push_back(&joint_w);
  out.push_back(&joint_b);
  return out;
}

std::vector<Parameter*> LsTransducer::prediction_params() {
  std::vector<Parameter*> out;
  pred.collect(&out);
  return out;
}

LmModel LmModel::init(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  LmModel lm;
  lm.cfg = cfg;
  lm.net = make_prediction_net(cfg, &rng);
  return lm;
}

std::vector<Parameter*> LmModel::params() {
  std::vector<Parameter*> out;
  net.collect(&out);
  return out;
}

// ---- masks and positional encoding ----

Matrix chunk_allow_mask(int frames, int chunk_size) {
  LST_CHECK(chunk_size >= 1, "chunk_allow_mask: chunk_size must be >= 1");
  Matrix allow(frames, frames, 0.0);
  for (int t = 0; t < frames; ++t) {
    int chunk_end = (t / chunk_size + 1) * chunk_size;  // exclusive
    if (chunk_end > frames) chunk_end = frames;
    for (int s = 0; s < chunk_end; ++s) allow.at(t, s) = 1.0;
  }
  return allow;
}

Matrix causal_allow_mask(int rows) {
  Matrix allow(rows, rows, 0.0);
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i <= j; ++i) allow.at(j, i) = 1.0;
  }
  return allow;
}

Matrix positional_encoding(int rows, int d_model) {
  Matrix pe(rows, d_model, 0.0);
  for (int t = 0; t < rows; ++t) {
    for (int i = 0; i < d_model / 2; ++i) {
      double rate = std::pow(10000.0, -2.0 * i / d_model);
      pe.at(t, 2 * i) = std::sin(t * rate);
      pe.at(t, 2 * i + 1) = std::cos(t * rate);
    }
  }
  return pe;
}

// ---- graph builders ----

namespace {

Var linear_t(Tape& tape, Var x, Parameter& w, Parameter& b) {
  return tape.add_row_broadcast(tape.matmul(x, tape.param(w)), tape.param(b));
}

// Pre-LN single-head block: x + Att(LN(x)), then x + FFN(LN(x)).
Var block_forward_t(Tape& tape, BlockParams& p, Var x, const Matrix& allow,
                    int d_model) {
  Var h = tape.layer_norm(x, tape.param(p.ln1_g), tape.param(p.ln1_b));
  Var q = linear_t(tape, h, p.wq, p.bq);
  Var k = linear_t(tape, h, p.wk, p.bk);
  Var v = linear_t(tape, h, p.wv, p.bv);
  Var scores = tape.scale(tape.matmul_nt(q, k), 1.0 / std::sqrt(d_model));
  Var att = tape.matmul(tape.masked_softmax_rows(scores, allow), v);
  x = tape.add(x, linear_t(tape, att, p.wo, p.bo));
  Var h2 = tape.layer_norm(x, tape.param(p.ln2_g), tape.param(p.ln2_b));
  Var f1 = tape.tanh(linear_t(tape, h2, p.w1, p.b1));
  return tape.add(x, linear_t(tape, f1, p.w2, p.b2));
}

}  // namespace

Var encode_t(Tape& tape, LsTransducer& m, const Matrix& frames) {
  LST_CHECK(frames.rows >= 1, "encode: empty input");
  LST_CHECK(frames.cols == m.cfg.input_dim,
            "encode: expected " + std::to_string(m.cfg.input_dim) +
                " feature channels, got " + std::to_string(frames.cols));
  Matrix allow = chunk_allow_mask(frames.rows, m.cfg.chunk_size);
  Var x = linear_t(tape, tape.constant(frames), m.enc_in_w, m.enc_in_b);
  x = tape.add(x, tape.constant(positional_encoding(frames.rows, m.cfg.d_model)));
  for (BlockParams& b : m.enc_blocks) {
    x = block_forward_t(tape, b, x, allow, m.cfg.d_model);
  }
  return linear_t(tape, x, m.enc_out_w, m.enc_out_b);
}

PredOut prediction_forward_t(Tape& tape, const ModelConfig& cfg,
                             PredictionNet& net,
                             const std::vector<int>& in_tokens) {
  LST_CHECK(!in_tokens.empty(), "prediction network: empty input");
  Matrix allow = causal_allow_mask(static_cast<int>(in_tokens.size()));
  Var x = tape.embedding(tape.param(net.embed), in_tokens);
  x = tape.add(x, tape.constant(positional_encoding(
                      static_cast<int>(in_tokens.size()), cfg.d_model)));
  PredOut out;
  out.tap = Var{};
  for (int i = 0; i < static_cast<int>(net.blocks.size()); ++i) {
    x = block_forward_t(tape, net.blocks[static_cast<size_t>(i)], x, allow,
                        cfg.d_model);
    if (i + 1 == cfg.tap_layer) out.tap = x;
  }
  LST_CHECK(out.tap.valid(), "prediction network: tap layer out of range");
  out.logits = linear_t(tape, x, net.out_w, net.out_b);
  return out;
}

PredOut predict_t(Tape& tape, LsTransducer& m,
                  const std::vector<int>& in_tokens) {
  return prediction_forward_t(tape, m.cfg, m.pred, in_tokens);
}

Var joint_t(Tape& tape, LsTransducer& m, Var label_encoding, Var pred_logits) {
  LST_CHECK(tape.val(label_encoding).rows == tape.val(pred_logits).rows,
            "joint: label encoding rows != prediction logit rows");
  Var acoustic = linear_t(tape, label_encoding, m.joint_w, m.joint_b);
  return tape.add(pred_logits, acoustic);
}

Var lm_forward_t(Tape& tape, const ModelConfig& cfg, PredictionNet& net,
                 const std::vector<int>& in_tokens) {
  return prediction_forward_t(tape, cfg, net, in_tokens).logits;
}

// ---- training forward ----

TrainingForward forward_training(Tape& tape, LsTransducer& m,
                                 const std::vector<TrainExample>& batch,
                                 double gamma, double mu) {
  LST_CHECK(!batch.empty(), "forward_training: empty batch");
  const Vocabulary vocab = m.vocab();
  TrainingForward out;
  Var sum_ctc, sum_ce, sum_qua_raw, sum_qua_term;

  for (const TrainExample& ex : batch) {
    LST_CHECK(ex.tokens != nullptr && ex.frames != nullptr,
              "forward_training: null example");
    const std::vector<int>& y = *ex.tokens;
    LST_CHECK(!y.empty(), "forward_training: empty target");
    for (int q : y) {
      LST_CHECK(vocab.is_normal(q), "forward_training: target must contain "
                                    "normal tokens only");
    }
    const int L = static_cast<int>(y.size());
    const int T = ex.frames->rows;

    Var enc = encode_t(tape, m, *ex.frames);
    Var content = tape.slice_cols(enc, 0, m.cfg.d_model);
    Var alpha = tape.sigmoid(tape.slice_cols(enc, m.cfg.d_model, m.cfg.d_model + 1));

    // CTC branch on encoder content.
    Var ctc_lp = tape.log_softmax_rows(linear_t(tape, content, m.ctc_w, m.ctc_b));
    Var l_ctc = ctc::ctc_loss_node(tape, ctc_lp, y, vocab.ctc_blank());

    // Teacher-forced label boundaries from the fire weights; the eos row
    // reads the full horizon.
    const Matrix& alpha_v = tape.val(alpha);
    std::vector<double> alpha_vals(alpha_v.data.begin(), alpha_v.data.end());
    std::vector<int> bounds = align::boundary_table(alpha_vals, L);
    bounds.push_back(T);
    out.boundaries.push_back(bounds);

    // Prediction branch: input (sos, y_1..y_L), one output row per target.
    std::vector<int> in_tokens;
    in_tokens.reserve(y.size() + 1);
    in_tokens.push_back(vocab.eos());  // joint sos/eos symbol
    in_tokens.insert(in_tokens.end(), y.begin(), y.end());
    PredOut po = predict_t(tape, m, in_tokens);

    // Label-level extraction: masked attention over FC-mapped frames.
    Var keys = linear_t(tape, content, m.aif_key_w, m.aif_key_b);
    Var values = m.cfg.aif_separate_kv
                     ? linear_t(tape, content, m.aif_val_w, m.aif_val_b)
                     : keys;
    Matrix allow(L + 1, T, 0.0);
    for (int j = 0; j <= L; ++j) {
      for (int t = 0; t < bounds[static_cast<size_t>(j)]; ++t) {
        allow.at(j, t) = 1.0;
      }
    }
    Var att = tape.masked_softmax_rows(tape.matmul_nt(po.tap, keys), allow);
    Var c = tape.matmul(att, values);

    Var jl = joint_t(tape, m, c, po.logits);
    std::vector<int> ce_targets = y;
    ce_targets.push_back(vocab.eos());
    Var l_ce = tape.cross_entropy_mean(jl, ce_targets);

    Var l_qua = tape.abs(tape.add_const(tape.sum(alpha), -static_cast<double>(L)));
    Var qua_term = tape.scale(l_qua, static_cast<double>(L));

    LossBundle b;
    b.l_ctc = tape.val(l_ctc).data[0];
    b.l_ce = tape.val(l_ce).data[0];
    b.l_qua = tape.val(l_qua).data[0];
    b.qua_term = tape.val(qua_term).data[0];
    b.target_len = L;
    b.gamma = gamma;
    b.mu = mu;
    b.l_all = b.compose();
    out.per_utt.push_back(b);

    sum_ctc = sum_ctc.valid() ? tape.add(sum_ctc, l_ctc) : l_ctc;
    sum_ce = sum_ce.valid() ? tape.add(sum_ce, l_ce) : l_ce;
    sum_qua_raw = sum_qua_raw.valid() ? tape.add(sum_qua_raw, l_qua) : l_qua;
    sum_qua_term = sum_qua_term.valid() ? tape.add(sum_qua_term, qua_term) : qua_term;
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Var mean_ctc = tape.scale(sum_ctc, inv_b);
  Var mean_ce = tape.scale(sum_ce, inv_b);
  Var mean_qua_raw = tape.scale(sum_qua_raw, inv_b);
  Var mean_qua_term = tape.scale(sum_qua_term, inv_b);
  out.loss = tape.add(tape.add(tape.scale(mean_ctc, gamma),
                               tape.scale(mean_ce, 1.0 - gamma)),
                      tape.scale(mean_qua_term, mu));

  out.batch.l_ctc = tape.val(mean_ctc).data[0];
  out.batch.l_ce = tape.val(mean_ce).data[0];
  out.batch.l_qua = tape.val(mean_qua_raw).data[0];
  out.batch.qua_term = tape.val(mean_qua_term).data[0];
  out.batch.target_len = batch.size() == 1 ? out.per_utt[0].target_len : 0;
  out.batch.gamma = gamma;
  out.batch.mu = mu;
  out.batch.l_all = tape.val(out.loss).data[0];
  return out;
}

// ---- checkpoints ----

namespace {

constexpr const char* kMagic = "LST_CHECKPOINT";
constexpr int kFormatVersion = 1;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::pair<std::string, std::string>> config_kv(
    const ModelConfig& c) {
  return {
      {"input_dim", std::to_string(c.input_dim)},
      {"d_model", std::to_string(c.d_model)},
      {"enc_layers", std::to_string(c.enc_layers)},
      {"pred_layers", std::to_string(c.pred_layers)},
      {"tap_layer", std::to_string(c.tap_layer)},
      {"ffn_hidden", std::to_string(c.ffn_hidden)},
      {"num_normal", std::to_string(c.num_normal)},
      {"chunk_size", std::to_string(c.chunk_size)},
      {"gamma", fmt_double(c.gamma)},
      {"mu", fmt_double(c.mu)},
      {"aif_separate_kv", c.aif_separate_kv ? "1" : "0"},
      {"init_seed", std::to_string(c.init_seed)},
  };
}

ModelConfig config_from_kv(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    LST_CHECK(it != kv.end(), "checkpoint: missing config key '" + key + "'");
    return it->second;
  };
  c.input_dim = std::stoi(get("input_dim"));
  c.d_model = std::stoi(get("d_model"));
  c.enc_layers = std::stoi(get("enc_layers"));
  c.pred_layers = std::stoi(get("pred_layers"));
  c.tap_layer = std::stoi(get("tap_layer"));
  c.ffn_hidden = std::stoi(get("ffn_hidden"));
  c.num_normal = std::stoi(get("num_normal"));
  c.chunk_size = std::stoi(get("chunk_size"));
  c.gamma = std::stod(get("gamma"));
  c.mu = std::stod(get("mu"));
  c.aif_separate_kv = get("aif_separate_kv") == "1";
  c.init_seed = std::stoull(get("init_seed"));
  return c;
}

static_assert(sizeof(double) == 8, "checkpoint format assumes 8-byte doubles");

bool host_is_little_endian() {
  const uint16_t probe = 1;
  return *reinterpret_cast<const uint8_t*>(&probe) == 1;
}

void write_doubles_le(std::ostream& os, const std::vector<double>& v) {
  if (host_is_little_endian()) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
    return;
  }
  for (double d : v) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    os.write(buf, 8);
  }
}

void read_doubles_le(std::istream& is, std::vector<double>* v) {
  if (host_is_little_endian()) {
    is.read(reinterpret_cast<char*>(v->data()),
            static_cast<std::streamsize>(v->size() * sizeof(double)));
    LST_CHECK(is.good(), "checkpoint: truncated tensor payload");
    return;
  }
  for (double& d : *v) {
    char buf[8];
    is.read(buf, 8);
    LST_CHECK(is.good(), "checkpoint: truncated tensor payload");
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<uint64_t>(static_cast<uint8_t>(buf[i])) << (8 * i);
    }
    std::memcpy(&d, &bits, 8);
  }
}

void save_checkpoint(const std::string& path, const std::string& kind,
                     const ModelConfig& cfg,
                     const std::vector<const Parameter*>& tensors) {
  std::ofstream os(path, std::ios::binary);
  LST_CHECK(os.good(), "checkpoint: cannot open '" + path + "' for writing");
  os << kMagic << " " << kFormatVersion << "\n";
  os << "kind " << kind << "\n";
  auto kv = config_kv(cfg);
  os << "config " << kv.size() << "\n";
  for (const auto& [k, v] : kv) os << k << " " << v << "\n";
  os << "tensors " << tensors.size() << "\n";
  for (const Parameter* p : tensors) {
    os << p->name << " " << p->value.rows << " " << p->value.cols << "\n";
  }
  os << "DATA\n";
  for (const Parameter* p : tensors) write_doubles_le(os, p->value.data);
  LST_CHECK(os.good(), "checkpoint: write failed for '" + path + "'");
}

struct RawCheckpoint {
  std::string kind;
  ModelConfig cfg;
  std::vector<std::pair<std::string, Matrix>> tensors;
};

RawCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  LST_CHECK(is.good(), "checkpoint: cannot open '" + path + "'");
  std::string magic;
  int version = 0;
  is >> magic >> version;
  LST_CHECK(magic == kMagic, "checkpoint: bad magic in '" + path + "'");
  LST_CHECK(version == kFormatVersion,
            "checkpoint: unsupported format version " + std::to_string(version));
  RawCheckpoint out;
  std::string word;
  is >> word;
  LST_CHECK(word == "kind", "checkpoint: expected 'kind'");
  is >> out.kind;
  size_t n_cfg = 0;
  is >> word >> n_cfg;
  LST_CHECK(word == "config", "checkpoint: expected 'config'");
  std::map<std::string, std::string> kv;
  for (size_t i = 0; i < n_cfg; ++i) {
    std::string k, v;
    is >> k >> v;
    kv[k] = v;
  }
  out.cfg = config_from_kv(kv);
  size_t n_tensors = 0;
  is >> word >> n_tensors;
  LST_CHECK(word == "tensors", "checkpoint: expected 'tensors'");
  for (size_t i = 0; i < n_tensors; ++i) {
    std::string name;
    int rows = 0, cols = 0;
    is >> name >> rows >> cols;
    LST_CHECK(is.good() && rows >= 0 && cols >= 0,
              "checkpoint: bad tensor header");
    out.tensors.emplace_back(name, Matrix(rows, cols, 0.0));
  }
  is >> word;
  LST_CHECK(word == "DATA", "checkpoint: expected 'DATA'");
  is.get();  // consume the newline before the payload
  for (auto& [name, mat] : out.tensors) read_doubles_le(is, &mat.data);
  return out;
}

void fill_params_by_name(const RawCheckpoint& raw,
                         const std::vector<Parameter*>& params) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& [name, mat] : raw.tensors) by_name[name] = &mat;
  LST_CHECK(by_name.size() == params.size(),
            "checkpoint: tensor count mismatch (file has " +
                std::to_string(by_name.size()) + ", model expects " +
                std::to_string(params.size()) + ")");
  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    LST_CHECK(it != by_name.end(),
              "checkpoint: missing tensor '" + p->name + "'");
    LST_CHECK(it->second->same_shape(p->value),
              "checkpoint: shape mismatch for '" + p->name + "'");
    p->value = *it->second;
    p->zero_grad();
  }
}

}  // namespace

void save_model(const std::string& path, const LsTransducer& m) {
  std::vector<const Parameter*> tensors;
  for (Parameter* p : const_cast<LsTransducer&>(m).all_params()) {
    tensors.push_back(p);
  }
  save_checkpoint(path, "model", m.cfg, tensors);
}

LsTransducer load_model(const std::string& path) {
  RawCheckpoint raw = load_checkpoint(path);
  LST_CHECK(raw.kind == "model",
            "checkpoint: '" + path + "' is not a model checkpoint");
  LsTransducer m = LsTransducer::init(raw.cfg);
  fill_params_by_name(raw, m.all_params());
  return m;
}

void save_lm(const std::string& path, const LmModel& lm) {
  std::vector<const Parameter*> tensors;
  for (Parameter* p : const_cast<LmModel&>(lm).params()) tensors.push_back(p);
  save_checkpoint(path, "lm", lm.cfg, tensors);
}

LmModel load_lm(const std::string& path) {
  RawCheckpoint raw = load_checkpoint(path);
  LST_CHECK(raw.kind == "lm", "checkpoint: '" + path + "' is not an LM checkpoint");
  LmModel lm = LmModel::init(raw.cfg, raw.cfg.init_seed);
  fill_params_by_name(raw, lm.params());
  return lm;
}

void load_lm_into_model(LsTransducer* m, const LmModel& lm) {
  LST_CHECK(m != nullptr, "load_lm_into_model: null model");
  LST_CHECK(lm.cfg.num_normal == m->cfg.num_normal,
            "load_lm_into_model: vocabulary mismatch");
  LST_CHECK(lm.cfg.d_model == m->cfg.d_model &&
                lm.cfg.pred_layers == m->cfg.pred_layers &&
                lm.cfg.ffn_hidden == m->cfg.ffn_hidden,
            "load_lm_into_model: prediction-network shape mismatch");
  std::vector<Parameter*> dst = m->prediction_params();
  std::vector<Parameter*> src = const_cast<LmModel&>(lm).params();
  LST_CHECK(dst.size() == src.size(), "load_lm_into_model: parameter count mismatch");
  for (size_t i = 0; i < dst.size(); ++i) {
    LST_CHECK(dst[i]->value.same_shape(src[i]->value),
              "load_lm_into_model: shape mismatch for '" + dst[i]->name + "'");
    dst[i]->value = src[i]->value;
    dst[i]->zero_grad();
  }
}

}  // namespace lst::model
