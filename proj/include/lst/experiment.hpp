// lst/experiment.hpp
//
// End-to-end experiment pipeline: synthesize the two-domain corpus, pretrain
// the LM, train the transducer on source audio, decode, adapt on target
// text, decode again (optionally with shallow fusion), and emit a structured
// JSON report.  Every stage is timed, but the timings live in a separate
// report field so the rest of the report is byte-reproducible for a fixed
// config + seed.

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

#include <string>
#include <vector>

#include "lst/config_file.hpp"
#include "lst/corpus.hpp"
#include "lst/decoder.hpp"
#include "lst/model.hpp"
#include "lst/wer.hpp"

namespace lst::experiment {

// One decoded utterance, as serialized to the hypotheses JSONL files.
struct HypRecord {
  std::string id;
  std::vector<int> tokens;
  double score = 0.0;
  std::vector<decode::TokenEmission> emissions;
};

std::vector<HypRecord> decode_corpus(
    model::LsTransducer& m,
    const std::vector<corpus::SyntheticUtterance>& utts,
    const decode::DecodeConfig& dcfg, model::LmModel* fusion_lm = nullptr);

// JSONL: one object per line with fields id, tokens (names), score,
// emissions ([token name, boundary] pairs).
void write_hypotheses_jsonl(const std::string& path,
                            const std::vector<HypRecord>& hyps,
                            const Vocabulary& vocab);
std::vector<HypRecord> read_hypotheses_jsonl(const std::string& path,
                                             const Vocabulary& vocab);

// Signed per-token emission latency (decode boundary minus true end frame),
// collected over positions where hypothesis and reference tokens agree.
struct LatencyStats {
  double mean = 0.0;
  int min = 0;
  int max = 0;
  long long count = 0;
};
LatencyStats emission_latency(
    const std::vector<corpus::SyntheticUtterance>& refs,
    const std::vector<HypRecord>& hyps);

wer::WerStats score_hypotheses(
    const std::vector<corpus::SyntheticUtterance>& refs,
    const std::vector<HypRecord>& hyps);

struct ExperimentOutcome {
  bool ok = false;               // every stage succeeded
  std::string report_json;       // the full report, serialized
  std::string report_path;       // <out_dir>/report.json
};

// Runs the full pipeline under out_dir.  The report is written regardless of
// failures; a failed stage is marked in it, later stages are marked skipped,
// and artifacts produced so far stay on disk.
ExperimentOutcome run_experiment(const config::ConfigMap& cfg,
                                 const std::string& out_dir);

}  // namespace lst::experiment
