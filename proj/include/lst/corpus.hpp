// lst/corpus.hpp
//
// Synthetic two-domain speech corpus.
//
// Every normal token owns a fixed emission vector drawn once from a shared
// seed, so the two stock domains have identical acoustics and differ only in
// their text prior (bigram table + which tokens appear): exactly the setting
// text-only adaptation is meant to exploit.  An utterance expands each token
// to a few frames of its emission vector plus isotropic noise, and is fully
// reproducible from (spec, seed, id).

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
#include <string>
#include <vector>

#include "lst/matrix.hpp"
#include "lst/vocab.hpp"

namespace lst::corpus {

// Master seed for the per-token emission vectors.  Both stock domains use
// it, which is what makes their acoustics identical.
inline constexpr uint64_t kEmissionSeed = 777;

// One emission vector per normal token: num_normal x input_dim, entries
// standard normal from Rng(seed).
Matrix emission_vectors(int num_normal, int input_dim, uint64_t seed);

struct DomainSpec {
  std::string name;
  std::vector<int> tokens;      // subset of normal token ids, no duplicates
  std::vector<double> initial;  // first-token distribution over the subset
  Matrix transition;            // K x K bigram table, rows sum to 1
  std::vector<int> dur_mean;    // per subset token, frames, >= 1
  int dur_jitter = 1;           // duration +/- uniform jitter, frames
  double noise_sigma = 0.3;     // added to every frame entry
  int len_min = 3;              // tokens per utterance
  int len_max = 8;
  int input_dim = 8;
  int num_normal = 25;
  uint64_t emission_seed = kEmissionSeed;

  void validate() const;  // degenerate tables/durations are errors
};

struct SyntheticUtterance {
  std::string id;
  std::vector<int> tokens;           // normal token ids
  Matrix frames;                     // T x input_dim
  std::vector<int> token_end_frames; // 1-based true end frame per token
};

// Stock domains: "source" walks a near-uniform bigram table over tokens
// 1..20; "target" walks a strongly skewed table over all 25 tokens, so five
// tokens never occur in source text yet share the acoustic space.
DomainSpec make_source_domain(double noise_sigma = 0.3, int dur_jitter = 1);
DomainSpec make_target_domain(double noise_sigma = 0.3, int dur_jitter = 1);

// Deterministic per-utterance randomness: the stream depends only on
// (seed, id).
uint64_t utterance_seed(uint64_t seed, const std::string& id);

// Token walk only (for text corpora).
std::vector<int> synth_tokens(const DomainSpec& spec, uint64_t seed,
                              const std::string& id);

// Full utterance: token walk + duration-expanded noisy emission frames.
SyntheticUtterance synth_utterance(const DomainSpec& spec,
                                   const Matrix& emissions, uint64_t seed,
                                   const std::string& id);

// n utterances with ids "<spec.name>-<tag>-<index>".
std::vector<SyntheticUtterance> gen_split(const DomainSpec& spec,
                                          const std::string& tag, int n,
                                          uint64_t seed);

// n token sequences with ids "<spec.name>-<tag>-<index>" (text only).
std::vector<std::vector<int>> gen_texts(const DomainSpec& spec,
                                        const std::string& tag, int n,
                                        uint64_t seed);

// ---- on-disk format ----
//
// <dir>/<name>.manifest   one line per utterance: id then token names
// <dir>/<name>.align      one line per utterance: id then 1-based end frames
// <dir>/<id>.frames       text header "T D\n" + T*D little-endian doubles

void save_corpus(const std::string& dir, const std::string& name,
                 const std::vector<SyntheticUtterance>& utts,
                 const Vocabulary& vocab);
std::vector<SyntheticUtterance> load_corpus(const std::string& dir,
                                            const std::string& name,
                                            const Vocabulary& vocab);

// Text corpora: one utterance per line, whitespace-separated token names.
void save_texts(const std::string& path,
                const std::vector<std::vector<int>>& texts,
                const Vocabulary& vocab);
std::vector<std::vector<int>> load_texts(const std::string& path,
                                         const Vocabulary& vocab);

}  // namespace lst::corpus
