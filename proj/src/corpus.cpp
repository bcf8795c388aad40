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

#include "lst/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lst/rng.hpp"

namespace lst::corpus {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

static_assert(sizeof(double) == 8, "frame files assume 8-byte doubles");

void write_le_doubles(std::ofstream& out, const double* p, size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(p),
              static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (size_t i = 0; i < n; ++i) {
      unsigned char b[8];
      std::memcpy(b, &p[i], 8);
      std::reverse(b, b + 8);
      out.write(reinterpret_cast<const char*>(b), 8);
    }
  }
}

void read_le_doubles(std::ifstream& in, double* p, size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(p),
            static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (size_t i = 0; i < n; ++i) {
      unsigned char b[8];
      in.read(reinterpret_cast<char*>(b), 8);
      std::reverse(b, b + 8);
      std::memcpy(&p[i], b, 8);
    }
  }
  // std::istream::read sets failbit on a short read.
  LST_CHECK(!in.fail(), "frame data truncated");
}

}  // namespace

Matrix emission_vectors(int num_normal, int input_dim, uint64_t seed) {
  LST_CHECK(num_normal >= 1 && input_dim >= 1, "bad emission table shape");
  Rng rng(seed);
  Matrix e(num_normal, input_dim);
  for (double& x : e.data) x = rng.normal();
  return e;
}

void DomainSpec::validate() const {
  const int k = static_cast<int>(tokens.size());
  LST_CHECK(k >= 1, "domain has no tokens");
  std::vector<int> sorted = tokens;
  std::sort(sorted.begin(), sorted.end());
  LST_CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            "duplicate token in domain subset");
  for (int t : tokens) {
    LST_CHECK(t >= 0 && t < num_normal, "domain token outside vocabulary");
  }
  LST_CHECK(static_cast<int>(initial.size()) == k, "initial distribution size");
  LST_CHECK(transition.rows == k && transition.cols == k,
            "transition table shape");
  double isum = 0.0;
  for (double p : initial) {
    LST_CHECK(p >= 0.0, "negative initial probability");
    isum += p;
  }
  LST_CHECK(std::fabs(isum - 1.0) <= 1e-9, "initial distribution must sum to 1");
  for (int r = 0; r < k; ++r) {
    double rsum = 0.0;
    for (int c = 0; c < k; ++c) {
      LST_CHECK(transition.at(r, c) >= 0.0, "negative transition probability");
      rsum += transition.at(r, c);
    }
    LST_CHECK(std::fabs(rsum - 1.0) <= 1e-9,
              "transition row " + std::to_string(r) + " must sum to 1");
  }
  LST_CHECK(static_cast<int>(dur_mean.size()) == k, "dur_mean size");
  for (int d : dur_mean) LST_CHECK(d >= 1, "token duration must be >= 1 frame");
  LST_CHECK(dur_jitter >= 0, "negative duration jitter");
  for (int d : dur_mean) {
    LST_CHECK(d - dur_jitter >= 1, "duration jitter can reach 0 frames");
  }
  LST_CHECK(noise_sigma >= 0.0, "negative noise level");
  LST_CHECK(len_min >= 1 && len_max >= len_min, "bad utterance length range");
  LST_CHECK(input_dim >= 1, "bad input_dim");
}

namespace {

// Normalizes rows in place.
void normalize_rows(Matrix* m) {
  for (int r = 0; r < m->rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < m->cols; ++c) s += m->at(r, c);
    for (int c = 0; c < m->cols; ++c) m->at(r, c) /= s;
  }
}

}  // namespace

DomainSpec make_source_domain(double noise_sigma, int dur_jitter) {
  DomainSpec s;
  s.name = "source";
  for (int t = 0; t < 20; ++t) s.tokens.push_back(t);
  const int k = 20;
  s.initial.assign(k, 1.0 / k);
  // Near-uniform bigrams with two mild preferred successors.  Self
  // transitions are zero so targets never contain adjacent repeats, which
  // keeps every utterance CTC-feasible at any frame budget >= token count.
  s.transition = Matrix(k, k, 1.0);
  for (int r = 0; r < k; ++r) {
    s.transition.at(r, r) = 0.0;
    s.transition.at(r, (r + 1) % k) += 2.0;
    s.transition.at(r, (r + 7) % k) += 1.0;
  }
  normalize_rows(&s.transition);
  s.dur_mean.resize(k);
  for (int i = 0; i < k; ++i) s.dur_mean[static_cast<size_t>(i)] = 2 + (i % 3);
  s.dur_jitter = dur_jitter;
  s.noise_sigma = noise_sigma;
  s.validate();
  return s;
}

DomainSpec make_target_domain(double noise_sigma, int dur_jitter) {
  DomainSpec s;
  s.name = "target";
  for (int t = 0; t < 25; ++t) s.tokens.push_back(t);
  const int k = 25;
  // First token skews toward the five tokens the source text never uses.
  s.initial.assign(k, 0.5);
  for (int t = 20; t < 25; ++t) s.initial[static_cast<size_t>(t)] = 2.0;
  double isum = 0.0;
  for (double p : s.initial) isum += p;
  for (double& p : s.initial) p /= isum;
  // Strongly peaked bigrams (a different text prior than source), again with
  // zero self transitions; novel-token columns get extra mass so adaptation
  // text is dense in them.
  s.transition = Matrix(k, k, 0.2);
  for (int r = 0; r < k; ++r) {
    s.transition.at(r, (3 * r + 1) % k) += 6.0;
    s.transition.at(r, (r + 11) % k) += 3.0;
    for (int c = 20; c < 25; ++c) s.transition.at(r, c) += 0.6;
    s.transition.at(r, r) = 0.0;
  }
  normalize_rows(&s.transition);
  s.dur_mean.resize(k);
  for (int i = 0; i < k; ++i) s.dur_mean[static_cast<size_t>(i)] = 2 + (i % 3);
  s.dur_jitter = dur_jitter;
  s.noise_sigma = noise_sigma;
  s.validate();
  return s;
}

uint64_t utterance_seed(uint64_t seed, const std::string& id) {
  return splitmix64(seed ^ splitmix64(fnv1a(id)));
}

namespace {

std::vector<int> walk_tokens(const DomainSpec& spec, Rng* rng) {
  int len = rng->uniform_int(spec.len_min, spec.len_max);
  std::vector<int> idx;
  idx.reserve(static_cast<size_t>(len));
  idx.push_back(rng->weighted_index(spec.initial));
  for (int i = 1; i < len; ++i) {
    const double* row = spec.transition.row(idx.back());
    std::vector<double> w(row, row + spec.transition.cols);
    idx.push_back(rng->weighted_index(w));
  }
  std::vector<int> tokens;
  tokens.reserve(idx.size());
  for (int i : idx) tokens.push_back(spec.tokens[static_cast<size_t>(i)]);
  return tokens;
}

}  // namespace

std::vector<int> synth_tokens(const DomainSpec& spec, uint64_t seed,
                              const std::string& id) {
  spec.validate();
  Rng rng(utterance_seed(seed, id));
  return walk_tokens(spec, &rng);
}

SyntheticUtterance synth_utterance(const DomainSpec& spec,
                                   const Matrix& emissions, uint64_t seed,
                                   const std::string& id) {
  spec.validate();
  LST_CHECK(emissions.rows == spec.num_normal &&
                emissions.cols == spec.input_dim,
            "emission table shape mismatch");
  Rng rng(utterance_seed(seed, id));
  SyntheticUtterance u;
  u.id = id;
  u.tokens = walk_tokens(spec, &rng);

  std::vector<int> subset_index(static_cast<size_t>(spec.num_normal), -1);
  for (size_t i = 0; i < spec.tokens.size(); ++i) {
    subset_index[static_cast<size_t>(spec.tokens[i])] = static_cast<int>(i);
  }
  std::vector<int> durations;
  durations.reserve(u.tokens.size());
  int total = 0;
  for (int tok : u.tokens) {
    int si = subset_index[static_cast<size_t>(tok)];
    int d = spec.dur_mean[static_cast<size_t>(si)];
    if (spec.dur_jitter > 0) {
      d += rng.uniform_int(-spec.dur_jitter, spec.dur_jitter);
    }
    LST_CHECK(d >= 1, "sampled duration below 1 frame");
    durations.push_back(d);
    total += d;
    u.token_end_frames.push_back(total);
  }
  u.frames = Matrix(total, spec.input_dim);
  int t = 0;
  for (size_t i = 0; i < u.tokens.size(); ++i) {
    const double* e = emissions.row(u.tokens[i]);
    for (int rep = 0; rep < durations[i]; ++rep, ++t) {
      double* f = u.frames.row(t);
      for (int c = 0; c < spec.input_dim; ++c) {
        f[c] = e[c];
        if (spec.noise_sigma > 0.0) f[c] += spec.noise_sigma * rng.normal();
      }
    }
  }
  return u;
}

std::vector<SyntheticUtterance> gen_split(const DomainSpec& spec,
                                          const std::string& tag, int n,
                                          uint64_t seed) {
  LST_CHECK(n >= 1, "split size must be >= 1");
  Matrix emissions =
      emission_vectors(spec.num_normal, spec.input_dim, spec.emission_seed);
  std::vector<SyntheticUtterance> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string id = spec.name + "-" + tag + "-" + std::to_string(i);
    out.push_back(synth_utterance(spec, emissions, seed, id));
  }
  return out;
}

std::vector<std::vector<int>> gen_texts(const DomainSpec& spec,
                                        const std::string& tag, int n,
                                        uint64_t seed) {
  LST_CHECK(n >= 1, "text corpus size must be >= 1");
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string id = spec.name + "-" + tag + "-" + std::to_string(i);
    out.push_back(synth_tokens(spec, seed, id));
  }
  return out;
}

void save_corpus(const std::string& dir, const std::string& name,
                 const std::vector<SyntheticUtterance>& utts,
                 const Vocabulary& vocab) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / (name + ".manifest"));
  std::ofstream align(fs::path(dir) / (name + ".align"));
  LST_CHECK(manifest.good() && align.good(),
            "cannot write corpus files under " + dir);
  for (const SyntheticUtterance& u : utts) {
    manifest << u.id;
    for (int t : u.tokens) manifest << ' ' << vocab.name(t);
    manifest << '\n';
    align << u.id;
    for (int e : u.token_end_frames) align << ' ' << e;
    align << '\n';
    std::ofstream fr(fs::path(dir) / (u.id + ".frames"), std::ios::binary);
    LST_CHECK(fr.good(), "cannot write frame file for " + u.id);
    fr << u.frames.rows << ' ' << u.frames.cols << '\n';
    write_le_doubles(fr, u.frames.data.data(), u.frames.data.size());
    LST_CHECK(fr.good(), "short write on frame file for " + u.id);
  }
  LST_CHECK(manifest.good() && align.good(), "short write on corpus manifest");
}

std::vector<SyntheticUtterance> load_corpus(const std::string& dir,
                                            const std::string& name,
                                            const Vocabulary& vocab) {
  namespace fs = std::filesystem;
  std::ifstream manifest(fs::path(dir) / (name + ".manifest"));
  LST_CHECK(manifest.good(), "cannot open manifest " + name + " under " + dir);
  std::vector<SyntheticUtterance> out;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    SyntheticUtterance u;
    ss >> u.id;
    std::string tok;
    while (ss >> tok) u.tokens.push_back(vocab.id(tok));
    LST_CHECK(!u.id.empty() && !u.tokens.empty(),
              "malformed manifest line: " + line);
    std::ifstream fr(fs::path(dir) / (u.id + ".frames"), std::ios::binary);
    LST_CHECK(fr.good(), "cannot open frame file for " + u.id);
    int r = 0, c = 0;
    fr >> r >> c;
    fr.get();  // the newline after the shape header
    LST_CHECK(fr.good() && r >= 1 && c >= 1,
              "bad frame file header for " + u.id);
    u.frames = Matrix(r, c);
    read_le_doubles(fr, u.frames.data.data(), u.frames.data.size());
    LST_CHECK(!fr.fail(), "frame file truncated for " + u.id);
    out.push_back(std::move(u));
  }
  std::ifstream align(fs::path(dir) / (name + ".align"));
  if (align.good()) {
    size_t i = 0;
    while (std::getline(align, line)) {
      if (line.empty()) continue;
      LST_CHECK(i < out.size(), "alignment file longer than manifest");
      std::istringstream ss(line);
      std::string id;
      ss >> id;
      LST_CHECK(id == out[i].id, "alignment/manifest id mismatch: " + id);
      int e = 0;
      while (ss >> e) out[i].token_end_frames.push_back(e);
      LST_CHECK(out[i].token_end_frames.size() == out[i].tokens.size(),
                "alignment length mismatch for " + id);
      ++i;
    }
  }
  return out;
}

void save_texts(const std::string& path,
                const std::vector<std::vector<int>>& texts,
                const Vocabulary& vocab) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  LST_CHECK(out.good(), "cannot write text file " + path);
  for (const std::vector<int>& t : texts) {
    for (size_t i = 0; i < t.size(); ++i) {
      if (i) out << ' ';
      out << vocab.name(t[i]);
    }
    out << '\n';
  }
  LST_CHECK(out.good(), "short write on text file " + path);
}

std::vector<std::vector<int>> load_texts(const std::string& path,
                                         const Vocabulary& vocab) {
  std::ifstream in(path);
  LST_CHECK(in.good(), "cannot open text file " + path);
  std::vector<std::vector<int>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<int> toks;
    std::string tok;
    while (ss >> tok) toks.push_back(vocab.id(tok));
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

}  // namespace lst::corpus
