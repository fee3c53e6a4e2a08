// Copyright 2026  The tlab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TLAB_DATA_H_
#define TLAB_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tlab/tensor.h"

namespace tlab {

/// Ordered token inventory. Real tokens occupy ids [0, V); id V is reserved
/// and plays three context-dependent roles that never coexist on one axis:
/// blank on lattice outputs, end-of-sequence on language-model outputs, and
/// start-of-sequence on decoder embedding inputs.
struct Vocabulary {
  std::vector<std::string> symbols;

  int64_t size() const { return static_cast<int64_t>(symbols.size()); }
  int blank_id() const { return static_cast<int>(symbols.size()); }
  int eos_id() const { return static_cast<int>(symbols.size()); }
  int sos_id() const { return static_cast<int>(symbols.size()); }
  int unk_id() const;  // index of "<unk>", or -1 when absent
  int find(const std::string& symbol) const;

  /// True when every symbol except "<unk>" is one byte long; tokenize() then
  /// splits text into characters (skipping whitespace) instead of words.
  bool char_level() const;

  void validate() const;  // unique, non-empty symbols

  /// One symbol per line; the id is the line number.
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  /// "w00", "w01", ... plus a trailing "<unk>".
  static Vocabulary toy(int64_t size);
};

struct TokenizeReport {
  int64_t oov_count = 0;
};

/// Maps text to token ids. Out-of-vocabulary symbols map to "<unk>" and are
/// counted; if the vocabulary has no "<unk>" they are an error.
std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab,
                          TokenizeReport* report = nullptr);
std::string detokenize(const std::vector<int>& tokens, const Vocabulary& vocab);

struct Utterance {
  std::string id;
  Tensor feats;                // [T, feat_dim]
  std::vector<int> transcript;  // ids in [0, V)
};

struct TextCorpus {
  std::vector<std::vector<int>> sentences;
};

/// Synthetic domain: a bigram language over the vocabulary plus an acoustic
/// channel that renders each token as a run of noisy prototype frames.
/// transition is [(V+1) x (V+1)]: row i < V conditions on token i, row V is
/// the sentence start; column j < V emits token j, column V ends the
/// sentence. Rows sum to 1 and the start row gives no mass to the end column.
struct DomainSpec {
  uint64_t seed = 1;
  int64_t vocab_size = 0;
  int64_t feat_dim = 0;
  Tensor transition;            // [(V+1), (V+1)]
  Tensor prototypes;            // [V, feat_dim]
  int64_t frames_per_token_min = 2;
  int64_t frames_per_token_max = 4;
  double noise_scale = 0.1;
  int64_t max_len = 60;  // hard stop; forces the end column

  void validate() const;
};

/// Random domain with mean sentence length roughly avg_len.
DomainSpec make_domain_spec(uint64_t seed, int64_t vocab_size, int64_t feat_dim, double avg_len);

/// Same acoustics, language statistics blended by `shift` in [0,1] toward an
/// independently seeded transition matrix: shift=0 is the identity, shift=1
/// replaces the rows outright.
DomainSpec make_shifted_domain(const DomainSpec& src, double shift);

struct GeneratedCorpus {
  std::vector<Utterance> utterances;
  TextCorpus text;
};

/// Deterministic per (spec.seed, utterance index); ids are prefix + index.
GeneratedCorpus generate_domain(const DomainSpec& spec, int64_t n_utts,
                                const std::string& id_prefix);

struct PaddedBatch {
  Tensor feats;                            // [B, T_max, feat_dim], zero padded
  std::vector<int64_t> frame_lengths;      // per-sequence T
  std::vector<std::vector<int>> targets;   // per-sequence labels (length U)
  std::vector<std::string> ids;
};

/// Greedy packing: consecutive utterances share a batch while the padded
/// frame total stays within max_frames. A single utterance longer than
/// max_frames is rejected with its id.
std::vector<PaddedBatch> batchify(const std::vector<Utterance>& utts, int64_t max_frames);

// --- on-disk formats ---------------------------------------------------
// Manifest: one utterance per line, "id<TAB>feature_path<TAB>transcript".
// Features: one container per corpus, tensors keyed by utterance id.
// Text corpus: one sentence per line, UTF-8.

/// Writes <stem>.tsv, <stem>.feats and <stem>.txt.
void write_corpus(const std::string& stem, const std::vector<Utterance>& utts,
                  const Vocabulary& vocab);
std::vector<Utterance> load_manifest(const std::string& manifest_path, const Vocabulary& vocab);

void write_text_corpus(const std::string& path, const TextCorpus& corpus, const Vocabulary& vocab);
TextCorpus load_text_corpus(const std::string& path, const Vocabulary& vocab,
                            TokenizeReport* report = nullptr);

}  // namespace tlab

#endif  // TLAB_DATA_H_
