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

#include "tlab/data.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tlab/checkpoint.h"
#include "tlab/rng.h"

namespace tlab {

namespace {
constexpr const char* kUnkSymbol = "<unk>";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string pad_index(int64_t i) {
  std::string s = std::to_string(i);
  while (s.size() < 6) s.insert(s.begin(), '0');
  return s;
}
}  // namespace

int Vocabulary::unk_id() const {
  for (size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] == kUnkSymbol) return static_cast<int>(i);
  }
  return -1;
}

int Vocabulary::find(const std::string& symbol) const {
  for (size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] == symbol) return static_cast<int>(i);
  }
  return -1;
}

bool Vocabulary::char_level() const {
  if (symbols.empty()) return false;
  bool saw_char = false;
  for (const std::string& s : symbols) {
    if (s == kUnkSymbol) continue;
    if (s.size() != 1) return false;
    saw_char = true;
  }
  return saw_char;
}

void Vocabulary::validate() const {
  if (symbols.empty()) throw std::invalid_argument("Vocabulary: empty symbol list");
  std::set<std::string> seen;
  for (const std::string& s : symbols) {
    if (s.empty()) throw std::invalid_argument("Vocabulary: empty symbol");
    for (char c : s) {
      if (is_space(c)) throw std::invalid_argument("Vocabulary: symbol '" + s + "' contains whitespace");
    }
    if (!seen.insert(s).second) throw std::invalid_argument("Vocabulary: duplicate symbol '" + s + "'");
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("Vocabulary: cannot open '" + path + "'");
  Vocabulary v;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    v.symbols.push_back(line);
  }
  v.validate();
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("Vocabulary: cannot write '" + path + "'");
  for (const std::string& s : symbols) f << s << "\n";
}

Vocabulary Vocabulary::toy(int64_t size) {
  if (size < 2) throw std::invalid_argument("Vocabulary::toy: need at least 2 symbols");
  Vocabulary v;
  for (int64_t i = 0; i + 1 < size; ++i) {
    std::string s = std::to_string(i);
    while (s.size() < 2) s.insert(s.begin(), '0');
    v.symbols.push_back("w" + s);
  }
  v.symbols.push_back(kUnkSymbol);
  return v;
}

std::vector<int> tokenize(const std::string& text, const Vocabulary& vocab,
                          TokenizeReport* report) {
  std::vector<std::string> pieces;
  if (vocab.char_level()) {
    for (char c : text) {
      if (!is_space(c)) pieces.emplace_back(1, c);
    }
  } else {
    std::istringstream is(text);
    std::string word;
    while (is >> word) pieces.push_back(word);
  }

  std::vector<int> out;
  out.reserve(pieces.size());
  for (const std::string& piece : pieces) {
    int id = vocab.find(piece);
    if (id < 0) {
      id = vocab.unk_id();
      if (id < 0) {
        throw std::invalid_argument("tokenize: '" + piece + "' is out of vocabulary and no " +
                                    kUnkSymbol + " symbol exists");
      }
      if (report != nullptr) ++report->oov_count;
    }
    out.push_back(id);
  }
  return out;
}

std::string detokenize(const std::vector<int>& tokens, const Vocabulary& vocab) {
  std::string out;
  const bool chars = vocab.char_level();
  for (size_t i = 0; i < tokens.size(); ++i) {
    const int id = tokens[i];
    if (id < 0 || id >= vocab.size()) {
      throw std::invalid_argument("detokenize: id " + std::to_string(id) + " outside vocabulary");
    }
    if (!chars && i > 0) out += ' ';
    out += vocab.symbols[static_cast<size_t>(id)];
  }
  return out;
}

void DomainSpec::validate() const {
  const int64_t V = vocab_size;
  if (V < 2) throw std::invalid_argument("DomainSpec: vocab_size must be >= 2");
  if (feat_dim < 1) throw std::invalid_argument("DomainSpec: feat_dim must be >= 1");
  if (frames_per_token_min < 1 || frames_per_token_max < frames_per_token_min) {
    throw std::invalid_argument("DomainSpec: invalid frames-per-token range");
  }
  if (noise_scale < 0.0) throw std::invalid_argument("DomainSpec: negative noise_scale");
  if (max_len < 1) throw std::invalid_argument("DomainSpec: max_len must be >= 1");
  if (transition.shape() != std::vector<int64_t>{V + 1, V + 1}) {
    throw std::invalid_argument("DomainSpec: transition shape " + transition.shape_str() +
                                " does not match [(V+1), (V+1)]");
  }
  if (prototypes.shape() != std::vector<int64_t>{V, feat_dim}) {
    throw std::invalid_argument("DomainSpec: prototypes shape " + prototypes.shape_str() +
                                " does not match [V, feat_dim]");
  }
  for (int64_t r = 0; r <= V; ++r) {
    double sum = 0.0;
    for (int64_t c = 0; c <= V; ++c) {
      const double p = transition.at(r, c);
      if (p < 0.0) throw std::invalid_argument("DomainSpec: negative transition probability");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("DomainSpec: transition row " + std::to_string(r) +
                                  " sums to " + std::to_string(sum));
    }
  }
  if (transition.at(V, V) != 0.0) {
    throw std::invalid_argument("DomainSpec: start row may not end the sentence immediately");
  }
}

DomainSpec make_domain_spec(uint64_t seed, int64_t vocab_size, int64_t feat_dim, double avg_len) {
  if (avg_len < 1.5) throw std::invalid_argument("make_domain_spec: avg_len too small");
  DomainSpec spec;
  spec.seed = seed;
  spec.vocab_size = vocab_size;
  spec.feat_dim = feat_dim;
  spec.transition = Tensor({vocab_size + 1, vocab_size + 1});
  spec.prototypes = Tensor({vocab_size, feat_dim});

  Rng rng = Rng::substream(seed, 0xd0df11);
  const double p_end = 1.0 / avg_len;
  for (int64_t r = 0; r <= vocab_size; ++r) {
    double total = 0.0;
    std::vector<double> w(static_cast<size_t>(vocab_size));
    for (double& x : w) {
      x = std::exp(1.5 * rng.gaussian());
      total += x;
    }
    const double eos = r == vocab_size ? 0.0 : p_end;
    for (int64_t c = 0; c < vocab_size; ++c) {
      spec.transition.at(r, c) = (1.0 - eos) * w[static_cast<size_t>(c)] / total;
    }
    spec.transition.at(r, vocab_size) = eos;
  }
  for (int64_t i = 0; i < spec.prototypes.numel(); ++i) spec.prototypes.at(i) = rng.gaussian();
  spec.validate();
  return spec;
}

DomainSpec make_shifted_domain(const DomainSpec& src, double shift) {
  if (shift < 0.0 || shift > 1.0) {
    throw std::invalid_argument("make_shifted_domain: shift " + std::to_string(shift) +
                                " outside [0, 1]");
  }
  src.validate();
  DomainSpec out = src;
  out.seed = mix_seed(src.seed, 0x5f17ed);

  // Fresh bigram weights per row, keeping each row's end-of-sentence mass, so
  // sentence lengths and the acoustic channel stay identical across domains.
  Rng rng = Rng::substream(src.seed, 0xa17e12);
  const int64_t V = src.vocab_size;
  for (int64_t r = 0; r <= V; ++r) {
    double total = 0.0;
    std::vector<double> w(static_cast<size_t>(V));
    for (double& x : w) {
      x = std::exp(1.5 * rng.gaussian());
      total += x;
    }
    const double eos = src.transition.at(r, V);
    for (int64_t c = 0; c < V; ++c) {
      const double alt = (1.0 - eos) * w[static_cast<size_t>(c)] / total;
      out.transition.at(r, c) = (1.0 - shift) * src.transition.at(r, c) + shift * alt;
    }
    out.transition.at(r, V) = eos;
  }
  out.validate();
  return out;
}

GeneratedCorpus generate_domain(const DomainSpec& spec, int64_t n_utts,
                                const std::string& id_prefix) {
  spec.validate();
  if (n_utts < 1) throw std::invalid_argument("generate_domain: n_utts must be >= 1");
  const int64_t V = spec.vocab_size;
  GeneratedCorpus out;
  out.utterances.reserve(static_cast<size_t>(n_utts));
  out.text.sentences.reserve(static_cast<size_t>(n_utts));

  for (int64_t i = 0; i < n_utts; ++i) {
    Rng rng = Rng::substream(spec.seed, static_cast<uint64_t>(i));
    std::vector<int> tokens;
    int64_t state = V;  // sentence start
    while (static_cast<int64_t>(tokens.size()) < spec.max_len) {
      const int next = rng.categorical(spec.transition.data() + state * (V + 1),
                                       static_cast<int>(V + 1));
      if (next == V) break;
      tokens.push_back(next);
      state = next;
    }

    int64_t total_frames = 0;
    std::vector<int64_t> frames(tokens.size());
    for (size_t k = 0; k < tokens.size(); ++k) {
      frames[k] = rng.uniform_int(spec.frames_per_token_min, spec.frames_per_token_max);
      total_frames += frames[k];
    }
    Tensor feats({total_frames, spec.feat_dim});
    int64_t row = 0;
    for (size_t k = 0; k < tokens.size(); ++k) {
      const double* proto = spec.prototypes.data() + tokens[k] * spec.feat_dim;
      for (int64_t f = 0; f < frames[k]; ++f, ++row) {
        double* dst = feats.data() + row * spec.feat_dim;
        for (int64_t d = 0; d < spec.feat_dim; ++d) {
          dst[d] = proto[d] + spec.noise_scale * rng.gaussian();
        }
      }
    }

    Utterance utt;
    utt.id = id_prefix + pad_index(i);
    utt.feats = std::move(feats);
    utt.transcript = tokens;
    out.text.sentences.push_back(std::move(tokens));
    out.utterances.push_back(std::move(utt));
  }
  return out;
}

std::vector<PaddedBatch> batchify(const std::vector<Utterance>& utts, int64_t max_frames) {
  std::vector<PaddedBatch> batches;
  std::vector<const Utterance*> pending;
  int64_t t_max = 0;

  auto flush = [&] {
    if (pending.empty()) return;
    const int64_t B = static_cast<int64_t>(pending.size());
    const int64_t feat_dim = pending.front()->feats.dim(1);
    PaddedBatch batch;
    batch.feats = Tensor({B, t_max, feat_dim});
    for (int64_t b = 0; b < B; ++b) {
      const Utterance& u = *pending[static_cast<size_t>(b)];
      batch.frame_lengths.push_back(u.feats.dim(0));
      batch.targets.push_back(u.transcript);
      batch.ids.push_back(u.id);
      for (int64_t t = 0; t < u.feats.dim(0); ++t) {
        for (int64_t d = 0; d < feat_dim; ++d) batch.feats.at(b, t, d) = u.feats.at(t, d);
      }
    }
    batches.push_back(std::move(batch));
    pending.clear();
    t_max = 0;
  };

  for (const Utterance& u : utts) {
    const int64_t T = u.feats.dim(0);
    if (T > max_frames) {
      throw std::invalid_argument("batchify: utterance '" + u.id + "' has " + std::to_string(T) +
                                  " frames, above max_frames=" + std::to_string(max_frames));
    }
    const int64_t new_tmax = std::max(t_max, T);
    if (!pending.empty() &&
        (static_cast<int64_t>(pending.size()) + 1) * new_tmax > max_frames) {
      flush();
      pending.push_back(&u);
      t_max = T;
    } else {
      pending.push_back(&u);
      t_max = new_tmax;
    }
  }
  flush();
  return batches;
}

void write_corpus(const std::string& stem, const std::vector<Utterance>& utts,
                  const Vocabulary& vocab) {
  const std::string feats_path = stem + ".feats";
  const std::string feats_name = std::filesystem::path(feats_path).filename().string();

  Container feats;
  feats.metadata["kind"] = "features";
  for (const Utterance& u : utts) feats.tensors.emplace_back(u.id, u.feats);
  write_container(feats_path, feats);

  std::ofstream tsv(stem + ".tsv", std::ios::trunc);
  if (!tsv) throw std::runtime_error("write_corpus: cannot write '" + stem + ".tsv'");
  for (const Utterance& u : utts) {
    tsv << u.id << "\t" << feats_name << "\t" << detokenize(u.transcript, vocab) << "\n";
  }

  std::ofstream txt(stem + ".txt", std::ios::trunc);
  if (!txt) throw std::runtime_error("write_corpus: cannot write '" + stem + ".txt'");
  for (const Utterance& u : utts) txt << detokenize(u.transcript, vocab) << "\n";
}

std::vector<Utterance> load_manifest(const std::string& manifest_path, const Vocabulary& vocab) {
  std::ifstream f(manifest_path);
  if (!f) throw std::runtime_error("load_manifest: cannot open '" + manifest_path + "'");
  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();

  std::vector<Utterance> utts;
  std::map<std::string, Container> feature_files;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw std::runtime_error("load_manifest: " + manifest_path + ":" + std::to_string(lineno) +
                               ": expected 'id<TAB>feats<TAB>transcript'");
    }
    Utterance u;
    u.id = line.substr(0, tab1);
    const std::string feats_rel = line.substr(tab1 + 1, tab2 - tab1 - 1);
    const std::string text = line.substr(tab2 + 1);

    const std::string feats_path = (base / feats_rel).string();
    auto it = feature_files.find(feats_path);
    if (it == feature_files.end()) {
      it = feature_files.emplace(feats_path, read_container(feats_path)).first;
    }
    const Tensor* feats = it->second.find(u.id);
    if (feats == nullptr) {
      throw std::runtime_error("load_manifest: utterance '" + u.id + "' missing from '" +
                               feats_path + "'");
    }
    u.feats = *feats;
    u.transcript = tokenize(text, vocab);
    utts.push_back(std::move(u));
  }
  return utts;
}

void write_text_corpus(const std::string& path, const TextCorpus& corpus,
                       const Vocabulary& vocab) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("write_text_corpus: cannot write '" + path + "'");
  for (const auto& sentence : corpus.sentences) f << detokenize(sentence, vocab) << "\n";
}

TextCorpus load_text_corpus(const std::string& path, const Vocabulary& vocab,
                            TokenizeReport* report) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_text_corpus: cannot open '" + path + "'");
  TextCorpus corpus;
  std::string line;
  while (std::getline(f, line)) {
    std::vector<int> tokens = tokenize(line, vocab, report);
    if (!tokens.empty()) corpus.sentences.push_back(std::move(tokens));
  }
  return corpus;
}

}  // namespace tlab
