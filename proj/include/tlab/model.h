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

#ifndef TLAB_MODEL_H_
#define TLAB_MODEL_H_

#include <string>
#include <utility>
#include <vector>

#include "tlab/params.h"
#include "tlab/rnnt_loss.h"
#include "tlab/tensor.h"

namespace tlab {

// Three Transducer variants over a shared feed-forward encoder:
//
//   NT:   label recurrence g_u; joint cell tanh(P_e f_t + P_d g_u) projected
//         to V+1 classes.
//   FNT:  a blank branch (label recurrence + NT-style joint with scalar
//         output) plus a standalone vocabulary language model; the encoder is
//         projected straight to V and added to the LM log-probabilities at
//         the logit level; blank and vocabulary logits are concatenated and
//         normalized together.
//   IFNT: blank branch as in FNT; the vocabulary branch applies a sigmoid to
//         the LM hidden state, projects it to the joint dimension, fuses it
//         with the encoder NT-style, projects to V, and adds the LM
//         log-probabilities into those final scores.
//
// The vocabulary language model lives under parameter names `vocab_lm.*` in
// FNT/IFNT and in standalone LM bundles, which is what text-only adaptation
// keys on. Its output layer has V+1 classes: V tokens plus end-of-sequence.
// Cross-entropy and perplexity normalize over all V+1; when the LM feeds a
// lattice, the end-of-sequence logit is dropped and the remaining V logits
// are renormalized.

enum class Arch { NT, FNT, IFNT, LM };

std::string arch_to_string(Arch arch);
Arch arch_from_string(const std::string& s);

struct ModelConfig {
  Arch arch = Arch::NT;
  int64_t vocab_size = 0;  // V, excluding blank
  int64_t joint_dim = 8;   // D
  int64_t feat_dim = 8;
  int64_t enc_width = 32;
  int64_t enc_layers = 2;
  int64_t dec_width = 32;
  int64_t embed_dim = 16;
  double lambda_f = 0.1;  // weight of the LM cross-entropy term

  void validate() const;
  bool has_vocab_lm() const { return arch != Arch::NT; }
};

struct ModelBundle {
  ModelConfig config;
  ParamStore params;
};

/// Registers and initializes the parameter set for the architecture.
ModelBundle build_model(const ModelConfig& config, uint64_t seed);

struct LossBreakdown {
  double transducer = 0.0;  // J_t, nats
  double lm_ce = 0.0;       // -log P_LM(target + eos), nats
  double combined = 0.0;    // J_t + lambda_f * lm_ce
  double lambda_f = 0.0;
};

/// Per-frame encoder representations f_t. Rejects empty input.
Tensor encode(const ModelBundle& m, const Tensor& feats);

/// Fusion-side view of the vocabulary LM: log P(token | prefix) rows over V
/// (end-of-sequence dropped before normalization) for prefix positions
/// u = 0..U, plus the hidden states. FNT/IFNT only.
std::pair<Tensor, Tensor> vocab_lm_logprobs(const ModelBundle& m, const std::vector<int>& prefix);

/// Full-distribution view over V+1 (tokens + end-of-sequence), used for LM
/// cross-entropy and perplexity. Works for FNT/IFNT and standalone LMs.
Tensor vocab_lm_full_logprobs(const ModelBundle& m, const std::vector<int>& prefix);

// Forward-only lattice builders. f is the encoder output [T, enc_width]; g /
// g_blank are decoder states [U+1, dec_width]; lm_* come from
// vocab_lm_logprobs. Each returns a per-cell normalized lattice.
EmissionLattice joint_nt(const Tensor& f, const Tensor& g, const ModelBundle& m,
                         const std::vector<int>& target);
EmissionLattice joint_fnt(const Tensor& f, const Tensor& g_blank, const Tensor& lm_logprobs,
                          const ModelBundle& m, const std::vector<int>& target);
EmissionLattice joint_ifnt(const Tensor& f, const Tensor& g_blank, const Tensor& lm_hidden,
                           const Tensor& lm_logprobs, const ModelBundle& m,
                           const std::vector<int>& target);

/// Label recurrence states for positions 0..U (position 0 conditions on the
/// start symbol). `prefix_name` selects the subtree: "dec", "blank", or
/// "vocab_lm".
Tensor decoder_states(const ModelBundle& m, const std::string& prefix_name,
                      const std::vector<int>& tokens);

// Incremental variants used by the decoders. States are [dec_width] vectors.
/// State after consuming only the start symbol (the empty prefix).
Tensor decoder_initial_state(const ModelBundle& m, const std::string& prefix_name);
/// Advances a state by one token.
Tensor decoder_step(const ModelBundle& m, const std::string& prefix_name, const Tensor& state,
                    int token);
/// LM rows for one hidden state: fusion view over V / full view over V+1.
Tensor lm_fusion_row(const ModelBundle& m, const Tensor& hidden_state);
Tensor lm_full_row(const ModelBundle& m, const Tensor& hidden_state);

/// Full forward/backward for one utterance: runs the architecture's lattice,
/// the transducer loss, and (FNT/IFNT) the teacher-forced LM cross-entropy;
/// accumulates gradients of combined = J_t + lambda_f * lm_ce into the store.
LossBreakdown compute_loss(ModelBundle& m, const Tensor& feats, const std::vector<int>& target);

/// Forward-only lattice for any architecture (used by tests and the loss).
EmissionLattice build_lattice(const ModelBundle& m, const Tensor& feats,
                              const std::vector<int>& target);

int64_t param_count(const ModelBundle& m);

void save_model(const std::string& path, const ModelBundle& m);
ModelBundle load_model(const std::string& path);

}  // namespace tlab

#endif  // TLAB_MODEL_H_
