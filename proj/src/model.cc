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

#include "tlab/model.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tlab/checkpoint.h"
#include "tlab/kernels.h"
#include "tlab/layers.h"
#include "tlab/rng.h"

namespace tlab {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

Tensor gaussian_init(Rng& rng, std::vector<int64_t> shape, double scale) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = scale * rng.gaussian();
  return t;
}

void add_affine_params(ParamStore& store, Rng& rng, const std::string& prefix, int64_t in,
                       int64_t out) {
  store.add(prefix + ".W", gaussian_init(rng, {in, out}, 1.0 / std::sqrt(static_cast<double>(in))));
  store.add(prefix + ".b", Tensor({out}));
}

void add_decoder_params(ParamStore& store, Rng& rng, const std::string& prefix,
                        const ModelConfig& cfg) {
  store.add(prefix + ".embed", gaussian_init(rng, {cfg.vocab_size + 1, cfg.embed_dim}, 0.4));
  add_affine_params(store, rng, prefix + ".rnn", cfg.dec_width + cfg.embed_dim, cfg.dec_width);
}

// ---------------------------------------------------------------------------
// Encoder: a feed-forward tanh stack applied per frame.
// ---------------------------------------------------------------------------

struct EncCache {
  std::vector<Tensor> acts;  // acts[0] = input, acts[i+1] = layer i output
};

Tensor encode_cached(const ModelBundle& m, const Tensor& feats, EncCache* cache) {
  const ModelConfig& cfg = m.config;
  require(feats.ndim() == 2 && feats.dim(1) == cfg.feat_dim,
          "encode: features " + feats.shape_str() + " do not match feat_dim=" +
              std::to_string(cfg.feat_dim));
  require(feats.dim(0) >= 1, "encode: empty input (no frames)");
  Tensor x = feats;
  if (cache != nullptr) cache->acts.push_back(x);
  for (int64_t i = 0; i < cfg.enc_layers; ++i) {
    const std::string prefix = "enc." + std::to_string(i);
    x = tanh_map(affine(x, m.params.at(prefix + ".W").value, m.params.at(prefix + ".b").value));
    if (cache != nullptr) cache->acts.push_back(x);
  }
  return x;
}

void encode_backward(ModelBundle& m, const EncCache& cache, const Tensor& dout) {
  Tensor dy = dout;
  for (int64_t i = m.config.enc_layers - 1; i >= 0; --i) {
    const std::string prefix = "enc." + std::to_string(i);
    Param& W = m.params.at(prefix + ".W");
    Param& b = m.params.at(prefix + ".b");
    const Tensor& y = cache.acts[static_cast<size_t>(i + 1)];
    const Tensor& x = cache.acts[static_cast<size_t>(i)];
    const Tensor dpre = tanh_backward(y, dy);
    dy = affine_backward(x, W.value, dpre, &W.grad, &b.grad);
  }
}

// ---------------------------------------------------------------------------
// Label/vocabulary recurrences (teacher forced over a whole prefix).
// ---------------------------------------------------------------------------

struct RnnCache {
  std::string prefix;
  std::vector<int> rows;       // embedding rows fed in: [sos, y_1, ..., y_U]
  std::vector<Tensor> states;  // states[0] = zeros, states[i+1] = step output
};

RnnCache rnn_forward(const ModelBundle& m, const std::string& prefix,
                     const std::vector<int>& tokens) {
  const ModelConfig& cfg = m.config;
  RnnCache cache;
  cache.prefix = prefix;
  cache.rows.push_back(static_cast<int>(cfg.vocab_size));  // start symbol
  for (int t : tokens) {
    require(t >= 0 && t < cfg.vocab_size,
            prefix + ": token id " + std::to_string(t) + " outside [0, V)");
    cache.rows.push_back(t);
  }

  const Tensor& embed = m.params.at(prefix + ".embed").value;
  const Tensor& W = m.params.at(prefix + ".rnn.W").value;
  const Tensor& b = m.params.at(prefix + ".rnn.b").value;

  cache.states.push_back(Tensor({cfg.dec_width}));
  for (int row : cache.rows) {
    Tensor e({cfg.embed_dim});
    for (int64_t d = 0; d < cfg.embed_dim; ++d) e.at(d) = embed.at(row, d);
    cache.states.push_back(recurrent_step(cache.states.back(), e, W, b));
  }
  return cache;
}

Tensor states_matrix(const RnnCache& cache, int64_t width) {
  const int64_t n = static_cast<int64_t>(cache.states.size()) - 1;
  Tensor g({n, width});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t d = 0; d < width; ++d) g.at(i, d) = cache.states[static_cast<size_t>(i + 1)].at(d);
  }
  return g;
}

void rnn_backward(ModelBundle& m, const RnnCache& cache, const Tensor& dstates) {
  const ModelConfig& cfg = m.config;
  Param& embed = m.params.at(cache.prefix + ".embed");
  Param& W = m.params.at(cache.prefix + ".rnn.W");
  Param& b = m.params.at(cache.prefix + ".rnn.b");

  const int64_t n = static_cast<int64_t>(cache.rows.size());
  Tensor carry({cfg.dec_width});
  for (int64_t i = n - 1; i >= 0; --i) {
    Tensor dnew({cfg.dec_width});
    for (int64_t d = 0; d < cfg.dec_width; ++d) dnew.at(d) = dstates.at(i, d) + carry.at(d);

    const int row = cache.rows[static_cast<size_t>(i)];
    Tensor e({cfg.embed_dim});
    for (int64_t d = 0; d < cfg.embed_dim; ++d) e.at(d) = embed.value.at(row, d);

    Tensor dprev({cfg.dec_width});
    Tensor de({cfg.embed_dim});
    recurrent_step_backward(cache.states[static_cast<size_t>(i)], e, W.value,
                            cache.states[static_cast<size_t>(i + 1)], dnew, &dprev, &de, &W.grad,
                            &b.grad);
    for (int64_t d = 0; d < cfg.embed_dim; ++d) embed.grad.at(row, d) += de.at(d);
    carry = dprev;
  }
}

// ---------------------------------------------------------------------------
// Fused joint: project both sides to the joint dimension, add over (t,u),
// tanh, then project to the output width. Shared by the NT joint (width V+1),
// the FNT/IFNT blank branch (width 1), and the IFNT vocabulary branch
// (width V, with the LM hidden state standing in for the label decoder).
// ---------------------------------------------------------------------------

struct FusedJointCache {
  Tensor f, g;        // inputs
  Tensor fp, gp;      // projections to D
  Tensor h;           // tanh(broadcast add), flat [T*(U+1), D]
  int64_t T = 0, U1 = 0, D = 0;
};

Tensor fused_joint_forward(const ModelBundle& m, const std::string& prefix, const Tensor& f,
                           const Tensor& g, FusedJointCache* cache) {
  const int64_t D = m.config.joint_dim;
  const Tensor& eW = m.params.at(prefix + ".enc_proj.W").value;
  const Tensor& eb = m.params.at(prefix + ".enc_proj.b").value;
  const Tensor& dW = m.params.at(prefix + ".dec_proj.W").value;
  const Tensor& db = m.params.at(prefix + ".dec_proj.b").value;
  const Tensor& oW = m.params.at(prefix + ".out.W").value;
  const Tensor& ob = m.params.at(prefix + ".out.b").value;

  const Tensor fp = affine(f, eW, eb);
  const Tensor gp = affine(g, dW, db);
  const int64_t T = f.dim(0), U1 = g.dim(0);
  Tensor z({T * U1, D});
  kernels::broadcast_add_tu(fp.data(), gp.data(), z.data(), T, U1, D);
  const Tensor h = tanh_map(z);
  Tensor logits = affine(h, oW, ob);
  if (cache != nullptr) {
    cache->f = f;
    cache->g = g;
    cache->fp = fp;
    cache->gp = gp;
    cache->h = h;
    cache->T = T;
    cache->U1 = U1;
    cache->D = D;
  }
  return logits;  // flat [T*U1, out_width]
}

void fused_joint_backward(ModelBundle& m, const std::string& prefix, const FusedJointCache& cache,
                          const Tensor& dlogits, Tensor* df, Tensor* dg) {
  Param& eW = m.params.at(prefix + ".enc_proj.W");
  Param& eb = m.params.at(prefix + ".enc_proj.b");
  Param& dWp = m.params.at(prefix + ".dec_proj.W");
  Param& dbp = m.params.at(prefix + ".dec_proj.b");
  Param& oW = m.params.at(prefix + ".out.W");
  Param& ob = m.params.at(prefix + ".out.b");

  const Tensor dh = affine_backward(cache.h, oW.value, dlogits, &oW.grad, &ob.grad);
  const Tensor dz = tanh_backward(cache.h, dh);
  Tensor dfp({cache.T, cache.D});
  Tensor dgp({cache.U1, cache.D});
  kernels::broadcast_add_tu_backward_acc(dz.data(), dfp.data(), dgp.data(), cache.T, cache.U1,
                                         cache.D);
  const Tensor dfc = affine_backward(cache.f, eW.value, dfp, &eW.grad, &eb.grad);
  const Tensor dgc = affine_backward(cache.g, dWp.value, dgp, &dWp.grad, &dbp.grad);
  if (df != nullptr) kernels::axpy(1.0, dfc.data(), df->data(), dfc.numel());
  if (dg != nullptr) kernels::axpy(1.0, dgc.data(), dg->data(), dgc.numel());
}

// ---------------------------------------------------------------------------
// Vocabulary LM heads.
// ---------------------------------------------------------------------------

struct LmCache {
  RnnCache rnn;
  Tensor hidden;       // [U+1, dec_width]
  Tensor logits;       // [U+1, V+1], column V is end-of-sequence
  Tensor full_logp;    // log-softmax over V+1
  Tensor fusion_logp;  // log-softmax over the first V logits
};

Tensor drop_last_column(const Tensor& x) {
  const int64_t rows = x.dim(0), cols = x.dim(1);
  Tensor out({rows, cols - 1});
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c + 1 < cols; ++c) out.at(r, c) = x.at(r, c);
  }
  return out;
}

LmCache lm_forward(const ModelBundle& m, const std::vector<int>& tokens) {
  LmCache cache;
  cache.rnn = rnn_forward(m, "vocab_lm", tokens);
  cache.hidden = states_matrix(cache.rnn, m.config.dec_width);
  cache.logits = affine(cache.hidden, m.params.at("vocab_lm.out.W").value,
                        m.params.at("vocab_lm.out.b").value);
  cache.full_logp = log_softmax(cache.logits);
  cache.fusion_logp = log_softmax(drop_last_column(cache.logits));
  return cache;
}

// Routes fusion-view and full-view gradients back through the two softmaxes
// into a single gradient on the logits, then through the output layer and
// the recurrence. dhidden_extra carries the IFNT sigmoid-path contribution.
void lm_backward(ModelBundle& m, const LmCache& cache, const Tensor* dfusion, const Tensor* dfull,
                 const Tensor* dhidden_extra) {
  const int64_t U1 = cache.logits.dim(0);
  const int64_t V = m.config.vocab_size;
  Tensor dlogits({U1, V + 1});
  if (dfull != nullptr) {
    dlogits = log_softmax_backward(cache.full_logp, *dfull);
  }
  if (dfusion != nullptr) {
    const Tensor dsub = log_softmax_backward(cache.fusion_logp, *dfusion);
    for (int64_t r = 0; r < U1; ++r) {
      for (int64_t c = 0; c < V; ++c) dlogits.at(r, c) += dsub.at(r, c);
    }
  }
  Param& oW = m.params.at("vocab_lm.out.W");
  Param& ob = m.params.at("vocab_lm.out.b");
  Tensor dhidden = affine_backward(cache.hidden, oW.value, dlogits, &oW.grad, &ob.grad);
  if (dhidden_extra != nullptr) {
    kernels::axpy(1.0, dhidden_extra->data(), dhidden.data(), dhidden.numel());
  }
  rnn_backward(m, cache.rnn, dhidden);
}

// ---------------------------------------------------------------------------
// Lattice assembly per architecture.
// ---------------------------------------------------------------------------

EmissionLattice make_lattice(const ModelBundle& m, Tensor logp_flat, int64_t T, int64_t U,
                             const std::vector<int>& target) {
  EmissionLattice lat;
  lat.T = T;
  lat.U = U;
  lat.V = m.config.vocab_size;
  lat.blank_id = static_cast<int>(m.config.vocab_size);
  lat.logp = Tensor({T, U + 1, lat.V + 1}, std::move(logp_flat.raw()));
  lat.target = target;
  return lat;
}

struct NtForward {
  FusedJointCache joint;
  Tensor logp;  // flat [T*U1, V+1]
};

NtForward nt_lattice_forward(const ModelBundle& m, const Tensor& f, const Tensor& g) {
  NtForward fwd;
  const Tensor logits = fused_joint_forward(m, "joint", f, g, &fwd.joint);
  fwd.logp = log_softmax(logits);
  return fwd;
}

void nt_lattice_backward(ModelBundle& m, const NtForward& fwd, const Tensor& dlogp_flat,
                         Tensor* df, Tensor* dg) {
  const Tensor dlogits = log_softmax_backward(fwd.logp, dlogp_flat);
  fused_joint_backward(m, "joint", fwd.joint, dlogits, df, dg);
}

// FNT: blank logit from the fused joint (width 1); vocabulary scores are
// proj_V(f_t) + lm log-probs, combined at the logit level; concatenated and
// normalized per cell.
struct FntForward {
  FusedJointCache blank;
  Tensor acoustic;  // [T, V]
  Tensor logp;      // flat [T*U1, V+1]
  int64_t T = 0, U1 = 0;
};

FntForward fnt_lattice_forward(const ModelBundle& m, const Tensor& f, const Tensor& g_blank,
                               const Tensor& lm_fusion_logp) {
  const int64_t V = m.config.vocab_size;
  const int64_t T = f.dim(0), U1 = g_blank.dim(0);
  require(lm_fusion_logp.ndim() == 2 && lm_fusion_logp.dim(0) == U1 && lm_fusion_logp.dim(1) == V,
          "joint_fnt: lm log-probs " + lm_fusion_logp.shape_str() + " do not match [U+1, V]");

  FntForward fwd;
  fwd.T = T;
  fwd.U1 = U1;
  const Tensor blank_logit = fused_joint_forward(m, "blank.joint", f, g_blank, &fwd.blank);
  fwd.acoustic = affine(f, m.params.at("vocab_acoustic.W").value,
                        m.params.at("vocab_acoustic.b").value);

  Tensor logits({T * U1, V + 1});
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t u = 0; u < U1; ++u) {
      double* row = logits.data() + (t * U1 + u) * (V + 1);
      const double* av = fwd.acoustic.data() + t * V;
      const double* lm = lm_fusion_logp.data() + u * V;
      for (int64_t k = 0; k < V; ++k) row[k] = av[k] + lm[k];
      row[V] = blank_logit.at(t * U1 + u, 0);
    }
  }
  fwd.logp = log_softmax(logits);
  return fwd;
}

void fnt_lattice_backward(ModelBundle& m, const FntForward& fwd, const Tensor& dlogp_flat,
                          Tensor* df, Tensor* dg_blank, Tensor* dlm_fusion) {
  const int64_t V = m.config.vocab_size;
  const int64_t T = fwd.T, U1 = fwd.U1;
  const Tensor dlogits = log_softmax_backward(fwd.logp, dlogp_flat);

  Tensor dblank_logit({T * U1, 1});
  Tensor dacoustic({T, V});
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t u = 0; u < U1; ++u) {
      const double* row = dlogits.data() + (t * U1 + u) * (V + 1);
      double* dav = dacoustic.data() + t * V;
      double* dlm = dlm_fusion->data() + u * V;
      for (int64_t k = 0; k < V; ++k) {
        dav[k] += row[k];
        dlm[k] += row[k];
      }
      dblank_logit.at(t * U1 + u, 0) = row[V];
    }
  }

  Param& aW = m.params.at("vocab_acoustic.W");
  Param& ab = m.params.at("vocab_acoustic.b");
  const Tensor dfa = affine_backward(fwd.blank.f, aW.value, dacoustic, &aW.grad, &ab.grad);
  if (df != nullptr) kernels::axpy(1.0, dfa.data(), df->data(), dfa.numel());
  fused_joint_backward(m, "blank.joint", fwd.blank, dblank_logit, df, dg_blank);
}

// IFNT: blank branch as FNT; vocabulary branch fuses sigmoid(lm hidden),
// projected to D, with the encoder NT-style, projects to V, and adds the LM
// log-probs into the final scores.
struct IfntForward {
  FusedJointCache blank;
  FusedJointCache vocab;  // g side = sigmoid(lm hidden)
  Tensor lm_sig;          // [U+1, dec_width]
  Tensor logp;            // flat
  int64_t T = 0, U1 = 0;
};

IfntForward ifnt_lattice_forward(const ModelBundle& m, const Tensor& f, const Tensor& g_blank,
                                 const Tensor& lm_hidden, const Tensor& lm_fusion_logp) {
  const int64_t V = m.config.vocab_size;
  const int64_t T = f.dim(0), U1 = g_blank.dim(0);
  require(lm_hidden.ndim() == 2 && lm_hidden.dim(0) == U1 && lm_hidden.dim(1) == m.config.dec_width,
          "joint_ifnt: lm hidden " + lm_hidden.shape_str() + " does not match [U+1, dec_width]");
  require(lm_fusion_logp.dim(0) == U1 && lm_fusion_logp.dim(1) == V,
          "joint_ifnt: lm log-probs " + lm_fusion_logp.shape_str() + " do not match [U+1, V]");

  IfntForward fwd;
  fwd.T = T;
  fwd.U1 = U1;
  const Tensor blank_logit = fused_joint_forward(m, "blank.joint", f, g_blank, &fwd.blank);
  fwd.lm_sig = sigmoid(lm_hidden);
  const Tensor vocab_scores = fused_joint_forward(m, "vocab_joint", f, fwd.lm_sig, &fwd.vocab);

  Tensor logits({T * U1, V + 1});
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t u = 0; u < U1; ++u) {
      double* row = logits.data() + (t * U1 + u) * (V + 1);
      const double* vs = vocab_scores.data() + (t * U1 + u) * V;
      const double* lm = lm_fusion_logp.data() + u * V;
      for (int64_t k = 0; k < V; ++k) row[k] = vs[k] + lm[k];
      row[V] = blank_logit.at(t * U1 + u, 0);
    }
  }
  fwd.logp = log_softmax(logits);
  return fwd;
}

void ifnt_lattice_backward(ModelBundle& m, const IfntForward& fwd, const Tensor& dlogp_flat,
                           Tensor* df, Tensor* dg_blank, Tensor* dlm_hidden, Tensor* dlm_fusion) {
  const int64_t V = m.config.vocab_size;
  const int64_t T = fwd.T, U1 = fwd.U1;
  const Tensor dlogits = log_softmax_backward(fwd.logp, dlogp_flat);

  Tensor dblank_logit({T * U1, 1});
  Tensor dvocab_scores({T * U1, V});
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t u = 0; u < U1; ++u) {
      const double* row = dlogits.data() + (t * U1 + u) * (V + 1);
      double* dvs = dvocab_scores.data() + (t * U1 + u) * V;
      double* dlm = dlm_fusion->data() + u * V;
      for (int64_t k = 0; k < V; ++k) {
        dvs[k] = row[k];
        dlm[k] += row[k];
      }
      dblank_logit.at(t * U1 + u, 0) = row[V];
    }
  }

  Tensor dsig({U1, m.config.dec_width});
  fused_joint_backward(m, "vocab_joint", fwd.vocab, dvocab_scores, df, &dsig);
  const Tensor dh = sigmoid_backward(fwd.lm_sig, dsig);
  kernels::axpy(1.0, dh.data(), dlm_hidden->data(), dh.numel());
  fused_joint_backward(m, "blank.joint", fwd.blank, dblank_logit, df, dg_blank);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public surface.
// ---------------------------------------------------------------------------

std::string arch_to_string(Arch arch) {
  switch (arch) {
    case Arch::NT:
      return "nt";
    case Arch::FNT:
      return "fnt";
    case Arch::IFNT:
      return "ifnt";
    case Arch::LM:
      return "lm";
  }
  throw std::logic_error("arch_to_string: bad enum");
}

Arch arch_from_string(const std::string& s) {
  if (s == "nt") return Arch::NT;
  if (s == "fnt") return Arch::FNT;
  if (s == "ifnt") return Arch::IFNT;
  if (s == "lm") return Arch::LM;
  throw std::invalid_argument("unknown architecture '" + s + "' (expected nt, fnt, ifnt, or lm)");
}

void ModelConfig::validate() const {
  if (vocab_size < 2) throw std::invalid_argument("ModelConfig: vocab_size must be >= 2");
  if (joint_dim < 1) throw std::invalid_argument("ModelConfig: joint_dim must be >= 1");
  if (feat_dim < 1 || enc_width < 1 || enc_layers < 1 || dec_width < 1 || embed_dim < 1) {
    throw std::invalid_argument("ModelConfig: all dimensions must be >= 1");
  }
  if (lambda_f < 0.0) throw std::invalid_argument("ModelConfig: lambda_f must be >= 0");
}

ModelBundle build_model(const ModelConfig& config, uint64_t seed) {
  config.validate();
  ModelBundle m;
  m.config = config;
  Rng rng = Rng::substream(seed, 0x90de1);

  if (config.arch != Arch::LM) {
    int64_t in = config.feat_dim;
    for (int64_t i = 0; i < config.enc_layers; ++i) {
      add_affine_params(m.params, rng, "enc." + std::to_string(i), in, config.enc_width);
      in = config.enc_width;
    }
  }

  switch (config.arch) {
    case Arch::NT:
      add_decoder_params(m.params, rng, "dec", config);
      add_affine_params(m.params, rng, "joint.enc_proj", config.enc_width, config.joint_dim);
      add_affine_params(m.params, rng, "joint.dec_proj", config.dec_width, config.joint_dim);
      add_affine_params(m.params, rng, "joint.out", config.joint_dim, config.vocab_size + 1);
      break;
    case Arch::FNT:
      add_decoder_params(m.params, rng, "blank", config);
      add_affine_params(m.params, rng, "blank.joint.enc_proj", config.enc_width, config.joint_dim);
      add_affine_params(m.params, rng, "blank.joint.dec_proj", config.dec_width, config.joint_dim);
      add_affine_params(m.params, rng, "blank.joint.out", config.joint_dim, 1);
      add_decoder_params(m.params, rng, "vocab_lm", config);
      add_affine_params(m.params, rng, "vocab_lm.out", config.dec_width, config.vocab_size + 1);
      add_affine_params(m.params, rng, "vocab_acoustic", config.enc_width, config.vocab_size);
      break;
    case Arch::IFNT:
      add_decoder_params(m.params, rng, "blank", config);
      add_affine_params(m.params, rng, "blank.joint.enc_proj", config.enc_width, config.joint_dim);
      add_affine_params(m.params, rng, "blank.joint.dec_proj", config.dec_width, config.joint_dim);
      add_affine_params(m.params, rng, "blank.joint.out", config.joint_dim, 1);
      add_decoder_params(m.params, rng, "vocab_lm", config);
      add_affine_params(m.params, rng, "vocab_lm.out", config.dec_width, config.vocab_size + 1);
      add_affine_params(m.params, rng, "vocab_joint.enc_proj", config.enc_width, config.joint_dim);
      add_affine_params(m.params, rng, "vocab_joint.dec_proj", config.dec_width, config.joint_dim);
      add_affine_params(m.params, rng, "vocab_joint.out", config.joint_dim, config.vocab_size);
      break;
    case Arch::LM:
      add_decoder_params(m.params, rng, "vocab_lm", config);
      add_affine_params(m.params, rng, "vocab_lm.out", config.dec_width, config.vocab_size + 1);
      break;
  }
  return m;
}

Tensor encode(const ModelBundle& m, const Tensor& feats) {
  require(m.config.arch != Arch::LM, "encode: language models have no encoder");
  return encode_cached(m, feats, nullptr);
}

Tensor decoder_states(const ModelBundle& m, const std::string& prefix_name,
                      const std::vector<int>& tokens) {
  return states_matrix(rnn_forward(m, prefix_name, tokens), m.config.dec_width);
}

std::pair<Tensor, Tensor> vocab_lm_logprobs(const ModelBundle& m, const std::vector<int>& prefix) {
  require(m.config.has_vocab_lm(),
          "vocab_lm_logprobs: architecture " + arch_to_string(m.config.arch) +
              " has no vocabulary decoder");
  LmCache cache = lm_forward(m, prefix);
  return {cache.fusion_logp, cache.hidden};
}

Tensor vocab_lm_full_logprobs(const ModelBundle& m, const std::vector<int>& prefix) {
  require(m.config.has_vocab_lm(),
          "vocab_lm_full_logprobs: architecture " + arch_to_string(m.config.arch) +
              " has no vocabulary decoder");
  return lm_forward(m, prefix).full_logp;
}

EmissionLattice joint_nt(const Tensor& f, const Tensor& g, const ModelBundle& m,
                         const std::vector<int>& target) {
  require(m.config.arch == Arch::NT, "joint_nt: architecture is not nt");
  NtForward fwd = nt_lattice_forward(m, f, g);
  return make_lattice(m, std::move(fwd.logp), f.dim(0), g.dim(0) - 1, target);
}

EmissionLattice joint_fnt(const Tensor& f, const Tensor& g_blank, const Tensor& lm_logprobs,
                          const ModelBundle& m, const std::vector<int>& target) {
  require(m.config.arch == Arch::FNT, "joint_fnt: architecture is not fnt");
  FntForward fwd = fnt_lattice_forward(m, f, g_blank, lm_logprobs);
  return make_lattice(m, std::move(fwd.logp), f.dim(0), g_blank.dim(0) - 1, target);
}

EmissionLattice joint_ifnt(const Tensor& f, const Tensor& g_blank, const Tensor& lm_hidden,
                           const Tensor& lm_logprobs, const ModelBundle& m,
                           const std::vector<int>& target) {
  require(m.config.arch == Arch::IFNT, "joint_ifnt: architecture is not ifnt");
  IfntForward fwd = ifnt_lattice_forward(m, f, g_blank, lm_hidden, lm_logprobs);
  return make_lattice(m, std::move(fwd.logp), f.dim(0), g_blank.dim(0) - 1, target);
}

EmissionLattice build_lattice(const ModelBundle& m, const Tensor& feats,
                              const std::vector<int>& target) {
  const Tensor f = encode(m, feats);
  switch (m.config.arch) {
    case Arch::NT:
      return joint_nt(f, decoder_states(m, "dec", target), m, target);
    case Arch::FNT: {
      const Tensor g = decoder_states(m, "blank", target);
      auto [lm_fusion, hidden] = vocab_lm_logprobs(m, target);
      return joint_fnt(f, g, lm_fusion, m, target);
    }
    case Arch::IFNT: {
      const Tensor g = decoder_states(m, "blank", target);
      auto [lm_fusion, hidden] = vocab_lm_logprobs(m, target);
      return joint_ifnt(f, g, hidden, lm_fusion, m, target);
    }
    case Arch::LM:
      break;
  }
  throw std::invalid_argument("build_lattice: language models produce no lattice");
}

LossBreakdown compute_loss(ModelBundle& m, const Tensor& feats, const std::vector<int>& target) {
  require(!target.empty(), "compute_loss: empty target");
  const ModelConfig& cfg = m.config;
  const int64_t U = static_cast<int64_t>(target.size());
  const int64_t V = cfg.vocab_size;

  EncCache enc;
  const Tensor f = encode_cached(m, feats, &enc);
  const int64_t T = f.dim(0);

  LossBreakdown out;
  out.lambda_f = cfg.arch == Arch::NT ? 0.0 : cfg.lambda_f;

  if (cfg.arch == Arch::NT) {
    RnnCache dec = rnn_forward(m, "dec", target);
    const Tensor g = states_matrix(dec, cfg.dec_width);
    NtForward fwd = nt_lattice_forward(m, f, g);
    EmissionLattice lat = make_lattice(m, Tensor(fwd.logp), T, U, target);
    const ForwardBackwardResult fb = forward_backward(lat);
    out.transducer = -fb.loglik;
    out.combined = out.transducer;

    Tensor dlogp = loss_grad(lat, fb);
    Tensor dlogp_flat({T * (U + 1), V + 1}, std::move(dlogp.raw()));
    Tensor df({T, cfg.enc_width});
    Tensor dg({U + 1, cfg.dec_width});
    nt_lattice_backward(m, fwd, dlogp_flat, &df, &dg);
    rnn_backward(m, dec, dg);
    encode_backward(m, enc, df);
    return out;
  }

  // FNT / IFNT.
  RnnCache blank = rnn_forward(m, "blank", target);
  const Tensor g_blank = states_matrix(blank, cfg.dec_width);
  LmCache lm = lm_forward(m, target);

  // Teacher-forced LM cross-entropy over target + end-of-sequence.
  Tensor dfull({U + 1, V + 1});
  for (int64_t u = 0; u <= U; ++u) {
    const int next = u < U ? target[static_cast<size_t>(u)] : static_cast<int>(V);
    out.lm_ce -= lm.full_logp.at(u, next);
    dfull.at(u, next) = -out.lambda_f;
  }

  Tensor dlm_fusion({U + 1, V});
  Tensor df({T, cfg.enc_width});
  Tensor dg_blank({U + 1, cfg.dec_width});

  if (cfg.arch == Arch::FNT) {
    FntForward fwd = fnt_lattice_forward(m, f, g_blank, lm.fusion_logp);
    EmissionLattice lat = make_lattice(m, Tensor(fwd.logp), T, U, target);
    const ForwardBackwardResult fb = forward_backward(lat);
    out.transducer = -fb.loglik;

    Tensor dlogp = loss_grad(lat, fb);
    Tensor dlogp_flat({T * (U + 1), V + 1}, std::move(dlogp.raw()));
    fnt_lattice_backward(m, fwd, dlogp_flat, &df, &dg_blank, &dlm_fusion);
    lm_backward(m, lm, &dlm_fusion, &dfull, nullptr);
  } else {
    IfntForward fwd = ifnt_lattice_forward(m, f, g_blank, lm.hidden, lm.fusion_logp);
    EmissionLattice lat = make_lattice(m, Tensor(fwd.logp), T, U, target);
    const ForwardBackwardResult fb = forward_backward(lat);
    out.transducer = -fb.loglik;

    Tensor dlogp = loss_grad(lat, fb);
    Tensor dlogp_flat({T * (U + 1), V + 1}, std::move(dlogp.raw()));
    Tensor dlm_hidden({U + 1, cfg.dec_width});
    ifnt_lattice_backward(m, fwd, dlogp_flat, &df, &dg_blank, &dlm_hidden, &dlm_fusion);
    lm_backward(m, lm, &dlm_fusion, &dfull, &dlm_hidden);
  }

  rnn_backward(m, blank, dg_blank);
  encode_backward(m, enc, df);
  out.combined = out.transducer + out.lambda_f * out.lm_ce;
  return out;
}

int64_t param_count(const ModelBundle& m) { return m.params.total_elements(); }

void save_model(const std::string& path, const ModelBundle& m) {
  Container c;
  c.metadata["kind"] = "model";
  c.metadata["arch"] = arch_to_string(m.config.arch);
  c.metadata["vocab_size"] = std::to_string(m.config.vocab_size);
  c.metadata["joint_dim"] = std::to_string(m.config.joint_dim);
  c.metadata["feat_dim"] = std::to_string(m.config.feat_dim);
  c.metadata["enc_width"] = std::to_string(m.config.enc_width);
  c.metadata["enc_layers"] = std::to_string(m.config.enc_layers);
  c.metadata["dec_width"] = std::to_string(m.config.dec_width);
  c.metadata["embed_dim"] = std::to_string(m.config.embed_dim);
  c.metadata["lambda_f"] = format_double(m.config.lambda_f);
  c.metadata["step"] = std::to_string(m.params.step());
  for (const Param& p : m.params.all()) c.tensors.emplace_back(p.name, p.value);
  write_container(path, c);
}

ModelBundle load_model(const std::string& path) {
  const Container c = read_container(path);
  if (c.meta("kind") != "model") {
    throw std::runtime_error(path + ": container is not a model checkpoint");
  }
  ModelConfig cfg;
  cfg.arch = arch_from_string(c.meta("arch"));
  cfg.vocab_size = std::stoll(c.meta("vocab_size"));
  cfg.joint_dim = std::stoll(c.meta("joint_dim"));
  cfg.feat_dim = std::stoll(c.meta("feat_dim"));
  cfg.enc_width = std::stoll(c.meta("enc_width"));
  cfg.enc_layers = std::stoll(c.meta("enc_layers"));
  cfg.dec_width = std::stoll(c.meta("dec_width"));
  cfg.embed_dim = std::stoll(c.meta("embed_dim"));
  cfg.lambda_f = std::stod(c.meta("lambda_f"));
  cfg.validate();

  ModelBundle m;
  m.config = cfg;
  for (const auto& [name, tensor] : c.tensors) m.params.add(name, tensor);
  m.params.set_step(std::stoll(c.meta("step")));
  return m;
}

}  // namespace tlab
