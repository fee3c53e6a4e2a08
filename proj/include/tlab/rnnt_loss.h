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

#ifndef TLAB_RNNT_LOSS_H_
#define TLAB_RNNT_LOSS_H_

#include <string>
#include <vector>

#include "tlab/tensor.h"

namespace tlab {

/// Per-(t,u) emission table for one utterance. logp[t][u][k] is the
/// log-probability of emitting class k (k == blank_id advances the frame,
/// anything else emits the next target label) given t consumed frames and u
/// emitted labels.
struct EmissionLattice {
  int64_t T = 0;            // frame count
  int64_t U = 0;            // label count
  int64_t V = 0;            // vocabulary size excluding blank
  Tensor logp;              // [T, U+1, V+1]
  std::vector<int> target;  // size U, ids in [0, V)
  int blank_id = -1;

  /// Structural checks plus per-cell normalization (exp sums to 1 within tol).
  void validate(double tol = 1e-8) const;
};

/// Alignment convention: a path consumes one frame per blank and one target
/// label per non-blank, never advancing both at once, and must end with a
/// blank emitted at the last frame. Under uniform emissions the number of
/// alignments is C(T+U-1, U).
///
/// alpha[t][u] is the log-mass of partial paths arriving at (t,u);
/// beta[t][u] is the log-mass of completions from (t,u) including the final
/// blank, so alpha + beta is the log-mass of all full paths through (t,u).
struct AlphaBeta {
  Tensor alpha;  // [T, U+1]
  Tensor beta;   // [T, U+1]
};

struct ForwardBackwardResult {
  AlphaBeta ab;
  double loglik = 0.0;  // loss = -loglik
};

/// Log-space forward/backward over the (T)x(U+1) lattice. Rejects T < 1 (no
/// alignment exists). Does not require normalized cells; any finite
/// log-weight table works, which the property tests rely on.
ForwardBackwardResult forward_backward(const EmissionLattice& lat);

/// Gradient of the loss (-loglik) w.r.t. logp, assembled from the alpha/beta
/// occupancies. Entries for classes unusable at a node are exactly 0.
Tensor loss_grad(const EmissionLattice& lat);
Tensor loss_grad(const EmissionLattice& lat, const ForwardBackwardResult& fb);

/// Ground-truth loss by explicit enumeration of every alignment whose
/// blank-removal equals the target and whose final symbol is a blank at the
/// last frame. Independent of the dynamic program above. Rejects instances
/// with T + U > 14.
double brute_force_loss(const EmissionLattice& lat);

/// Text rendering of the alpha/beta tables for test triage.
std::string dump_alpha_beta(const AlphaBeta& ab);

}  // namespace tlab

#endif  // TLAB_RNNT_LOSS_H_
