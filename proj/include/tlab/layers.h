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

#ifndef TLAB_LAYERS_H_
#define TLAB_LAYERS_H_

#include <vector>

#include "tlab/tensor.h"

namespace tlab {

// Composable layers with explicit backward passes. Forward functions return
// the activation; backward functions take the cached forward operands, the
// upstream gradient, and accumulate parameter gradients (+=) while returning
// or accumulating input gradients. There is no graph: callers chain these by
// hand in reverse order.

/// y = x W + b.  x: [n, in], W: [in, out], b: [out].
Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b);

/// Returns dx; accumulates into dW and db (either may be null).
Tensor affine_backward(const Tensor& x, const Tensor& W, const Tensor& dy, Tensor* dW, Tensor* db);

/// Elementwise logistic sigmoid, stable for |x| up to ~1e3 and beyond.
Tensor sigmoid(const Tensor& x);
/// dx from the forward output y: dx = y (1 - y) dy.
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

Tensor tanh_map(const Tensor& x);
Tensor tanh_backward(const Tensor& y, const Tensor& dy);

/// Log-softmax along the last axis (max-shifted; exp of each row sums to 1).
Tensor log_softmax(const Tensor& x);
/// Gradient w.r.t. the pre-softmax logits: dx = dy - exp(y) * rowsum(dy).
Tensor log_softmax_backward(const Tensor& y, const Tensor& dy);

/// One step of the label/vocabulary recurrence:
/// new_state = tanh([state; embedding] W + b).
/// state: [h], embedding: [e], W: [h+e, h], b: [h].
Tensor recurrent_step(const Tensor& state, const Tensor& embedding, const Tensor& W,
                      const Tensor& b);

/// Backward for one step. new_state is the forward output; dnew is its
/// gradient. Accumulates into dW/db and into dstate/dembedding.
void recurrent_step_backward(const Tensor& state, const Tensor& embedding, const Tensor& W,
                             const Tensor& new_state, const Tensor& dnew, Tensor* dstate,
                             Tensor* dembedding, Tensor* dW, Tensor* db);

}  // namespace tlab

#endif  // TLAB_LAYERS_H_
