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

#include "tlab/layers.h"

#include <stdexcept>

#include "tlab/kernels.h"

namespace tlab {

namespace {
void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}
}  // namespace

Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b) {
  require(x.ndim() == 2 && W.ndim() == 2 && b.ndim() == 1,
          "affine: expected x[n,in], W[in,out], b[out], got x=" + x.shape_str() + " W=" +
              W.shape_str() + " b=" + b.shape_str());
  require(x.dim(1) == W.dim(0) && W.dim(1) == b.dim(0),
          "affine: shape mismatch x=" + x.shape_str() + " W=" + W.shape_str() + " b=" +
              b.shape_str());
  const int64_t n = x.dim(0), in = x.dim(1), out = W.dim(1);
  Tensor y({n, out});
  kernels::matmul(x.data(), W.data(), y.data(), n, in, out);
  kernels::add_row_vector(y.data(), b.data(), n, out);
  return y;
}

Tensor affine_backward(const Tensor& x, const Tensor& W, const Tensor& dy, Tensor* dW,
                       Tensor* db) {
  const int64_t n = x.dim(0), in = x.dim(1), out = W.dim(1);
  require(dy.ndim() == 2 && dy.dim(0) == n && dy.dim(1) == out,
          "affine_backward: dy shape " + dy.shape_str() + " does not match output [" +
              std::to_string(n) + ", " + std::to_string(out) + "]");
  if (dW != nullptr) kernels::matmul_tn_acc(x.data(), dy.data(), dW->data(), n, in, out);
  if (db != nullptr) kernels::col_sums_acc(dy.data(), db->data(), n, out);
  Tensor dx({n, in});
  kernels::matmul_nt(dy.data(), W.data(), dx.data(), n, out, in);
  return dx;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y(x.shape());
  kernels::sigmoid_forward(x.data(), y.data(), x.numel());
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  check_same_shape(y, dy, "sigmoid_backward");
  Tensor dx(y.shape());
  kernels::sigmoid_backward_acc(y.data(), dy.data(), dx.data(), y.numel());
  return dx;
}

Tensor tanh_map(const Tensor& x) {
  Tensor y(x.shape());
  kernels::tanh_forward(x.data(), y.data(), x.numel());
  return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
  check_same_shape(y, dy, "tanh_backward");
  Tensor dx(y.shape());
  kernels::tanh_backward_acc(y.data(), dy.data(), dx.data(), y.numel());
  return dx;
}

Tensor log_softmax(const Tensor& x) {
  require(x.ndim() >= 1 && x.dim(x.ndim() - 1) >= 1, "log_softmax: empty class axis");
  const int64_t cols = x.dim(x.ndim() - 1);
  const int64_t rows = x.numel() / cols;
  Tensor y(x.shape());
  kernels::log_softmax_rows(x.data(), y.data(), rows, cols);
  return y;
}

Tensor log_softmax_backward(const Tensor& y, const Tensor& dy) {
  check_same_shape(y, dy, "log_softmax_backward");
  const int64_t cols = y.dim(y.ndim() - 1);
  const int64_t rows = y.numel() / cols;
  Tensor dx(y.shape());
  kernels::log_softmax_backward_rows(y.data(), dy.data(), dx.data(), rows, cols);
  return dx;
}

Tensor recurrent_step(const Tensor& state, const Tensor& embedding, const Tensor& W,
                      const Tensor& b) {
  require(state.ndim() == 1 && embedding.ndim() == 1, "recurrent_step: state and embedding must be vectors");
  const int64_t h = state.dim(0), e = embedding.dim(0);
  require(W.ndim() == 2 && W.dim(0) == h + e && W.dim(1) == h && b.dim(0) == h,
          "recurrent_step: width mismatch, state=" + state.shape_str() + " embedding=" +
              embedding.shape_str() + " W=" + W.shape_str());
  Tensor z({1, h + e});
  for (int64_t i = 0; i < h; ++i) z.at(0, i) = state.at(i);
  for (int64_t i = 0; i < e; ++i) z.at(0, h + i) = embedding.at(i);
  Tensor pre = affine(z, W, b);
  Tensor out({h});
  kernels::tanh_forward(pre.data(), out.data(), h);
  return out;
}

void recurrent_step_backward(const Tensor& state, const Tensor& embedding, const Tensor& W,
                             const Tensor& new_state, const Tensor& dnew, Tensor* dstate,
                             Tensor* dembedding, Tensor* dW, Tensor* db) {
  const int64_t h = state.dim(0), e = embedding.dim(0);
  Tensor dpre({1, h});
  kernels::tanh_backward_acc(new_state.data(), dnew.data(), dpre.data(), h);
  Tensor z({1, h + e});
  for (int64_t i = 0; i < h; ++i) z.at(0, i) = state.at(i);
  for (int64_t i = 0; i < e; ++i) z.at(0, h + i) = embedding.at(i);
  Tensor dz = affine_backward(z, W, dpre, dW, db);
  if (dstate != nullptr) {
    for (int64_t i = 0; i < h; ++i) dstate->at(i) += dz.at(0, i);
  }
  if (dembedding != nullptr) {
    for (int64_t i = 0; i < e; ++i) dembedding->at(i) += dz.at(0, h + i);
  }
}

}  // namespace tlab
