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

#ifndef TLAB_KERNELS_H_
#define TLAB_KERNELS_H_

#include <cstdint>

namespace tlab {
namespace kernels {

// Every kernel comes in a serial reference version and an OpenMP version.
// The OpenMP versions split work over independent output elements only and
// keep every reduction sequential inside one thread, so both versions produce
// bit-identical results for any thread count. The unsuffixed entry points
// dispatch on set_parallel_enabled() and a per-call work estimate.
//
// Naming: suffix _acc means the destination is accumulated into (+=),
// otherwise it is overwritten.

bool parallel_enabled();
void set_parallel_enabled(bool enabled);
int max_threads();

// c[m,n] = a[m,k] * b[k,n]
void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
void matmul_serial(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
void matmul_parallel(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);

// c[k,n] += a[m,k]^T * b[m,n]   (weight gradient of an affine layer)
void matmul_tn_acc(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n);
void matmul_tn_acc_serial(const double* a, const double* b, double* c, int64_t m, int64_t k,
                          int64_t n);
void matmul_tn_acc_parallel(const double* a, const double* b, double* c, int64_t m, int64_t k,
                            int64_t n);

// c[m,k] = a[m,n] * b[k,n]^T   (input gradient of an affine layer)
void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t n, int64_t k);
void matmul_nt_serial(const double* a, const double* b, double* c, int64_t m, int64_t n, int64_t k);
void matmul_nt_parallel(const double* a, const double* b, double* c, int64_t m, int64_t n,
                        int64_t k);

// x[r,:] += b for every row r
void add_row_vector(double* x, const double* b, int64_t rows, int64_t cols);

// out[c] += sum_r x[r,c]   (bias gradient)
void col_sums_acc(const double* x, double* out, int64_t rows, int64_t cols);

// Elementwise maps; y and x may alias.
void tanh_forward(const double* x, double* y, int64_t n);
void sigmoid_forward(const double* x, double* y, int64_t n);
// dx += (1 - y^2) * dy  /  dx += y * (1 - y) * dy, from the forward outputs y.
void tanh_backward_acc(const double* y, const double* dy, double* dx, int64_t n);
void sigmoid_backward_acc(const double* y, const double* dy, double* dx, int64_t n);

// Per-row log-softmax with max shift; y and x may alias.
void log_softmax_rows(const double* x, double* y, int64_t rows, int64_t cols);
void log_softmax_rows_serial(const double* x, double* y, int64_t rows, int64_t cols);
void log_softmax_rows_parallel(const double* x, double* y, int64_t rows, int64_t cols);
// dx = dy - exp(y) * sum(dy) per row (gradient w.r.t. the pre-softmax logits).
void log_softmax_backward_rows(const double* y, const double* dy, double* dx, int64_t rows,
                               int64_t cols);

// z[t,u,:] = f[t,:] + g[u,:]
void broadcast_add_tu(const double* f, const double* g, double* z, int64_t t_len, int64_t u_len,
                      int64_t width);
void broadcast_add_tu_serial(const double* f, const double* g, double* z, int64_t t_len,
                             int64_t u_len, int64_t width);
void broadcast_add_tu_parallel(const double* f, const double* g, double* z, int64_t t_len,
                               int64_t u_len, int64_t width);
// df[t,:] += sum_u dz[t,u,:],  dg[u,:] += sum_t dz[t,u,:]
void broadcast_add_tu_backward_acc(const double* dz, double* df, double* dg, int64_t t_len,
                                   int64_t u_len, int64_t width);

void axpy(double alpha, const double* x, double* y, int64_t n);  // y += alpha * x
void scale(double alpha, double* x, int64_t n);

// Stable log(exp(a) + exp(b)); -inf operands behave as true zeros.
double log_sum_exp(double a, double b);
double log_sum_exp(const double* x, int64_t n);

}  // namespace kernels
}  // namespace tlab

#endif  // TLAB_KERNELS_H_
