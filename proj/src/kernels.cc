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

#include "tlab/kernels.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tlab {
namespace kernels {

namespace {
// Below this many fused multiply-adds the fork/join overhead dominates.
constexpr int64_t kMinParallelWork = 1 << 14;

std::atomic<bool> g_parallel{true};

bool use_parallel(int64_t work) {
#ifdef _OPENMP
  return g_parallel.load(std::memory_order_relaxed) && work >= kMinParallelWork &&
         omp_get_max_threads() > 1;
#else
  (void)work;
  return false;
#endif
}
}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel_enabled(bool enabled) { g_parallel.store(enabled, std::memory_order_relaxed); }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void matmul_serial(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    std::fill(ci, ci + n, 0.0);
    const double* ai = a + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void matmul_parallel(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    std::fill(ci, ci + n, 0.0);
    const double* ai = a + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
#else
  matmul_serial(a, b, c, m, k, n);
#endif
}

void matmul(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  if (use_parallel(m * k * n)) {
    matmul_parallel(a, b, c, m, k, n);
  } else {
    matmul_serial(a, b, c, m, k, n);
  }
}

void matmul_tn_acc_serial(const double* a, const double* b, double* c, int64_t m, int64_t k,
                          int64_t n) {
  for (int64_t i = 0; i < k; ++i) {
    double* ci = c + i * n;
    for (int64_t r = 0; r < m; ++r) {
      const double av = a[r * k + i];
      const double* br = b + r * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * br[j];
    }
  }
}

void matmul_tn_acc_parallel(const double* a, const double* b, double* c, int64_t m, int64_t k,
                            int64_t n) {
#ifdef _OPENMP
  // Rows of c are independent; the reduction over m stays sequential.
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < k; ++i) {
    double* ci = c + i * n;
    for (int64_t r = 0; r < m; ++r) {
      const double av = a[r * k + i];
      const double* br = b + r * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += av * br[j];
    }
  }
#else
  matmul_tn_acc_serial(a, b, c, m, k, n);
#endif
}

void matmul_tn_acc(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
  if (use_parallel(m * k * n)) {
    matmul_tn_acc_parallel(a, b, c, m, k, n);
  } else {
    matmul_tn_acc_serial(a, b, c, m, k, n);
  }
}

void matmul_nt_serial(const double* a, const double* b, double* c, int64_t m, int64_t n,
                      int64_t k) {
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    double* ci = c + i * k;
    for (int64_t j = 0; j < k; ++j) {
      const double* bj = b + j * n;
      double acc = 0.0;
      for (int64_t p = 0; p < n; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

void matmul_nt_parallel(const double* a, const double* b, double* c, int64_t m, int64_t n,
                        int64_t k) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    double* ci = c + i * k;
    for (int64_t j = 0; j < k; ++j) {
      const double* bj = b + j * n;
      double acc = 0.0;
      for (int64_t p = 0; p < n; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
#else
  matmul_nt_serial(a, b, c, m, n, k);
#endif
}

void matmul_nt(const double* a, const double* b, double* c, int64_t m, int64_t n, int64_t k) {
  if (use_parallel(m * n * k)) {
    matmul_nt_parallel(a, b, c, m, n, k);
  } else {
    matmul_nt_serial(a, b, c, m, n, k);
  }
}

void add_row_vector(double* x, const double* b, int64_t rows, int64_t cols) {
  for (int64_t r = 0; r < rows; ++r) {
    double* xr = x + r * cols;
    for (int64_t c = 0; c < cols; ++c) xr[c] += b[c];
  }
}

void col_sums_acc(const double* x, double* out, int64_t rows, int64_t cols) {
  for (int64_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    for (int64_t c = 0; c < cols; ++c) out[c] += xr[c];
  }
}

void tanh_forward(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void sigmoid_forward(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) {
    const double v = x[i];
    // Evaluate exp on the negative half-line only; stable for any finite v.
    y[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
}

void tanh_backward_acc(const double* y, const double* dy, double* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dx[i] += (1.0 - y[i] * y[i]) * dy[i];
}

void sigmoid_backward_acc(const double* y, const double* dy, double* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dx[i] += y[i] * (1.0 - y[i]) * dy[i];
}

namespace {
inline void log_softmax_one_row(const double* x, double* y, int64_t cols) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int64_t c = 0; c < cols; ++c) mx = std::max(mx, x[c]);
  double sum = 0.0;
  for (int64_t c = 0; c < cols; ++c) sum += std::exp(x[c] - mx);
  const double lse = mx + std::log(sum);
  for (int64_t c = 0; c < cols; ++c) y[c] = x[c] - lse;
}
}  // namespace

void log_softmax_rows_serial(const double* x, double* y, int64_t rows, int64_t cols) {
  for (int64_t r = 0; r < rows; ++r) log_softmax_one_row(x + r * cols, y + r * cols, cols);
}

void log_softmax_rows_parallel(const double* x, double* y, int64_t rows, int64_t cols) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) log_softmax_one_row(x + r * cols, y + r * cols, cols);
#else
  log_softmax_rows_serial(x, y, rows, cols);
#endif
}

void log_softmax_rows(const double* x, double* y, int64_t rows, int64_t cols) {
  if (use_parallel(rows * cols * 4)) {
    log_softmax_rows_parallel(x, y, rows, cols);
  } else {
    log_softmax_rows_serial(x, y, rows, cols);
  }
}

void log_softmax_backward_rows(const double* y, const double* dy, double* dx, int64_t rows,
                               int64_t cols) {
  for (int64_t r = 0; r < rows; ++r) {
    const double* yr = y + r * cols;
    const double* dyr = dy + r * cols;
    double* dxr = dx + r * cols;
    double s = 0.0;
    for (int64_t c = 0; c < cols; ++c) s += dyr[c];
    for (int64_t c = 0; c < cols; ++c) dxr[c] = dyr[c] - std::exp(yr[c]) * s;
  }
}

void broadcast_add_tu_serial(const double* f, const double* g, double* z, int64_t t_len,
                             int64_t u_len, int64_t width) {
  for (int64_t t = 0; t < t_len; ++t) {
    const double* ft = f + t * width;
    for (int64_t u = 0; u < u_len; ++u) {
      const double* gu = g + u * width;
      double* zu = z + (t * u_len + u) * width;
      for (int64_t d = 0; d < width; ++d) zu[d] = ft[d] + gu[d];
    }
  }
}

void broadcast_add_tu_parallel(const double* f, const double* g, double* z, int64_t t_len,
                               int64_t u_len, int64_t width) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (int64_t t = 0; t < t_len; ++t) {
    const double* ft = f + t * width;
    for (int64_t u = 0; u < u_len; ++u) {
      const double* gu = g + u * width;
      double* zu = z + (t * u_len + u) * width;
      for (int64_t d = 0; d < width; ++d) zu[d] = ft[d] + gu[d];
    }
  }
#else
  broadcast_add_tu_serial(f, g, z, t_len, u_len, width);
#endif
}

void broadcast_add_tu(const double* f, const double* g, double* z, int64_t t_len, int64_t u_len,
                      int64_t width) {
  if (use_parallel(t_len * u_len * width)) {
    broadcast_add_tu_parallel(f, g, z, t_len, u_len, width);
  } else {
    broadcast_add_tu_serial(f, g, z, t_len, u_len, width);
  }
}

void broadcast_add_tu_backward_acc(const double* dz, double* df, double* dg, int64_t t_len,
                                   int64_t u_len, int64_t width) {
  for (int64_t t = 0; t < t_len; ++t) {
    double* dft = df + t * width;
    for (int64_t u = 0; u < u_len; ++u) {
      const double* dzu = dz + (t * u_len + u) * width;
      double* dgu = dg + u * width;
      for (int64_t d = 0; d < width; ++d) {
        dft[d] += dzu[d];
        dgu[d] += dzu[d];
      }
    }
  }
}

void axpy(double alpha, const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, int64_t n) {
  for (int64_t i = 0; i < n; ++i) x[i] *= alpha;
}

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

double log_sum_exp(const double* x, int64_t n) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int64_t i = 0; i < n; ++i) mx = std::max(mx, x[i]);
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (int64_t i = 0; i < n; ++i) sum += std::exp(x[i] - mx);
  return mx + std::log(sum);
}

}  // namespace kernels
}  // namespace tlab
