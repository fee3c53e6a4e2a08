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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "doctest.h"
#include "tlab/kernels.h"
#include "tlab/rng.h"

using namespace tlab;

namespace {
std::vector<double> random_vec(Rng& rng, int64_t n) {
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = rng.gaussian();
  return v;
}

bool bit_identical(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}
}  // namespace

TEST_CASE("matmul parallel matches serial bit for bit") {
  Rng rng(7);
  // Shapes straddle the parallel-dispatch threshold.
  for (auto [m, k, n] : {std::tuple<int64_t, int64_t, int64_t>{3, 4, 5},
                         {17, 31, 23},
                         {128, 64, 96},
                         {200, 100, 80}}) {
    auto a = random_vec(rng, m * k);
    auto b = random_vec(rng, k * n);
    std::vector<double> c_serial(static_cast<size_t>(m * n)), c_par(static_cast<size_t>(m * n)),
        c_dispatch(static_cast<size_t>(m * n));
    kernels::matmul_serial(a.data(), b.data(), c_serial.data(), m, k, n);
    kernels::matmul_parallel(a.data(), b.data(), c_par.data(), m, k, n);
    kernels::matmul(a.data(), b.data(), c_dispatch.data(), m, k, n);
    CHECK(bit_identical(c_serial, c_par));
    CHECK(bit_identical(c_serial, c_dispatch));
  }
}

TEST_CASE("matmul_tn_acc parallel matches serial under repeated accumulation") {
  Rng rng(8);
  const int64_t m = 150, k = 60, n = 70;
  auto a = random_vec(rng, m * k);
  auto b = random_vec(rng, m * n);
  std::vector<double> c1(static_cast<size_t>(k * n), 0.5), c2(static_cast<size_t>(k * n), 0.5);
  kernels::matmul_tn_acc_serial(a.data(), b.data(), c1.data(), m, k, n);
  kernels::matmul_tn_acc_serial(a.data(), b.data(), c1.data(), m, k, n);
  kernels::matmul_tn_acc_parallel(a.data(), b.data(), c2.data(), m, k, n);
  kernels::matmul_tn_acc_parallel(a.data(), b.data(), c2.data(), m, k, n);
  CHECK(bit_identical(c1, c2));
}

TEST_CASE("matmul_nt parallel matches serial") {
  Rng rng(9);
  const int64_t m = 90, n = 110, k = 40;
  auto a = random_vec(rng, m * n);
  auto b = random_vec(rng, k * n);
  std::vector<double> c1(static_cast<size_t>(m * k)), c2(static_cast<size_t>(m * k));
  kernels::matmul_nt_serial(a.data(), b.data(), c1.data(), m, n, k);
  kernels::matmul_nt_parallel(a.data(), b.data(), c2.data(), m, n, k);
  CHECK(bit_identical(c1, c2));
}

TEST_CASE("log_softmax_rows parallel matches serial") {
  Rng rng(10);
  const int64_t rows = 300, cols = 33;
  auto x = random_vec(rng, rows * cols);
  std::vector<double> y1(x.size()), y2(x.size());
  kernels::log_softmax_rows_serial(x.data(), y1.data(), rows, cols);
  kernels::log_softmax_rows_parallel(x.data(), y2.data(), rows, cols);
  CHECK(bit_identical(y1, y2));
}

TEST_CASE("broadcast_add_tu parallel matches serial") {
  Rng rng(11);
  const int64_t t = 64, u = 40, d = 16;
  auto f = random_vec(rng, t * d);
  auto g = random_vec(rng, u * d);
  std::vector<double> z1(static_cast<size_t>(t * u * d)), z2(static_cast<size_t>(t * u * d));
  kernels::broadcast_add_tu_serial(f.data(), g.data(), z1.data(), t, u, d);
  kernels::broadcast_add_tu_parallel(f.data(), g.data(), z2.data(), t, u, d);
  CHECK(bit_identical(z1, z2));
}

TEST_CASE("dispatch honours the parallel switch") {
  kernels::set_parallel_enabled(false);
  CHECK_FALSE(kernels::parallel_enabled());
  Rng rng(12);
  const int64_t m = 120, k = 80, n = 60;
  auto a = random_vec(rng, m * k);
  auto b = random_vec(rng, k * n);
  std::vector<double> c1(static_cast<size_t>(m * n)), c2(static_cast<size_t>(m * n));
  kernels::matmul(a.data(), b.data(), c1.data(), m, k, n);
  kernels::set_parallel_enabled(true);
  kernels::matmul(a.data(), b.data(), c2.data(), m, k, n);
  CHECK(bit_identical(c1, c2));
}

TEST_CASE("log_sum_exp handles -inf and large offsets") {
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(kernels::log_sum_exp(ninf, -1.5) == doctest::Approx(-1.5));
  CHECK(kernels::log_sum_exp(-1.5, ninf) == doctest::Approx(-1.5));
  CHECK(kernels::log_sum_exp(ninf, ninf) == ninf);
  CHECK(kernels::log_sum_exp(1000.0, 0.0) == doctest::Approx(1000.0));
  const double two = std::log(2.0);
  CHECK(kernels::log_sum_exp(0.0, 0.0) == doctest::Approx(two).epsilon(1e-12));

  std::vector<double> xs{ninf, 0.0, std::log(2.0)};
  CHECK(kernels::log_sum_exp(xs.data(), 3) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}
