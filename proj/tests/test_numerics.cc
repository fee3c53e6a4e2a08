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

#include "doctest.h"
#include "tlab/grad_check.h"
#include "tlab/layers.h"
#include "tlab/params.h"
#include "tlab/rng.h"
#include "tlab/tensor.h"

using namespace tlab;

namespace {
Tensor random_tensor(Rng& rng, std::vector<int64_t> shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = scale * rng.gaussian();
  return t;
}
}  // namespace

TEST_CASE("tensor shape and data invariants") {
  Tensor t({2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.shape_str() == "[2, 3]");
  t.at(1, 2) = 4.0;
  CHECK(t.at(5) == 4.0);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
  CHECK(Tensor::scalar(3.0).numel() == 1);
}

TEST_CASE("affine identity and arithmetic") {
  Tensor x({1, 2}, {1.0, 2.0});
  Tensor w_id({2, 2}, {1.0, 0.0, 0.0, 1.0});
  Tensor b0({2}, {0.0, 0.0});
  Tensor y = affine(x, w_id, b0);
  CHECK(y.at(0, 0) == 1.0);
  CHECK(y.at(0, 1) == 2.0);

  Tensor x2({1, 2}, {1.0, 1.0});
  Tensor w2({2, 1}, {2.0, 3.0});
  Tensor b2({1}, {1.0});
  CHECK(affine(x2, w2, b2).at(0, 0) == 6.0);
}

TEST_CASE("affine rejects mismatched shapes with a diagnostic naming both") {
  Tensor x({1, 3});
  Tensor w({2, 2});
  Tensor b({2});
  try {
    affine(x, w, b);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[1, 3]") != std::string::npos);
    CHECK(msg.find("[2, 2]") != std::string::npos);
  }
}

TEST_CASE("affine gradients match central finite differences") {
  Rng rng(101);
  ParamStore store;
  store.add("W", random_tensor(rng, {3, 2}, 0.6));
  store.add("b", random_tensor(rng, {2}, 0.3));
  const Tensor x = random_tensor(rng, {4, 3}, 0.8);

  auto f = [&x](ParamStore& s) {
    s.zero_grads();
    Param& W = s.at("W");
    Param& b = s.at("b");
    Tensor y = affine(x, W.value, b.value);
    double loss = 0.0;
    Tensor dy(y.shape());
    for (int64_t i = 0; i < y.numel(); ++i) {
      loss += y.at(i) * y.at(i);
      dy.at(i) = 2.0 * y.at(i);
    }
    affine_backward(x, W.value, dy, &W.grad, &b.grad);
    return loss;
  };

  const GradCheckReport rep = grad_check(f, store, 1e-5);
  CHECK(rep.max_rel_error < 1e-6);
}

TEST_CASE("sigmoid symmetry and saturation") {
  CHECK(sigmoid(Tensor::scalar(0.0)).at(0) == 0.5);
  CHECK(std::fabs(sigmoid(Tensor::scalar(100.0)).at(0) - 1.0) < 1e-12);
  CHECK(std::isfinite(sigmoid(Tensor::scalar(-1000.0)).at(0)));

  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-50.0, 50.0);
    const double s = sigmoid(Tensor::scalar(x)).at(0) + sigmoid(Tensor::scalar(-x)).at(0);
    CHECK(std::fabs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("log_softmax analytic values and stability") {
  Tensor y = log_softmax(Tensor({3}, {0.0, 0.0, 0.0}));
  for (int64_t i = 0; i < 3; ++i) CHECK(y.at(i) == doctest::Approx(-std::log(3.0)).epsilon(1e-14));

  Tensor y2 = log_softmax(Tensor({2}, {std::log(2.0), 0.0}));
  CHECK(y2.at(0) == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-14));
  CHECK(y2.at(1) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-14));

  Tensor y3 = log_softmax(Tensor({2}, {1000.0, 0.0}));
  CHECK(y3.all_finite());
}

TEST_CASE("exp(log_softmax) rows sum to one for random inputs") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor(rng, {4, 7}, 20.0);
    Tensor y = log_softmax(x);
    for (int64_t r = 0; r < 4; ++r) {
      double sum = 0.0;
      for (int64_t c = 0; c < 7; ++c) sum += std::exp(y.at(r, c));
      CHECK(std::fabs(sum - 1.0) < 1e-10);
    }
  }
}

TEST_CASE("recurrent_step degenerate and deterministic") {
  const int64_t h = 3, e = 2;
  Tensor w0({h + e, h});
  Tensor b({h}, {0.3, -0.2, 1.0});
  Tensor state({h}, {0.5, -0.5, 0.25});
  Tensor emb({e}, {1.0, 2.0});

  Tensor out = recurrent_step(state, emb, w0, b);
  for (int64_t i = 0; i < h; ++i) CHECK(out.at(i) == doctest::Approx(std::tanh(b.at(i))).epsilon(1e-15));

  Rng rng(77);
  Tensor w = random_tensor(rng, {h + e, h}, 0.5);
  Tensor o1 = recurrent_step(state, emb, w, b);
  Tensor o2 = recurrent_step(state, emb, w, b);
  CHECK(std::memcmp(o1.data(), o2.data(), sizeof(double) * h) == 0);

  CHECK_THROWS_AS(recurrent_step(state, Tensor({e + 1}), w, b), std::invalid_argument);
}

TEST_CASE("recurrent_step gradients through three chained steps") {
  Rng rng(303);
  const int64_t h = 4, e = 3;
  ParamStore store;
  store.add("W", random_tensor(rng, {h + e, h}, 0.4));
  store.add("b", random_tensor(rng, {h}, 0.2));
  const Tensor e0 = random_tensor(rng, {e}, 0.7);
  const Tensor e1 = random_tensor(rng, {e}, 0.7);
  const Tensor e2 = random_tensor(rng, {e}, 0.7);
  const Tensor weights = random_tensor(rng, {h}, 1.0);

  auto f = [&](ParamStore& s) {
    s.zero_grads();
    Param& W = s.at("W");
    Param& b = s.at("b");
    Tensor s0({h});
    Tensor s1 = recurrent_step(s0, e0, W.value, b.value);
    Tensor s2 = recurrent_step(s1, e1, W.value, b.value);
    Tensor s3 = recurrent_step(s2, e2, W.value, b.value);
    double loss = 0.0;
    Tensor d3({h});
    for (int64_t i = 0; i < h; ++i) {
      loss += weights.at(i) * s3.at(i);
      d3.at(i) = weights.at(i);
    }
    Tensor d2({h}), d1({h}), d0({h});
    recurrent_step_backward(s2, e2, W.value, s3, d3, &d2, nullptr, &W.grad, &b.grad);
    recurrent_step_backward(s1, e1, W.value, s2, d2, &d1, nullptr, &W.grad, &b.grad);
    recurrent_step_backward(s0, e0, W.value, s1, d1, &d0, nullptr, &W.grad, &b.grad);
    return loss;
  };

  const GradCheckReport rep = grad_check(f, store, 1e-5);
  CHECK(rep.max_rel_error < 1e-5);
}

TEST_CASE("adam with zero gradients keeps parameters and advances the step") {
  ParamStore store;
  store.add("p", Tensor({2}, {1.5, -2.0}));
  OptimConfig cfg;
  adam_step(store, cfg);
  CHECK(store.at("p").value.at(0) == 1.5);
  CHECK(store.at("p").value.at(1) == -2.0);
  CHECK(store.step() == 1);
}

TEST_CASE("adam first update magnitude is the learning rate after bias correction") {
  ParamStore store;
  store.add("p", Tensor::scalar(0.0));
  OptimConfig cfg;
  cfg.lr = 0.1;
  store.at("p").grad.at(0) = 1.0;
  adam_step(store, cfg);
  CHECK(store.at("p").value.at(0) == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(store.at("p").grad.at(0) == 0.0);  // zeroed afterwards
}

TEST_CASE("adam is deterministic across identical stores") {
  auto build = [] {
    ParamStore s;
    s.add("a", Tensor({3}, {0.1, 0.2, 0.3}));
    s.add("b", Tensor({2}, {-1.0, 2.0}));
    return s;
  };
  ParamStore s1 = build(), s2 = build();
  OptimConfig cfg;
  for (int step = 0; step < 5; ++step) {
    for (ParamStore* s : {&s1, &s2}) {
      for (Param& p : s->all()) {
        for (int64_t i = 0; i < p.grad.numel(); ++i) p.grad.at(i) = 0.01 * (step + 1) * (i + 1);
      }
      adam_step(*s, cfg);
    }
  }
  for (size_t pi = 0; pi < s1.size(); ++pi) {
    const Tensor& a = s1.all()[pi].value;
    const Tensor& b = s2.all()[pi].value;
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.numel()) == 0);
  }
}

TEST_CASE("adam rejects non-finite gradients naming the parameter") {
  ParamStore store;
  store.add("enc.w", Tensor({2}));
  store.at("enc.w").grad.at(0) = std::nan("");
  OptimConfig cfg;
  try {
    adam_step(store, cfg);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("enc.w") != std::string::npos);
  }
  // Aborted before mutating anything.
  CHECK(store.step() == 0);
  CHECK(store.at("enc.w").value.at(0) == 0.0);
}

TEST_CASE("adam filter leaves excluded parameters bit-identical") {
  ParamStore store;
  store.add("vocab_lm.w", Tensor({2}, {1.0, 1.0}));
  store.add("enc.w", Tensor({2}, {2.0, 2.0}));
  for (Param& p : store.all())
    for (int64_t i = 0; i < 2; ++i) p.grad.at(i) = 1.0;
  OptimConfig cfg;
  adam_step(store, cfg, [](const std::string& name) { return name.rfind("vocab_lm.", 0) == 0; });
  CHECK(store.at("vocab_lm.w").value.at(0) != 1.0);
  CHECK(store.at("enc.w").value.at(0) == 2.0);
  CHECK(store.at("enc.w").grad.at(0) == 1.0);  // untouched, not even zeroed
}

TEST_CASE("grad_check on a quadratic is exact to roundoff") {
  Rng rng(9);
  ParamStore store;
  store.add("p", random_tensor(rng, {5}, 1.0));
  auto f = [](ParamStore& s) {
    s.zero_grads();
    Param& p = s.at("p");
    double loss = 0.0;
    for (int64_t i = 0; i < p.value.numel(); ++i) {
      loss += p.value.at(i) * p.value.at(i);
      p.grad.at(i) = 2.0 * p.value.at(i);
    }
    return loss;
  };
  CHECK(grad_check(f, store, 1e-5).max_rel_error < 1e-8);
}

TEST_CASE("grad_check constant function leaves zero analytic gradients") {
  ParamStore store;
  store.add("p", Tensor({4}, {1.0, 2.0, 3.0, 4.0}));
  auto f = [](ParamStore& s) {
    s.zero_grads();
    return 42.0;
  };
  grad_check(f, store, 1e-5);
  for (int64_t i = 0; i < 4; ++i) CHECK(std::fabs(store.at("p").grad.at(i)) <= 1e-10);
}

TEST_CASE("optim config validation") {
  OptimConfig bad;
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = OptimConfig();
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
