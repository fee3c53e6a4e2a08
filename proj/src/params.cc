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

#include "tlab/params.h"

#include <cmath>
#include <stdexcept>

namespace tlab {

void OptimConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("OptimConfig: lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0) throw std::invalid_argument("OptimConfig: beta1 must be in [0,1)");
  if (beta2 < 0.0 || beta2 >= 1.0) throw std::invalid_argument("OptimConfig: beta2 must be in [0,1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("OptimConfig: epsilon must be positive");
  if (warmup_steps < 0) throw std::invalid_argument("OptimConfig: warmup_steps must be >= 0");
}

Param& ParamStore::add(const std::string& name, Tensor init) {
  if (has(name)) throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
  Param p;
  p.name = name;
  p.grad = Tensor::zeros(init.shape());
  p.m = Tensor::zeros(init.shape());
  p.v = Tensor::zeros(init.shape());
  p.value = std::move(init);
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return params_.back();
}

Param& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter '" + name + "'");
  return params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter '" + name + "'");
  return params_[it->second];
}

void ParamStore::zero_grads() {
  for (Param& p : params_) p.grad.fill(0.0);
}

int64_t ParamStore::total_elements() const {
  int64_t n = 0;
  for (const Param& p : params_) n += p.value.numel();
  return n;
}

void adam_step(ParamStore& store, const OptimConfig& cfg) {
  adam_step(store, cfg, [](const std::string&) { return true; });
}

void adam_step(ParamStore& store, const OptimConfig& cfg,
               const std::function<bool(const std::string&)>& update_filter) {
  cfg.validate();
  for (const Param& p : store.all()) {
    if (!update_filter(p.name)) continue;
    if (!p.grad.all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient in parameter '" + p.name + "'");
    }
  }

  const int64_t t = store.step() + 1;
  double lr = cfg.lr;
  if (cfg.warmup_steps > 0 && t < cfg.warmup_steps) {
    lr *= static_cast<double>(t) / static_cast<double>(cfg.warmup_steps);
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

  for (Param& p : store.all()) {
    if (!update_filter(p.name)) continue;
    const int64_t n = p.value.numel();
    double* value = p.value.data();
    double* grad = p.grad.data();
    double* m = p.m.data();
    double* v = p.v.data();
    for (int64_t i = 0; i < n; ++i) {
      const double g = grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      value[i] -= lr * mhat / (std::sqrt(vhat) + cfg.epsilon);
      grad[i] = 0.0;
    }
  }
  store.set_step(t);
}

}  // namespace tlab
