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

#ifndef TLAB_PARAMS_H_
#define TLAB_PARAMS_H_

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tlab/tensor.h"

namespace tlab {

struct OptimConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  uint64_t seed = 1;
  int64_t warmup_steps = 0;  // linear ramp of lr over the first N steps; 0 = constant

  void validate() const;
};

/// One named parameter: value, gradient, and Adam moment buffers, all of the
/// same shape.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
};

/// Ordered collection of named parameters. Iteration order is registration
/// order, which keeps checkpoints and optimizer sweeps reproducible.
class ParamStore {
 public:
  Param& add(const std::string& name, Tensor init);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Param>& all() { return params_; }
  const std::vector<Param>& all() const { return params_; }
  size_t size() const { return params_.size(); }

  void zero_grads();
  int64_t total_elements() const;

  /// Optimizer step counter, persisted in checkpoints.
  int64_t step() const { return step_; }
  void set_step(int64_t s) { step_ = s; }

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, size_t> index_;
  int64_t step_ = 0;
};

/// One Adam update with bias correction over every parameter; gradients are
/// zeroed afterwards and the store's step counter advances. A non-finite
/// gradient aborts before any state is touched, naming the offending
/// parameter.
void adam_step(ParamStore& store, const OptimConfig& cfg);

/// Same, but only parameters for which update_filter returns true are
/// touched at all (value, moments, and gradient of the others stay
/// bit-identical).
void adam_step(ParamStore& store, const OptimConfig& cfg,
               const std::function<bool(const std::string&)>& update_filter);

}  // namespace tlab

#endif  // TLAB_PARAMS_H_
