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

#ifndef TLAB_CHECKPOINT_H_
#define TLAB_CHECKPOINT_H_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tlab/tensor.h"

namespace tlab {

/// Self-describing binary container of named float64 tensors plus a string
/// metadata map. Model checkpoints, averaged models, and feature archives all
/// use this one format; the exact byte layout is documented in
/// docs/formats.md. Writing is deterministic: metadata is sorted by key and
/// tensors keep their insertion order, so identical contents produce
/// identical bytes.
struct Container {
  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
  /// Metadata lookup that throws with the file context when the key is absent.
  const std::string& meta(const std::string& key) const;
};

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);

}  // namespace tlab

#endif  // TLAB_CHECKPOINT_H_
