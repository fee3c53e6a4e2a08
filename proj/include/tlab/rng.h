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

#ifndef TLAB_RNG_H_
#define TLAB_RNG_H_

#include <cstdint>
#include <random>

namespace tlab {

/// Deterministic random source. All sampling routines are implemented here
/// on top of the raw 64-bit stream instead of the standard distributions,
/// so a given seed yields one exact sequence everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 bits of entropy.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Inclusive integer range via rejection sampling.
  int64_t uniform_int(int64_t lo, int64_t hi);

  /// Standard normal via Box-Muller with a cached spare.
  double gaussian();
  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  /// Samples an index in [0, n) proportional to probs (must sum to ~1).
  int categorical(const double* probs, int n);

  /// Derives an unrelated substream, e.g. one per utterance.
  static Rng substream(uint64_t seed, uint64_t stream);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finalizer, used to decorrelate derived seeds.
uint64_t mix_seed(uint64_t a, uint64_t b);

}  // namespace tlab

#endif  // TLAB_RNG_H_
