// Copyright 2026 The linkdp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef LINKDP_RANDOM_H_
#define LINKDP_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace linkdp {

// Name of the Gaussian generation routine. Recorded in run manifests; bump it
// whenever Rng::Normal changes its output for a given seed.
inline constexpr char kNormalRoutine[] = "mt19937_64+marsaglia-polar/v1";

// Derives an independent child seed from a parent seed and a stream index.
// The rule is a SplitMix64 finalizer applied to parent ^ golden-ratio-scaled
// stream, so (parent, stream) pairs map to well-mixed 64-bit seeds.
uint64_t DeriveSeed(uint64_t parent, uint64_t stream);
uint64_t DeriveSeed(uint64_t parent, uint64_t stream_a, uint64_t stream_b);

// Seeded random stream. Every draw is defined here rather than through the
// implementation-defined <random> distributions, so a seed produces the same
// numbers on every standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  // Uniform integer in [0, bound). bound must be positive.
  uint64_t UniformInt(uint64_t bound);

  // Standard normal via the Marsaglia polar method; the second variate of each
  // accepted pair is cached and returned by the next call.
  double Normal();

  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }

  // Fisher-Yates shuffle driven by UniformInt.
  template <typename T>
  void Shuffle(std::span<T> values) {
    for (size_t i = values.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(UniformInt(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace linkdp

#endif  // LINKDP_RANDOM_H_
