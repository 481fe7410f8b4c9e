/* Copyright 2026 The entgate Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ENTGATE_RNG_HPP_
#define ENTGATE_RNG_HPP_

#include <cstdint>
#include <random>

namespace entgate {

// SplitMix64 finalizer; used to derive independent substream seeds.
std::uint64_t SplitMix64(std::uint64_t x) noexcept;

// Portable seeded generator. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the sampling helpers below avoid the
// library distributions because those differ between standard libraries.
//
// Streams: Rng::Substream(seed, i) seeds an independent generator for work
// item i, so parallel resampling gives the same results as serial.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(SplitMix64(seed)) {}

  static Rng Substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(seed ^ SplitMix64(index + 0x632be59bd9b4e019ULL));
  }

  std::uint64_t NextU64() { return engine_(); }

  // Uniform integer in [0, bound); bound > 0. Rejection sampling, unbiased.
  std::uint64_t UniformIndex(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double UniformUnit();

  // Standard normal via Box-Muller; caches the second variate.
  double StandardNormal();

  double Normal(double mean, double sd) { return mean + sd * StandardNormal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace entgate

#endif  // ENTGATE_RNG_HPP_
