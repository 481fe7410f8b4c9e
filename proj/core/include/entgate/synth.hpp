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

// Synthetic trace generation for desk-scale experiments.
//
// Step entropies are drawn from class-conditional Gaussians and then realized
// exactly: every token of a step carries the same two-point distribution
// (p, (1-p)/(k-1) x (k-1)) with p chosen so the token entropy, and hence the
// step mean, equals the drawn target.

#ifndef ENTGATE_SYNTH_HPP_
#define ENTGATE_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "entgate/trace.hpp"

namespace entgate {

struct SynthSpec {
  std::string model_name = "synthetic";
  std::string dataset = "synthetic";
  double mu_c = 0.0;     // correct-class entropy mean (bits)
  double sigma_c = 0.0;
  double mu_i = 0.0;     // incorrect-class entropy mean (bits)
  double sigma_i = 0.0;
  std::size_t questions = 30;
  double step1_accuracy = 0.7;
  // Accuracy after the final step; defaults to step1_accuracy. The uplift
  // is granted to step-1-incorrect questions in descending entropy order.
  std::optional<double> final_accuracy;
  std::size_t steps = 4;
  std::size_t k = 20;
  double temperature = 0.7;
  std::size_t min_tokens = 16;
  std::size_t max_tokens = 64;
  // Added to the class mean for every step after the first.
  double step_entropy_drift = 0.0;
  // Rescales each class's step-1 draws to exactly (mu, sigma), using the
  // n - 1 sample sd, before clamping to [0, log2 k]. Classes with fewer than
  // two questions are left as drawn.
  bool match_moments = false;
  std::uint64_t seed = 0;
};

// Reads a JSON object whose keys match the SynthSpec field names.
SynthSpec ParseSynthSpec(std::istream& in);

// Throws kInfeasibleSpec on out-of-range parameters.
TraceSet SynthesizeTraces(const SynthSpec& spec);

// Probability p of the top alternative such that the two-point family over k
// alternatives has entropy `target_bits`. Requires 0 < target < log2(k).
double SolveTwoPointProbability(double target_bits, std::size_t k);

// A step of `n_tokens` identical tokens whose k-alternative entropy equals
// `target_bits` (clamped to [0, log2 k]).
StepTrace RealizeEntropyStep(double target_bits, std::size_t k,
                             std::size_t n_tokens, std::size_t step_index = 1);

}  // namespace entgate

#endif  // ENTGATE_SYNTH_HPP_
