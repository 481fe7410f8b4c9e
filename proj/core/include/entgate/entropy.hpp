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

// Sequence-level Shannon entropy from top-k token logprobs.
//
// All entropies are in bits. A completion's confidence signal is the
// arithmetic mean of its per-token entropies, where each token's entropy is
// taken over the softmax-renormalized top-k alternatives the provider
// reported for that position.

#ifndef ENTGATE_ENTROPY_HPP_
#define ENTGATE_ENTROPY_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace entgate {

inline constexpr std::size_t kMaxTopK = 64;

struct TokenAlternative {
  std::string token;
  double logprob = 0.0;  // natural-log units; raw logits are accepted too

  friend bool operator==(const TokenAlternative&,
                         const TokenAlternative&) = default;
};

// Top-k alternatives for one emitted token, sorted by descending logprob.
struct TokenLogprobs {
  std::vector<TokenAlternative> entries;

  std::size_t k() const noexcept { return entries.size(); }

  friend bool operator==(const TokenLogprobs&, const TokenLogprobs&) = default;
};

struct TokenDistribution {
  std::vector<double> probs;
};

struct EntropyProfile {
  std::vector<double> per_token;
  double mean = 0.0;
  std::size_t token_count = 0;
  // Smallest number of alternatives actually used for any token. Lower than
  // the requested k_limit when the provider clipped its top-k list.
  std::size_t effective_k = 0;
};

// Sorts entries by descending logprob (stable) and validates 1 <= k <= 64
// and finiteness. Throws kEmptyInput, kNonFiniteInput or kInconsistentK.
void CanonicalizeTokenLogprobs(TokenLogprobs& token);

// Softmax with max subtraction. Throws kEmptyInput / kNonFiniteInput.
TokenDistribution NormalizeLogprobs(std::span<const double> logprobs);
TokenDistribution NormalizeLogprobs(const TokenLogprobs& raw);

// -sum p log2 p with 0 log 0 = 0.
double TokenEntropy(std::span<const double> probs);
inline double TokenEntropy(const TokenDistribution& dist) {
  return TokenEntropy(dist.probs);
}

// Compensated mean of per-token entropies. Throws kEmptySequence.
double MeanEntropy(std::span<const double> per_token);

// Truncates every token to its top `k_limit` alternatives, renormalizes and
// averages. Tokens reporting fewer than `k_limit` alternatives use what they
// have. Throws kMissingLogprobs for an empty sequence or a token with no
// alternatives, kInconsistentK for k_limit outside [1, 64].
EntropyProfile ProfileTokens(std::span<const TokenLogprobs> tokens,
                             std::size_t k_limit);

// Neumaier-compensated sum; shared by everything that averages long
// sequences.
class CompensatedSum {
 public:
  void Add(double value) noexcept;
  double Total() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace entgate

#endif  // ENTGATE_ENTROPY_HPP_
