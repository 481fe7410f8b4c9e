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

#include "entgate/entropy.hpp"

#include <algorithm>
#include <cmath>

#include "entgate/error.hpp"

namespace entgate {

void CompensatedSum::Add(double value) noexcept {
  const double t = sum_ + value;
  if (std::abs(sum_) >= std::abs(value)) {
    compensation_ += (sum_ - t) + value;
  } else {
    compensation_ += (value - t) + sum_;
  }
  sum_ = t;
}

void CanonicalizeTokenLogprobs(TokenLogprobs& token) {
  if (token.entries.empty()) {
    throw Error(ErrorCode::kEmptyInput, "token has no logprob alternatives");
  }
  if (token.entries.size() > kMaxTopK) {
    throw Error(ErrorCode::kInconsistentK,
                "token has " + std::to_string(token.entries.size()) +
                    " alternatives; at most 64 are supported");
  }
  for (const auto& alt : token.entries) {
    if (!std::isfinite(alt.logprob)) {
      throw Error(ErrorCode::kNonFiniteInput,
                  "non-finite logprob for token '" + alt.token + "'");
    }
  }
  std::stable_sort(token.entries.begin(), token.entries.end(),
                   [](const TokenAlternative& a, const TokenAlternative& b) {
                     return a.logprob > b.logprob;
                   });
}

TokenDistribution NormalizeLogprobs(std::span<const double> logprobs) {
  if (logprobs.empty()) {
    throw Error(ErrorCode::kEmptyInput, "cannot normalize an empty logprob list");
  }
  double max_logprob = logprobs.front();
  for (double lp : logprobs) {
    if (!std::isfinite(lp)) {
      throw Error(ErrorCode::kNonFiniteInput, "non-finite logprob");
    }
    max_logprob = std::max(max_logprob, lp);
  }

  TokenDistribution dist;
  dist.probs.reserve(logprobs.size());
  CompensatedSum total;
  for (double lp : logprobs) {
    const double w = std::exp(lp - max_logprob);
    dist.probs.push_back(w);
    total.Add(w);
  }
  // total >= 1 because the maximum contributes exp(0).
  const double z = total.Total();
  for (double& p : dist.probs) p /= z;
  return dist;
}

TokenDistribution NormalizeLogprobs(const TokenLogprobs& raw) {
  std::vector<double> values;
  values.reserve(raw.entries.size());
  for (const auto& alt : raw.entries) values.push_back(alt.logprob);
  return NormalizeLogprobs(values);
}

double TokenEntropy(std::span<const double> probs) {
  CompensatedSum h;
  for (double p : probs) {
    if (p > 0.0) h.Add(-p * std::log2(p));
  }
  const double upper = probs.empty() ? 0.0 : std::log2(double(probs.size()));
  return std::clamp(h.Total(), 0.0, upper);
}

double MeanEntropy(std::span<const double> per_token) {
  if (per_token.empty()) {
    throw Error(ErrorCode::kEmptySequence, "mean entropy of an empty sequence");
  }
  CompensatedSum sum;
  for (double h : per_token) sum.Add(h);
  return sum.Total() / double(per_token.size());
}

EntropyProfile ProfileTokens(std::span<const TokenLogprobs> tokens,
                             std::size_t k_limit) {
  if (k_limit == 0 || k_limit > kMaxTopK) {
    throw Error(ErrorCode::kInconsistentK,
                "k_limit must be in [1, 64], got " + std::to_string(k_limit));
  }
  if (tokens.empty()) {
    throw Error(ErrorCode::kMissingLogprobs, "completion has no token logprobs");
  }

  EntropyProfile profile;
  profile.per_token.reserve(tokens.size());
  profile.effective_k = k_limit;
  std::vector<double> window;
  window.reserve(k_limit);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto& entries = tokens[t].entries;
    if (entries.empty()) {
      throw Error(ErrorCode::kMissingLogprobs,
                  "token " + std::to_string(t) + " has no alternatives");
    }
    const std::size_t k = std::min(k_limit, entries.size());
    profile.effective_k = std::min(profile.effective_k, k);
    window.clear();
    for (std::size_t i = 0; i < k; ++i) window.push_back(entries[i].logprob);
    profile.per_token.push_back(TokenEntropy(NormalizeLogprobs(window)));
  }
  profile.token_count = profile.per_token.size();
  profile.mean = MeanEntropy(profile.per_token);
  return profile;
}

}  // namespace entgate
