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

#include "entgate/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <vector>

#include "entgate/error.hpp"
#include "entgate/rng.hpp"
#include "entgate/stats.hpp"
#include "json.hpp"

namespace entgate {

namespace {

double TwoPointEntropy(double p, std::size_t k) {
  const double rest = (1.0 - p) / double(k - 1);
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (rest > 0.0) h -= (1.0 - p) * std::log2(rest);
  return h;
}

[[noreturn]] void Infeasible(const std::string& detail) {
  throw Error(ErrorCode::kInfeasibleSpec, detail);
}

std::size_t RoundCount(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * double(n)));
}

// Affine rescale of the members of one class to an exact mean and sd.
void MatchMoments(std::vector<double>& values, const std::vector<bool>& label, bool cls,
                  double mean, double sd) {
  std::vector<double> members;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (label[i] == cls) members.push_back(values[i]);
  }
  if (members.size() < 2) return;
  const auto m = ComputeMoments(members);
  const double scale = m.sd > 0.0 ? sd / m.sd : 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (label[i] == cls) values[i] = mean + scale * (values[i] - m.mean);
  }
}

}  // namespace

double SolveTwoPointProbability(double target_bits, std::size_t k) {
  // Entropy falls monotonically from log2(k) at p = 1/k to 0 at p = 1.
  double lo = 1.0 / double(k);
  double hi = 1.0;
  for (int i = 0; i < 200 && lo < hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (TwoPointEntropy(mid, k) > target_bits) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double h_lo = TwoPointEntropy(lo, k) - target_bits;
  const double h_hi = target_bits - TwoPointEntropy(hi, k);
  return h_lo <= h_hi ? lo : hi;
}

StepTrace RealizeEntropyStep(double target_bits, std::size_t k,
                             std::size_t n_tokens, std::size_t step_index) {
  if (k < 1 || k > kMaxTopK || n_tokens == 0) {
    Infeasible("realization needs k in [1, 64] and at least one token");
  }
  const double max_bits = std::log2(double(k));
  target_bits = std::clamp(target_bits, 0.0, max_bits);

  TokenLogprobs token;
  if (k == 1 || target_bits <= 0.0) {
    token.entries.push_back({"t00", 0.0});
  } else if (target_bits >= max_bits) {
    const double lp = -std::log(double(k));
    for (std::size_t i = 0; i < k; ++i) {
      token.entries.push_back({"t" + std::to_string(100 + i).substr(1), lp});
    }
  } else {
    const double p = SolveTwoPointProbability(target_bits, k);
    const double rest = (1.0 - p) / double(k - 1);
    if (rest <= 0.0) {
      token.entries.push_back({"t00", 0.0});
    } else {
      token.entries.push_back({"t00", std::log(p)});
      const double lp = std::log(rest);
      for (std::size_t i = 1; i < k; ++i) {
        token.entries.push_back({"t" + std::to_string(100 + i).substr(1), lp});
      }
    }
  }

  StepTrace step;
  step.step_index = step_index;
  step.tokens.assign(n_tokens, token);
  step.token_count = n_tokens;
  return step;
}

SynthSpec ParseSynthSpec(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("synth spec: ") + e.what());
  }
  SynthSpec s;
  try {
    auto get = [&](const char* key, auto& field) {
      if (auto it = j.find(key); it != j.end()) {
        it->get_to(field);
      }
    };
    get("model_name", s.model_name);
    get("dataset", s.dataset);
    get("mu_c", s.mu_c);
    get("sigma_c", s.sigma_c);
    get("mu_i", s.mu_i);
    get("sigma_i", s.sigma_i);
    get("questions", s.questions);
    get("step1_accuracy", s.step1_accuracy);
    if (auto it = j.find("final_accuracy"); it != j.end() && !it->is_null()) {
      s.final_accuracy = it->get<double>();
    }
    get("steps", s.steps);
    get("k", s.k);
    get("temperature", s.temperature);
    get("min_tokens", s.min_tokens);
    get("max_tokens", s.max_tokens);
    get("step_entropy_drift", s.step_entropy_drift);
    get("match_moments", s.match_moments);
    get("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("synth spec: ") + e.what());
  }
  return s;
}

TraceSet SynthesizeTraces(const SynthSpec& spec) {
  const double final_accuracy = spec.final_accuracy.value_or(spec.step1_accuracy);
  for (double v : {spec.mu_c, spec.sigma_c, spec.mu_i, spec.sigma_i,
                   spec.step1_accuracy, final_accuracy, spec.step_entropy_drift}) {
    if (!std::isfinite(v)) Infeasible("parameters must be finite");
  }
  if (spec.sigma_c < 0.0 || spec.sigma_i < 0.0) Infeasible("sigma must be >= 0");
  if (spec.step1_accuracy < 0.0 || spec.step1_accuracy > 1.0 ||
      final_accuracy < 0.0 || final_accuracy > 1.0) {
    Infeasible("accuracies must lie in [0, 1]");
  }
  if (spec.questions == 0) Infeasible("questions must be >= 1");
  if (spec.steps < 1 || spec.steps > kMaxSteps) Infeasible("steps must be in [1, 10]");
  if (spec.k < 2 || spec.k > kMaxTopK) Infeasible("k must be in [2, 64]");
  if (spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens) {
    Infeasible("token range must satisfy 1 <= min_tokens <= max_tokens");
  }

  const std::size_t n = spec.questions;
  const std::size_t n_correct = RoundCount(spec.step1_accuracy, n);
  const std::size_t n_final = RoundCount(final_accuracy, n);
  if (n_final < n_correct) {
    Infeasible("final_accuracy below step1_accuracy: refinement never loses answers");
  }
  const std::size_t uplift = n_final - n_correct;
  if (uplift > 0 && spec.steps < 2) Infeasible("accuracy uplift needs >= 2 steps");

  Rng rng(spec.seed);
  const double max_bits = std::log2(double(spec.k));
  auto draw = [&](bool correct, std::size_t step) {
    const double mu = (correct ? spec.mu_c : spec.mu_i) +
                      spec.step_entropy_drift * double(step - 1);
    const double sd = correct ? spec.sigma_c : spec.sigma_i;
    return std::clamp(rng.Normal(mu, sd), 0.0, max_bits);
  };

  // Which questions are right at step 1: a seeded permutation.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.UniformIndex(i)]);
  }
  std::vector<bool> step1_correct(n, false);
  for (std::size_t i = 0; i < n_correct; ++i) step1_correct[order[i]] = true;

  std::vector<double> step1_entropy(n);
  for (std::size_t q = 0; q < n; ++q) {
    step1_entropy[q] = step1_correct[q] ? rng.Normal(spec.mu_c, spec.sigma_c)
                                        : rng.Normal(spec.mu_i, spec.sigma_i);
  }
  if (spec.match_moments) {
    MatchMoments(step1_entropy, step1_correct, true, spec.mu_c, spec.sigma_c);
    MatchMoments(step1_entropy, step1_correct, false, spec.mu_i, spec.sigma_i);
  }
  for (double& h : step1_entropy) h = std::clamp(h, 0.0, max_bits);

  // Refinement fixes the most uncertain step-1 failures first.
  std::vector<std::size_t> wrong;
  for (std::size_t q = 0; q < n; ++q) {
    if (!step1_correct[q]) wrong.push_back(q);
  }
  std::stable_sort(wrong.begin(), wrong.end(), [&](std::size_t a, std::size_t b) {
    return step1_entropy[a] > step1_entropy[b];
  });
  std::vector<std::size_t> fixed_at_step(n, 0);
  for (std::size_t u = 0; u < uplift; ++u) {
    fixed_at_step[wrong[u]] = 2 + rng.UniformIndex(spec.steps - 1);
  }

  TraceSet traces;
  traces.model_name = spec.model_name;
  traces.k_logprobs = spec.k;
  traces.temperature = spec.temperature;
  traces.questions.reserve(n);
  const std::size_t width = std::to_string(n).size();
  const std::uint64_t token_span = spec.max_tokens - spec.min_tokens + 1;
  for (std::size_t q = 0; q < n; ++q) {
    QuestionTrace trace;
    std::string id = std::to_string(q + 1);
    trace.question_id = spec.dataset + "-" + std::string(width - id.size(), '0') + id;
    trace.dataset = spec.dataset;
    const std::uint64_t gold = rng.UniformIndex(1000);
    const std::uint64_t wrong_answer = (gold + 1 + rng.UniformIndex(999)) % 1000;
    trace.gold_answer = std::to_string(gold);

    for (std::size_t s = 1; s <= spec.steps; ++s) {
      const bool correct = step1_correct[q] || (fixed_at_step[q] != 0 && s >= fixed_at_step[q]);
      const double h = s == 1 ? step1_entropy[q] : draw(correct, s);
      const std::size_t n_tokens = spec.min_tokens + rng.UniformIndex(token_span);
      StepTrace step = RealizeEntropyStep(h, spec.k, n_tokens, s);
      const std::string answer = std::to_string(correct ? gold : wrong_answer);
      step.completion_text = "Step " + std::to_string(s) + " reasoning. The answer is " +
                             answer + ".";
      step.extracted_answer = answer;
      trace.steps.push_back(std::move(step));
      trace.step_correct.push_back(correct);
    }
    traces.questions.push_back(std::move(trace));
  }
  return traces;
}

}  // namespace entgate
