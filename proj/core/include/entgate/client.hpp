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

// Client for OpenAI-compatible chat-completion endpoints that records top-k
// logprobs and runs the sequential refinement protocol: the question is
// asked once, and each further step re-sends the conversation with a fixed
// refinement turn appended.

#ifndef ENTGATE_CLIENT_HPP_
#define ENTGATE_CLIENT_HPP_

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "entgate/answer.hpp"
#include "entgate/budget.hpp"
#include "entgate/entropy.hpp"
#include "entgate/trace.hpp"
#include "entgate/transport.hpp"

namespace entgate {

inline constexpr const char* kDefaultRefinePrompt =
    "Continue reasoning. Re-examine your work and refine your final answer.";

struct RetryPolicy {
  std::size_t max_retries = 3;
  std::chrono::milliseconds backoff{500};  // doubled after every retry
};

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string api_key;  // sent as a bearer token when non-empty
  std::string model;
  double temperature = 0.7;
  std::size_t max_tokens_per_step = 8192;
  std::size_t top_logprobs = 20;
  std::size_t max_steps = 4;
  std::chrono::milliseconds request_timeout{600000};
  RetryPolicy retry;
  std::string refine_prompt = kDefaultRefinePrompt;
  // JSON object merged into every request body, e.g. provider-specific
  // knobs such as {"reasoning_effort":"high"}.
  std::string extra_body = "{}";

  // Throws kInvalidArgument for top_logprobs outside [1, 64] or max_steps
  // outside [1, 10].
  void Validate() const;
};

struct LiveGateConfig {
  double tau = 0.0;
  std::size_t k_limit = 20;
  bool stop_on_tie = true;

  bool Stops(double entropy) const {
    return stop_on_tie ? entropy <= tau : entropy < tau;
  }
  void Validate(const EndpointConfig& endpoint) const;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct CompletionStep {
  std::string content;
  std::vector<TokenLogprobs> tokens;
};

// Parses choices[0].message.content and choices[0].logprobs.content[]
// .top_logprobs[]. Throws kLogprobsUnsupported when the shape is missing.
CompletionStep ParseCompletion(const std::string& response_body);

// Request body for one step; `extra_body` fields are merged in last except
// that logprobs stay forced on.
std::string BuildChatRequest(const EndpointConfig& endpoint,
                             const std::vector<ChatMessage>& messages);

class ChatClient {
 public:
  ChatClient(EndpointConfig endpoint, std::shared_ptr<ChatTransport> transport);

  const EndpointConfig& endpoint() const { return endpoint_; }

  // One logical call, retried with exponential backoff on 429/5xx and
  // network failures.
  CompletionStep Complete(const std::vector<ChatMessage>& messages);

  std::uint64_t calls() const { return calls_.load(); }
  std::uint64_t http_requests() const { return http_requests_.load(); }

 private:
  EndpointConfig endpoint_;
  std::shared_ptr<ChatTransport> transport_;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> http_requests_{0};
};

struct QuestionInput {
  std::string question_id;
  std::string dataset;
  std::string prompt;
  std::string gold_answer;
  AnswerKind kind = AnswerKind::kIntegerAime;
};

// JSONL with question_id, dataset, prompt, gold_answer and kind
// ("integer_aime" or "choice_gpqa").
std::vector<QuestionInput> LoadQuestions(const std::filesystem::path& path);

// True when `extracted` names the same answer as `gold` under `kind`.
bool AnswerMatches(const std::optional<std::string>& extracted,
                   const std::string& gold, AnswerKind kind);

// Runs up to `max_steps` (default: the endpoint's) sequential steps. With a
// gate, the step-1 mean entropy at gate.k_limit decides whether to stop.
QuestionTrace RunQuestion(const QuestionInput& question, ChatClient& client,
                          const std::optional<LiveGateConfig>& gate,
                          std::optional<std::size_t> max_steps = std::nullopt);

// Runs questions with at most `concurrency` in flight. Each finished trace
// is appended to `writer` when given. Output order matches the input.
std::vector<QuestionTrace> RunQuestions(const std::vector<QuestionInput>& questions,
                                        ChatClient& client,
                                        const std::optional<LiveGateConfig>& gate,
                                        std::size_t concurrency,
                                        TraceWriter* writer = nullptr);

enum class BudgetPolicy { kSequentialRefine, kSelfConsistency };

struct BudgetQuestionResult {
  QuestionTrace trace;
  std::uint64_t calls = 0;
  std::optional<std::string> aggregate_answer;
  bool aggregate_correct = false;
};

struct BudgetRunResult {
  std::vector<BudgetQuestionResult> questions;
  std::uint64_t calls_issued = 0;
};

// Spends exactly the plan's calls. Under self-consistency every call is an
// independent first attempt and the answer is a majority vote; under
// sequential refinement the calls are successive refinement steps. Throws
// kPlanMismatch when plan and questions disagree or a question would need
// more than 10 calls.
BudgetRunResult RunBudget(const std::vector<QuestionInput>& questions,
                          const BudgetPlan& plan, BudgetPolicy policy,
                          ChatClient& client, std::size_t concurrency = 1);

}  // namespace entgate

#endif  // ENTGATE_CLIENT_HPP_
