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

#include "entgate/client.hpp"

#include <cctype>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "entgate/error.hpp"
#include "json.hpp"

namespace entgate {

using nlohmann::json;

void EndpointConfig::Validate() const {
  if (top_logprobs < 1 || top_logprobs > kMaxTopK) {
    throw Error(ErrorCode::kInvalidArgument, "top_logprobs must be in [1, 64]");
  }
  if (max_steps < 1 || max_steps > kMaxSteps) {
    throw Error(ErrorCode::kInvalidArgument, "max_steps must be in [1, 10]");
  }
  if (max_tokens_per_step == 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_tokens_per_step must be positive");
  }
  try {
    if (!json::parse(extra_body).is_object()) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "extra_body must be a JSON object");
  }
}

void LiveGateConfig::Validate(const EndpointConfig& endpoint) const {
  if (k_limit < 1 || k_limit > endpoint.top_logprobs) {
    throw Error(ErrorCode::kInvalidArgument,
                "gate k_limit must be in [1, top_logprobs=" +
                    std::to_string(endpoint.top_logprobs) + "]");
  }
  if (std::isnan(tau)) throw Error(ErrorCode::kInvalidArgument, "gate tau is NaN");
}

CompletionStep ParseCompletion(const std::string& response_body) {
  json j;
  try {
    j = json::parse(response_body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kLogprobsUnsupported,
                std::string("response is not JSON: ") + e.what());
  }
  CompletionStep step;
  try {
    const json& choice = j.at("choices").at(0);
    const json& content = choice.at("message").at("content");
    if (!content.is_null()) step.content = content.get<std::string>();

    const auto lp = choice.find("logprobs");
    if (lp == choice.end() || lp->is_null() || !lp->contains("content") ||
        !lp->at("content").is_array()) {
      throw Error(ErrorCode::kLogprobsUnsupported,
                  "response has no choices[0].logprobs.content");
    }
    for (const auto& row : lp->at("content")) {
      const auto top = row.find("top_logprobs");
      if (top == row.end() || !top->is_array() || top->empty()) {
        throw Error(ErrorCode::kLogprobsUnsupported,
                    "logprob row without top_logprobs alternatives");
      }
      TokenLogprobs token;
      for (const auto& alt : *top) {
        token.entries.push_back(
            {alt.at("token").get<std::string>(), alt.at("logprob").get<double>()});
      }
      CanonicalizeTokenLogprobs(token);
      step.tokens.push_back(std::move(token));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kLogprobsUnsupported,
                std::string("unexpected completion shape: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kLogprobsUnsupported) throw;
    throw Error(ErrorCode::kLogprobsUnsupported,
                std::string("invalid logprobs: ") + e.what());
  }
  if (step.tokens.empty()) {
    throw Error(ErrorCode::kLogprobsUnsupported, "completion carried no logprob rows");
  }
  return step;
}

std::string BuildChatRequest(const EndpointConfig& endpoint,
                             const std::vector<ChatMessage>& messages) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  json body = {{"model", endpoint.model},
               {"messages", std::move(msgs)},
               {"temperature", endpoint.temperature},
               {"max_tokens", endpoint.max_tokens_per_step}};
  const json extra = json::parse(endpoint.extra_body);
  for (const auto& [key, value] : extra.items()) body[key] = value;
  body["logprobs"] = true;
  body["top_logprobs"] = endpoint.top_logprobs;
  return body.dump();
}

ChatClient::ChatClient(EndpointConfig endpoint, std::shared_ptr<ChatTransport> transport)
    : endpoint_(std::move(endpoint)), transport_(std::move(transport)) {
  endpoint_.Validate();
}

CompletionStep ChatClient::Complete(const std::vector<ChatMessage>& messages) {
  ++calls_;
  const std::string body = BuildChatRequest(endpoint_, messages);
  HeaderList headers;
  if (!endpoint_.api_key.empty()) {
    headers.emplace_back("Authorization", "Bearer " + endpoint_.api_key);
  }

  std::exception_ptr last;
  auto backoff = endpoint_.retry.backoff;
  for (std::size_t attempt = 0; attempt <= endpoint_.retry.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    try {
      ++http_requests_;
      HttpResponse res = transport_->Post("/chat/completions", body, headers);
      if (res.status >= 200 && res.status < 300) return ParseCompletion(res.body);
      if (res.status == 429 || res.status >= 500) {
        last = std::make_exception_ptr(ProviderError(res.status, res.body));
        continue;
      }
      throw ProviderError(res.status, res.body);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTimeout && e.code() != ErrorCode::kIoError) throw;
      last = std::current_exception();
    }
  }
  if (endpoint_.retry.max_retries == 0) std::rethrow_exception(last);
  std::string detail;
  try {
    std::rethrow_exception(last);
  } catch (const std::exception& e) {
    detail = e.what();
  }
  throw Error(ErrorCode::kRetriesExhausted,
              "gave up after " + std::to_string(endpoint_.retry.max_retries + 1) +
                  " attempts; last error: " + detail);
}

std::vector<QuestionInput> LoadQuestions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::vector<QuestionInput> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      QuestionInput q;
      q.question_id = j.at("question_id").get<std::string>();
      q.dataset = j.value("dataset", "");
      q.prompt = j.at("prompt").get<std::string>();
      q.gold_answer = j.value("gold_answer", "");
      const std::string kind = j.value(
          "kind", q.dataset.find("gpqa") != std::string::npos ? "choice_gpqa"
                                                              : "integer_aime");
      const auto parsed = ParseAnswerKind(kind);
      if (!parsed) throw std::invalid_argument("unknown kind '" + kind + "'");
      q.kind = *parsed;
      out.push_back(std::move(q));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

bool AnswerMatches(const std::optional<std::string>& extracted,
                   const std::string& gold, AnswerKind kind) {
  if (!extracted || gold.empty()) return false;
  std::string g;
  for (char ch : gold) {
    if (!std::isspace(static_cast<unsigned char>(ch))) g += ch;
  }
  if (kind == AnswerKind::kIntegerAime) {
    const auto normalized = ExtractAnswer("answer is " + g, kind);
    return normalized && *normalized == *extracted;
  }
  for (char& ch : g) ch = char(std::toupper(static_cast<unsigned char>(ch)));
  return g == *extracted;
}

namespace {

StepTrace MakeStep(std::size_t index, CompletionStep&& completion,
                   const QuestionInput& question) {
  StepTrace step;
  step.step_index = index;
  step.extracted_answer = ExtractAnswer(completion.content, question.kind);
  step.completion_text = std::move(completion.content);
  step.tokens = std::move(completion.tokens);
  step.token_count = step.tokens.size();
  return step;
}

QuestionTrace EmptyTrace(const QuestionInput& question) {
  QuestionTrace trace;
  trace.question_id = question.question_id;
  trace.dataset = question.dataset;
  trace.gold_answer = question.gold_answer;
  return trace;
}

// Runs fn(i) for i in [0, n) on up to `concurrency` threads; the first
// exception stops new work and is rethrown.
template <typename Fn>
void ParallelFor(std::size_t n, std::size_t concurrency, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(concurrency, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

QuestionTrace RunQuestion(const QuestionInput& question, ChatClient& client,
                          const std::optional<LiveGateConfig>& gate,
                          std::optional<std::size_t> max_steps) {
  const EndpointConfig& endpoint = client.endpoint();
  const std::size_t steps = max_steps.value_or(endpoint.max_steps);
  if (steps < 1 || steps > kMaxSteps) {
    throw Error(ErrorCode::kInvalidArgument, "max_steps must be in [1, 10]");
  }
  if (gate) gate->Validate(endpoint);

  QuestionTrace trace = EmptyTrace(question);
  std::vector<ChatMessage> messages = {{"user", question.prompt}};
  for (std::size_t s = 1; s <= steps; ++s) {
    StepTrace step = MakeStep(s, client.Complete(messages), question);
    trace.step_correct.push_back(
        AnswerMatches(step.extracted_answer, question.gold_answer, question.kind));
    const std::string assistant = step.completion_text;
    const bool stop =
        s == 1 && gate && gate->Stops(ProfileTokens(step.tokens, gate->k_limit).mean);
    trace.steps.push_back(std::move(step));
    if (stop || s == steps) break;
    messages.push_back({"assistant", assistant});
    messages.push_back({"user", endpoint.refine_prompt});
  }
  return trace;
}

std::vector<QuestionTrace> RunQuestions(const std::vector<QuestionInput>& questions,
                                        ChatClient& client,
                                        const std::optional<LiveGateConfig>& gate,
                                        std::size_t concurrency, TraceWriter* writer) {
  std::vector<QuestionTrace> out(questions.size());
  ParallelFor(questions.size(), concurrency, [&](std::size_t i) {
    out[i] = RunQuestion(questions[i], client, gate);
    if (writer) writer->Append(out[i]);
  });
  return out;
}

BudgetRunResult RunBudget(const std::vector<QuestionInput>& questions,
                          const BudgetPlan& plan, BudgetPolicy policy,
                          ChatClient& client, std::size_t concurrency) {
  std::map<std::string, const QuestionInput*> by_id;
  for (const auto& q : questions) {
    if (!by_id.emplace(q.question_id, &q).second) {
      throw Error(ErrorCode::kPlanMismatch, "duplicate question '" + q.question_id + "'");
    }
  }
  if (plan.allocations.size() != questions.size()) {
    throw Error(ErrorCode::kPlanMismatch,
                "plan covers " + std::to_string(plan.allocations.size()) +
                    " questions, input has " + std::to_string(questions.size()));
  }
  for (const auto& a : plan.allocations) {
    if (!by_id.count(a.question_id)) {
      throw Error(ErrorCode::kPlanMismatch,
                  "plan names unknown question '" + a.question_id + "'");
    }
    if (a.calls < 1 || a.calls > kMaxSteps) {
      throw Error(ErrorCode::kPlanMismatch,
                  "question '" + a.question_id + "' has " + std::to_string(a.calls) +
                      " calls; supported range is [1, 10]");
    }
  }
  if (!VerifyConservation(plan).pass) {
    throw Error(ErrorCode::kPlanMismatch, "plan does not conserve its call budget");
  }

  BudgetRunResult result;
  result.questions.resize(plan.allocations.size());
  ParallelFor(plan.allocations.size(), concurrency, [&](std::size_t i) {
    const CallAllocation& alloc = plan.allocations[i];
    const QuestionInput& q = *by_id.at(alloc.question_id);
    BudgetQuestionResult& r = result.questions[i];
    r.calls = alloc.calls;
    if (policy == BudgetPolicy::kSequentialRefine) {
      r.trace = RunQuestion(q, client, std::nullopt, alloc.calls);
      r.aggregate_answer = r.trace.steps.back().extracted_answer;
    } else {
      r.trace = EmptyTrace(q);
      std::vector<AnswerVote> votes;
      for (std::uint64_t c = 1; c <= alloc.calls; ++c) {
        StepTrace step = MakeStep(c, client.Complete({{"user", q.prompt}}), q);
        votes.push_back({step.extracted_answer,
                         ProfileTokens(step.tokens, client.endpoint().top_logprobs).mean});
        r.trace.step_correct.push_back(
            AnswerMatches(step.extracted_answer, q.gold_answer, q.kind));
        r.trace.steps.push_back(std::move(step));
      }
      r.aggregate_answer = MajorityVote(votes);
    }
    r.aggregate_correct = AnswerMatches(r.aggregate_answer, q.gold_answer, q.kind);
  });
  for (const auto& r : result.questions) result.calls_issued += r.trace.steps.size();
  return result;
}

}  // namespace entgate
