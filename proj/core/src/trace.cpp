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

#include "entgate/trace.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "entgate/error.hpp"
#include "json.hpp"

namespace entgate {

using nlohmann::json;

namespace {

[[noreturn]] void Violation(const std::string& question_id, const std::string& detail) {
  throw Error(ErrorCode::kInvariantViolation,
              "question '" + question_id + "': " + detail);
}

[[noreturn]] void ParseFailure(std::size_t line_no, const std::string& detail) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": " + detail);
}

json StepToJson(const StepTrace& step) {
  json tokens = json::array();
  for (const auto& tok : step.tokens) {
    json topk = json::array();
    for (const auto& alt : tok.entries) {
      topk.push_back({{"token", alt.token}, {"logprob", alt.logprob}});
    }
    tokens.push_back({{"topk", std::move(topk)}});
  }
  json j = {{"step_index", step.step_index},
            {"completion_text", step.completion_text},
            {"token_count", step.token_count},
            {"tokens", std::move(tokens)}};
  j["extracted_answer"] =
      step.extracted_answer ? json(*step.extracted_answer) : json(nullptr);
  return j;
}

StepTrace StepFromJson(const json& j) {
  StepTrace step;
  step.step_index = j.at("step_index").get<std::size_t>();
  step.completion_text = j.at("completion_text").get<std::string>();
  step.token_count = j.at("token_count").get<std::size_t>();
  if (auto it = j.find("tokens"); it != j.end()) {
    for (const auto& tok : *it) {
      TokenLogprobs t;
      for (const auto& alt : tok.at("topk")) {
        t.entries.push_back({alt.at("token").get<std::string>(),
                             alt.at("logprob").get<double>()});
      }
      step.tokens.push_back(std::move(t));
    }
  }
  if (auto it = j.find("extracted_answer"); it != j.end() && !it->is_null()) {
    step.extracted_answer = it->get<std::string>();
  }
  return step;
}

QuestionTrace QuestionFromJson(const json& j) {
  QuestionTrace q;
  q.question_id = j.at("question_id").get<std::string>();
  q.dataset = j.at("dataset").get<std::string>();
  q.gold_answer = j.at("gold_answer").get<std::string>();
  for (const auto& s : j.at("steps")) q.steps.push_back(StepFromJson(s));
  for (const auto& c : j.at("step_correct")) q.step_correct.push_back(c.get<bool>());
  return q;
}

}  // namespace

EntropyProfile ProfileCompletion(const StepTrace& step, std::size_t k_limit) {
  if (!step.HasLogprobs()) {
    throw Error(ErrorCode::kMissingLogprobs,
                "step " + std::to_string(step.step_index) + " has no token logprobs");
  }
  return ProfileTokens(step.tokens, k_limit);
}

void ValidateQuestion(QuestionTrace& q, std::size_t k_logprobs) {
  if (q.question_id.empty()) Violation(q.question_id, "empty question_id");
  if (q.steps.empty()) Violation(q.question_id, "no steps");
  if (q.steps.size() > kMaxSteps) {
    Violation(q.question_id, std::to_string(q.steps.size()) + " steps exceed the limit of 10");
  }
  if (q.step_correct.size() != q.steps.size()) {
    Violation(q.question_id, "step_correct has " + std::to_string(q.step_correct.size()) +
                                 " entries for " + std::to_string(q.steps.size()) + " steps");
  }
  for (std::size_t s = 0; s < q.steps.size(); ++s) {
    auto& step = q.steps[s];
    const std::string where = "step " + std::to_string(s + 1);
    if (step.step_index != s + 1) {
      Violation(q.question_id, where + " has step_index " + std::to_string(step.step_index) +
                                   " (indices must be contiguous from 1)");
    }
    if (step.token_count == 0) Violation(q.question_id, where + " has token_count 0");
    if (!step.HasLogprobs()) continue;
    if (step.token_count != step.tokens.size()) {
      Violation(q.question_id, where + " token_count " + std::to_string(step.token_count) +
                                   " != " + std::to_string(step.tokens.size()) +
                                   " logprob rows");
    }
    for (std::size_t t = 0; t < step.tokens.size(); ++t) {
      auto& token = step.tokens[t];
      if (token.entries.size() > k_logprobs) {
        Violation(q.question_id, where + " token " + std::to_string(t) + " has " +
                                     std::to_string(token.entries.size()) +
                                     " alternatives, declared k is " +
                                     std::to_string(k_logprobs));
      }
      try {
        CanonicalizeTokenLogprobs(token);
      } catch (const Error& e) {
        Violation(q.question_id, where + " token " + std::to_string(t) + ": " + e.what());
      }
    }
  }
}

std::string SerializeHeader(const TraceSet& traces) {
  return json{{"schema_version", kTraceSchemaVersion},
              {"model_name", traces.model_name},
              {"k_logprobs", traces.k_logprobs},
              {"temperature", traces.temperature}}
      .dump();
}

std::string SerializeQuestion(const QuestionTrace& q) {
  json steps = json::array();
  for (const auto& s : q.steps) steps.push_back(StepToJson(s));
  json correct = json::array();
  for (bool c : q.step_correct) correct.push_back(c);
  return json{{"question_id", q.question_id},
              {"dataset", q.dataset},
              {"gold_answer", q.gold_answer},
              {"steps", std::move(steps)},
              {"step_correct", std::move(correct)}}
      .dump();
}

TraceSet LoadTraces(std::istream& in) {
  TraceSet traces;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      ParseFailure(line_no, std::string("malformed JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        const int version = j.at("schema_version").get<int>();
        if (version != kTraceSchemaVersion) {
          ParseFailure(line_no, "unsupported schema_version " + std::to_string(version));
        }
        traces.model_name = j.at("model_name").get<std::string>();
        traces.k_logprobs = j.at("k_logprobs").get<std::size_t>();
        traces.temperature = j.at("temperature").get<double>();
        if (traces.k_logprobs < 1 || traces.k_logprobs > kMaxTopK) {
          ParseFailure(line_no, "k_logprobs must be in [1, 64]");
        }
        have_header = true;
        continue;
      }
      traces.questions.push_back(QuestionFromJson(j));
    } catch (const json::exception& e) {
      ParseFailure(line_no, std::string("schema violation: ") + e.what());
    }
    ValidateQuestion(traces.questions.back(), traces.k_logprobs);
  }
  if (!have_header) ParseFailure(line_no == 0 ? 1 : line_no, "missing header record");
  return traces;
}

TraceSet LoadTraces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  return LoadTraces(in);
}

void SaveTraces(std::ostream& out, const TraceSet& traces) {
  out << SerializeHeader(traces) << '\n';
  for (const auto& q : traces.questions) out << SerializeQuestion(q) << '\n';
}

void SaveTraces(const std::filesystem::path& path, const TraceSet& traces) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  SaveTraces(out, traces);
}

TraceWriter::TraceWriter(const std::filesystem::path& path, std::string model_name,
                         std::size_t k_logprobs, double temperature)
    : out_(path, std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  TraceSet header{std::move(model_name), k_logprobs, temperature, {}};
  out_ << SerializeHeader(header) << '\n' << std::flush;
}

void TraceWriter::Append(const QuestionTrace& question) {
  const std::string line = SerializeQuestion(question);
  std::lock_guard lock(mu_);
  out_ << line << '\n' << std::flush;
}

}  // namespace entgate
