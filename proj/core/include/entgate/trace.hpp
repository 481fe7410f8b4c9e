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

// Multi-step reasoning traces and their line-delimited JSON file format.
//
// The first line is a header record; every following line is one question:
//
//   {"schema_version":1,"model_name":"m","k_logprobs":20,"temperature":0.7}
//   {"question_id":"q1","dataset":"aime24","gold_answer":"42",
//    "steps":[{"step_index":1,"completion_text":"...","token_count":2,
//              "tokens":[{"topk":[{"token":"a","logprob":-0.1},...]},...],
//              "extracted_answer":"42"}, ...],
//    "step_correct":[true, ...]}

#ifndef ENTGATE_TRACE_HPP_
#define ENTGATE_TRACE_HPP_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "entgate/entropy.hpp"

namespace entgate {

inline constexpr int kTraceSchemaVersion = 1;
inline constexpr std::size_t kMaxSteps = 10;

struct StepTrace {
  std::size_t step_index = 1;
  std::string completion_text;
  std::vector<TokenLogprobs> tokens;  // empty when logprobs were not recorded
  std::size_t token_count = 0;
  std::optional<std::string> extracted_answer;

  bool HasLogprobs() const noexcept { return !tokens.empty(); }

  friend bool operator==(const StepTrace&, const StepTrace&) = default;
};

struct QuestionTrace {
  std::string question_id;
  std::string dataset;
  std::string gold_answer;
  std::vector<StepTrace> steps;
  std::vector<bool> step_correct;

  bool Step1Correct() const { return step_correct.front(); }
  bool FinalCorrect() const { return step_correct.back(); }

  friend bool operator==(const QuestionTrace&, const QuestionTrace&) = default;
};

struct TraceSet {
  std::string model_name;
  std::size_t k_logprobs = 20;
  double temperature = 0.7;
  std::vector<QuestionTrace> questions;

  friend bool operator==(const TraceSet&, const TraceSet&) = default;
};

// Mean-entropy profile of one step at `k_limit` alternatives per token.
EntropyProfile ProfileCompletion(const StepTrace& step, std::size_t k_limit);

// Checks the question invariants against a declared k. Sorts every token's
// alternatives in place. Throws kInvariantViolation naming the question.
void ValidateQuestion(QuestionTrace& question, std::size_t k_logprobs);

// Streams and validates a trace file. An empty file is a kParseError (no
// header); a header-only file yields an empty set.
TraceSet LoadTraces(std::istream& in);
TraceSet LoadTraces(const std::filesystem::path& path);

void SaveTraces(std::ostream& out, const TraceSet& traces);
void SaveTraces(const std::filesystem::path& path, const TraceSet& traces);

std::string SerializeHeader(const TraceSet& traces);
std::string SerializeQuestion(const QuestionTrace& question);

// Append-only trace file for live runs; safe to call Append from several
// threads, each question lands on its own line.
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, std::string model_name,
              std::size_t k_logprobs, double temperature);

  void Append(const QuestionTrace& question);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

}  // namespace entgate

#endif  // ENTGATE_TRACE_HPP_
