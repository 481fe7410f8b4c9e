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

#include "entgate/answer.hpp"

#include <map>
#include <regex>

namespace entgate {

std::optional<AnswerKind> ParseAnswerKind(std::string_view name) {
  if (name == "integer_aime" || name == "aime" || name == "integer") {
    return AnswerKind::kIntegerAime;
  }
  if (name == "choice_gpqa" || name == "gpqa" || name == "choice") {
    return AnswerKind::kChoiceGpqa;
  }
  return std::nullopt;
}

std::string_view AnswerKindName(AnswerKind kind) {
  return kind == AnswerKind::kIntegerAime ? "integer_aime" : "choice_gpqa";
}

namespace {

std::optional<std::string> ExtractInteger(const std::string& text) {
  static const std::regex kBoxed(R"(\\boxed\s*\{\s*(\d{1,6})\s*\})");
  static const std::regex kStated(R"(answer\s*(?:is|:)\s*:?\s*[*$\\(]*\s*(\d{1,6}))",
                                  std::regex::icase);
  std::optional<std::string> best;
  std::ptrdiff_t best_pos = -1;
  for (const auto* re : {&kBoxed, &kStated}) {
    for (auto it = std::sregex_iterator(text.begin(), text.end(), *re);
         it != std::sregex_iterator(); ++it) {
      const auto& m = *it;
      const int value = std::stoi(m.str(1));
      if (value < 0 || value > 999) continue;
      if (m.position(1) > best_pos) {
        best_pos = m.position(1);
        best = std::to_string(value);
      }
    }
  }
  return best;
}

std::optional<std::string> ExtractChoice(const std::string& text) {
  static const std::regex kLetter(R"((?:^|[^A-Za-z0-9_])([A-D])(?![A-Za-z0-9_]))");
  std::optional<std::string> last;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kLetter);
       it != std::sregex_iterator(); ++it) {
    last = (*it).str(1);
  }
  return last;
}

}  // namespace

std::optional<std::string> ExtractAnswer(std::string_view completion_text,
                                         AnswerKind kind) {
  const std::string text(completion_text);
  return kind == AnswerKind::kIntegerAime ? ExtractInteger(text) : ExtractChoice(text);
}

std::optional<std::string> MajorityVote(std::span<const AnswerVote> votes) {
  struct Tally {
    std::size_t count = 0;
    double entropy_sum = 0.0;
  };
  std::map<std::string, Tally> tally;
  for (const auto& v : votes) {
    if (!v.answer) continue;
    auto& t = tally[*v.answer];
    ++t.count;
    t.entropy_sum += v.entropy;
  }
  std::optional<std::string> winner;
  std::size_t best_count = 0;
  double best_entropy = 0.0;
  for (const auto& [answer, t] : tally) {
    const double mean = t.entropy_sum / double(t.count);
    if (t.count > best_count || (t.count == best_count && mean < best_entropy)) {
      winner = answer;
      best_count = t.count;
      best_entropy = mean;
    }
  }
  return winner;
}

}  // namespace entgate
