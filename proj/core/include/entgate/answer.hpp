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

#ifndef ENTGATE_ANSWER_HPP_
#define ENTGATE_ANSWER_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace entgate {

enum class AnswerKind {
  kIntegerAime,  // integer in [0, 999]
  kChoiceGpqa,   // letter A-D
};

std::optional<AnswerKind> ParseAnswerKind(std::string_view name);
std::string_view AnswerKindName(AnswerKind kind);

// Integer answers: the last \boxed{N} or "answer is N" / "Answer: N" with N
// in [0, 999], leading zeros dropped. Choice answers: the last standalone
// capital letter A-D.
std::optional<std::string> ExtractAnswer(std::string_view completion_text,
                                         AnswerKind kind);

// Majority vote over extracted answers. Ties go to the answer whose attempts
// have the lowest mean entropy. Attempts without an answer are ignored.
struct AnswerVote {
  std::optional<std::string> answer;
  double entropy = 0.0;
};
std::optional<std::string> MajorityVote(std::span<const AnswerVote> votes);

}  // namespace entgate

#endif  // ENTGATE_ANSWER_HPP_
