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

#include <gtest/gtest.h>

#include <vector>

namespace entgate {
namespace {

using Kind = AnswerKind;

TEST(ExtractAnswerTest, IntegerForms) {
  EXPECT_EQ(ExtractAnswer("so the answer is 042.", Kind::kIntegerAime), "42");
  EXPECT_EQ(ExtractAnswer("Answer: 7", Kind::kIntegerAime), "7");
  EXPECT_EQ(ExtractAnswer(R"(thus \boxed{133})", Kind::kIntegerAime), "133");
  EXPECT_EQ(ExtractAnswer(R"(\boxed{12} then later the answer is 15)", Kind::kIntegerAime),
            "15");
  EXPECT_EQ(ExtractAnswer(R"(the answer is 15, final \boxed{12})", Kind::kIntegerAime),
            "12");
  EXPECT_EQ(ExtractAnswer("answer is 1000", Kind::kIntegerAime), std::nullopt);
  EXPECT_EQ(ExtractAnswer("no answer pattern here 55", Kind::kIntegerAime), std::nullopt);
}

TEST(ExtractAnswerTest, ChoiceForms) {
  EXPECT_EQ(ExtractAnswer("Final answer: (C)", Kind::kChoiceGpqa), "C");
  EXPECT_EQ(ExtractAnswer("A seems wrong; B is it.", Kind::kChoiceGpqa), "B");
  EXPECT_EQ(ExtractAnswer("Because DNA and E", Kind::kChoiceGpqa), std::nullopt);
  EXPECT_EQ(ExtractAnswer("", Kind::kChoiceGpqa), std::nullopt);
}

TEST(AnswerKindTest, Names) {
  EXPECT_EQ(ParseAnswerKind("gpqa"), Kind::kChoiceGpqa);
  EXPECT_EQ(ParseAnswerKind("integer_aime"), Kind::kIntegerAime);
  EXPECT_FALSE(ParseAnswerKind("essay"));
  EXPECT_EQ(AnswerKindName(Kind::kChoiceGpqa), "choice_gpqa");
}

TEST(MajorityVoteTest, CountsThenEntropy) {
  std::vector<AnswerVote> votes = {{"7", 0.5}, {"7", 0.6}, {"9", 0.1}};
  EXPECT_EQ(MajorityVote(votes), "7");
  votes = {{"7", 0.5}, {"9", 0.2}};
  EXPECT_EQ(MajorityVote(votes), "9");
  votes = {{std::nullopt, 0.0}, {"3", 1.0}, {std::nullopt, 0.0}};
  EXPECT_EQ(MajorityVote(votes), "3");
  votes = {{std::nullopt, 0.0}};
  EXPECT_EQ(MajorityVote(votes), std::nullopt);
}

}  // namespace
}  // namespace entgate
