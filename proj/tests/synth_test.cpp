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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "entgate/replay.hpp"
#include "entgate/stats.hpp"
#include "entgate/threshold.hpp"
#include "test_support.hpp"

namespace entgate {
namespace {

SynthSpec QwenSpec(std::uint64_t seed = 1) {
  SynthSpec s;
  s.model_name = "qwen3-30b";
  s.dataset = "aime24";
  s.mu_c = 0.244;
  s.sigma_c = 0.094;
  s.mu_i = 0.447;
  s.sigma_i = 0.114;
  s.questions = 30;
  s.step1_accuracy = 0.70;
  s.final_accuracy = 0.733;
  s.seed = seed;
  return s;
}

TEST(TwoPointTest, RealizesTargetEntropy) {
  for (std::size_t k : {2, 5, 20, 64}) {
    for (double target : {0.01, 0.3, 0.9, std::log2(double(k)) - 0.01}) {
      const auto step = RealizeEntropyStep(target, k, 3);
      EXPECT_NEAR(ProfileCompletion(step, k).mean, target, 1e-12)
          << "k=" << k << " target=" << target;
    }
  }
}

TEST(TwoPointTest, Extremes) {
  const auto zero = RealizeEntropyStep(0.0, 20, 4);
  EXPECT_EQ(zero.tokens[0].k(), 1u);
  EXPECT_EQ(ProfileCompletion(zero, 20).mean, 0.0);
  const auto top = RealizeEntropyStep(99.0, 20, 4);
  EXPECT_NEAR(ProfileCompletion(top, 20).mean, std::log2(20.0), 1e-12);
  EXPECT_EQ(top.token_count, 4u);
  EXPECT_ENTGATE_ERROR(RealizeEntropyStep(0.5, 20, 0), ErrorCode::kInfeasibleSpec);
}

TEST(SynthTest, ShapeAndDeterminism) {
  const auto a = SynthesizeTraces(QwenSpec(3));
  const auto b = SynthesizeTraces(QwenSpec(3));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, SynthesizeTraces(QwenSpec(4)));
  ASSERT_EQ(a.questions.size(), 30u);
  EXPECT_EQ(a.questions[0].question_id, "aime24-01");
  std::size_t step1 = 0, final_right = 0;
  for (const auto& q : a.questions) {
    ASSERT_EQ(q.steps.size(), 4u);
    step1 += q.Step1Correct();
    final_right += q.FinalCorrect();
    // Refinement never breaks a correct answer.
    for (std::size_t s = 1; s < q.step_correct.size(); ++s) {
      ASSERT_TRUE(!q.step_correct[s - 1] || q.step_correct[s]);
    }
    EXPECT_EQ(q.steps.back().extracted_answer == q.gold_answer, q.FinalCorrect());
  }
  EXPECT_EQ(step1, 21u);
  EXPECT_EQ(final_right, 22u);
}

TEST(SynthTest, UpliftGoesToMostUncertainFailures) {
  const auto set = SynthesizeTraces(QwenSpec(9));
  const auto h = Step1Entropies(set, 20);
  double fixed_h = -1, max_other_wrong = -1;
  for (std::size_t i = 0; i < set.questions.size(); ++i) {
    const auto& q = set.questions[i];
    if (q.Step1Correct()) continue;
    if (q.FinalCorrect()) {
      fixed_h = h[i];
    } else {
      max_other_wrong = std::max(max_other_wrong, h[i]);
    }
  }
  EXPECT_GT(fixed_h, max_other_wrong);
}

TEST(SynthTest, InfeasibleSpecs) {
  auto s = QwenSpec();
  s.final_accuracy = 0.5;
  EXPECT_ENTGATE_ERROR(SynthesizeTraces(s), ErrorCode::kInfeasibleSpec);
  s = QwenSpec();
  s.sigma_c = -1;
  EXPECT_ENTGATE_ERROR(SynthesizeTraces(s), ErrorCode::kInfeasibleSpec);
  s = QwenSpec();
  s.steps = 11;
  EXPECT_ENTGATE_ERROR(SynthesizeTraces(s), ErrorCode::kInfeasibleSpec);
  s = QwenSpec();
  s.k = 65;
  EXPECT_ENTGATE_ERROR(SynthesizeTraces(s), ErrorCode::kInfeasibleSpec);
  s = QwenSpec();
  s.steps = 1;
  EXPECT_ENTGATE_ERROR(SynthesizeTraces(s), ErrorCode::kInfeasibleSpec);
}

TEST(SynthTest, ParseSpec) {
  std::stringstream in(R"({"mu_c":0.3,"sigma_c":0.1,"mu_i":0.5,"sigma_i":0.1,
                           "questions":10,"final_accuracy":0.8,"seed":5})");
  const auto s = ParseSynthSpec(in);
  EXPECT_EQ(s.questions, 10u);
  EXPECT_EQ(s.final_accuracy, 0.8);
  EXPECT_EQ(s.seed, 5u);
  std::stringstream bad(R"({"questions":"many"})");
  EXPECT_ENTGATE_ERROR(ParseSynthSpec(bad), ErrorCode::kParseError);
}

// Class moments of the generated step-1 entropies track the request.
TEST(SynthProperty, MomentsTrackSpecAtScale) {
  auto s = QwenSpec(17);
  s.questions = 4000;
  s.final_accuracy.reset();
  s.min_tokens = s.max_tokens = 1;
  const auto set = SynthesizeTraces(s);
  const auto h = Step1Entropies(set, 20);
  std::vector<double> c, i;
  for (std::size_t q = 0; q < h.size(); ++q) {
    (set.questions[q].Step1Correct() ? c : i).push_back(h[q]);
  }
  const auto mc = ComputeMoments(c), mi = ComputeMoments(i);
  EXPECT_NEAR(mc.mean, 0.244, 0.01);
  EXPECT_NEAR(mc.sd, 0.094, 0.01);
  EXPECT_NEAR(mi.mean, 0.447, 0.01);
  EXPECT_NEAR(mi.sd, 0.114, 0.01);
}

// With moment matching, small sets hit the requested class moments exactly,
// so the recomputed d equals the one implied by the moments.
TEST(SynthTest, MatchedMomentsAreExact) {
  for (std::uint64_t seed : {1, 2, 3, 2026}) {
    auto s = QwenSpec(seed);
    s.match_moments = true;
    const auto set = SynthesizeTraces(s);
    const auto h = Step1Entropies(set, 20);
    std::vector<double> c, i;
    for (std::size_t q = 0; q < h.size(); ++q) {
      (set.questions[q].Step1Correct() ? c : i).push_back(h[q]);
    }
    const auto mc = ComputeMoments(c), mi = ComputeMoments(i);
    EXPECT_NEAR(mc.mean, 0.244, 1e-9);
    EXPECT_NEAR(mc.sd, 0.094, 1e-9);
    EXPECT_NEAR(mi.mean, 0.447, 1e-9);
    EXPECT_NEAR(mi.sd, 0.114, 1e-9);
    const auto implied = CalibrationStats::FromMoments(0.244, 0.094, 21, 0.447, 0.114, 9);
    EXPECT_NEAR(PooledCohensD(mc, mi), implied.d, 1e-8);
  }
  std::stringstream in(R"({"match_moments": true})");
  EXPECT_TRUE(ParseSynthSpec(in).match_moments);
}

}  // namespace
}  // namespace entgate
