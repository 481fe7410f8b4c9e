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

#include "entgate/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "entgate/rng.hpp"
#include "test_support.hpp"

namespace entgate {
namespace {

// Two-sided tail by Simpson integration of the t density; independent of the
// continued-fraction path used in the library.
double SimpsonTwoSidedP(double t, double df) {
  const double log_c = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) -
                       0.5 * std::log(df * std::numbers::pi);
  auto f = [&](double x) {
    return std::exp(log_c - (df + 1) / 2 * std::log1p(x * x / df));
  };
  const int n = 200000;
  const double h = std::abs(t) / n;
  double s = f(0) + f(std::abs(t));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return 1.0 - 2.0 * s * h / 3.0;
}

TEST(MomentsTest, MeanAndSampleSd) {
  const std::vector<double> x = {2, 4, 4, 4, 5, 5, 7, 9};
  const auto m = ComputeMoments(x);
  EXPECT_DOUBLE_EQ(m.mean, 5.0);
  EXPECT_NEAR(m.sd, std::sqrt(32.0 / 7.0), 1e-14);
  EXPECT_EQ(m.n, 8u);
  EXPECT_EQ(ComputeMoments(std::vector<double>{3.0}).sd, 0.0);
  EXPECT_ENTGATE_ERROR(ComputeMoments(std::vector<double>{}), ErrorCode::kEmptyData);
}

TEST(CohensDTest, PooledDefinition) {
  const auto a = ComputeMoments(std::vector<double>{1, 2, 3});
  const auto b = ComputeMoments(std::vector<double>{4, 5, 6});
  EXPECT_DOUBLE_EQ(PooledCohensD(a, b), 3.0);
  EXPECT_DOUBLE_EQ(PooledCohensD(b, a), -3.0);
}

TEST(CohensDTest, DegenerateSpread) {
  const SampleMoments a{1.0, 0.0, 3};
  EXPECT_EQ(PooledCohensD(a, a), 0.0);
  const SampleMoments b{2.0, 0.0, 3};
  EXPECT_ENTGATE_ERROR(PooledCohensD(a, b), ErrorCode::kDegeneratePooledSigma);
  EXPECT_ENTGATE_ERROR(PooledCohensD(SampleMoments{1, 0, 1}, SampleMoments{1, 0, 1}),
                       ErrorCode::kInsufficientSamples);
}

TEST(IncompleteBetaTest, ClosedForms) {
  for (double x : {0.01, 0.2, 0.5, 0.77, 0.99}) {
    EXPECT_NEAR(RegularizedIncompleteBeta(1, 1, x), x, 1e-14);
    EXPECT_NEAR(RegularizedIncompleteBeta(3.5, 1, x), std::pow(x, 3.5), 1e-13);
    EXPECT_NEAR(RegularizedIncompleteBeta(1, 2.5, x), 1 - std::pow(1 - x, 2.5), 1e-13);
  }
  EXPECT_EQ(RegularizedIncompleteBeta(2, 3, 0.0), 0.0);
  EXPECT_EQ(RegularizedIncompleteBeta(2, 3, 1.0), 1.0);
  EXPECT_ENTGATE_ERROR(RegularizedIncompleteBeta(0, 1, 0.5), ErrorCode::kInvalidArgument);
}

TEST(IncompleteBetaTest, ReferenceValues) {
  // scipy.special.betainc
  EXPECT_NEAR(RegularizedIncompleteBeta(2.5, 0.5, 0.3), 0.018927124071945658, 1e-13);
  EXPECT_NEAR(RegularizedIncompleteBeta(10, 3, 0.9), 0.889130022255, 1e-11);
}

TEST(StudentTTest, ExactSmallDf) {
  for (double t : {0.0, 0.3, 1.0, 2.5, 10.0}) {
    // df = 1 is Cauchy, df = 2 has an algebraic tail.
    EXPECT_NEAR(StudentTTwoSidedP(t, 1), 1 - 2 / std::numbers::pi * std::atan(t), 1e-13);
    EXPECT_NEAR(StudentTTwoSidedP(t, 2), 1 - t / std::sqrt(2 + t * t), 1e-13);
  }
}

TEST(StudentTTest, AgreesWithNumericalIntegration) {
  for (double df : {3.0, 7.3, 19.5, 54.0, 150.5}) {
    for (double t : {0.2, 1.1, 1.96, 3.0}) {
      EXPECT_NEAR(StudentTTwoSidedP(t, df), SimpsonTwoSidedP(t, df), 1e-9)
          << "t=" << t << " df=" << df;
      EXPECT_DOUBLE_EQ(StudentTTwoSidedP(-t, df), StudentTTwoSidedP(t, df));
    }
  }
  EXPECT_NEAR(StudentTTwoSidedP(2.0, 10), 0.07338803477074039, 1e-13);
  EXPECT_NEAR(StudentTTwoSidedP(4.2, 150.5), 4.553020859832128e-05, 1e-15);
  EXPECT_TRUE(std::isnan(StudentTTwoSidedP(std::nan(""), 4)));
  EXPECT_EQ(StudentTTwoSidedP(INFINITY, 4), 0.0);
}

TEST(WelchTest, MatchesReference) {
  // scipy.stats.ttest_ind(equal_var=False)
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> b = {2, 4, 6, 8, 10, 12};
  const auto r = IndependentTTest(a, b);
  EXPECT_NEAR(r.t_stat, -2.3763541031440183, 1e-12);
  EXPECT_NEAR(r.p_value, 0.04928433820673049, 1e-11);
  EXPECT_EQ(r.band, SignificanceBand::kP05);
}

TEST(WelchTest, DegenerateAndSmallSamples) {
  const std::vector<double> same = {1, 1, 1};
  EXPECT_EQ(IndependentTTest(same, same).p_value, 1.0);
  const std::vector<double> other = {2, 2};
  const auto r = IndependentTTest(same, other);
  EXPECT_EQ(r.p_value, 0.0);
  EXPECT_TRUE(std::isinf(r.t_stat));
  EXPECT_ENTGATE_ERROR(IndependentTTest(std::vector<double>{1}, other),
                       ErrorCode::kInsufficientSamples);
}

TEST(BandsTest, Thresholds) {
  EXPECT_EQ(BandLabel(BandForP(0.2)), "ns");
  EXPECT_EQ(BandLabel(BandForP(0.05)), "ns");
  EXPECT_EQ(BandLabel(BandForP(0.049)), "*");
  EXPECT_EQ(BandLabel(BandForP(0.009)), "**");
  EXPECT_EQ(BandLabel(BandForP(0.0009)), "***");
  EXPECT_EQ(EffectBandFor(-0.19), EffectBand::kNegligible);
  EXPECT_EQ(EffectBandFor(0.2), EffectBand::kSmall);
  EXPECT_EQ(EffectBandFor(0.5), EffectBand::kMedium);
  EXPECT_EQ(EffectBandLabel(EffectBandFor(-1.95)), "large");
}

TEST(BootstrapTest, ConstantDataIsDegenerate) {
  const std::vector<double> x(40, 0.37);
  const auto ci = BootstrapCi(x, BootstrapStatistic::kMean, {});
  EXPECT_EQ(ci.lo, 0.37);
  EXPECT_EQ(ci.hi, 0.37);
}

TEST(BootstrapTest, SeededAndWorkerIndependent) {
  std::vector<double> x;
  Rng rng(5);
  for (int i = 0; i < 60; ++i) x.push_back(rng.Normal(1.0, 2.0));
  BootstrapConfig cfg;
  cfg.seed = 11;
  const auto one = BootstrapCi(x, BootstrapStatistic::kMean, cfg);
  cfg.workers = 4;
  const auto four = BootstrapCi(x, BootstrapStatistic::kMean, cfg);
  EXPECT_EQ(one.lo, four.lo);
  EXPECT_EQ(one.hi, four.hi);
  cfg.seed = 12;
  const auto other = BootstrapCi(x, BootstrapStatistic::kMean, cfg);
  EXPECT_NE(one.lo, other.lo);
  EXPECT_LT(one.lo, one.hi);
  EXPECT_TRUE(one.Contains(ComputeMoments(x).mean));
}

TEST(BootstrapTest, ProportionValidation) {
  const std::vector<double> bits = {1, 0, 1, 1, 0, 1, 0, 1, 1, 1};
  const auto ci = BootstrapCi(bits, BootstrapStatistic::kProportion, {});
  EXPECT_GE(ci.lo, 0.0);
  EXPECT_LE(ci.hi, 1.0);
  EXPECT_ENTGATE_ERROR(
      BootstrapCi(std::vector<double>{0.5}, BootstrapStatistic::kProportion, {}),
      ErrorCode::kInvalidArgument);
}

TEST(BootstrapTest, ArgumentErrors) {
  const std::vector<double> x = {1, 2};
  EXPECT_ENTGATE_ERROR(BootstrapCi(std::vector<double>{}, BootstrapStatistic::kMean, {}),
                       ErrorCode::kEmptyData);
  BootstrapConfig cfg;
  cfg.iterations = 0;
  EXPECT_ENTGATE_ERROR(BootstrapCi(x, BootstrapStatistic::kMean, cfg),
                       ErrorCode::kInvalidArgument);
  cfg.iterations = 10;
  cfg.confidence = 1.0;
  EXPECT_ENTGATE_ERROR(BootstrapCi(x, BootstrapStatistic::kMean, cfg),
                       ErrorCode::kInvalidArgument);
  EXPECT_ENTGATE_ERROR(
      BootstrapCi(std::vector<double>{1, INFINITY}, BootstrapStatistic::kMean, {}),
      ErrorCode::kNonFiniteInput);
}

TEST(RngTest, UniformIndexIsUnbiasedEnough) {
  Rng rng(77);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i) ++counts[rng.UniformIndex(6)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
  EXPECT_NE(Rng::Substream(1, 0).NextU64(), Rng::Substream(1, 1).NextU64());
  EXPECT_EQ(Rng(3).NextU64(), Rng(3).NextU64());
}

}  // namespace
}  // namespace entgate
