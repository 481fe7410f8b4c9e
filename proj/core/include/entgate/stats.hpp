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

// Bootstrap percentile intervals, Welch two-sample t-test and Cohen's d
// interpretation bands.

#ifndef ENTGATE_STATS_HPP_
#define ENTGATE_STATS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace entgate {

struct SampleMoments {
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator; 0 for a single observation
  std::size_t n = 0;
};

// Throws kEmptyData on an empty span.
SampleMoments ComputeMoments(std::span<const double> data);

// Standardized mean difference (mu_b - mu_a) / pooled sd, with the pooled sd
// weighted by n - 1. Returns 0 when both means are equal and the pooled sd
// is zero; throws kDegeneratePooledSigma when only the sd is zero.
double PooledCohensD(const SampleMoments& a, const SampleMoments& b);

enum class BootstrapStatistic { kMean, kProportion };

struct BootstrapConfig {
  std::size_t iterations = 1000;
  double confidence = 0.95;
  std::uint64_t seed = 0;
  // Resamples are split across this many threads. Results do not depend on
  // it: iteration i always draws from Rng::Substream(seed, i).
  std::size_t workers = 1;
};

inline constexpr std::size_t kMinReportingIterations = 100;

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool Contains(double x) const noexcept { return lo <= x && x <= hi; }
};

// Plain percentile bootstrap: draw n observations with replacement B times,
// take the (1 - c)/2 and 1 - (1 - c)/2 quantiles (linear interpolation) of
// the resampled statistic. kProportion requires 0/1 data.
ConfidenceInterval BootstrapCi(std::span<const double> data,
                               BootstrapStatistic statistic,
                               const BootstrapConfig& cfg);

enum class SignificanceBand { kNotSignificant, kP05, kP01, kP001 };

std::string_view BandLabel(SignificanceBand band);  // "ns", "*", "**", "***"
SignificanceBand BandForP(double p);

struct TestResult {
  double t_stat = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  SignificanceBand band = SignificanceBand::kNotSignificant;
};

// Welch statistic t = (mean_a - mean_b) / sqrt(s_a^2/n_a + s_b^2/n_b) with
// Welch-Satterthwaite degrees of freedom and a two-sided p-value. Each
// sample needs at least two observations (kInsufficientSamples).
TestResult IndependentTTest(std::span<const double> a,
                            std::span<const double> b);

// Two-sided tail probability P(|T| >= |t|) for Student's t with `df`
// degrees of freedom (df may be fractional).
double StudentTTwoSidedP(double t, double df);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double RegularizedIncompleteBeta(double a, double b, double x);

enum class EffectBand { kNegligible, kSmall, kMedium, kLarge };

EffectBand EffectBandFor(double d);
std::string_view EffectBandLabel(EffectBand band);

}  // namespace entgate

#endif  // ENTGATE_STATS_HPP_
