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

// Early-stopping thresholds derived from labeled calibration entropies.
//
// Four closed forms are provided. With correct-class moments (mu_c, sigma_c),
// incorrect-class moments (mu_i, sigma_i) and Cohen's d:
//
//   Mean:           tau = mu_c
//   InfoOptimal:    tau = mu_c + sigma_c * ln(1 + |d|)
//   BayesOptimal:   root of a tau^2 + b tau + c = 0, the crossing point of
//                   the two class-conditional Gaussian log-likelihoods
//   ScaleUniversal: tau = mu_c + s/(1+s) * (mu_i - mu_c) * max(0, 1 - CV),
//                   s = sqrt(|d|), CV = sigma_c / mu_c
//
// Logs inside the formulas are natural logs of scale-free quantities, so
// they apply to bit-valued entropies without conversion.

#ifndef ENTGATE_THRESHOLD_HPP_
#define ENTGATE_THRESHOLD_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace entgate {

enum class ThresholdMethod { kMean, kInfoOptimal, kBayesOptimal, kScaleUniversal };

inline constexpr ThresholdMethod kAllThresholdMethods[] = {
    ThresholdMethod::kInfoOptimal, ThresholdMethod::kBayesOptimal,
    ThresholdMethod::kScaleUniversal, ThresholdMethod::kMean};

std::string_view MethodName(ThresholdMethod method);
// Accepts the canonical names plus short aliases ("info", "bayes", ...).
std::optional<ThresholdMethod> ParseMethod(std::string_view name);

// Minimum number of labeled samples before a method is trusted.
std::size_t SampleFloor(ThresholdMethod method);

struct CalibrationStats {
  double mu_c = 0.0;
  double sigma_c = 0.0;
  std::size_t n_c = 0;
  double mu_i = 0.0;
  double sigma_i = 0.0;
  std::size_t n_i = 0;
  double d = 0.0;

  // Builds stats from summary moments, computing d from the pooled sd.
  static CalibrationStats FromMoments(double mu_c, double sigma_c,
                                      std::size_t n_c, double mu_i,
                                      double sigma_i, std::size_t n_i);
};

struct ThresholdDecision {
  ThresholdMethod method = ThresholdMethod::kMean;
  double tau = 0.0;
  CalibrationStats stats;
  std::string notes;
};

// Sample moments per class plus Cohen's d. Each list needs >= 2 values.
CalibrationStats ComputeStats(std::span<const double> correct_entropies,
                              std::span<const double> incorrect_entropies);

ThresholdDecision ThresholdMean(const CalibrationStats& stats);
ThresholdDecision ThresholdInfoOptimal(const CalibrationStats& stats);
ThresholdDecision ThresholdBayesOptimal(const CalibrationStats& stats);
ThresholdDecision ThresholdScaleUniversal(const CalibrationStats& stats);

ThresholdDecision ComputeThreshold(const CalibrationStats& stats,
                                   ThresholdMethod method);

// Both real roots of the Bayes quadratic, when they exist. Exposed so callers
// can audit the root selection.
struct BayesRoots {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double discriminant = 0.0;
  std::vector<double> roots;  // 0, 1 or 2 entries, ascending
};
BayesRoots SolveBayesQuadratic(const CalibrationStats& stats);

struct LabeledEntropy {
  double entropy = 0.0;
  bool correct = false;
};

struct CalibrateOptions {
  // Lets a method run below its sample floor; the decision notes record it.
  bool allow_undersampled = false;
};

// Partitions the samples by label, computes class statistics and applies the
// requested method. With a single labeled class only Mean is available, and
// the incorrect-class fields of the returned stats are NaN.
ThresholdDecision Calibrate(std::span<const LabeledEntropy> samples,
                            ThresholdMethod method,
                            const CalibrateOptions& options = {});

}  // namespace entgate

#endif  // ENTGATE_THRESHOLD_HPP_
