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

#include "entgate/threshold.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "entgate/error.hpp"
#include "entgate/stats.hpp"

namespace entgate {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& ch : out) ch = char(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

void AppendNote(std::string& notes, std::string_view note) {
  if (!notes.empty()) notes += "; ";
  notes += note;
}

std::string FormatDouble(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string_view MethodName(ThresholdMethod method) {
  switch (method) {
    case ThresholdMethod::kMean: return "mean";
    case ThresholdMethod::kInfoOptimal: return "info_optimal";
    case ThresholdMethod::kBayesOptimal: return "bayes_optimal";
    case ThresholdMethod::kScaleUniversal: return "scale_universal";
  }
  return "mean";
}

std::optional<ThresholdMethod> ParseMethod(std::string_view name) {
  const std::string key = Lower(name);
  if (key == "mean" || key == "entropy_mean") return ThresholdMethod::kMean;
  if (key == "info_optimal" || key == "info" || key == "infooptimal") {
    return ThresholdMethod::kInfoOptimal;
  }
  if (key == "bayes_optimal" || key == "bayes" || key == "bayesoptimal") {
    return ThresholdMethod::kBayesOptimal;
  }
  if (key == "scale_universal" || key == "universal" ||
      key == "scaleuniversal") {
    return ThresholdMethod::kScaleUniversal;
  }
  return std::nullopt;
}

std::size_t SampleFloor(ThresholdMethod method) {
  switch (method) {
    case ThresholdMethod::kMean: return 5;
    case ThresholdMethod::kInfoOptimal: return 15;
    case ThresholdMethod::kBayesOptimal:
    case ThresholdMethod::kScaleUniversal: return 25;
  }
  return 25;
}

CalibrationStats CalibrationStats::FromMoments(double mu_c, double sigma_c,
                                               std::size_t n_c, double mu_i,
                                               double sigma_i,
                                               std::size_t n_i) {
  CalibrationStats s{mu_c, sigma_c, n_c, mu_i, sigma_i, n_i, 0.0};
  s.d = PooledCohensD({mu_c, sigma_c, n_c}, {mu_i, sigma_i, n_i});
  return s;
}

CalibrationStats ComputeStats(std::span<const double> correct_entropies,
                              std::span<const double> incorrect_entropies) {
  if (correct_entropies.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples,
                "class=correct have=" + std::to_string(correct_entropies.size()) +
                    " need=2");
  }
  if (incorrect_entropies.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples,
                "class=incorrect have=" +
                    std::to_string(incorrect_entropies.size()) + " need=2");
  }
  for (auto list : {correct_entropies, incorrect_entropies}) {
    for (double h : list) {
      if (!std::isfinite(h)) {
        throw Error(ErrorCode::kNonFiniteInput, "calibration entropy not finite");
      }
    }
  }
  const SampleMoments c = ComputeMoments(correct_entropies);
  const SampleMoments i = ComputeMoments(incorrect_entropies);
  CalibrationStats s{c.mean, c.sd, c.n, i.mean, i.sd, i.n, 0.0};
  s.d = PooledCohensD(c, i);
  return s;
}

ThresholdDecision ThresholdMean(const CalibrationStats& stats) {
  return {ThresholdMethod::kMean, stats.mu_c, stats, ""};
}

ThresholdDecision ThresholdInfoOptimal(const CalibrationStats& stats) {
  if (!std::isfinite(stats.d)) {
    throw Error(ErrorCode::kInvalidArgument,
                "info_optimal threshold needs a finite effect size");
  }
  const double tau = stats.mu_c + stats.sigma_c * std::log(1.0 + std::abs(stats.d));
  return {ThresholdMethod::kInfoOptimal, tau, stats, ""};
}

BayesRoots SolveBayesQuadratic(const CalibrationStats& s) {
  BayesRoots r;
  const double vc = s.sigma_c * s.sigma_c;
  const double vi = s.sigma_i * s.sigma_i;
  r.a = 1.0 / vi - 1.0 / vc;
  r.b = 2.0 * (s.mu_c / vc - s.mu_i / vi);
  r.c = s.mu_i * s.mu_i / vi - s.mu_c * s.mu_c / vc +
        2.0 * std::log(s.sigma_i / s.sigma_c);
  r.discriminant = r.b * r.b - 4.0 * r.a * r.c;

  if (r.a == 0.0) {
    if (r.b != 0.0) r.roots.push_back(-r.c / r.b);
    return r;
  }
  if (r.discriminant < 0.0) return r;

  const double sq = std::sqrt(r.discriminant);
  if (r.b == 0.0) {
    const double root = sq / (2.0 * r.a);
    r.roots = {-std::abs(root), std::abs(root)};
  } else {
    // Cancellation-free pair of roots.
    const double q = -0.5 * (r.b + std::copysign(sq, r.b));
    r.roots = {q / r.a, r.c / q};
  }
  std::sort(r.roots.begin(), r.roots.end());
  return r;
}

ThresholdDecision ThresholdBayesOptimal(const CalibrationStats& stats) {
  ThresholdDecision decision{ThresholdMethod::kBayesOptimal, 0.0, stats, ""};
  const double midpoint = 0.5 * (stats.mu_c + stats.mu_i);

  if (!(stats.sigma_c > 0.0) || !(stats.sigma_i > 0.0)) {
    decision.tau = midpoint;
    decision.notes = "zero variance in a class: midpoint fallback";
    return decision;
  }
  if (stats.sigma_c == stats.sigma_i) {
    decision.tau = midpoint;
    decision.notes = stats.mu_c == stats.mu_i
                         ? "identical distributions: tau = mu_c"
                         : "equal variances: linear case, midpoint";
    return decision;
  }

  const BayesRoots r = SolveBayesQuadratic(stats);
  if (r.roots.empty()) {
    decision.tau = midpoint;
    decision.notes = "no real root (discriminant " + FormatDouble(r.discriminant) +
                     "): midpoint fallback";
    return decision;
  }

  const double lo = std::min(stats.mu_c, stats.mu_i);
  const double hi = std::max(stats.mu_c, stats.mu_i);
  auto distance_to_interval = [&](double x) {
    if (x < lo) return lo - x;
    if (x > hi) return x - hi;
    return 0.0;
  };
  // Prefer the root inside [lo, hi]; otherwise the closest one. Ties go to
  // the root nearer the midpoint.
  double best = r.roots.front();
  for (double root : r.roots) {
    const double db = distance_to_interval(best);
    const double dr = distance_to_interval(root);
    if (dr < db ||
        (dr == db && std::abs(root - midpoint) < std::abs(best - midpoint))) {
      best = root;
    }
  }
  decision.tau = best;

  std::string notes = distance_to_interval(best) == 0.0
                          ? "root inside [min(mu), max(mu)]"
                          : "no root inside [min(mu), max(mu)]: closest root";
  for (double root : r.roots) {
    if (root != best) AppendNote(notes, "rejected root " + FormatDouble(root));
  }
  decision.notes = std::move(notes);
  return decision;
}

ThresholdDecision ThresholdScaleUniversal(const CalibrationStats& stats) {
  if (!(stats.mu_c > 0.0)) {
    throw Error(ErrorCode::kNonPositiveCorrectMean,
                "scale_universal needs mu_c > 0, got " + FormatDouble(stats.mu_c));
  }
  if (!std::isfinite(stats.d)) {
    throw Error(ErrorCode::kInvalidArgument,
                "scale_universal threshold needs a finite effect size");
  }
  const double s = std::sqrt(std::abs(stats.d));
  const double cv_factor = std::max(0.0, 1.0 - stats.sigma_c / stats.mu_c);
  const double tau =
      stats.mu_c + s / (1.0 + s) * (stats.mu_i - stats.mu_c) * cv_factor;
  ThresholdDecision decision{ThresholdMethod::kScaleUniversal, tau, stats, ""};
  if (cv_factor == 0.0) decision.notes = "CV >= 1: clamp zeroed the adjustment";
  return decision;
}

ThresholdDecision ComputeThreshold(const CalibrationStats& stats,
                                   ThresholdMethod method) {
  switch (method) {
    case ThresholdMethod::kMean: return ThresholdMean(stats);
    case ThresholdMethod::kInfoOptimal: return ThresholdInfoOptimal(stats);
    case ThresholdMethod::kBayesOptimal: return ThresholdBayesOptimal(stats);
    case ThresholdMethod::kScaleUniversal: return ThresholdScaleUniversal(stats);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown threshold method");
}

ThresholdDecision Calibrate(std::span<const LabeledEntropy> samples,
                            ThresholdMethod method,
                            const CalibrateOptions& options) {
  const std::size_t need = SampleFloor(method);
  std::string notes;
  if (samples.size() < need) {
    const std::string detail = "method=" + std::string(MethodName(method)) +
                               " have=" + std::to_string(samples.size()) +
                               " need=" + std::to_string(need);
    if (!options.allow_undersampled) {
      throw Error(ErrorCode::kBelowSampleFloor, detail);
    }
    AppendNote(notes, "undersampled override: " + detail);
  }

  std::vector<double> correct;
  std::vector<double> incorrect;
  for (const auto& s : samples) {
    if (!std::isfinite(s.entropy)) {
      throw Error(ErrorCode::kNonFiniteInput, "calibration entropy not finite");
    }
    (s.correct ? correct : incorrect).push_back(s.entropy);
  }

  const bool single_class = correct.empty() || incorrect.empty();
  if (single_class && (method != ThresholdMethod::kMean || correct.empty())) {
    throw Error(ErrorCode::kSingleClassOnly,
                "samples contain " + std::to_string(correct.size()) +
                    " correct and " + std::to_string(incorrect.size()) +
                    " incorrect; only mean over correct samples is possible");
  }

  if (method == ThresholdMethod::kMean &&
      (correct.size() < 2 || incorrect.size() < 2)) {
    // Only mu_c is needed; report whatever else is estimable.
    const SampleMoments c = ComputeMoments(correct);
    CalibrationStats stats{c.mean, c.n > 1 ? c.sd : kNaN, c.n, kNaN, kNaN,
                           incorrect.size(), kNaN};
    if (!incorrect.empty()) {
      const SampleMoments i = ComputeMoments(incorrect);
      stats.mu_i = i.mean;
      stats.sigma_i = i.n > 1 ? i.sd : kNaN;
    }
    ThresholdDecision decision = ThresholdMean(stats);
    AppendNote(notes, "partial statistics: a class has fewer than 2 samples");
    decision.notes = notes;
    return decision;
  }

  CalibrationStats stats;
  if (method == ThresholdMethod::kMean) {
    try {
      stats = ComputeStats(correct, incorrect);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegeneratePooledSigma) throw;
      const SampleMoments c = ComputeMoments(correct);
      const SampleMoments i = ComputeMoments(incorrect);
      stats = {c.mean, c.sd, c.n, i.mean, i.sd, i.n, kNaN};
      AppendNote(notes, "effect size undefined (zero pooled sd)");
    }
  } else {
    stats = ComputeStats(correct, incorrect);
  }

  ThresholdDecision decision = ComputeThreshold(stats, method);
  if (!decision.notes.empty()) AppendNote(notes, decision.notes);
  decision.notes = notes;
  return decision;
}

}  // namespace entgate
