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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "entgate/entropy.hpp"
#include "entgate/error.hpp"
#include "entgate/rng.hpp"

namespace entgate {

SampleMoments ComputeMoments(std::span<const double> data) {
  if (data.empty()) throw Error(ErrorCode::kEmptyData, "no observations");
  SampleMoments m;
  m.n = data.size();
  // Constant data: exact mean and zero spread, free of rounding residue.
  if (std::all_of(data.begin(), data.end(), [&](double x) { return x == data[0]; })) {
    m.mean = data[0];
    return m;
  }
  CompensatedSum sum;
  for (double x : data) sum.Add(x);
  m.mean = sum.Total() / double(m.n);
  if (m.n > 1) {
    CompensatedSum ss;
    for (double x : data) ss.Add((x - m.mean) * (x - m.mean));
    m.sd = std::sqrt(ss.Total() / double(m.n - 1));
  }
  return m;
}

double PooledCohensD(const SampleMoments& a, const SampleMoments& b) {
  if (a.n < 1 || b.n < 1 || a.n + b.n < 3) {
    throw Error(ErrorCode::kInsufficientSamples,
                "pooled standard deviation needs n_a + n_b >= 3");
  }
  const double pooled_var =
      (double(a.n - 1) * a.sd * a.sd + double(b.n - 1) * b.sd * b.sd) /
      double(a.n + b.n - 2);
  const double diff = b.mean - a.mean;
  if (pooled_var <= 0.0) {
    if (diff == 0.0) return 0.0;
    throw Error(ErrorCode::kDegeneratePooledSigma,
                "both classes have zero spread but different means");
  }
  return diff / std::sqrt(pooled_var);
}

namespace {

double Quantile(const std::vector<double>& sorted, double q) {
  const double h = (double(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - double(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

ConfidenceInterval BootstrapCi(std::span<const double> data,
                               BootstrapStatistic statistic,
                               const BootstrapConfig& cfg) {
  if (data.empty()) throw Error(ErrorCode::kEmptyData, "bootstrap of empty data");
  if (cfg.iterations == 0) {
    throw Error(ErrorCode::kInvalidArgument, "bootstrap needs >= 1 iteration");
  }
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confidence must lie in (0, 1)");
  }
  for (double x : data) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kNonFiniteInput, "bootstrap data must be finite");
    }
    if (statistic == BootstrapStatistic::kProportion && x != 0.0 && x != 1.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "proportion statistic expects 0/1 observations");
    }
  }

  // For 0/1 data the proportion is the mean, so both statistics share the
  // resampling kernel.
  const std::size_t n = data.size();
  std::vector<double> resampled(cfg.iterations);
  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t it = begin; it < end; ++it) {
      Rng rng = Rng::Substream(cfg.seed, it);
      CompensatedSum sum;
      for (std::size_t j = 0; j < n; ++j) sum.Add(data[rng.UniformIndex(n)]);
      resampled[it] = sum.Total() / double(n);
    }
  };

  const std::size_t workers =
      std::clamp<std::size_t>(cfg.workers, 1, cfg.iterations);
  if (workers == 1) {
    run_range(0, cfg.iterations);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (cfg.iterations + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(cfg.iterations, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
  }

  std::sort(resampled.begin(), resampled.end());
  const double tail = (1.0 - cfg.confidence) / 2.0;
  return {Quantile(resampled, tail), Quantile(resampled, 1.0 - tail)};
}

std::string_view BandLabel(SignificanceBand band) {
  switch (band) {
    case SignificanceBand::kNotSignificant: return "ns";
    case SignificanceBand::kP05: return "*";
    case SignificanceBand::kP01: return "**";
    case SignificanceBand::kP001: return "***";
  }
  return "ns";
}

SignificanceBand BandForP(double p) {
  if (p < 0.001) return SignificanceBand::kP001;
  if (p < 0.01) return SignificanceBand::kP01;
  if (p < 0.05) return SignificanceBand::kP05;
  return SignificanceBand::kNotSignificant;
}

namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double BetaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double RegularizedIncompleteBeta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "incomplete beta needs a, b > 0");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * BetaContinuedFraction(a, b, x) / a;
  }
  return 1.0 - front * BetaContinuedFraction(b, a, 1.0 - x) / b;
}

double StudentTTwoSidedP(double t, double df) {
  if (!(df > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "degrees of freedom must be > 0");
  }
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(RegularizedIncompleteBeta(df / 2.0, 0.5, x), 0.0, 1.0);
}

TestResult IndependentTTest(std::span<const double> a,
                            std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples,
                "t-test needs at least 2 observations per sample (have " +
                    std::to_string(a.size()) + " and " +
                    std::to_string(b.size()) + ")");
  }
  const SampleMoments ma = ComputeMoments(a);
  const SampleMoments mb = ComputeMoments(b);
  const double va = ma.sd * ma.sd / double(ma.n);
  const double vb = mb.sd * mb.sd / double(mb.n);
  const double diff = ma.mean - mb.mean;

  TestResult result;
  if (va + vb == 0.0) {
    result.df = double(ma.n + mb.n - 2);
    if (diff == 0.0) {
      result.t_stat = 0.0;
      result.p_value = 1.0;
    } else {
      result.t_stat = std::copysign(std::numeric_limits<double>::infinity(), diff);
      result.p_value = 0.0;
    }
  } else {
    result.t_stat = diff / std::sqrt(va + vb);
    result.df = (va + vb) * (va + vb) /
                (va * va / double(ma.n - 1) + vb * vb / double(mb.n - 1));
    result.p_value = StudentTTwoSidedP(result.t_stat, result.df);
  }
  result.band = BandForP(result.p_value);
  return result;
}

EffectBand EffectBandFor(double d) {
  const double m = std::abs(d);
  if (m < 0.2) return EffectBand::kNegligible;
  if (m < 0.5) return EffectBand::kSmall;
  if (m < 0.8) return EffectBand::kMedium;
  return EffectBand::kLarge;
}

std::string_view EffectBandLabel(EffectBand band) {
  switch (band) {
    case EffectBand::kNegligible: return "negligible";
    case EffectBand::kSmall: return "small";
    case EffectBand::kMedium: return "medium";
    case EffectBand::kLarge: return "large";
  }
  return "negligible";
}

}  // namespace entgate
