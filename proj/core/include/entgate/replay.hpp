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

// Offline replay of entropy gating over recorded traces.
//
// Each question's step-1 mean entropy H is compared against tau. When
// H <= tau the question stops after step 1 and its step-1 answer stands;
// otherwise every recorded step runs and the final answer stands. The
// baseline is always the final recorded step.

#ifndef ENTGATE_REPLAY_HPP_
#define ENTGATE_REPLAY_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entgate/stats.hpp"
#include "entgate/threshold.hpp"
#include "entgate/trace.hpp"

namespace entgate {

struct GateOutcome {
  std::string question_id;
  double step1_entropy = 0.0;
  bool gated = false;
  std::size_t steps_used = 0;
  std::size_t tokens_used = 0;
  bool final_correct = false;     // under the gating policy
  bool baseline_correct = false;  // after the final recorded step
};

// Throws kMissingStep1Logprobs when step 1 carries no logprobs.
GateOutcome GateQuestion(const QuestionTrace& question, double tau,
                         std::size_t k_limit);

// Step-1 mean entropy of every question at `k_limit`, in trace order.
std::vector<double> Step1Entropies(const TraceSet& traces, std::size_t k_limit);

// (entropy, step-1 correctness) pairs used for calibration.
std::vector<LabeledEntropy> Step1Samples(const TraceSet& traces,
                                         std::size_t k_limit);

struct ReplayOptions {
  BootstrapConfig bootstrap;
  CalibrateOptions calibrate;
};

struct ReplayReport {
  std::string model;
  std::string dataset;
  std::string method;
  std::size_t k = 0;
  double tau = 0.0;

  double step1_acc = 0.0;
  double fourstep_acc = 0.0;  // baseline: final recorded step
  std::optional<double> thresh_acc;  // empty when nothing was gated
  double overall_acc = 0.0;  // accuracy under the gating policy
  double delta_acc = 0.0;    // overall_acc - fourstep_acc
  // Fraction of questions stopped early. This is the quantity usually
  // reported as "token savings".
  double stop_rate = 0.0;
  // 1 - policy tokens / baseline tokens, from the recorded token counts.
  double token_savings_tokens = 0.0;
  double cohens_d = 0.0;        // NaN when a class has < 2 questions
  double entropy_p_value = 0.0;  // Welch t-test on step-1 entropies; NaN if n/a
  ConfidenceInterval ci95;       // bootstrap over per-question delta-acc
  std::size_t n_gated = 0;
  std::size_t n_total = 0;
  std::size_t baseline_tokens = 0;
  std::size_t policy_tokens = 0;
};

// Throws kEmptyTraceSet on a trace set without questions.
ReplayReport Evaluate(const TraceSet& traces, const ThresholdDecision& decision,
                      std::size_t k_limit, const ReplayOptions& options = {});

struct MethodSweepRow {
  ThresholdDecision decision;
  ReplayReport report;
};

// Calibrates each method on the traces' own step-1 labels and replays it.
std::vector<MethodSweepRow> MethodSweep(const TraceSet& traces,
                                        std::span<const ThresholdMethod> methods,
                                        std::size_t k_limit,
                                        const ReplayOptions& options = {});

struct KSweepRow {
  std::size_t k = 0;
  double cohens_d = 0.0;
  double stop_rate = 0.0;
  std::optional<double> thresh_acc;
  double tau = 0.0;
  ReplayReport report;
};

// Recomputes entropies at each k by truncation and renormalization,
// recalibrates tau with `method` and replays. Throws kKExceedsRecorded when
// a k is larger than the recorded k_logprobs.
std::vector<KSweepRow> KSweep(const TraceSet& traces, std::span<const std::size_t> ks,
                              ThresholdMethod method = ThresholdMethod::kMean,
                              const ReplayOptions& options = {});

struct StepProgressionRow {
  std::size_t step = 0;
  double mean_correct = 0.0;    // NaN when no question in the class
  std::size_t n_correct = 0;
  double mean_incorrect = 0.0;
  std::size_t n_incorrect = 0;
};

// Per-step mean entropy grouped by final correctness, at the recorded k.
std::vector<StepProgressionRow> StepProgression(const TraceSet& traces);

inline constexpr const char* kReportCsvHeader =
    "model,dataset,method,k,tau,step1_acc,fourstep_acc,thresh_acc,cohens_d,"
    "token_savings,delta_acc,stop_rate,token_savings_tokens,ci95_lo,ci95_hi,"
    "n_gated,n_total";

void WriteReportCsv(std::ostream& out, std::span<const ReplayReport> reports);
void WriteKSweepCsv(std::ostream& out, std::span<const KSweepRow> rows);
void WriteStepProgressionCsv(std::ostream& out,
                             std::span<const StepProgressionRow> rows);

}  // namespace entgate

#endif  // ENTGATE_REPLAY_HPP_
