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

#include "entgate/replay.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>

#include "entgate/error.hpp"

namespace entgate {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t TotalTokens(const QuestionTrace& q) {
  std::size_t total = 0;
  for (const auto& s : q.steps) total += s.token_count;
  return total;
}

double Step1Entropy(const QuestionTrace& q, std::size_t k_limit) {
  if (q.steps.empty() || !q.steps.front().HasLogprobs()) {
    throw Error(ErrorCode::kMissingStep1Logprobs,
                "question '" + q.question_id + "' has no step-1 logprobs");
  }
  return ProfileCompletion(q.steps.front(), k_limit).mean;
}

GateOutcome GateWithEntropy(const QuestionTrace& q, double entropy, double tau) {
  GateOutcome out;
  out.question_id = q.question_id;
  out.step1_entropy = entropy;
  out.gated = entropy <= tau;
  out.baseline_correct = q.FinalCorrect();
  if (out.gated) {
    out.steps_used = 1;
    out.tokens_used = q.steps.front().token_count;
    out.final_correct = q.Step1Correct();
  } else {
    out.steps_used = q.steps.size();
    out.tokens_used = TotalTokens(q);
    out.final_correct = q.FinalCorrect();
  }
  return out;
}

std::string DatasetLabel(const TraceSet& traces) {
  std::set<std::string> names;
  for (const auto& q : traces.questions) names.insert(q.dataset);
  if (names.size() == 1) return *names.begin();
  return names.empty() ? "" : "mixed";
}

ReplayReport EvaluateWithEntropies(const TraceSet& traces,
                                   std::span<const double> entropies,
                                   const ThresholdDecision& decision,
                                   std::size_t k_limit,
                                   const ReplayOptions& options) {
  ReplayReport r;
  r.model = traces.model_name;
  r.dataset = DatasetLabel(traces);
  r.method = std::string(MethodName(decision.method));
  r.k = k_limit;
  r.tau = decision.tau;
  r.n_total = traces.questions.size();

  std::size_t step1_right = 0, baseline_right = 0, policy_right = 0;
  std::size_t gated_right = 0;
  std::vector<double> correct_h, incorrect_h, per_question_delta;
  per_question_delta.reserve(r.n_total);
  for (std::size_t i = 0; i < traces.questions.size(); ++i) {
    const auto& q = traces.questions[i];
    const GateOutcome g = GateWithEntropy(q, entropies[i], decision.tau);
    step1_right += q.Step1Correct();
    baseline_right += g.baseline_correct;
    policy_right += g.final_correct;
    r.baseline_tokens += TotalTokens(q);
    r.policy_tokens += g.tokens_used;
    if (g.gated) {
      ++r.n_gated;
      gated_right += g.baseline_correct;
    }
    (q.Step1Correct() ? correct_h : incorrect_h).push_back(entropies[i]);
    per_question_delta.push_back(double(g.final_correct) - double(g.baseline_correct));
  }

  const double n = double(r.n_total);
  r.step1_acc = double(step1_right) / n;
  r.fourstep_acc = double(baseline_right) / n;
  r.overall_acc = double(policy_right) / n;
  r.delta_acc = r.overall_acc - r.fourstep_acc;
  r.stop_rate = double(r.n_gated) / n;
  if (r.n_gated > 0) r.thresh_acc = double(gated_right) / double(r.n_gated);
  r.token_savings_tokens =
      r.baseline_tokens == 0
          ? 0.0
          : 1.0 - double(r.policy_tokens) / double(r.baseline_tokens);

  r.cohens_d = kNaN;
  r.entropy_p_value = kNaN;
  if (correct_h.size() >= 2 && incorrect_h.size() >= 2) {
    try {
      r.cohens_d = ComputeStats(correct_h, incorrect_h).d;
    } catch (const Error&) {
    }
    r.entropy_p_value = IndependentTTest(correct_h, incorrect_h).p_value;
  }
  r.ci95 = BootstrapCi(per_question_delta, BootstrapStatistic::kMean, options.bootstrap);
  return r;
}

void CheckNonEmpty(const TraceSet& traces) {
  if (traces.questions.empty()) {
    throw Error(ErrorCode::kEmptyTraceSet, "trace set has no questions");
  }
}

void WriteNumber(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "nan";
  } else {
    out << std::fixed << std::setprecision(6) << v;
  }
}

void WriteOptional(std::ostream& out, const std::optional<double>& v) {
  WriteNumber(out, v.value_or(kNaN));
}

}  // namespace

GateOutcome GateQuestion(const QuestionTrace& question, double tau,
                         std::size_t k_limit) {
  return GateWithEntropy(question, Step1Entropy(question, k_limit), tau);
}

std::vector<double> Step1Entropies(const TraceSet& traces, std::size_t k_limit) {
  std::vector<double> out;
  out.reserve(traces.questions.size());
  for (const auto& q : traces.questions) out.push_back(Step1Entropy(q, k_limit));
  return out;
}

std::vector<LabeledEntropy> Step1Samples(const TraceSet& traces,
                                         std::size_t k_limit) {
  std::vector<LabeledEntropy> out;
  out.reserve(traces.questions.size());
  for (const auto& q : traces.questions) {
    out.push_back({Step1Entropy(q, k_limit), q.Step1Correct()});
  }
  return out;
}

ReplayReport Evaluate(const TraceSet& traces, const ThresholdDecision& decision,
                      std::size_t k_limit, const ReplayOptions& options) {
  CheckNonEmpty(traces);
  const auto entropies = Step1Entropies(traces, k_limit);
  return EvaluateWithEntropies(traces, entropies, decision, k_limit, options);
}

std::vector<MethodSweepRow> MethodSweep(const TraceSet& traces,
                                        std::span<const ThresholdMethod> methods,
                                        std::size_t k_limit,
                                        const ReplayOptions& options) {
  std::vector<MethodSweepRow> rows;
  if (methods.empty()) return rows;
  CheckNonEmpty(traces);
  const auto entropies = Step1Entropies(traces, k_limit);
  std::vector<LabeledEntropy> samples;
  samples.reserve(entropies.size());
  for (std::size_t i = 0; i < entropies.size(); ++i) {
    samples.push_back({entropies[i], traces.questions[i].Step1Correct()});
  }
  for (ThresholdMethod method : methods) {
    ThresholdDecision decision = Calibrate(samples, method, options.calibrate);
    ReplayReport report =
        EvaluateWithEntropies(traces, entropies, decision, k_limit, options);
    rows.push_back({std::move(decision), std::move(report)});
  }
  return rows;
}

std::vector<KSweepRow> KSweep(const TraceSet& traces, std::span<const std::size_t> ks,
                              ThresholdMethod method, const ReplayOptions& options) {
  for (std::size_t k : ks) {
    if (k > traces.k_logprobs) {
      throw Error(ErrorCode::kKExceedsRecorded,
                  "k=" + std::to_string(k) + " exceeds recorded k_logprobs=" +
                      std::to_string(traces.k_logprobs));
    }
  }
  std::vector<KSweepRow> rows;
  if (ks.empty()) return rows;
  CheckNonEmpty(traces);
  for (std::size_t k : ks) {
    const ThresholdMethod one[] = {method};
    auto sweep = MethodSweep(traces, one, k, options);
    auto& row = sweep.front();
    rows.push_back({k, row.report.cohens_d, row.report.stop_rate, row.report.thresh_acc,
                    row.decision.tau, std::move(row.report)});
  }
  return rows;
}

std::vector<StepProgressionRow> StepProgression(const TraceSet& traces) {
  std::size_t max_steps = 0;
  for (const auto& q : traces.questions) max_steps = std::max(max_steps, q.steps.size());

  std::vector<StepProgressionRow> rows;
  for (std::size_t s = 0; s < max_steps; ++s) {
    CompensatedSum sum_c, sum_i;
    StepProgressionRow row;
    row.step = s + 1;
    for (const auto& q : traces.questions) {
      if (s >= q.steps.size() || !q.steps[s].HasLogprobs()) continue;
      const double h = ProfileCompletion(q.steps[s], traces.k_logprobs).mean;
      if (q.FinalCorrect()) {
        sum_c.Add(h);
        ++row.n_correct;
      } else {
        sum_i.Add(h);
        ++row.n_incorrect;
      }
    }
    row.mean_correct = row.n_correct ? sum_c.Total() / double(row.n_correct) : kNaN;
    row.mean_incorrect =
        row.n_incorrect ? sum_i.Total() / double(row.n_incorrect) : kNaN;
    rows.push_back(row);
  }
  return rows;
}

void WriteReportCsv(std::ostream& out, std::span<const ReplayReport> reports) {
  out << kReportCsvHeader << '\n';
  for (const auto& r : reports) {
    out << r.model << ',' << r.dataset << ',' << r.method << ',' << r.k << ',';
    WriteNumber(out, r.tau);
    out << ',';
    WriteNumber(out, r.step1_acc);
    out << ',';
    WriteNumber(out, r.fourstep_acc);
    out << ',';
    WriteOptional(out, r.thresh_acc);
    out << ',';
    WriteNumber(out, r.cohens_d);
    out << ',';
    WriteNumber(out, r.stop_rate);
    out << ',';
    WriteNumber(out, r.delta_acc);
    out << ',';
    WriteNumber(out, r.stop_rate);
    out << ',';
    WriteNumber(out, r.token_savings_tokens);
    out << ',';
    WriteNumber(out, r.ci95.lo);
    out << ',';
    WriteNumber(out, r.ci95.hi);
    out << ',' << r.n_gated << ',' << r.n_total << '\n';
  }
}

void WriteKSweepCsv(std::ostream& out, std::span<const KSweepRow> rows) {
  out << "k,tau,cohens_d,stop_rate,thresh_acc\n";
  for (const auto& row : rows) {
    out << row.k << ',';
    WriteNumber(out, row.tau);
    out << ',';
    WriteNumber(out, row.cohens_d);
    out << ',';
    WriteNumber(out, row.stop_rate);
    out << ',';
    WriteOptional(out, row.thresh_acc);
    out << '\n';
  }
}

void WriteStepProgressionCsv(std::ostream& out,
                             std::span<const StepProgressionRow> rows) {
  out << "step,mean_correct,n_correct,mean_incorrect,n_incorrect\n";
  for (const auto& row : rows) {
    out << row.step << ',';
    WriteNumber(out, row.mean_correct);
    out << ',' << row.n_correct << ',';
    WriteNumber(out, row.mean_incorrect);
    out << ',' << row.n_incorrect << '\n';
  }
}

}  // namespace entgate
