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

// Fixed-budget call allocation driven by entropy gating.
//
// A budget of `alpha` API calls of `beta` tokens each is spread over `gamma`
// questions. The `delta` confident questions (H <= tau) get one call each;
// the remaining uncertain questions share alpha - delta calls, on average
// (alpha - delta) / (gamma - delta) each. The fractional share is turned
// into whole calls by largest remainder, handing the extra calls to the most
// uncertain questions first, so the total is exactly alpha.

#ifndef ENTGATE_BUDGET_HPP_
#define ENTGATE_BUDGET_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace entgate {

enum class ConfidenceTier { kConfident, kUncertain };

struct CallAllocation {
  std::string question_id;
  std::uint64_t calls = 0;
  ConfidenceTier tier = ConfidenceTier::kUncertain;

  friend bool operator==(const CallAllocation&, const CallAllocation&) = default;
};

struct BudgetPlan {
  std::uint64_t alpha = 0;  // total calls
  std::uint64_t beta = 0;   // tokens per call
  std::uint64_t gamma = 0;  // questions
  std::uint64_t delta = 0;  // confident questions
  // Confident questions first, then uncertain ones in descending-entropy
  // order.
  std::vector<CallAllocation> allocations;
  std::uint64_t surplus_calls = 0;

  std::uint64_t TokenBudget() const { return alpha * beta; }
  // (alpha - delta) / (gamma - delta); 0 when every question is confident.
  double EnhancedAllocation() const;

  friend bool operator==(const BudgetPlan&, const BudgetPlan&) = default;
};

// `confident_ids` holds the delta confident questions, `uncertain_order` the
// gamma - delta others sorted by descending entropy. Throws kBudgetTooSmall
// when alpha < gamma and kInvalidPartition when the id lists do not match
// (gamma, delta) or contain duplicates.
BudgetPlan PlanBudget(std::uint64_t alpha, std::uint64_t beta,
                      std::uint64_t gamma, std::uint64_t delta,
                      const std::vector<std::string>& uncertain_order,
                      const std::vector<std::string>& confident_ids);

struct ConservationReport {
  std::uint64_t total_calls = 0;  // sum over allocations
  std::uint64_t surplus_calls = 0;
  std::uint64_t expected_calls = 0;  // alpha
  std::int64_t call_discrepancy = 0;  // total + surplus - alpha
  std::uint64_t token_ceiling = 0;    // (total + surplus) * beta
  std::uint64_t token_budget = 0;     // alpha * beta
  bool confident_single_call = true;
  bool uncertain_at_least_one = true;
  bool pass = false;
};

// Recomputes every total from the allocations alone.
ConservationReport VerifyConservation(const BudgetPlan& plan);

std::string FormatConservationReport(const ConservationReport& report);

// Plan file: '#'-prefixed metadata lines (alpha, beta, gamma, delta,
// surplus_calls) followed by a CSV table `question_id,calls,tier`.
void WritePlan(std::ostream& out, const BudgetPlan& plan);
void WritePlanFile(const std::filesystem::path& path, const BudgetPlan& plan);
BudgetPlan ReadPlan(std::istream& in);
BudgetPlan ReadPlanFile(const std::filesystem::path& path);

}  // namespace entgate

#endif  // ENTGATE_BUDGET_HPP_
