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

#include "entgate/budget.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "entgate/error.hpp"

namespace entgate {

double BudgetPlan::EnhancedAllocation() const {
  if (gamma == delta) return 0.0;
  return double(alpha - delta) / double(gamma - delta);
}

BudgetPlan PlanBudget(std::uint64_t alpha, std::uint64_t beta,
                      std::uint64_t gamma, std::uint64_t delta,
                      const std::vector<std::string>& uncertain_order,
                      const std::vector<std::string>& confident_ids) {
  if (alpha == 0 || beta == 0 || gamma == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "alpha, beta and gamma must be positive");
  }
  if (alpha < gamma) {
    throw Error(ErrorCode::kBudgetTooSmall,
                "alpha=" + std::to_string(alpha) + " < gamma=" +
                    std::to_string(gamma) + ": not every question can be asked");
  }
  if (delta > gamma) {
    throw Error(ErrorCode::kInvalidPartition,
                "delta=" + std::to_string(delta) + " exceeds gamma=" +
                    std::to_string(gamma));
  }
  if (uncertain_order.size() != gamma - delta || confident_ids.size() != delta) {
    throw Error(ErrorCode::kInvalidPartition,
                "expected " + std::to_string(delta) + " confident and " +
                    std::to_string(gamma - delta) + " uncertain ids, got " +
                    std::to_string(confident_ids.size()) + " and " +
                    std::to_string(uncertain_order.size()));
  }
  std::unordered_set<std::string> seen;
  for (const auto* list : {&confident_ids, &uncertain_order}) {
    for (const auto& id : *list) {
      if (!seen.insert(id).second) {
        throw Error(ErrorCode::kInvalidPartition, "duplicate question id '" + id + "'");
      }
    }
  }

  BudgetPlan plan{alpha, beta, gamma, delta, {}, 0};
  plan.allocations.reserve(gamma);
  for (const auto& id : confident_ids) {
    plan.allocations.push_back({id, 1, ConfidenceTier::kConfident});
  }

  const std::uint64_t uncertain = gamma - delta;
  if (uncertain == 0) {
    plan.surplus_calls = alpha - gamma;
    return plan;
  }
  // Every uncertain question has the same fractional remainder, so largest
  // remainder reduces to: the first `extra` questions in order get one more.
  const std::uint64_t pool = alpha - delta;
  const std::uint64_t base = pool / uncertain;
  const std::uint64_t extra = pool % uncertain;
  for (std::uint64_t i = 0; i < uncertain; ++i) {
    plan.allocations.push_back(
        {uncertain_order[i], base + (i < extra ? 1 : 0), ConfidenceTier::kUncertain});
  }
  return plan;
}

ConservationReport VerifyConservation(const BudgetPlan& plan) {
  ConservationReport r;
  for (const auto& a : plan.allocations) {
    r.total_calls += a.calls;
    if (a.tier == ConfidenceTier::kConfident && a.calls != 1) {
      r.confident_single_call = false;
    }
    if (a.tier == ConfidenceTier::kUncertain && a.calls < 1) {
      r.uncertain_at_least_one = false;
    }
  }
  r.surplus_calls = plan.surplus_calls;
  r.expected_calls = plan.alpha;
  r.call_discrepancy = std::int64_t(r.total_calls + r.surplus_calls) -
                       std::int64_t(plan.alpha);
  r.token_ceiling = (r.total_calls + r.surplus_calls) * plan.beta;
  r.token_budget = plan.alpha * plan.beta;
  r.pass = r.call_discrepancy == 0 && r.token_ceiling == r.token_budget &&
           r.confident_single_call && r.uncertain_at_least_one;
  return r;
}

std::string FormatConservationReport(const ConservationReport& r) {
  std::ostringstream os;
  os << "total calls " << r.total_calls << '\n'
     << "surplus calls " << r.surplus_calls << '\n'
     << "expected calls " << r.expected_calls << '\n'
     << "call discrepancy " << (r.call_discrepancy > 0 ? "+" : "")
     << r.call_discrepancy << '\n'
     << "token ceiling " << r.token_ceiling << '\n'
     << "token budget " << r.token_budget << '\n'
     << "conservation " << (r.pass ? "pass" : "fail") << '\n';
  return os.str();
}

void WritePlan(std::ostream& out, const BudgetPlan& plan) {
  out << "# alpha=" << plan.alpha << '\n'
      << "# beta=" << plan.beta << '\n'
      << "# gamma=" << plan.gamma << '\n'
      << "# delta=" << plan.delta << '\n'
      << "# surplus_calls=" << plan.surplus_calls << '\n'
      << "question_id,calls,tier\n";
  for (const auto& a : plan.allocations) {
    out << a.question_id << ',' << a.calls << ','
        << (a.tier == ConfidenceTier::kConfident ? "confident" : "uncertain")
        << '\n';
  }
}

void WritePlanFile(const std::filesystem::path& path, const BudgetPlan& plan) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  WritePlan(out, plan);
}

namespace {

std::uint64_t ParseU64(std::string_view text, std::size_t line_no) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line_no) + ": expected an integer, got '" +
                    std::string(text) + "'");
  }
  return v;
}

}  // namespace

BudgetPlan ReadPlan(std::istream& in) {
  BudgetPlan plan;
  bool header_seen = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::uint64_t value = ParseU64(std::string_view(line).substr(eq + 1), line_no);
      if (key == "alpha") plan.alpha = value;
      else if (key == "beta") plan.beta = value;
      else if (key == "gamma") plan.gamma = value;
      else if (key == "delta") plan.delta = value;
      else if (key == "surplus_calls") plan.surplus_calls = value;
      continue;
    }
    if (!header_seen) {
      if (line != "question_id,calls,tier") {
        throw Error(ErrorCode::kParseError,
                    "line " + std::to_string(line_no) +
                        ": expected header 'question_id,calls,tier'");
      }
      header_seen = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": expected 3 fields");
    }
    CallAllocation a;
    a.question_id = line.substr(0, c1);
    a.calls = ParseU64(std::string_view(line).substr(c1 + 1, c2 - c1 - 1), line_no);
    const std::string tier = line.substr(c2 + 1);
    if (tier == "confident") a.tier = ConfidenceTier::kConfident;
    else if (tier == "uncertain") a.tier = ConfidenceTier::kUncertain;
    else {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": unknown tier '" + tier + "'");
    }
    plan.allocations.push_back(std::move(a));
  }
  if (!header_seen) throw Error(ErrorCode::kParseError, "plan has no table header");
  return plan;
}

BudgetPlan ReadPlanFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  return ReadPlan(in);
}

}  // namespace entgate
