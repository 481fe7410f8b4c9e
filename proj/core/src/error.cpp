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

#include "entgate/error.hpp"

namespace entgate {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kMissingLogprobs: return "MissingLogprobs";
    case ErrorCode::kInconsistentK: return "InconsistentK";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kDegeneratePooledSigma: return "DegeneratePooledSigma";
    case ErrorCode::kNonPositiveCorrectMean: return "NonPositiveCorrectMean";
    case ErrorCode::kBelowSampleFloor: return "BelowSampleFloor";
    case ErrorCode::kSingleClassOnly: return "SingleClassOnly";
    case ErrorCode::kEmptyData: return "EmptyData";
    case ErrorCode::kBudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::kInvalidPartition: return "InvalidPartition";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kInfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::kMissingStep1Logprobs: return "MissingStep1Logprobs";
    case ErrorCode::kEmptyTraceSet: return "EmptyTraceSet";
    case ErrorCode::kKExceedsRecorded: return "KExceedsRecorded";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kLogprobsUnsupported: return "LogprobsUnsupported";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kRetriesExhausted: return "RetriesExhausted";
    case ErrorCode::kPlanMismatch: return "PlanMismatch";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace entgate
