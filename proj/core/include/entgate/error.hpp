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

#ifndef ENTGATE_ERROR_HPP_
#define ENTGATE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace entgate {

// Every failure raised by the library carries one of these codes. The CLI
// prints the code name verbatim so scripts can match on it.
enum class ErrorCode {
  kInvalidArgument,
  // entropy
  kEmptyInput,
  kNonFiniteInput,
  kEmptySequence,
  kMissingLogprobs,
  kInconsistentK,
  // calibration / statistics
  kInsufficientSamples,
  kDegeneratePooledSigma,
  kNonPositiveCorrectMean,
  kBelowSampleFloor,
  kSingleClassOnly,
  kEmptyData,
  // budget
  kBudgetTooSmall,
  kInvalidPartition,
  // traces / replay
  kParseError,
  kInvariantViolation,
  kInfeasibleSpec,
  kMissingStep1Logprobs,
  kEmptyTraceSet,
  kKExceedsRecorded,
  // live path
  kProviderError,
  kLogprobsUnsupported,
  kTimeout,
  kRetriesExhausted,
  kPlanMismatch,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Upstream HTTP failure with the status and body the provider returned.
class ProviderError : public Error {
 public:
  ProviderError(int status, std::string body)
      : Error(ErrorCode::kProviderError,
              "provider returned HTTP " + std::to_string(status)),
        status_(status),
        body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

}  // namespace entgate

#endif  // ENTGATE_ERROR_HPP_
