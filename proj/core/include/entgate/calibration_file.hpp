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

// Calibration file: a two-line CSV (header + one record) carrying the chosen
// method, tau and the statistics behind it. The gateway hot-reloads tau from
// this file.
//
//   method,tau,mu_c,sigma_c,mu_i,sigma_i,n_c,n_i,d,created_at
//   mean,0.244,0.244,0.094,0.447,0.114,21,9,2.0275...,2026-10-16T12:00:00Z

#ifndef ENTGATE_CALIBRATION_FILE_HPP_
#define ENTGATE_CALIBRATION_FILE_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "entgate/threshold.hpp"

namespace entgate {

inline constexpr const char* kCalibrationHeader =
    "method,tau,mu_c,sigma_c,mu_i,sigma_i,n_c,n_i,d,created_at";

struct CalibrationRecord {
  ThresholdDecision decision;
  std::string created_at;  // ISO-8601 UTC
};

// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string UtcTimestamp();

void WriteCalibration(std::ostream& out, const CalibrationRecord& record);
void WriteCalibrationFile(const std::filesystem::path& path,
                          const CalibrationRecord& record);

// Throws kParseError on malformed content, kIoError if unreadable.
CalibrationRecord ReadCalibration(std::istream& in);
CalibrationRecord ReadCalibrationFile(const std::filesystem::path& path);

}  // namespace entgate

#endif  // ENTGATE_CALIBRATION_FILE_HPP_
