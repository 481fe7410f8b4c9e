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

#include "entgate/calibration_file.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include "entgate/error.hpp"

namespace entgate {

namespace {

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double ParseReal(const std::string& text, const char* field) {
  if (text == "nan" || text == "NaN") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParseError,
                std::string("calibration field ") + field + " is not a number: '" +
                    text + "'");
  }
}

std::size_t ParseCount(const std::string& text, const char* field) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParseError,
                std::string("calibration field ") + field +
                    " is not a count: '" + text + "'");
  }
  return v;
}

std::string TrimCr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

std::string UtcTimestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void WriteCalibration(std::ostream& out, const CalibrationRecord& record) {
  const auto& d = record.decision;
  const auto& s = d.stats;
  out << kCalibrationHeader << '\n';
  out << std::setprecision(17) << MethodName(d.method) << ',' << d.tau << ','
      << s.mu_c << ',' << s.sigma_c << ',' << s.mu_i << ',' << s.sigma_i << ','
      << s.n_c << ',' << s.n_i << ',' << s.d << ',' << record.created_at << '\n';
}

void WriteCalibrationFile(const std::filesystem::path& path,
                          const CalibrationRecord& record) {
  // Write then rename so a hot-reloading reader never sees a torn file.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    }
    WriteCalibration(out, record);
  }
  std::filesystem::rename(tmp, path);
}

CalibrationRecord ReadCalibration(std::istream& in) {
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    line = TrimCr(line);
    if (line.empty() || line.front() == '#') continue;
    lines.push_back(line);
  }
  if (lines.size() != 2 || lines[0] != kCalibrationHeader) {
    throw Error(ErrorCode::kParseError,
                std::string("calibration file must hold the header '") +
                    kCalibrationHeader + "' and exactly one record");
  }
  const auto f = SplitCsv(lines[1]);
  if (f.size() != 10) {
    throw Error(ErrorCode::kParseError,
                "calibration record has " + std::to_string(f.size()) +
                    " fields, expected 10");
  }
  const auto method = ParseMethod(f[0]);
  if (!method) {
    throw Error(ErrorCode::kParseError, "unknown calibration method '" + f[0] + "'");
  }
  CalibrationRecord rec;
  rec.decision.method = *method;
  rec.decision.tau = ParseReal(f[1], "tau");
  rec.decision.stats.mu_c = ParseReal(f[2], "mu_c");
  rec.decision.stats.sigma_c = ParseReal(f[3], "sigma_c");
  rec.decision.stats.mu_i = ParseReal(f[4], "mu_i");
  rec.decision.stats.sigma_i = ParseReal(f[5], "sigma_i");
  rec.decision.stats.n_c = ParseCount(f[6], "n_c");
  rec.decision.stats.n_i = ParseCount(f[7], "n_i");
  rec.decision.stats.d = ParseReal(f[8], "d");
  rec.created_at = f[9];
  return rec;
}

CalibrationRecord ReadCalibrationFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  return ReadCalibration(in);
}

}  // namespace entgate
