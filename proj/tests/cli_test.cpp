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

#include "cli.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "entgate/budget.hpp"
#include "entgate/calibration_file.hpp"
#include "entgate/replay.hpp"
#include "entgate/trace.hpp"
#include "httplib.h"
#include "test_support.hpp"

namespace entgate {
namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

constexpr const char* kSpec = R"({"model_name": "qwen3-8b", "dataset": "aime24",
  "mu_c": 0.244, "sigma_c": 0.094, "mu_i": 0.447, "sigma_i": 0.114,
  "questions": 30, "step1_accuracy": 0.7, "final_accuracy": 0.733, "seed": 7})";

TEST(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(Cli({}).code, 1);
  EXPECT_EQ(Cli({"bogus"}).code, 1);
  EXPECT_EQ(Cli({"budget", "--alpha", "10"}).code, 1);
  EXPECT_EQ(Cli({"calibrate", "--method", "mean"}).code, 1);  // no source
}

TEST(CliTest, BudgetPrintsEnhancedAllocation) {
  testing::TempDir dir;
  const auto r = Cli({"budget", "--alpha", "100", "--beta", "8192", "--gamma", "50",
                      "--delta", "30", "--out", (dir / "plan.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("enhanced allocation 3.5\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("conservation pass"), std::string::npos);
  const auto plan = ReadPlanFile(dir / "plan.csv");
  EXPECT_EQ(plan.allocations.size(), 50u);
}

TEST(CliTest, InfeasibleBudgetIsReported) {
  const auto r = Cli({"budget", "--alpha", "10", "--beta", "1", "--gamma", "40",
                      "--delta", "20", "--out", "/dev/null"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=BudgetTooSmall"), std::string::npos) << r.err;
}

TEST(CliTest, CalibrateEnforcesSampleFloor) {
  testing::TempDir dir;
  std::ofstream(dir / "s.csv") << "entropy,correct\n0.1,1\n0.2,1\n0.5,0\n0.6,0\n";
  const auto r = Cli({"calibrate", "--samples", (dir / "s.csv").string(), "--method", "mean",
                      "--out", (dir / "cal.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=BelowSampleFloor"), std::string::npos) << r.err;

  const auto forced = Cli({"calibrate", "--samples", (dir / "s.csv").string(), "--method",
                           "mean", "--allow-undersampled", "--out",
                           (dir / "cal.csv").string()});
  ASSERT_EQ(forced.code, 0) << forced.err;
  EXPECT_NEAR(ReadCalibrationFile(dir / "cal.csv").decision.tau, 0.15, 1e-12);
}

TEST(CliTest, MissingFileIsIoError) {
  const auto r = Cli({"replay", "--traces", "/nonexistent/traces.jsonl"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("code=IoError"), std::string::npos);
}

TEST(CliTest, SynthCalibrateReplayPipeline) {
  testing::TempDir dir;
  std::ofstream(dir / "spec.json") << kSpec;
  const auto traces = (dir / "t.jsonl").string();
  ASSERT_EQ(Cli({"synth", "--spec", (dir / "spec.json").string(), "--out", traces}).code, 0);
  const auto again = Cli({"synth", "--spec", (dir / "spec.json").string()});
  EXPECT_EQ(again.out, Slurp(traces));
  EXPECT_NE(Cli({"synth", "--spec", (dir / "spec.json").string(), "--seed", "8"}).out,
            again.out);

  const auto cal = Cli({"calibrate", "--traces", traces, "--out", (dir / "cal.csv").string()});
  ASSERT_EQ(cal.code, 0) << cal.err;
  EXPECT_NE(cal.out.find("method mean\n"), std::string::npos);

  const auto replay = Cli({"replay", "--traces", traces, "--calibration",
                           (dir / "cal.csv").string(), "--bootstrap", "200"});
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(replay.out.substr(0, replay.out.find('\n')), kReportCsvHeader);

  const auto methods = Cli({"sweep-methods", "--traces", traces, "--bootstrap", "50"});
  ASSERT_EQ(methods.code, 0) << methods.err;
  EXPECT_EQ(std::count(methods.out.begin(), methods.out.end(), '\n'), 5);

  const auto ks = Cli({"sweep-k", "--traces", traces, "--ks", "5,20", "--bootstrap", "50"});
  ASSERT_EQ(ks.code, 0) << ks.err;
  EXPECT_EQ(std::count(ks.out.begin(), ks.out.end(), '\n'), 3);

  const auto steps = Cli({"step-progression", "--traces", traces});
  ASSERT_EQ(steps.code, 0) << steps.err;
}

// A tiny OpenAI-compatible upstream that is always confident and answers 42.
class CliLiveTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request&, httplib::Response& res) {
      ++posts_;
      res.set_content(testing::OneHotCompletion("The answer is 42.", 4), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    std::ofstream(dir_ / "q.jsonl")
        << R"({"question_id":"a","dataset":"aime24","prompt":"p1","gold_answer":"42"})" "\n"
        << R"({"question_id":"b","dataset":"aime24","prompt":"p2","gold_answer":"7"})" "\n";
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  std::string Endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  testing::TempDir dir_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> posts_{0};
};

TEST_F(CliLiveTest, RunWritesTraces) {
  const auto r = Cli({"run", "--questions", (dir_ / "q.jsonl").string(), "--endpoint",
                      Endpoint(), "--model", "m", "--gate", "--tau", "0.1", "--out",
                      (dir_ / "t.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(posts_.load(), 2);
  EXPECT_NE(r.out.find("gated 2\n"), std::string::npos) << r.out;
  const auto traces = LoadTraces(dir_ / "t.jsonl").questions;
  ASSERT_EQ(traces.size(), 2u);
  int correct = 0;
  for (const auto& q : traces) correct += q.Step1Correct() ? 1 : 0;
  EXPECT_EQ(correct, 1);
}

TEST_F(CliLiveTest, RunBudgetIssuesPlannedCalls) {
  std::ofstream(dir_ / "order.csv") << "question_id,entropy\na,0.9\nb,0.1\n";
  ASSERT_EQ(Cli({"budget", "--alpha", "5", "--beta", "100", "--gamma", "2", "--delta", "1",
                 "--order", (dir_ / "order.csv").string(), "--out",
                 (dir_ / "plan.csv").string()})
                .code,
            0);
  const auto r = Cli({"run-budget", "--questions", (dir_ / "q.jsonl").string(), "--plan",
                      (dir_ / "plan.csv").string(), "--endpoint", Endpoint(), "--model", "m",
                      "--policy", "self-consistency", "--out", (dir_ / "t.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(posts_.load(), 5);
  EXPECT_NE(r.out.find("calls_issued 5\n"), std::string::npos) << r.out;
}

}  // namespace
}  // namespace entgate
