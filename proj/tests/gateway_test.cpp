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

#include "entgate/gateway.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

#include "entgate/calibration_file.hpp"
#include "httplib.h"
#include "json.hpp"
#include "test_support.hpp"

namespace entgate {
namespace {

using nlohmann::json;
using testing::OneHotCompletion;
using testing::StubTransport;
using testing::UniformCompletion;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::string kClientBody =
    R"({"model":"m","messages":[{"role":"user","content":"What is 6*7?"}]})";

GatewayConfig Config(double tau) {
  GatewayConfig c;
  c.listen_port = 0;
  c.upstream.base_url = "http://stub/v1";
  c.upstream.model = "m";
  c.upstream.retry.max_retries = 1;
  c.upstream.retry.backoff = std::chrono::milliseconds(1);
  c.gate.tau = tau;
  c.startup_probe = false;
  return c;
}

std::string Header(const GatewayResponse& r, const std::string& name) {
  for (const auto& [k, v] : r.headers) {
    if (k == name) return v;
  }
  return "";
}

// Step n of a conversation answers "step n".
std::shared_ptr<StubTransport> CountingUpstream(std::size_t n_tokens = 4, std::size_t k = 20) {
  return std::make_shared<StubTransport>(
      [=](const std::string& body, std::size_t) -> HttpResponse {
        const auto steps = (json::parse(body)["messages"].size() + 1) / 2;
        return {200, UniformCompletion("step " + std::to_string(steps), n_tokens, k),
                "application/json"};
      });
}

TEST(GatewayTest, InfiniteTauServesAfterOneCall) {
  auto up = CountingUpstream();
  Gateway g(Config(kInf), up);
  for (int i = 0; i < 5; ++i) {
    const auto r = g.Handle({kClientBody, ""});
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(Header(r, "X-Entgate-Gated"), "true");
    EXPECT_EQ(Header(r, "X-Entgate-Steps"), "1");
    EXPECT_EQ(Header(r, "X-Entgate-Tau"), "inf");
    EXPECT_EQ(Header(r, "X-Entgate-Entropy"), "4.321928");
  }
  EXPECT_EQ(up->posts(), 5u);
  const auto forwarded = json::parse(up->bodies()[0]);
  EXPECT_EQ(forwarded["logprobs"], true);
  EXPECT_EQ(forwarded["top_logprobs"], 20);
  const auto m = g.metrics();
  EXPECT_EQ(m.requests_gated, 5u);
  EXPECT_EQ(m.tokens_saved_estimate, 5u * 4u * 3u);
  EXPECT_EQ(m.StopRate(), 1.0);
}

TEST(GatewayTest, HighEntropyRunsEveryStep) {
  auto up = CountingUpstream();
  Gateway g(Config(1.0), up);
  const auto r = g.Handle({kClientBody, ""});
  EXPECT_EQ(Header(r, "X-Entgate-Gated"), "false");
  EXPECT_EQ(Header(r, "X-Entgate-Steps"), "4");
  EXPECT_EQ(up->posts(), 4u);
  EXPECT_EQ(json::parse(r.body)["choices"][0]["message"]["content"], "step 4");
  const auto last = json::parse(up->bodies()[3]);
  EXPECT_EQ(last["messages"][2]["content"], kDefaultRefinePrompt);
}

TEST(GatewayTest, PassthroughIsBodyTransparent) {
  const std::string upstream_body = "{ \"odd\" :  [1,2,3], \"kept\": \"as-is\" }\n";
  auto up = std::make_shared<StubTransport>(
      [&](const std::string&, std::size_t) -> HttpResponse {
        return {201, upstream_body, "application/json; charset=utf-8"};
      });
  Gateway g(Config(kNaN), up);
  EXPECT_FALSE(g.gating_enabled());
  const auto r = g.Handle({kClientBody, "Bearer client-key"});
  EXPECT_EQ(r.status, 201);
  EXPECT_EQ(r.body, upstream_body);
  EXPECT_EQ(r.content_type, "application/json; charset=utf-8");
  EXPECT_EQ(Header(r, "X-Entgate-Mode"), "passthrough");
  EXPECT_EQ(Header(r, "X-Entgate-Gated"), "");
  EXPECT_EQ(json::parse(up->bodies()[0])["logprobs"], true);
  EXPECT_EQ(up->headers()[0].at(0).second, "Bearer client-key");

  // Requests that already ask for logprobs are forwarded byte for byte.
  const std::string explicit_body =
      R"({"model":"m",  "logprobs":true,"messages":[{"role":"user","content":"x"}]})";
  g.Handle({explicit_body, ""});
  EXPECT_EQ(up->bodies()[1], explicit_body);
  EXPECT_EQ(g.metrics().requests_passthrough, 2u);
}

TEST(GatewayTest, MalformedRequestsAre400) {
  auto up = CountingUpstream();
  Gateway g(Config(0.5), up);
  EXPECT_EQ(g.Handle({"{oops", ""}).status, 400);
  EXPECT_EQ(g.Handle({R"({"model":"m"})", ""}).status, 400);
  EXPECT_EQ(g.Handle({R"({"messages":"x"})", ""}).status, 400);
  EXPECT_EQ(g.Handle({R"({"messages":[{"role":"user","content":"x"}],"stream":true})", ""})
                .status,
            400);
  EXPECT_EQ(up->posts(), 0u);
  EXPECT_EQ(g.metrics().requests_failed, 4u);
}

TEST(GatewayTest, UpstreamFailuresAre502WithDiagnostic) {
  auto down = std::make_shared<StubTransport>(
      [](const std::string&, std::size_t) -> HttpResponse { return {500, "boom", ""}; });
  Gateway g(Config(0.5), down);
  const auto r = g.Handle({kClientBody, ""});
  EXPECT_EQ(r.status, 502);
  const auto diag = json::parse(r.body);
  EXPECT_EQ(diag["error"]["upstream_status"], 500);
  EXPECT_EQ(diag["error"]["upstream_body"], "boom");
  EXPECT_EQ(down->posts(), 2u);  // one retry

  auto no_logprobs = std::make_shared<StubTransport>(
      [](const std::string&, std::size_t) -> HttpResponse {
        return {200, R"({"choices":[{"message":{"content":"x"}}]})", ""};
      });
  Gateway g2(Config(0.5), no_logprobs);
  const auto r2 = g2.Handle({kClientBody, ""});
  EXPECT_EQ(r2.status, 502);
  EXPECT_NE(r2.body.find("LogprobsUnsupported"), std::string::npos);

  auto unreachable = std::make_shared<StubTransport>(
      [](const std::string&, std::size_t) -> HttpResponse {
        throw Error(ErrorCode::kIoError, "connection refused");
      });
  Gateway g3(Config(kNaN), unreachable);
  EXPECT_EQ(g3.Handle({kClientBody, ""}).status, 502);
}

// Upstream alternates confident and unsure answers, so half the traffic
// stops early.
TEST(GatewayTest, StopRateConvergesToClassMix) {
  auto up = std::make_shared<StubTransport>(
      [](const std::string& body, std::size_t) -> HttpResponse {
        const auto msgs = json::parse(body)["messages"];
        const bool confident = msgs[0]["content"].get<std::string>().back() == '0';
        return {200,
                confident ? OneHotCompletion("sure", 3) : UniformCompletion("hmm", 3, 20),
                ""};
      });
  Gateway g(Config(0.5), up);
  for (int i = 0; i < 40; ++i) {
    json body = {{"messages", {{{"role", "user"}, {"content", "q" + std::to_string(i % 2)}}}}};
    g.Handle({body.dump(), ""});
  }
  const auto m = g.metrics();
  EXPECT_EQ(m.requests_gated, 20u);
  EXPECT_EQ(m.requests_continued, 20u);
  EXPECT_EQ(m.upstream_calls, 20u + 20u * 4u);
  const std::string text = g.MetricsText();
  EXPECT_NE(text.find("stop_rate 0.500000\n"), std::string::npos) << text;
  EXPECT_NE(text.find("requests_total 40\n"), std::string::npos);
  EXPECT_NE(text.find("gating_enabled 1\n"), std::string::npos);
  EXPECT_NE(text.find("tokens_saved_estimate 180\n"), std::string::npos);
}

// Each request sees one tau from start to finish, even while another thread
// keeps swapping it.
TEST(GatewayTest, TauSwapIsAtomicPerRequest) {
  auto up = CountingUpstream(2, 4);
  Gateway g(Config(kInf), up);
  std::atomic<bool> done{false};
  std::thread flipper([&] {
    bool high = false;
    while (!done.load()) {
      g.SetTau(high ? kInf : -kInf);
      high = !high;
    }
  });
  std::vector<std::thread> clients;
  std::atomic<int> inconsistent{0};
  for (int t = 0; t < 4; ++t) {
    clients.emplace_back([&] {
      for (int i = 0; i < 50; ++i) {
        const auto r = g.Handle({kClientBody, ""});
        const bool gated = Header(r, "X-Entgate-Gated") == "true";
        const std::string tau = Header(r, "X-Entgate-Tau");
        const std::string steps = Header(r, "X-Entgate-Steps");
        if (gated != (tau == "inf") || (steps == "1") != gated) ++inconsistent;
      }
    });
  }
  for (auto& c : clients) c.join();
  done = true;
  flipper.join();
  EXPECT_EQ(inconsistent.load(), 0);
}

TEST(GatewayTest, CalibrationHotReload) {
  testing::TempDir dir;
  auto cfg = Config(kNaN);
  cfg.calibration_file = dir / "cal.csv";
  ThresholdDecision d;
  d.tau = 0.25;
  WriteCalibrationFile(*cfg.calibration_file, {d, UtcTimestamp()});
  Gateway g(cfg, CountingUpstream());
  EXPECT_EQ(g.tau(), 0.25);
  EXPECT_FALSE(g.ReloadCalibration());  // unchanged

  d.tau = 0.75;
  WriteCalibrationFile(*cfg.calibration_file, {d, UtcTimestamp()});
  std::filesystem::last_write_time(*cfg.calibration_file,
                                   std::filesystem::file_time_type::clock::now() +
                                       std::chrono::seconds(5));
  EXPECT_TRUE(g.ReloadCalibration());
  EXPECT_EQ(g.tau(), 0.75);

  std::ofstream(*cfg.calibration_file) << "garbage\n";
  std::filesystem::last_write_time(*cfg.calibration_file,
                                   std::filesystem::file_time_type::clock::now() +
                                       std::chrono::seconds(10));
  EXPECT_FALSE(g.ReloadCalibration());
  EXPECT_EQ(g.tau(), 0.75);
}

TEST(GatewayConfigTest, LoadsJson) {
  testing::TempDir dir;
  ::setenv("ENTGATE_TEST_KEY", "sk-from-env", 1);
  std::ofstream(dir / "g.json") << R"({
    "listen": "0.0.0.0:9099",
    "upstream": {"base_url": "http://up:8000/v1", "model": "oss", "api_key_env": "ENTGATE_TEST_KEY",
                 "top_logprobs": 10, "max_steps": 3, "extra_body": {"reasoning_effort": "high"}},
    "gate": {"tau": "inf", "k_limit": 5},
    "reload_interval_ms": 250, "startup_probe": false})";
  const auto cfg = LoadGatewayConfig(dir / "g.json");
  EXPECT_EQ(cfg.listen_host, "0.0.0.0");
  EXPECT_EQ(cfg.listen_port, 9099);
  EXPECT_EQ(cfg.upstream.api_key, "sk-from-env");
  EXPECT_EQ(cfg.upstream.max_steps, 3u);
  EXPECT_TRUE(std::isinf(cfg.gate.tau));
  EXPECT_EQ(cfg.gate.k_limit, 5u);
  EXPECT_EQ(cfg.reload_interval.count(), 250);
  EXPECT_EQ(json::parse(cfg.upstream.extra_body)["reasoning_effort"], "high");

  std::ofstream(dir / "off.json") << R"({"upstream": {"base_url": "http://up/v1"}})";
  EXPECT_TRUE(std::isnan(LoadGatewayConfig(dir / "off.json").gate.tau));
  std::ofstream(dir / "bad.json") << R"({"gate": {}})";
  EXPECT_ENTGATE_ERROR(LoadGatewayConfig(dir / "bad.json"), ErrorCode::kParseError);
}

// Full HTTP path: a real upstream server, the gateway listening on a socket
// and a plain client in front.
class GatewayHttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    upstream_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
      ++upstream_posts_;
      last_upstream_body_ = req.body;
      res.set_content(UniformCompletion("The answer is 42.", 3, 20), "application/json");
    });
    upstream_.Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
      res.status = probe_status_;
      res.set_content(R"({"data":[]})", "application/json");
    });
    port_ = upstream_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { upstream_.listen_after_bind(); });
    upstream_.wait_until_ready();
  }
  void TearDown() override {
    upstream_.stop();
    thread_.join();
  }

  GatewayConfig HttpConfig(double tau) {
    auto cfg = Config(tau);
    cfg.upstream.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    cfg.startup_probe = true;
    return cfg;
  }
  std::shared_ptr<ChatTransport> Transport(const GatewayConfig& cfg) {
    return std::make_shared<HttpTransport>(cfg.upstream.base_url, std::chrono::seconds(5));
  }

  httplib::Server upstream_;
  std::thread thread_;
  int port_ = 0;
  int probe_status_ = 200;
  std::atomic<int> upstream_posts_{0};
  std::string last_upstream_body_;
};

TEST_F(GatewayHttpTest, GatedRequestOverSockets) {
  const auto cfg = HttpConfig(kInf);
  Gateway g(cfg, Transport(cfg));
  g.Start();
  httplib::Client client("127.0.0.1", g.port());
  auto res = client.Post("/v1/chat/completions", kClientBody, "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("X-Entgate-Gated"), "true");
  EXPECT_EQ(res->get_header_value("X-Entgate-Steps"), "1");
  EXPECT_EQ(res->body, UniformCompletion("The answer is 42.", 3, 20));
  EXPECT_EQ(upstream_posts_.load(), 1);

  auto metrics = client.Get("/metrics");
  ASSERT_TRUE(metrics);
  EXPECT_NE(metrics->body.find("requests_gated 1\n"), std::string::npos);
  EXPECT_NE(metrics->body.find("tau inf\n"), std::string::npos);
  g.Stop();
}

TEST_F(GatewayHttpTest, PassthroughOverSockets) {
  const auto cfg = HttpConfig(kNaN);
  Gateway g(cfg, Transport(cfg));
  g.Start();
  httplib::Client client("127.0.0.1", g.port());
  auto res = client.Post("/v1/chat/completions", kClientBody, "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->body, UniformCompletion("The answer is 42.", 3, 20));
  EXPECT_EQ(res->get_header_value("X-Entgate-Mode"), "passthrough");
  EXPECT_EQ(json::parse(last_upstream_body_)["logprobs"], true);
  g.Stop();
}

TEST_F(GatewayHttpTest, StartupProbeFailureRefusesToStart) {
  probe_status_ = 503;
  const auto cfg = HttpConfig(0.5);
  Gateway g(cfg, Transport(cfg));
  EXPECT_ENTGATE_ERROR(g.Start(), ErrorCode::kProviderError);
}

}  // namespace
}  // namespace entgate
