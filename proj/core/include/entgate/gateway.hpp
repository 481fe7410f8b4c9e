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

// HTTP gating proxy. Clients speak the chat-completions protocol to the
// gateway; the gateway forwards step 1 upstream with logprobs forced on,
// measures the step-1 mean entropy and either returns that response or runs
// the remaining refinement steps. Gating metadata travels in X-Entgate-*
// response headers so response bodies stay provider-compatible.

#ifndef ENTGATE_GATEWAY_HPP_
#define ENTGATE_GATEWAY_HPP_

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "entgate/client.hpp"
#include "entgate/transport.hpp"

namespace entgate {

struct GatewayConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;  // 0 picks a free port
  EndpointConfig upstream;
  // A NaN tau disables gating: requests are proxied unchanged apart from
  // forced logprobs. +inf is accepted and stops every request after step 1.
  LiveGateConfig gate;
  bool metrics_enabled = true;
  std::optional<std::filesystem::path> calibration_file;
  std::chrono::milliseconds reload_interval{2000};
  bool startup_probe = true;  // GET {upstream}/models before listening
  std::string route = "/v1/chat/completions";
};

// JSON document:
//   {"listen": "host:port",
//    "upstream": {"base_url", "model", "api_key_env", "temperature",
//                 "max_tokens_per_step", "top_logprobs", "max_steps",
//                 "request_timeout_ms", "max_retries", "backoff_ms",
//                 "refine_prompt", "extra_body"},
//    "gate": {"tau": number | "inf" | null, "k_limit", "stop_on_tie"},
//    "metrics_enabled", "calibration_file", "reload_interval_ms",
//    "startup_probe", "route"}
// A calibration file, when named, overrides gate.tau at startup.
GatewayConfig LoadGatewayConfig(const std::filesystem::path& path);

struct GatewayMetrics {
  std::uint64_t requests_total = 0;
  std::uint64_t requests_gated = 0;
  std::uint64_t requests_continued = 0;
  std::uint64_t requests_passthrough = 0;
  std::uint64_t requests_failed = 0;
  std::uint64_t upstream_calls = 0;
  std::uint64_t tokens_saved_estimate = 0;

  double StopRate() const;
};

struct GatewayRequest {
  std::string body;
  std::string authorization;  // forwarded upstream when non-empty
};

struct GatewayResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  HeaderList headers;
};

using LogSink = std::function<void(std::string_view level, std::string_view msg)>;

class Gateway {
 public:
  Gateway(GatewayConfig config, std::shared_ptr<ChatTransport> upstream,
          LogSink log = {});
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Protocol core, usable without a listening socket.
  GatewayResponse Handle(const GatewayRequest& request);

  // Binds, probes the upstream when configured and serves on a background
  // thread. Throws kIoError when the address cannot be bound and
  // kProviderError when the probe fails.
  void Start();
  void Stop();
  int port() const { return bound_port_; }

  double tau() const { return tau_.load(); }
  bool gating_enabled() const { return !std::isnan(tau_.load()); }
  void SetTau(double tau);

  // Re-reads the calibration file when its modification time changed.
  // Returns true when a new tau was installed. Parse failures keep the
  // current tau and are logged.
  bool ReloadCalibration();

  GatewayMetrics metrics() const;
  std::string MetricsText() const;

 private:
  void Log(std::string_view level, std::string_view msg) const;

  GatewayConfig config_;
  std::shared_ptr<ChatTransport> upstream_;
  LogSink log_;
  std::atomic<double> tau_;

  std::atomic<std::uint64_t> requests_total_{0};
  std::atomic<std::uint64_t> requests_gated_{0};
  std::atomic<std::uint64_t> requests_continued_{0};
  std::atomic<std::uint64_t> requests_passthrough_{0};
  std::atomic<std::uint64_t> requests_failed_{0};
  std::atomic<std::uint64_t> upstream_calls_{0};
  std::atomic<std::uint64_t> tokens_saved_{0};

  std::mutex reload_mu_;
  std::optional<std::filesystem::file_time_type> calibration_mtime_;

  struct Server;
  std::unique_ptr<Server> server_;
  int bound_port_ = 0;
};

}  // namespace entgate

#endif  // ENTGATE_GATEWAY_HPP_
