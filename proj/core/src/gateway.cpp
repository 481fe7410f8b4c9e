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

#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "entgate/calibration_file.hpp"
#include "entgate/entropy.hpp"
#include "entgate/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace entgate {

using nlohmann::json;

namespace {

double ParseTau(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan" || s == "off") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorCode::kParseError, "gate.tau must be a number, \"inf\" or null");
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

GatewayResponse Diagnostic(int status, std::string_view type, std::string_view message,
                           std::optional<int> upstream_status = std::nullopt,
                           std::string_view upstream_body = {}) {
  json err = {{"type", type}, {"message", message}};
  if (upstream_status) {
    err["upstream_status"] = *upstream_status;
    err["upstream_body"] = upstream_body;
  }
  GatewayResponse r;
  r.status = status;
  r.body = json{{"error", err}}.dump();
  return r;
}

}  // namespace

GatewayConfig LoadGatewayConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  GatewayConfig cfg;
  try {
    const json j = json::parse(in);
    if (const auto listen = j.value("listen", std::string()); !listen.empty()) {
      const auto colon = listen.rfind(':');
      if (colon == std::string::npos) {
        throw Error(ErrorCode::kParseError, "listen must be host:port");
      }
      cfg.listen_host = listen.substr(0, colon);
      cfg.listen_port = std::stoi(listen.substr(colon + 1));
    }
    const json& up = j.at("upstream");
    EndpointConfig& e = cfg.upstream;
    e.base_url = up.at("base_url").get<std::string>();
    e.model = up.value("model", "");
    const std::string key_env = up.value("api_key_env", "ENTGATE_API_KEY");
    if (const char* key = std::getenv(key_env.c_str())) e.api_key = key;
    e.temperature = up.value("temperature", e.temperature);
    e.max_tokens_per_step = up.value("max_tokens_per_step", e.max_tokens_per_step);
    e.top_logprobs = up.value("top_logprobs", e.top_logprobs);
    e.max_steps = up.value("max_steps", e.max_steps);
    e.request_timeout = std::chrono::milliseconds(
        up.value("request_timeout_ms", std::int64_t(e.request_timeout.count())));
    e.retry.max_retries = up.value("max_retries", e.retry.max_retries);
    e.retry.backoff = std::chrono::milliseconds(
        up.value("backoff_ms", std::int64_t(e.retry.backoff.count())));
    e.refine_prompt = up.value("refine_prompt", e.refine_prompt);
    if (up.contains("extra_body")) e.extra_body = up.at("extra_body").dump();

    const json gate = j.value("gate", json::object());
    cfg.gate.tau = ParseTau(gate.value("tau", json()));
    cfg.gate.k_limit = gate.value("k_limit", e.top_logprobs);
    cfg.gate.stop_on_tie = gate.value("stop_on_tie", true);

    cfg.metrics_enabled = j.value("metrics_enabled", true);
    if (j.contains("calibration_file") && !j.at("calibration_file").is_null()) {
      cfg.calibration_file = j.at("calibration_file").get<std::string>();
    }
    cfg.reload_interval = std::chrono::milliseconds(
        j.value("reload_interval_ms", std::int64_t(cfg.reload_interval.count())));
    cfg.startup_probe = j.value("startup_probe", true);
    cfg.route = j.value("route", cfg.route);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + ex.what());
  }
  cfg.upstream.Validate();
  return cfg;
}

double GatewayMetrics::StopRate() const {
  const std::uint64_t decided = requests_gated + requests_continued;
  return decided == 0 ? 0.0 : double(requests_gated) / double(decided);
}

struct Gateway::Server {
  httplib::Server http;
  std::thread listener;
  std::jthread reloader;
  std::mutex wait_mu;
  std::condition_variable_any wait_cv;
};

Gateway::Gateway(GatewayConfig config, std::shared_ptr<ChatTransport> upstream,
                 LogSink log)
    : config_(std::move(config)),
      upstream_(std::move(upstream)),
      log_(std::move(log)),
      tau_(config_.gate.tau) {
  config_.upstream.Validate();
  if (!std::isnan(config_.gate.tau)) config_.gate.Validate(config_.upstream);
  if (config_.gate.k_limit < 1 || config_.gate.k_limit > config_.upstream.top_logprobs) {
    throw Error(ErrorCode::kInvalidArgument, "gate k_limit must be in [1, top_logprobs]");
  }
  if (config_.calibration_file) ReloadCalibration();
  if (std::isnan(tau_.load())) {
    Log("warn", "tau is not set; gating disabled, running in pass-through mode");
  }
}

Gateway::~Gateway() { Stop(); }

void Gateway::Log(std::string_view level, std::string_view msg) const {
  if (log_) log_(level, msg);
}

void Gateway::SetTau(double tau) {
  tau_.store(tau);
  Log("info", "tau set to " + FormatDouble(tau));
}

bool Gateway::ReloadCalibration() {
  if (!config_.calibration_file) return false;
  std::lock_guard lock(reload_mu_);
  std::error_code ec;
  const auto mtime = std::filesystem::last_write_time(*config_.calibration_file, ec);
  if (ec) {
    Log("warn", "calibration file unavailable: " + config_.calibration_file->string());
    return false;
  }
  if (calibration_mtime_ && *calibration_mtime_ == mtime) return false;
  calibration_mtime_ = mtime;
  try {
    const CalibrationRecord rec = ReadCalibrationFile(*config_.calibration_file);
    SetTau(rec.decision.tau);
    return true;
  } catch (const std::exception& e) {
    Log("error", std::string("calibration reload failed, keeping tau: ") + e.what());
    return false;
  }
}

GatewayMetrics Gateway::metrics() const {
  GatewayMetrics m;
  m.requests_total = requests_total_.load();
  m.requests_gated = requests_gated_.load();
  m.requests_continued = requests_continued_.load();
  m.requests_passthrough = requests_passthrough_.load();
  m.requests_failed = requests_failed_.load();
  m.upstream_calls = upstream_calls_.load();
  m.tokens_saved_estimate = tokens_saved_.load();
  return m;
}

std::string Gateway::MetricsText() const {
  const GatewayMetrics m = metrics();
  std::ostringstream out;
  out << "requests_total " << m.requests_total << "\n"
      << "requests_gated " << m.requests_gated << "\n"
      << "requests_continued " << m.requests_continued << "\n"
      << "requests_passthrough " << m.requests_passthrough << "\n"
      << "requests_failed " << m.requests_failed << "\n"
      << "upstream_calls " << m.upstream_calls << "\n"
      << "stop_rate " << FormatDouble(m.StopRate()) << "\n"
      << "tokens_saved_estimate " << m.tokens_saved_estimate << "\n"
      << "tau " << FormatDouble(tau()) << "\n"
      << "gating_enabled " << (gating_enabled() ? 1 : 0) << "\n";
  return out.str();
}

GatewayResponse Gateway::Handle(const GatewayRequest& request) {
  ++requests_total_;
  // One tau snapshot serves the whole request, even across a reload.
  const double tau = tau_.load();

  json body;
  try {
    body = json::parse(request.body);
  } catch (const json::parse_error& e) {
    ++requests_failed_;
    return Diagnostic(400, "invalid_request", std::string("body is not JSON: ") + e.what());
  }
  if (!body.is_object() || !body.contains("messages") || !body["messages"].is_array() ||
      body["messages"].empty()) {
    ++requests_failed_;
    return Diagnostic(400, "invalid_request", "body needs a non-empty messages array");
  }
  const auto flag = [&](const char* key) {
    const auto it = body.find(key);
    return it != body.end() && it->is_boolean() && it->get<bool>();
  };
  if (flag("stream")) {
    ++requests_failed_;
    return Diagnostic(400, "invalid_request", "streaming responses are not supported");
  }

  HeaderList headers;
  if (!request.authorization.empty()) {
    headers.emplace_back("Authorization", request.authorization);
  } else if (!config_.upstream.api_key.empty()) {
    headers.emplace_back("Authorization", "Bearer " + config_.upstream.api_key);
  }

  const auto& retry = config_.upstream.retry;
  // Sends one step upstream, re-issuing on 429/5xx and network failures.
  auto send = [&](const std::string& payload) -> HttpResponse {
    auto backoff = retry.backoff;
    HttpResponse res;
    for (std::size_t attempt = 0;; ++attempt) {
      ++upstream_calls_;
      try {
        res = upstream_->Post("/chat/completions", payload, headers);
        if (res.status != 429 && res.status < 500) return res;
      } catch (const Error&) {
        if (attempt >= retry.max_retries) throw;
      }
      if (attempt >= retry.max_retries) return res;
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  };

  if (!body.contains("model") && !config_.upstream.model.empty()) {
    body["model"] = config_.upstream.model;
  }

  if (std::isnan(tau)) {
    ++requests_passthrough_;
    // Forward the original bytes when logprobs are already on.
    const bool already = flag("logprobs") && body.contains("model");
    if (!already) body["logprobs"] = true;
    HttpResponse res;
    try {
      res = send(already ? request.body : body.dump());
    } catch (const Error& e) {
      ++requests_failed_;
      return Diagnostic(502, "upstream_unreachable", e.what());
    }
    GatewayResponse out;
    out.status = res.status;
    out.body = std::move(res.body);
    if (!res.content_type.empty()) out.content_type = res.content_type;
    out.headers.emplace_back("X-Entgate-Mode", "passthrough");
    return out;
  }

  const std::size_t k_limit = config_.gate.k_limit;
  body["logprobs"] = true;
  const auto top = body.find("top_logprobs");
  const std::size_t requested =
      top != body.end() && top->is_number_unsigned() ? top->get<std::size_t>() : 0;
  body["top_logprobs"] = std::max(requested, config_.upstream.top_logprobs);

  LiveGateConfig gate = config_.gate;
  gate.tau = tau;
  double entropy = 0.0;
  std::size_t steps = 0;
  std::size_t step1_tokens = 0;
  HttpResponse last;
  try {
    for (std::size_t s = 1; s <= config_.upstream.max_steps; ++s) {
      last = send(body.dump());
      steps = s;
      if (last.status < 200 || last.status >= 300) {
        ++requests_failed_;
        return Diagnostic(502, "upstream_error",
                          "upstream returned status " + std::to_string(last.status),
                          last.status, last.body);
      }
      const CompletionStep step = ParseCompletion(last.body);
      if (s == 1) {
        entropy = ProfileTokens(step.tokens, k_limit).mean;
        step1_tokens = step.tokens.size();
        if (gate.Stops(entropy)) break;
      }
      if (s == config_.upstream.max_steps) break;
      body["messages"].push_back({{"role", "assistant"}, {"content", step.content}});
      body["messages"].push_back(
          {{"role", "user"}, {"content", config_.upstream.refine_prompt}});
    }
  } catch (const Error& e) {
    ++requests_failed_;
    return Diagnostic(502, "upstream_error",
                      std::string(ErrorCodeName(e.code())) + ": " + e.what());
  }

  const bool gated = steps == 1 && gate.Stops(entropy);
  if (gated) {
    ++requests_gated_;
    tokens_saved_ += step1_tokens * (config_.upstream.max_steps - 1);
  } else {
    ++requests_continued_;
  }
  GatewayResponse out;
  out.status = last.status;
  out.body = std::move(last.body);
  if (!last.content_type.empty()) out.content_type = last.content_type;
  out.headers = {{"X-Entgate-Entropy", FormatDouble(entropy)},
                 {"X-Entgate-Tau", FormatDouble(tau)},
                 {"X-Entgate-Gated", gated ? "true" : "false"},
                 {"X-Entgate-Steps", std::to_string(steps)}};
  return out;
}

void Gateway::Start() {
  if (server_) throw Error(ErrorCode::kInvalidArgument, "gateway already started");
  if (config_.startup_probe) {
    HeaderList headers;
    if (!config_.upstream.api_key.empty()) {
      headers.emplace_back("Authorization", "Bearer " + config_.upstream.api_key);
    }
    const HttpResponse probe = upstream_->Get("/models", headers);
    if (probe.status < 200 || probe.status >= 300) {
      throw ProviderError(probe.status, probe.body);
    }
  }

  auto server = std::make_unique<Server>();
  server->http.Post(config_.route, [this](const httplib::Request& req,
                                          httplib::Response& res) {
    const GatewayResponse out =
        Handle({req.body, req.get_header_value("Authorization")});
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    res.set_content(out.body, out.content_type);
  });
  if (config_.metrics_enabled) {
    server->http.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(MetricsText(), "text/plain");
    });
  }
  server->http.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok\n", "text/plain");
  });

  if (config_.listen_port == 0) {
    bound_port_ = server->http.bind_to_any_port(config_.listen_host);
  } else if (server->http.bind_to_port(config_.listen_host, config_.listen_port)) {
    bound_port_ = config_.listen_port;
  } else {
    bound_port_ = -1;
  }
  if (bound_port_ <= 0) {
    throw Error(ErrorCode::kIoError, "cannot bind " + config_.listen_host + ":" +
                                         std::to_string(config_.listen_port));
  }
  server->listener = std::thread([s = server.get()] { s->http.listen_after_bind(); });
  if (config_.calibration_file) {
    server->reloader = std::jthread([this, s = server.get()](std::stop_token st) {
      std::unique_lock lock(s->wait_mu);
      while (!s->wait_cv.wait_for(lock, st, config_.reload_interval,
                                  [] { return false; })) {
        if (st.stop_requested()) return;
        lock.unlock();
        ReloadCalibration();
        lock.lock();
      }
    });
  }
  server_ = std::move(server);
  Log("info", "listening on " + config_.listen_host + ":" + std::to_string(bound_port_));
}

void Gateway::Stop() {
  if (!server_) return;
  server_->http.stop();
  if (server_->listener.joinable()) server_->listener.join();
  if (server_->reloader.joinable()) {
    server_->reloader.request_stop();
    server_->reloader.join();
  }
  server_.reset();
}

}  // namespace entgate
