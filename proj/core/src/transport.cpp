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

#include "entgate/transport.hpp"

#include <charconv>

#include "entgate/error.hpp"
#include "httplib.h"

namespace entgate {

std::string ParsedUrl::Origin() const {
  return scheme + "://" + host + ":" + std::to_string(port);
}

ParsedUrl ParseBaseUrl(const std::string& url) {
  ParsedUrl out;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "base url lacks a scheme: " + url);
  }
  out.scheme = url.substr(0, scheme_end);
  if (out.scheme != "http" && out.scheme != "https") {
    throw Error(ErrorCode::kInvalidArgument, "unsupported scheme in " + url);
  }
  std::string rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  out.path_prefix = slash == std::string::npos ? "" : rest.substr(slash);
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
    out.path_prefix.pop_back();
  }
  out.port = out.scheme == "https" ? 443 : 80;
  if (const auto colon = authority.rfind(':');
      colon != std::string::npos && authority.find(']') == std::string::npos) {
    const std::string port_text = authority.substr(colon + 1);
    int port = 0;
    const auto [ptr, ec] =
        std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port <= 0 ||
        port > 65535) {
      throw Error(ErrorCode::kInvalidArgument, "bad port in " + url);
    }
    out.port = port;
    authority.resize(colon);
  }
  if (authority.empty()) throw Error(ErrorCode::kInvalidArgument, "no host in " + url);
  out.host = authority;
  return out;
}

HttpTransport::HttpTransport(const std::string& base_url,
                             std::chrono::milliseconds timeout)
    : url_(ParseBaseUrl(base_url)), timeout_(timeout) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (url_.scheme == "https") {
    throw Error(ErrorCode::kInvalidArgument,
                "https upstream requested but this build has no TLS support");
  }
#endif
}

namespace {

[[noreturn]] void ThrowTransportFailure(httplib::Error err, const std::string& where) {
  const auto code = (err == httplib::Error::Read || err == httplib::Error::Write ||
                     err == httplib::Error::ConnectionTimeout)
                        ? ErrorCode::kTimeout
                        : ErrorCode::kIoError;
  throw Error(code, where + ": " + httplib::to_string(err));
}

httplib::Headers ToHeaders(const HeaderList& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

}  // namespace

HttpResponse HttpTransport::Post(const std::string& path, const std::string& body,
                                 const HeaderList& headers) {
  httplib::Client client(url_.Origin());
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  const std::string full = url_.path_prefix + path;
  auto res = client.Post(full, ToHeaders(headers), body, "application/json");
  if (!res) ThrowTransportFailure(res.error(), "POST " + full);
  return {res->status, res->body, res->get_header_value("Content-Type")};
}

HttpResponse HttpTransport::Get(const std::string& path, const HeaderList& headers) {
  httplib::Client client(url_.Origin());
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  const std::string full = url_.path_prefix + path;
  auto res = client.Get(full, ToHeaders(headers));
  if (!res) ThrowTransportFailure(res.error(), "GET " + full);
  return {res->status, res->body, res->get_header_value("Content-Type")};
}

}  // namespace entgate
