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

// Minimal HTTP surface the client and gateway need from an upstream. Tests
// swap in in-process stubs; production uses HttpTransport.

#ifndef ENTGATE_TRANSPORT_HPP_
#define ENTGATE_TRANSPORT_HPP_

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace entgate {

using HeaderList = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
};

struct ParsedUrl {
  std::string scheme;  // http or https
  std::string host;
  int port = 0;
  std::string path_prefix;  // no trailing slash, may be empty

  std::string Origin() const;
};

// Throws kInvalidArgument for anything that is not http(s)://host[:port][/p].
ParsedUrl ParseBaseUrl(const std::string& url);

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;

  // `path` is relative to the endpoint base (e.g. "/chat/completions").
  // Network failures throw Error(kTimeout) or Error(kIoError); HTTP error
  // statuses are returned, not thrown.
  virtual HttpResponse Post(const std::string& path, const std::string& body,
                            const HeaderList& headers) = 0;
  virtual HttpResponse Get(const std::string& path, const HeaderList& headers) = 0;
};

class HttpTransport final : public ChatTransport {
 public:
  HttpTransport(const std::string& base_url, std::chrono::milliseconds timeout);

  HttpResponse Post(const std::string& path, const std::string& body,
                    const HeaderList& headers) override;
  HttpResponse Get(const std::string& path, const HeaderList& headers) override;

 private:
  ParsedUrl url_;
  std::chrono::milliseconds timeout_;
};

}  // namespace entgate

#endif  // ENTGATE_TRANSPORT_HPP_
