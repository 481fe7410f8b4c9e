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

// Command-line front end. RunCli is the whole tool minus process plumbing so
// tests can drive it in-process.

#ifndef ENTGATE_TOOLS_CLI_HPP_
#define ENTGATE_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace entgate::cli {

// `args` excludes the program name. Returns the process exit status: 0 on
// success, 1 for usage errors, 2 for failures reported as
// "error: code=<Code> message=<text>" on `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace entgate::cli

#endif  // ENTGATE_TOOLS_CLI_HPP_
