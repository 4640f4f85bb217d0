// Copyright 2026 The Remediate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef REMEDIATE_TOOLS_CLI_HPP_
#define REMEDIATE_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace remediate::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kInfeasible = 2;

int run(int argc, char** argv);
// Same as run() with explicit arguments (program name excluded) and streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace remediate::cli

#endif  // REMEDIATE_TOOLS_CLI_HPP_
