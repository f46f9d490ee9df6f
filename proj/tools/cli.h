// Copyright 2026 The dlcz Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DLCZ_TOOLS_CLI_H
#define DLCZ_TOOLS_CLI_H

#include <ostream>
#include <string>
#include <vector>

namespace dlcz::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitConvergence = 4;

extern const char* const kToolVersion;

/// Runs the `dlcz` command line. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "A,B" (microseconds, "inf" allowed) into seconds.
std::pair<double, double> parse_window_us(const std::string& text);
/// Parses "a,b,c" (microseconds) into seconds.
std::vector<double> parse_list_us(const std::string& text);

}  // namespace dlcz::cli

#endif
