// Copyright 2026 The ucrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UCREC_TOOLS_CLI_HPP_
#define UCREC_TOOLS_CLI_HPP_

#include <iosfwd>

namespace ucrec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

// Runs one subcommand. Results go to `out`, usage and error text to `err`,
// progress logs to stderr.
int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ucrec::cli

#endif  // UCREC_TOOLS_CLI_HPP_
