// Copyright (c) 2026 SpoofBench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPOOFBENCH_CLI_H_
#define SPOOFBENCH_CLI_H_

#include <string>
#include <vector>

namespace spoofbench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the spoofbench tool. args excludes the program name.
// Returns 0 on success, 2 on usage errors and 1 on any module error.
int CliMain(const std::vector<std::string>& args);

}  // namespace spoofbench

#endif  // SPOOFBENCH_CLI_H_
