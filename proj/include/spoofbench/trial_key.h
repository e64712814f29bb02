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

#ifndef SPOOFBENCH_TRIAL_KEY_H_
#define SPOOFBENCH_TRIAL_KEY_H_

#include <optional>
#include <string_view>

namespace spoofbench {

enum class TrialKey { kBonafide, kSpoof };

inline std::string_view ToString(TrialKey k) {
  return k == TrialKey::kBonafide ? "bonafide" : "spoof";
}

inline std::optional<TrialKey> ParseTrialKey(std::string_view s) {
  if (s == "bonafide") return TrialKey::kBonafide;
  if (s == "spoof") return TrialKey::kSpoof;
  return std::nullopt;
}

}  // namespace spoofbench

#endif  // SPOOFBENCH_TRIAL_KEY_H_
