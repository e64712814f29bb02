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

#ifndef SPOOFBENCH_DATA_PROTO_H_
#define SPOOFBENCH_DATA_PROTO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spoofbench/trial_key.h"

namespace spoofbench {

// One row of an ASVspoof countermeasure protocol. For spoofed rows the
// speaker_id is the claimed (target) speaker.
struct TrialRecord {
  std::string speaker_id;
  std::string utt_id;
  std::string system_id;  // "-" for bona fide, e.g. "A01" for spoofs
  TrialKey key = TrialKey::kBonafide;
  std::string environment = "-";  // third column, kept for round trips

  bool operator==(const TrialRecord&) const = default;
};

// Lines are whitespace separated: speaker utt_id env system key. Longer
// 2021-style lines are accepted: the key is the first "bonafide"/"spoof"
// field from column 4 on and the system is the field before it; the extra
// columns are ignored (logged once per file). Blank lines are skipped.
std::vector<TrialRecord> ParseProtocolText(std::string_view text,
                                           const std::string& source = "<protocol>");
std::vector<TrialRecord> ParseProtocol(const std::filesystem::path& path);

void WriteProtocol(std::span<const TrialRecord> records, const std::filesystem::path& path);

enum class Scenario { kDisjoint, kSharedDefenderFull };

Scenario ParseScenario(std::string_view s);
std::string_view ToString(Scenario s);

struct SplitPlan {
  Scenario scenario = Scenario::kDisjoint;
  std::vector<std::string> attacker_systems = {"A01", "A03", "A05"};
  std::vector<std::string> defender_systems = {"A02", "A04", "A06"};
  uint64_t seed = 0;
};

struct SplitResult {
  std::vector<TrialRecord> attacker;
  std::vector<TrialRecord> defender;
  std::vector<std::string> warnings;
};

// Spoofs are routed by system; each speaker's bona fide utterances are
// shuffled (seeded) and split ceil(n/2) to the attacker, floor(n/2) to the
// defender. Spoofs of systems in neither list go to the defender with a
// warning. In kSharedDefenderFull the defender receives every record while the
// attacker keeps its disjoint-scenario share. Both outputs keep input order.
SplitResult MakeSplit(std::span<const TrialRecord> records, const SplitPlan& plan);

// Counts per side, system and speaker.
nlohmann::json SplitSummary(const SplitResult& split);

struct PairRecord {
  TrialRecord spoof;
  TrialRecord bonafide;
};

struct PairingResult {
  std::vector<PairRecord> pairs;
  std::vector<std::string> warnings;
};

// Pairs every spoofed record with a uniformly drawn (seeded) bona fide
// record of the same speaker. Speakers with spoofs but no bona fide
// utterance are skipped with a warning.
PairingResult PairForEnhancement(std::span<const TrialRecord> attacker_set, uint64_t seed);

}  // namespace spoofbench

#endif  // SPOOFBENCH_DATA_PROTO_H_
