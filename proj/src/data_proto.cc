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

#include "spoofbench/data_proto.h"

#include <glog/logging.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "spoofbench/error.h"

namespace spoofbench {

std::vector<TrialRecord> ParseProtocolText(std::string_view text, const std::string& source) {
  std::vector<TrialRecord> out;
  std::set<std::string> seen;
  bool warned_extra = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(f);
    if (fields.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (fields.size() < 5) {
      throw ParseError(where + ": expected 5 fields (speaker utt env system key), got " +
                       std::to_string(fields.size()));
    }
    size_t key_idx = 4;
    if (fields.size() > 5) {
      key_idx = 0;
      for (size_t i = 3; i < fields.size(); ++i) {
        if (ParseTrialKey(fields[i])) {
          key_idx = i;
          break;
        }
      }
      if (key_idx == 0) throw ParseError(where + ": no bonafide/spoof key field");
      if (!warned_extra) {
        LOG(WARNING) << source << ": ignoring extra protocol columns";
        warned_extra = true;
      }
    }
    const auto key = ParseTrialKey(fields[key_idx]);
    if (!key) {
      throw ParseError(where + ": key must be 'bonafide' or 'spoof', got '" +
                       fields[key_idx] + "'");
    }
    TrialRecord r;
    r.speaker_id = fields[0];
    r.utt_id = fields[1];
    r.environment = key_idx >= 4 ? fields[2] : "-";
    r.system_id = fields[key_idx - 1];
    r.key = *key;
    if ((r.key == TrialKey::kBonafide) != (r.system_id == "-")) {
      throw ParseError(where + ": system '" + r.system_id + "' inconsistent with key '" +
                       fields[key_idx] + "'");
    }
    if (!seen.insert(r.utt_id).second) {
      throw ParseError(where + ": duplicate utterance id " + r.utt_id);
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw InvalidInputError(source + ": protocol is empty");
  return out;
}

std::vector<TrialRecord> ParseProtocol(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open protocol " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseProtocolText(ss.str(), path.string());
}

void WriteProtocol(std::span<const TrialRecord> records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) {
    out << r.speaker_id << ' ' << r.utt_id << ' ' << r.environment << ' ' << r.system_id
        << ' ' << ToString(r.key) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Scenario ParseScenario(std::string_view s) {
  if (s == "disjoint") return Scenario::kDisjoint;
  if (s == "shared_defender_full") return Scenario::kSharedDefenderFull;
  throw ConfigError("unknown scenario '" + std::string(s) +
                    "' (expected disjoint or shared_defender_full)");
}

std::string_view ToString(Scenario s) {
  return s == Scenario::kDisjoint ? "disjoint" : "shared_defender_full";
}

SplitResult MakeSplit(std::span<const TrialRecord> records, const SplitPlan& plan) {
  if (records.empty()) throw InvalidInputError("cannot split an empty protocol");
  for (const auto& a : plan.attacker_systems) {
    if (std::find(plan.defender_systems.begin(), plan.defender_systems.end(), a) !=
        plan.defender_systems.end()) {
      throw ConfigError("system " + a + " assigned to both attacker and defender");
    }
  }
  auto in = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };

  // Bona fide halves, per speaker in sorted speaker order for determinism.
  std::map<std::string, std::vector<size_t>> bona_by_speaker;
  for (size_t i = 0; i < records.size(); ++i) {
    if (records[i].key == TrialKey::kBonafide) bona_by_speaker[records[i].speaker_id].push_back(i);
  }
  std::mt19937_64 rng(plan.seed);
  std::vector<bool> to_attacker(records.size(), false);
  for (auto& [speaker, idx] : bona_by_speaker) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const size_t n_att = (idx.size() + 1) / 2;
    for (size_t j = 0; j < n_att; ++j) to_attacker[idx[j]] = true;
  }

  SplitResult out;
  std::set<std::string> warned;
  for (size_t i = 0; i < records.size(); ++i) {
    const TrialRecord& r = records[i];
    if (r.key == TrialKey::kSpoof) {
      if (in(plan.attacker_systems, r.system_id)) {
        to_attacker[i] = true;
      } else if (!in(plan.defender_systems, r.system_id) && warned.insert(r.system_id).second) {
        out.warnings.push_back("system " + r.system_id +
                               " is in neither list; routed to the defender");
        LOG(WARNING) << out.warnings.back();
      }
    }
    if (to_attacker[i]) out.attacker.push_back(r);
    if (!to_attacker[i] || plan.scenario == Scenario::kSharedDefenderFull) {
      out.defender.push_back(r);
    }
  }
  return out;
}

nlohmann::json SplitSummary(const SplitResult& split) {
  auto side = [](const std::vector<TrialRecord>& recs) {
    nlohmann::json j;
    std::map<std::string, int> systems;
    std::map<std::string, std::map<std::string, int>> speakers;
    int bona = 0, spoof = 0;
    for (const auto& r : recs) {
      ++systems[r.system_id];
      ++speakers[r.speaker_id][std::string(ToString(r.key))];
      (r.key == TrialKey::kBonafide ? bona : spoof)++;
    }
    j["total"] = recs.size();
    j["bonafide"] = bona;
    j["spoof"] = spoof;
    j["systems"] = systems;
    j["speakers"] = speakers;
    return j;
  };
  return {{"attacker", side(split.attacker)},
          {"defender", side(split.defender)},
          {"warnings", split.warnings}};
}

PairingResult PairForEnhancement(std::span<const TrialRecord> attacker_set, uint64_t seed) {
  std::map<std::string, std::vector<const TrialRecord*>> pool;
  for (const auto& r : attacker_set) {
    if (r.key == TrialKey::kBonafide) pool[r.speaker_id].push_back(&r);
  }
  PairingResult out;
  std::mt19937_64 rng(seed);
  std::set<std::string> warned;
  for (const auto& r : attacker_set) {
    if (r.key != TrialKey::kSpoof) continue;
    auto it = pool.find(r.speaker_id);
    if (it == pool.end()) {
      if (warned.insert(r.speaker_id).second) {
        out.warnings.push_back("speaker " + r.speaker_id +
                               " has spoofed utterances but no bona fide ones; skipped");
        LOG(WARNING) << out.warnings.back();
      }
      continue;
    }
    std::uniform_int_distribution<size_t> pick(0, it->second.size() - 1);
    out.pairs.push_back({r, *it->second[pick(rng)]});
  }
  return out;
}

}  // namespace spoofbench
