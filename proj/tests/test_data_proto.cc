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

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "spoofbench/data_proto.h"
#include "spoofbench/error.h"
#include "test_util.h"

namespace spoofbench {
namespace {

const std::filesystem::path kFixture =
    std::filesystem::path(SPOOFBENCH_TEST_DATA_DIR) / "la_train_fixture.txt";

TEST(ProtocolTest, ParsesBonafideAndSpoofLines) {
  const auto r = ParseProtocolText(
      "LA_0079 LA_T_1138215 - - bonafide\n\nLA_0079 LA_T_1271820 - A01 spoof\n");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], (TrialRecord{"LA_0079", "LA_T_1138215", "-", TrialKey::kBonafide, "-"}));
  EXPECT_EQ(r[1].system_id, "A01");
  EXPECT_EQ(r[1].key, TrialKey::kSpoof);
}

TEST(ProtocolTest, AcceptsExtendedColumns) {
  const auto r = ParseProtocolText("LA_0009 LA_E_9332881 alaw ita_tx A07 spoof notrim eval\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].system_id, "A07");
  EXPECT_EQ(r[0].key, TrialKey::kSpoof);
}

TEST(ProtocolTest, MalformedInputs) {
  try {
    ParseProtocolText("LA_0079 LA_T_1 - - bonafide\nLA_0079 LA_T_2 - bonafide\n", "p.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("p.txt:2"), std::string::npos);
  }
  EXPECT_THROW(ParseProtocolText("S U - A01 bonafide\n"), ParseError);
  EXPECT_THROW(ParseProtocolText("S U - - spoof\n"), ParseError);
  EXPECT_THROW(ParseProtocolText("S U - - maybe\n"), ParseError);
  EXPECT_THROW(ParseProtocolText("S U - - bonafide\nS U - A01 spoof\n"), ParseError);
}

TEST(ProtocolTest, FileRoundTrip) {
  const auto dir = testing::ScratchDir("proto");
  const auto records = ParseProtocol(kFixture);
  WriteProtocol(records, dir / "out.txt");
  EXPECT_EQ(ParseProtocol(dir / "out.txt"), records);
  std::ofstream(dir / "empty.txt");
  EXPECT_THROW(ParseProtocol(dir / "empty.txt"), InvalidInputError);
  EXPECT_THROW(ParseProtocol(dir / "missing.txt"), IoError);
}

TEST(ScenarioTest, Names) {
  EXPECT_EQ(ParseScenario("disjoint"), Scenario::kDisjoint);
  EXPECT_EQ(ParseScenario("shared_defender_full"), Scenario::kSharedDefenderFull);
  EXPECT_EQ(ToString(Scenario::kSharedDefenderFull), "shared_defender_full");
  EXPECT_THROW(ParseScenario("other"), ConfigError);
}

std::set<std::string> Utts(const std::vector<TrialRecord>& r) {
  std::set<std::string> s;
  for (const auto& x : r) s.insert(x.utt_id);
  return s;
}

std::map<std::string, int> BonafidePerSpeaker(const std::vector<TrialRecord>& r) {
  std::map<std::string, int> m;
  for (const auto& x : r) {
    if (x.key == TrialKey::kBonafide) ++m[x.speaker_id];
  }
  return m;
}

TEST(SplitTest, DisjointScenarioProperties) {
  const auto all = ParseProtocol(kFixture);
  const SplitResult s = MakeSplit(all, {.seed = 11});
  const auto a = Utts(s.attacker), d = Utts(s.defender);
  std::vector<std::string> both;
  std::set_intersection(a.begin(), a.end(), d.begin(), d.end(), std::back_inserter(both));
  EXPECT_TRUE(both.empty());
  EXPECT_EQ(a.size() + d.size(), all.size());
  const std::set<std::string> att{"A01", "A03", "A05"}, def{"A02", "A04", "A06"};
  for (const auto& r : s.attacker) {
    if (r.key == TrialKey::kSpoof) EXPECT_TRUE(att.count(r.system_id)) << r.utt_id;
  }
  for (const auto& r : s.defender) {
    if (r.key == TrialKey::kSpoof) EXPECT_TRUE(def.count(r.system_id)) << r.utt_id;
  }
  const auto n = BonafidePerSpeaker(all), na = BonafidePerSpeaker(s.attacker),
             nd = BonafidePerSpeaker(s.defender);
  for (const auto& [spk, count] : n) {
    EXPECT_EQ(na.at(spk), (count + 1) / 2) << spk;
    EXPECT_EQ(nd.count(spk) ? nd.at(spk) : 0, count / 2) << spk;
  }
  EXPECT_TRUE(s.warnings.empty());
}

TEST(SplitTest, OrderAndSeedBehavior) {
  const auto all = ParseProtocol(kFixture);
  const SplitResult a = MakeSplit(all, {.seed = 1}), b = MakeSplit(all, {.seed = 1}),
                    c = MakeSplit(all, {.seed = 2});
  EXPECT_EQ(a.attacker, b.attacker);
  EXPECT_NE(a.attacker, c.attacker);
  std::map<std::string, size_t> pos;
  for (size_t i = 0; i < all.size(); ++i) pos[all[i].utt_id] = i;
  for (const auto* side : {&a.attacker, &a.defender}) {
    for (size_t i = 1; i < side->size(); ++i) {
      EXPECT_LT(pos[(*side)[i - 1].utt_id], pos[(*side)[i].utt_id]);
    }
  }
}

TEST(SplitTest, SharedDefenderGetsEverything) {
  const auto all = ParseProtocol(kFixture);
  const SplitResult s = MakeSplit(all, {.scenario = Scenario::kSharedDefenderFull, .seed = 5});
  EXPECT_EQ(s.defender, all);
  EXPECT_EQ(s.attacker, MakeSplit(all, {.seed = 5}).attacker);
}

TEST(SplitTest, UnlistedSystemsAndOverlaps) {
  const auto r = ParseProtocolText("S1 U1 - - bonafide\nS1 U2 - A09 spoof\n");
  const SplitResult s = MakeSplit(r, {});
  ASSERT_EQ(s.defender.size(), 1u);
  EXPECT_EQ(s.defender[0].utt_id, "U2");
  EXPECT_EQ(s.warnings.size(), 1u);
  SplitPlan bad;
  bad.defender_systems.push_back("A01");
  EXPECT_THROW(MakeSplit(r, bad), ConfigError);
}

TEST(SplitTest, SummaryCounts) {
  const auto all = ParseProtocol(kFixture);
  const auto j = SplitSummary(MakeSplit(all, {}));
  EXPECT_TRUE(j.contains("attacker"));
  EXPECT_TRUE(j.contains("defender"));
}

TEST(PairingTest, SameSpeakerBonafideAndSeeded) {
  const auto all = ParseProtocol(kFixture);
  const auto att = MakeSplit(all, {}).attacker;
  const PairingResult p = PairForEnhancement(att, 3);
  size_t spoofs = 0;
  for (const auto& r : att) spoofs += r.key == TrialKey::kSpoof;
  EXPECT_EQ(p.pairs.size(), spoofs);
  const auto att_utts = Utts(att);
  for (const auto& pr : p.pairs) {
    EXPECT_EQ(pr.spoof.key, TrialKey::kSpoof);
    EXPECT_EQ(pr.bonafide.key, TrialKey::kBonafide);
    EXPECT_EQ(pr.spoof.speaker_id, pr.bonafide.speaker_id);
    EXPECT_TRUE(att_utts.count(pr.bonafide.utt_id));
  }
  const PairingResult q = PairForEnhancement(att, 3);
  ASSERT_EQ(q.pairs.size(), p.pairs.size());
  for (size_t i = 0; i < p.pairs.size(); ++i) EXPECT_EQ(q.pairs[i].bonafide, p.pairs[i].bonafide);
}

TEST(PairingTest, SpeakerWithoutBonafideIsSkipped) {
  const auto r = ParseProtocolText("S1 U1 - A01 spoof\nS2 U2 - - bonafide\nS2 U3 - A01 spoof\n");
  const PairingResult p = PairForEnhancement(r, 0);
  ASSERT_EQ(p.pairs.size(), 1u);
  EXPECT_EQ(p.pairs[0].spoof.utt_id, "U3");
  EXPECT_EQ(p.warnings.size(), 1u);
}

}  // namespace
}  // namespace spoofbench
