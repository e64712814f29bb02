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

#include <fstream>
#include <iterator>

#include "spoofbench/error.h"
#include "spoofbench/pipeline.h"
#include "spoofbench/synth.h"
#include "test_util.h"

namespace spoofbench {
namespace {

SynthConfig Tiny() {
  SynthConfig c;
  c.speakers = 2;
  c.bonafide_per_speaker = 2;
  c.spoofs_per_system = 1;
  c.systems = {"A01", "A02"};
  c.length = 1200;
  c.seed = 4;
  return c;
}

std::string Bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

EnhancerConfig SmallEnhancer() {
  EnhancerConfig c;
  c.encoder_filters = 8;
  c.encoder_kernel = 8;
  c.encoder_stride = 4;
  c.bottleneck_channels = 4;
  c.block_channels = 6;
  c.skip_channels = 4;
  c.blocks_per_repeat = 2;
  c.repeats = 1;
  return c;
}

TEST(SynthTest, DeterministicAndWellFormed) {
  const SynthCorpus a = GenerateCorpus(Tiny()), b = GenerateCorpus(Tiny());
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.audio, b.audio);
  ASSERT_EQ(a.records.size(), 2u * (2 + 2));
  for (const auto& r : a.records) {
    const Waveform& w = a.at(r.utt_id);
    EXPECT_EQ(w.size(), 1200);
    double peak = 0.0;
    for (double v : w.samples()) peak = std::max(peak, std::abs(v));
    EXPECT_NEAR(peak, 0.5, 1e-12);
  }
  SynthConfig other = Tiny();
  other.seed = 5;
  EXPECT_NE(GenerateCorpus(other).audio, a.audio);
}

TEST(SynthTest, WriteAndReload) {
  const auto dir = testing::ScratchDir("synth");
  const SynthCorpus c = GenerateCorpus(Tiny());
  WriteCorpus(c, dir);
  const auto records = ParseProtocol(dir / "protocol.txt");
  EXPECT_EQ(records, c.records);
  const auto audio = LoadAudio(records, dir / "wav");
  for (const auto& r : records) {
    const Waveform& w = audio.at(r.utt_id);
    for (int64_t i = 0; i < w.size(); ++i) ASSERT_NEAR(w[i], c.at(r.utt_id)[i], 1.0 / 32768.0);
  }
}

TEST(BatchEnhanceTest, PassesBonafideThroughAndEnhancesSpoofs) {
  const auto dir = testing::ScratchDir("batch_enhance");
  const SynthCorpus c = GenerateCorpus(Tiny());
  WriteCorpus(c, dir / "in");
  ConvTasNet model(SmallEnhancer());
  const BatchEnhanceResult r = BatchEnhance(c.records, dir / "in" / "wav", model, dir / "out", 1000);
  EXPECT_TRUE(r.errors.empty());
  ASSERT_EQ(r.entries.size(), c.records.size());
  for (size_t i = 0; i < c.records.size(); ++i) {
    const TrialRecord& rec = c.records[i];
    const EnhanceManifestEntry& e = r.entries[i];
    EXPECT_EQ(e.utt_id, rec.utt_id);
    EXPECT_EQ(e.enhanced, rec.key == TrialKey::kSpoof);
    const auto out = dir / "out" / e.relative_path;
    if (rec.key == TrialKey::kBonafide) {
      EXPECT_EQ(Bytes(out), Bytes(dir / "in" / "wav" / (rec.utt_id + ".wav")));
    } else {
      EXPECT_EQ(ReadAudio(out).size(), 1000);
    }
  }
  EXPECT_EQ(ReadEnhanceManifest(dir / "out" / "manifest.tsv").size(), r.entries.size());
  const AudioLoader load = ManifestLoader(dir / "out" / "manifest.tsv");
  EXPECT_EQ(load(c.records[0]).size(), ReadAudio(dir / "out" / r.entries[0].relative_path).size());
}

TEST(BatchEnhanceTest, CollectsPerFileErrors) {
  const auto dir = testing::ScratchDir("batch_enhance_err");
  const SynthCorpus c = GenerateCorpus(Tiny());
  WriteCorpus(c, dir / "in");
  std::string missing;
  for (const auto& r : c.records) {
    if (r.key == TrialKey::kSpoof) {
      missing = r.utt_id;
      break;
    }
  }
  std::filesystem::remove(dir / "in" / "wav" / (missing + ".wav"));
  ConvTasNet model(SmallEnhancer());
  const BatchEnhanceResult r = BatchEnhance(c.records, dir / "in" / "wav", model, dir / "out", 1000);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_NE(r.errors[0].find(missing), std::string::npos);
  EXPECT_EQ(r.entries.size(), c.records.size() - 1);
}

TEST(ScoringTest, EnhancerOnlyTouchesSpoofs) {
  const SynthCorpus c = GenerateCorpus(Tiny());
  FrontendConfig fc;
  fc.embed_dim = 8;
  fc.window = 16;
  fc.hop = 8;
  AntispoofConfig ac;
  ac.reduce_dim = 6;
  ac.stage1_channels = 2;
  ac.stage1_blocks = 1;
  ac.stage2_channels = 3;
  ac.stage2_blocks = 1;
  AntispoofModel model(BuildTinyFrontend(fc, 1), ac);
  ConvTasNet enh(SmallEnhancer());
  const AudioLoader load = MapLoader(c.audio);
  const auto plain = ScoreTrials(c.records, load, model, 1000, 3);
  const auto enhanced = ScoreTrials(c.records, load, model, 1000, 3, &enh);
  ASSERT_EQ(plain.size(), c.records.size());
  for (size_t i = 0; i < c.records.size(); ++i) {
    EXPECT_EQ(plain[i].first, c.records[i].utt_id);
    if (c.records[i].key == TrialKey::kBonafide) {
      EXPECT_EQ(plain[i].second, enhanced[i].second);
    } else {
      EXPECT_NE(plain[i].second, enhanced[i].second);
    }
  }
  const ScoreSet joined = JoinScores(plain, c.records);
  EXPECT_EQ(joined.entries.size(), c.records.size());
  auto extra = plain;
  extra.push_back({"unknown", 0.0});
  EXPECT_THROW(JoinScores(extra, c.records), InvalidInputError);
}

TEST(AlignTest, TrainingCropDependsOnUttNotOrder) {
  const SynthCorpus c = GenerateCorpus(Tiny());
  AlignPolicy p;
  p.target_length = 500;
  p.seed = 9;
  const TrialRecord& r = c.records[1];
  const Waveform a = AlignFor(r, c.at(r.utt_id), p, CropMode::kRandomCrop);
  const Waveform b = AlignFor(r, c.at(r.utt_id), p, CropMode::kRandomCrop);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 500);
}

}  // namespace
}  // namespace spoofbench
