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
#include <cmath>
#include <random>

#include "spoofbench/antispoof.h"
#include "spoofbench/checkpoint.h"
#include "spoofbench/error.h"
#include "spoofbench/nn/ops.h"
#include "test_util.h"

namespace spoofbench {
namespace {

FrontendConfig SmallFrontend() {
  FrontendConfig c;
  c.embed_dim = 12;
  c.window = 16;
  c.hop = 8;
  c.hidden_layers = 1;
  return c;
}

AntispoofConfig SmallModel() {
  AntispoofConfig c;
  c.reduce_dim = 9;
  c.stage1_channels = 3;
  c.stage1_blocks = 1;
  c.stage2_channels = 4;
  c.stage2_blocks = 1;
  c.lr = 3e-3;
  c.max_epochs = 20;
  c.batch = 4;
  return c;
}

std::unique_ptr<AntispoofModel> MakeSmall(uint64_t seed = 1) {
  AntispoofConfig c = SmallModel();
  c.seed = seed;
  return std::make_unique<AntispoofModel>(BuildTinyFrontend(SmallFrontend(), seed), c);
}

TEST(AntispoofTest, ReferenceTraceShapes) {
  FrontendConfig fc;
  fc.hidden_layers = 0;
  AntispoofModel model(BuildTinyFrontend(fc, 1), AntispoofConfig{});
  std::mt19937_64 rng(1);
  AntispoofTrace trace;
  AntispoofForward(testing::RandomWaveform(64600, rng), model, &trace);
  const std::vector<std::pair<std::string, nn::Shape>> want = {
      {"frontend", {1, 201, 768}}, {"reduce", {1, 201, 128}}, {"pool", {1, 67, 42}},
      {"bn_selu", {1, 67, 42}},    {"stage1", {32, 67, 42}},  {"stage2", {64, 67, 42}},
      {"gap", {64}},               {"head", {2}}};
  EXPECT_EQ(trace.shapes, want);
  EXPECT_EQ(ExpectedAntispoofShapes(fc, AntispoofConfig{}, 64600), want);
}

TEST(AntispoofTest, GlobalPoolingIgnoresSpatialOrder) {
  auto model = MakeSmall();
  std::mt19937_64 rng(2);
  const Waveform w = testing::RandomWaveform(400, rng);
  const Logits2 base = AntispoofForward(w, *model);
  AntispoofTrace trace;
  trace.stage2_hook = [&](nn::Tensor& t) {
    const int64_t c = t.dim(1), hw = t.dim(2) * t.dim(3);
    for (int64_t n = 0; n < t.dim(0); ++n) {
      for (int64_t ch = 0; ch < c; ++ch) {
        double* p = t.data() + (n * c + ch) * hw;
        std::reverse(p, p + hw);
        std::rotate(p, p + hw / 3, p + hw);
      }
    }
  };
  const Logits2 permuted = AntispoofForward(w, *model, &trace);
  EXPECT_NEAR(permuted.spoof, base.spoof, 1e-9);
  EXPECT_NEAR(permuted.bonafide, base.bonafide, 1e-9);
}

TEST(AntispoofTest, ZeroHeadGivesLogTwoLoss) {
  auto model = MakeSmall();
  model->head().weight().mutable_value().Fill(0.0);
  model->head().bias().mutable_value().Fill(0.0);
  std::mt19937_64 rng(3);
  nn::Var x(testing::RandomTensor({3, 200}, rng));
  const std::vector<int64_t> labels{0, 1, 1};
  const double ce = nn::CrossEntropy(model->Forward(x), labels).value()[0];
  EXPECT_NEAR(ce, std::log(2.0), 1e-12);
}

TEST(AntispoofTest, GradientMatchesFiniteDifferences) {
  auto model = MakeSmall(4);
  std::mt19937_64 rng(4);
  nn::Var x(testing::RandomTensor({3, 96}, rng), true);
  const std::vector<int64_t> labels{0, 1, 0};
  auto loss = [&] { return nn::CrossEntropy(model->Forward(x), labels); };
  EXPECT_LT(testing::GradientRelativeError(loss, x), 1e-4);
  for (nn::Var p : model->head().Parameters()) {
    EXPECT_LT(testing::GradientRelativeError(loss, p), 1e-4);
  }
}

std::vector<LabeledUtterance> ToyTask(std::mt19937_64& rng, int n) {
  std::vector<LabeledUtterance> out;
  for (int i = 0; i < n; ++i) {
    const int64_t label = i % 2;
    const double amp = label == kBonafideClass ? 0.05 : 0.6;
    out.push_back({testing::RandomWaveform(96, rng, amp), label});
  }
  return out;
}

TEST(AntispoofTest, TrainingReducesLoss) {
  auto model = MakeSmall(5);
  std::mt19937_64 rng(5);
  const auto train = ToyTask(rng, 16);
  const TrainReport r = TrainAntispoof(*model, train, {}, SmallModel());
  ASSERT_EQ(r.epoch_loss.size(), 20u);
  double tail = 0.0;
  for (size_t i = 15; i < 20; ++i) tail += r.epoch_loss[i] / 5.0;
  EXPECT_LT(tail, 0.5 * r.epoch_loss.front());
  EXPECT_TRUE(r.dev_loss.empty());
}

TEST(AntispoofTest, DevSelectionKeepsBestEpoch) {
  auto model = MakeSmall(6);
  std::mt19937_64 rng(6);
  const auto train = ToyTask(rng, 16), dev = ToyTask(rng, 8);
  const TrainReport r = TrainAntispoof(*model, train, dev, SmallModel());
  ASSERT_EQ(r.dev_loss.size(), 20u);
  const auto best = std::min_element(r.dev_loss.begin(), r.dev_loss.end());
  EXPECT_EQ(r.best_epoch, best - r.dev_loss.begin());
}

TEST(AntispoofTest, TrainingInputErrors) {
  auto model = MakeSmall();
  std::mt19937_64 rng(7);
  std::vector<LabeledUtterance> one_class{{testing::RandomWaveform(96, rng), 1}};
  EXPECT_THROW(TrainAntispoof(*model, one_class, {}, SmallModel()), ConfigError);
  one_class.push_back({testing::RandomWaveform(96, rng), 7});
  EXPECT_THROW(TrainAntispoof(*model, one_class, {}, SmallModel()), ConfigError);
  AntispoofConfig bad = SmallModel();
  bad.classes = 3;
  EXPECT_THROW(bad.Validate(), ConfigError);
}

TEST(AntispoofTest, CheckpointPreservesScores) {
  const auto dir = testing::ScratchDir("antispoof");
  auto model = MakeSmall(8);
  std::mt19937_64 rng(8);
  const auto data = ToyTask(rng, 8);
  TrainAntispoof(*model, data, {}, SmallModel());
  SaveAntispoof(*model, dir / "a.ckpt");
  auto loaded = LoadAntispoof(dir / "a.ckpt");
  for (const auto& u : data) EXPECT_EQ(BonafideScore(u.wav, *loaded), BonafideScore(u.wav, *model));
  std::vector<Waveform> wavs;
  for (const auto& u : data) wavs.push_back(u.wav);
  const auto batched = BonafideScores(wavs, *model, 3);
  for (size_t i = 0; i < wavs.size(); ++i) EXPECT_NEAR(batched[i], BonafideScore(wavs[i], *model), 1e-12);
}

}  // namespace
}  // namespace spoofbench
