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

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.h"
#include "spoofbench/checkpoint.h"
#include "spoofbench/error.h"
#include "spoofbench/nn/ops.h"
#include "spoofbench/spk_embed.h"
#include "test_util.h"

namespace spoofbench {
namespace {

using testing::AamOracle;

std::vector<double> RandomVector(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  std::vector<double> v(static_cast<size_t>(d));
  for (auto& x : v) x = g(rng);
  return v;
}

struct AamInstance {
  std::vector<double> e;
  std::vector<std::vector<double>> w;
  int y;
  nn::Tensor weights() const {
    nn::Tensor t({static_cast<int64_t>(w.size()), static_cast<int64_t>(e.size())});
    for (size_t j = 0; j < w.size(); ++j) {
      for (size_t k = 0; k < e.size(); ++k) t[static_cast<int64_t>(j * e.size() + k)] = w[j][k];
    }
    return t;
  }
};

AamInstance RandomInstance(std::mt19937_64& rng, int d, int k) {
  AamInstance a{RandomVector(rng, d), {}, static_cast<int>(rng() % static_cast<uint64_t>(k))};
  for (int j = 0; j < k; ++j) a.w.push_back(RandomVector(rng, d));
  return a;
}

TEST(AamTest, MatchesOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const AamInstance a = RandomInstance(rng, 16, 5);
    AamConfig c{.margin = 0.3, .scale = 15.0, .num_speakers = 5};
    EXPECT_NEAR(AamSoftmaxLoss({a.e}, a.y, a.weights(), c), AamOracle(a.e, a.y, a.w, 0.3, 15.0),
                1e-10);
  }
}

TEST(AamTest, ZeroMarginIsScaledCosineSoftmax) {
  std::mt19937_64 rng(2);
  const AamInstance a = RandomInstance(rng, 8, 4);
  AamConfig c{.margin = 0.0, .scale = 2.0, .num_speakers = 4};
  double z = 0.0, target = 0.0;
  for (int j = 0; j < 4; ++j) {
    const double cos = testing::Dot(a.e, a.w[static_cast<size_t>(j)]) /
                       std::sqrt(testing::Dot(a.e, a.e) *
                                 testing::Dot(a.w[static_cast<size_t>(j)], a.w[static_cast<size_t>(j)]));
    z += std::exp(2.0 * cos);
    if (j == a.y) target = 2.0 * cos;
  }
  EXPECT_NEAR(AamSoftmaxLoss({a.e}, a.y, a.weights(), c), std::log(z) - target, 1e-12);
}

TEST(AamTest, IncreasesWithMarginBelowRightAngle) {
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 50; ++trial) {
    const AamInstance a = RandomInstance(rng, 6, 3);
    const auto& wy = a.w[static_cast<size_t>(a.y)];
    if (testing::Dot(a.e, wy) <= 0.0) continue;
    ++checked;
    double prev = -1.0;
    for (double m : {0.0, 0.1, 0.2, 0.3, 0.5, 0.8}) {
      const double l = AamSoftmaxLoss({a.e}, a.y, a.weights(), {.margin = m, .scale = 15.0, .num_speakers = 3});
      EXPECT_GT(l, prev);
      prev = l;
    }
  }
  EXPECT_EQ(checked, 50);
}

TEST(AamTest, InvariantToEmbeddingAndWeightNorms) {
  std::mt19937_64 rng(4);
  AamInstance a = RandomInstance(rng, 10, 4);
  AamConfig c{.margin = 0.3, .scale = 15.0, .num_speakers = 4};
  const double base = AamSoftmaxLoss({a.e}, a.y, a.weights(), c);
  for (auto& x : a.e) x *= 37.0;
  for (auto& x : a.w[1]) x *= 0.01;
  EXPECT_NEAR(AamSoftmaxLoss({a.e}, a.y, a.weights(), c), base, 1e-10);
}

TEST(AamTest, BatchedFormIsMeanAndDifferentiable) {
  std::mt19937_64 rng(5);
  const int n = 4, d = 6, k = 3;
  nn::Var emb(testing::RandomTensor({n, d}, rng), true);
  nn::Var w(testing::RandomTensor({k, d}, rng), true);
  const std::vector<int64_t> y{0, 2, 1, 2};
  AamConfig c{.margin = 0.3, .scale = 15.0, .num_speakers = k};
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> e(emb.value().data() + i * d, emb.value().data() + (i + 1) * d);
    mean += AamSoftmaxLoss({e}, y[static_cast<size_t>(i)], w.value(), c) / n;
  }
  auto loss = [&] { return AamSoftmaxLoss(emb, y, w, c); };
  EXPECT_NEAR(loss().value()[0], mean, 1e-12);
  EXPECT_LT(testing::GradientRelativeError(loss, emb), 1e-6);
  EXPECT_LT(testing::GradientRelativeError(loss, w), 1e-6);
}

TEST(AamTest, ConfigAndIndexErrors) {
  EXPECT_THROW((AamConfig{.margin = 2.0, .scale = 15.0, .num_speakers = 2}.Validate()), ConfigError);
  EXPECT_THROW((AamConfig{.margin = 0.3, .scale = 0.0, .num_speakers = 2}.Validate()), ConfigError);
  std::mt19937_64 rng(6);
  const AamInstance a = RandomInstance(rng, 4, 2);
  EXPECT_THROW(AamSoftmaxLoss({a.e}, 5, a.weights(), {.margin = 0.3, .scale = 15.0, .num_speakers = 2}),
               InvalidInputError);
}

TEST(LrScheduleTest, KnownPoints) {
  LrSchedule s{.peak = 1e-5, .total_iters = 1000};
  EXPECT_EQ(s.LrAt(0), 0.0);
  EXPECT_NEAR(s.LrAt(50), 5e-6, 1e-18);
  EXPECT_NEAR(s.LrAt(100), 1e-5, 1e-18);
  EXPECT_NEAR(s.LrAt(500), 1e-5, 1e-18);
  EXPECT_NEAR(s.LrAt(750), 5e-6, 1e-18);
  EXPECT_EQ(s.LrAt(1000), 0.0);
}

TEST(LrScheduleTest, MatchesSegmentOracle) {
  LrSchedule s{.peak = 1e-5, .total_iters = 12345};
  for (double it = 0; it <= 12345; it += 0.5) {
    ASSERT_NEAR(s.LrAt(it), testing::ScheduleOracle(it, 12345, 1e-5, 0.1, 0.4), 1e-12) << it;
  }
  EXPECT_THROW((LrSchedule{.warmup_frac = 0.5}.Validate()), ConfigError);
  EXPECT_THROW((LrSchedule{.total_iters = 0}.Validate()), ConfigError);
}

FrontendConfig Small() {
  FrontendConfig c;
  c.embed_dim = 8;
  c.window = 16;
  c.hop = 8;
  c.hidden_layers = 1;
  return c;
}

TEST(ExtractorTest, EmbeddingIsFrameMean) {
  SpeakerExtractor ex(BuildTinyFrontend(Small(), 1));
  std::mt19937_64 rng(7);
  const Waveform w = testing::RandomWaveform(120, rng);
  const FrameRepresentation frames = FrontendForward(w, ex.frontend());
  const SpeakerEmbedding e = ExtractEmbedding(w, ex);
  ASSERT_EQ(e.vector.size(), 8u);
  for (int64_t d = 0; d < 8; ++d) {
    double mean = 0.0;
    for (int64_t t = 0; t < frames.frames(); ++t) mean += frames.values[t * 8 + d] / frames.frames();
    EXPECT_NEAR(e.vector[static_cast<size_t>(d)], mean, 1e-12);
  }
}

TEST(ExtractorTest, VerificationOnIdenticalPairsIsPerfect) {
  SpeakerExtractor ex(BuildTinyFrontend(Small(), 2));
  std::mt19937_64 rng(8);
  std::vector<Waveform> wavs;
  for (int i = 0; i < 6; ++i) wavs.push_back(testing::RandomWaveform(120, rng, 0.1 + 0.1 * i));
  std::vector<VerificationTrial> trials;
  for (int i = 0; i < 6; ++i) {
    trials.push_back({&wavs[static_cast<size_t>(i)], &wavs[static_cast<size_t>(i)], true});
    trials.push_back({&wavs[static_cast<size_t>(i)], &wavs[static_cast<size_t>((i + 1) % 6)], false});
  }
  EXPECT_EQ(VerifyEer(ex, trials), 0.0);
  trials.resize(1);
  EXPECT_THROW(VerifyEer(ex, trials), InvalidInputError);
}

TEST(ExtractorTest, CosineSimilarity) {
  const std::vector<double> a{1, 0}, b{0, 2}, c{-3, 0}, z{0, 0};
  EXPECT_EQ(CosineSimilarity(a, b), 0.0);
  EXPECT_EQ(CosineSimilarity(a, c), -1.0);
  EXPECT_THROW(CosineSimilarity(a, z), NumericDomainError);
}

std::vector<SpeakerUtterance> SpeakerTask(std::mt19937_64& rng) {
  std::vector<SpeakerUtterance> out;
  for (int s = 0; s < 3; ++s) {
    for (int i = 0; i < 4; ++i) {
      std::vector<double> x(120);
      std::normal_distribution<double> g(0.0, 0.05);
      for (size_t t = 0; t < x.size(); ++t) {
        x[t] = 0.4 * std::sin(2 * std::numbers::pi * (s + 1) * 0.05 * static_cast<double>(t)) + g(rng);
      }
      out.push_back({Waveform(std::move(x)), s});
    }
  }
  return out;
}

TEST(ExtractorTest, TrainingReducesLossAndIsSeeded) {
  std::mt19937_64 rng(9);
  const auto data = SpeakerTask(rng);
  LrSchedule sched{.peak = 1e-2, .total_iters = 60};
  AamConfig aam{.margin = 0.3, .scale = 15.0, .num_speakers = 3};
  SpeakerExtractor a(BuildTinyFrontend(Small(), 3)), b(BuildTinyFrontend(Small(), 3));
  const TrainReport ra = TrainExtractor(a, data, sched, aam, {.batch = 4, .seed = 1});
  const TrainReport rb = TrainExtractor(b, data, sched, aam, {.batch = 4, .seed = 1});
  EXPECT_EQ(ra.iterations, 60);
  EXPECT_LT(ra.epoch_loss.back(), ra.epoch_loss.front());
  EXPECT_EQ(ra.epoch_loss, rb.epoch_loss);
  EXPECT_EQ(SerializeModuleState(a), SerializeModuleState(b));
}

TEST(ExtractorTest, TrainingInputErrors) {
  std::mt19937_64 rng(10);
  auto data = SpeakerTask(rng);
  SpeakerExtractor ex(BuildTinyFrontend(Small(), 4));
  LrSchedule sched{.peak = 1e-3, .total_iters = 2};
  EXPECT_THROW(TrainExtractor(ex, data, sched, {.num_speakers = 2}, {}), ConfigError);
  data.erase(data.begin() + 4, data.end());
  EXPECT_THROW(TrainExtractor(ex, data, sched, {.num_speakers = 1}, {}), ConfigError);
  EXPECT_THROW(TrainExtractor(ex, data, sched, {.num_speakers = 3}, {.batch = 0}), ConfigError);
}

TEST(ExtractorTest, CheckpointAndFreeze) {
  const auto dir = testing::ScratchDir("spk");
  SpeakerExtractor ex(BuildTinyFrontend(Small(), 5));
  EXPECT_FALSE(ex.frozen());
  ex.Freeze();
  EXPECT_TRUE(ex.frozen());
  SaveExtractor(ex, dir / "s.ckpt");
  auto back = LoadExtractor(dir / "s.ckpt");
  EXPECT_EQ(SerializeModuleState(*back), SerializeModuleState(ex));
  EXPECT_THROW(LoadExtractor(dir / "missing.ckpt"), IoError);
}

}  // namespace
}  // namespace spoofbench
