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

#include "spoofbench/spk_embed.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include <glog/logging.h>

#include "spoofbench/checkpoint.h"
#include "spoofbench/error.h"
#include "spoofbench/eval_metrics.h"
#include "spoofbench/nn/adam.h"

namespace spoofbench {

void AamConfig::Validate() const {
  if (!(margin >= 0.0 && margin < std::numbers::pi / 2)) {
    throw ConfigError("AAM margin must lie in [0, pi/2)");
  }
  if (!(scale > 0.0)) throw ConfigError("AAM scale must be positive");
}

void LrSchedule::Validate() const {
  if (warmup_frac < 0 || constant_frac < 0 || decay_frac < 0 ||
      std::abs(warmup_frac + constant_frac + decay_frac - 1.0) > 1e-9) {
    throw ConfigError("schedule fractions must be non-negative and sum to 1");
  }
  if (peak < 0.0) throw ConfigError("schedule peak must be non-negative");
  if (total_iters <= 0) throw ConfigError("schedule needs total_iters > 0");
}

double LrSchedule::LrAt(double iteration) const {
  const double total = static_cast<double>(total_iters);
  const double warm_end = warmup_frac * total;
  const double hold_end = (warmup_frac + constant_frac) * total;
  if (iteration <= 0.0) return 0.0;
  if (iteration < warm_end) return peak * iteration / warm_end;
  if (iteration <= hold_end) return peak;
  if (iteration >= total) return 0.0;
  return peak * (total - iteration) / (total - hold_end);
}

SpeakerExtractor::SpeakerExtractor(std::unique_ptr<Frontend> frontend)
    : frontend_(std::move(frontend)) {
  SPOOFBENCH_CHECK(frontend_ != nullptr, "speaker extractor needs a frontend");
  RegisterModule("frontend", frontend_.get());
}

nn::Var SpeakerExtractor::Embed(const nn::Var& waveforms) {
  return nn::MeanOverAxis1(frontend_->Forward(waveforms));
}

SpeakerEmbedding ExtractEmbedding(const Waveform& wav, SpeakerExtractor& extractor) {
  nn::NoGradGuard no_grad;
  nn::Tensor batch(nn::Shape{1, wav.size()},
                   std::vector<double>(wav.samples().begin(), wav.samples().end()));
  nn::Var e = extractor.Embed(nn::Var(std::move(batch)));
  SpeakerEmbedding out{std::vector<double>(e.value().values().begin(),
                                           e.value().values().end())};
  for (double v : out.vector) {
    if (!std::isfinite(v)) throw InternalError("non-finite speaker embedding");
  }
  return out;
}

nn::Var AamSoftmaxLoss(const nn::Var& embeddings, std::span<const int64_t> speakers,
                       const nn::Var& weights, const AamConfig& config) {
  config.Validate();
  nn::Var cosines = nn::MatMulTransB(nn::RowL2Normalize(embeddings),
                                     nn::RowL2Normalize(weights));
  nn::Var logits = nn::Scale(nn::AddAngularMargin(cosines, speakers, config.margin),
                             config.scale);
  return nn::CrossEntropy(logits, speakers);
}

double AamSoftmaxLoss(const SpeakerEmbedding& embedding, int64_t speaker,
                      const nn::Tensor& weights, const AamConfig& config) {
  nn::NoGradGuard no_grad;
  const int64_t d = static_cast<int64_t>(embedding.vector.size());
  SPOOFBENCH_CHECK(weights.rank() == 2 && weights.dim(1) == d,
                   "AAM weights must be [K, " + std::to_string(d) + "]");
  if (speaker < 0 || speaker >= weights.dim(0)) {
    throw InvalidInputError("speaker index out of range");
  }
  nn::Var e(nn::Tensor({1, d}, embedding.vector));
  const int64_t label[1] = {speaker};
  return AamSoftmaxLoss(e, label, nn::Var(weights), config).value()[0];
}

TrainReport TrainExtractor(SpeakerExtractor& extractor,
                           std::span<const SpeakerUtterance> data,
                           const LrSchedule& schedule, const AamConfig& config,
                           const ExtractorTrainOptions& options) {
  schedule.Validate();
  config.Validate();
  if (options.batch <= 0) throw ConfigError("batch must be positive");
  std::map<int64_t, int> counts;
  for (const auto& u : data) {
    if (u.speaker < 0 || u.speaker >= config.num_speakers) {
      throw ConfigError("speaker index " + std::to_string(u.speaker) +
                        " outside [0, num_speakers)");
    }
    ++counts[u.speaker];
  }
  if (counts.size() < 2) {
    throw ConfigError("speaker extractor training needs at least two speakers");
  }

  nn::Rng rng(options.seed);
  nn::Var weights(nn::UniformInit({config.num_speakers, extractor.embed_dim()},
                                  extractor.embed_dim(), rng),
                  true);
  std::vector<nn::Var> params = extractor.Parameters();
  params.push_back(weights);
  nn::Adam opt(params, {.lr = 0.0});

  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  size_t cursor = 0;
  double pass_total = 0.0;
  size_t pass_count = 0;

  TrainReport report;
  extractor.SetTraining(true);
  for (long it = 0; it < schedule.total_iters; ++it) {
    std::vector<const Waveform*> wavs;
    std::vector<int64_t> labels;
    while (static_cast<int>(wavs.size()) < options.batch && cursor < order.size()) {
      wavs.push_back(&data[order[cursor]].wav);
      labels.push_back(data[order[cursor]].speaker);
      ++cursor;
    }
    opt.set_lr(schedule.LrAt(static_cast<double>(it)));
    opt.ZeroGrad();
    nn::Var emb = extractor.Embed(
        nn::Var(StackWaveforms(std::span<const Waveform* const>(wavs))));
    nn::Var loss = AamSoftmaxLoss(emb, labels, weights, config);
    loss.Backward();
    opt.Step();
    ++report.iterations;
    pass_total += loss.value()[0] * static_cast<double>(wavs.size());
    pass_count += wavs.size();
    if (cursor == order.size()) {
      report.epoch_loss.push_back(pass_total / static_cast<double>(pass_count));
      VLOG(1) << "extractor pass " << report.epoch_loss.size() << " loss "
              << report.epoch_loss.back();
      pass_total = 0.0;
      pass_count = 0;
      cursor = 0;
      std::shuffle(order.begin(), order.end(), rng);
    }
  }
  if (pass_count > 0) {
    report.epoch_loss.push_back(pass_total / static_cast<double>(pass_count));
  }
  report.best_epoch = static_cast<int>(report.epoch_loss.size()) - 1;
  extractor.SetTraining(false);
  return report;
}

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  SPOOFBENCH_CHECK(a.size() == b.size(), "cosine of vectors with different sizes");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw NumericDomainError("cosine similarity of a zero-norm vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double VerifyEer(SpeakerExtractor& extractor, std::span<const VerificationTrial> trials) {
  bool has_same = false, has_diff = false;
  for (const auto& t : trials) (t.same_speaker ? has_same : has_diff) = true;
  if (!has_same || !has_diff) {
    throw InvalidInputError("verification trials need both same- and different-speaker pairs");
  }
  std::map<const Waveform*, SpeakerEmbedding> cache;
  auto embed = [&](const Waveform* w) -> const SpeakerEmbedding& {
    auto it = cache.find(w);
    if (it == cache.end()) it = cache.emplace(w, ExtractEmbedding(*w, extractor)).first;
    return it->second;
  };
  std::vector<double> target, nontarget;
  for (const auto& t : trials) {
    const double s = CosineSimilarity(embed(t.enroll).vector, embed(t.test).vector);
    (t.same_speaker ? target : nontarget).push_back(s);
  }
  return ComputeEer(target, nontarget).eer;
}

void SaveExtractor(const SpeakerExtractor& extractor, const std::filesystem::path& path) {
  nlohmann::json cfg = {{"frontend", extractor.frontend().config().ToJson()}};
  SaveCheckpoint(CheckpointFromModule(extractor, "spk_extractor", cfg), path);
}

std::unique_ptr<SpeakerExtractor> LoadExtractor(const std::filesystem::path& path) {
  Checkpoint ckpt = LoadCheckpoint(path);
  if (ckpt.header.value("kind", "") != "spk_extractor") {
    throw ConfigError(path.string() + " is not a speaker-extractor checkpoint");
  }
  auto extractor = std::make_unique<SpeakerExtractor>(BuildTinyFrontend(
      FrontendConfig::FromJson(ckpt.header.at("config").at("frontend")), 0));
  extractor->LoadState(ckpt.tensors);
  extractor->SetTraining(false);
  return extractor;
}

}  // namespace spoofbench
