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

#include "spoofbench/antispoof.h"

#include <algorithm>
#include <numeric>
#include <limits>
#include <random>

#include <glog/logging.h>

#include "spoofbench/checkpoint.h"
#include "spoofbench/error.h"
#include "spoofbench/nn/adam.h"

namespace spoofbench {

namespace {

nn::Shape PerExample(const nn::Shape& s) { return nn::Shape(s.begin() + 1, s.end()); }

void Record(AntispoofTrace* trace, const char* name, nn::Shape shape) {
  if (trace != nullptr) trace->shapes.emplace_back(name, std::move(shape));
}

}  // namespace

void AntispoofConfig::Validate() const {
  if (classes != 2) throw ConfigError("anti-spoofing head must have 2 classes");
  if (lr < 0.0) throw ConfigError("learning rate must be non-negative");
  if (reduce_dim <= 0 || pool <= 0 || stage1_channels <= 0 || stage2_channels <= 0 ||
      stage1_blocks < 1 || stage2_blocks < 1 || batch <= 0 || max_epochs < 0) {
    throw ConfigError("anti-spoofing config has non-positive sizes");
  }
}

nlohmann::json AntispoofConfig::ToJson() const {
  return {{"reduce_dim", reduce_dim},   {"pool", pool},
          {"stage1_channels", stage1_channels},
          {"stage1_blocks", stage1_blocks},
          {"stage2_channels", stage2_channels},
          {"stage2_blocks", stage2_blocks},
          {"classes", classes},         {"lr", lr},
          {"max_epochs", max_epochs},   {"batch", batch},
          {"seed", seed}};
}

AntispoofConfig AntispoofConfig::FromJson(const nlohmann::json& j) {
  AntispoofConfig c;
  try {
    c.reduce_dim = j.at("reduce_dim");
    c.pool = j.at("pool");
    c.stage1_channels = j.at("stage1_channels");
    c.stage1_blocks = j.at("stage1_blocks");
    c.stage2_channels = j.at("stage2_channels");
    c.stage2_blocks = j.at("stage2_blocks");
    c.classes = j.at("classes");
    c.lr = j.at("lr");
    c.max_epochs = j.at("max_epochs");
    c.batch = j.at("batch");
    c.seed = j.at("seed");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("anti-spoofing config: ") + e.what());
  }
  c.Validate();
  return c;
}

ResidualBlock::ResidualBlock(int64_t in, int64_t out, nn::Rng& rng)
    : conv1_(in, out, 3, rng), bn_(out), conv2_(out, out, 3, rng) {
  RegisterModule("conv1", &conv1_);
  RegisterModule("bn", &bn_);
  RegisterModule("conv2", &conv2_);
  if (in != out) {
    shortcut_ = std::make_unique<nn::Conv2dLayer>(in, out, 1, rng);
    RegisterModule("shortcut", shortcut_.get());
  }
}

nn::Var ResidualBlock::Forward(const nn::Var& x) {
  nn::Var h = conv2_.Forward(nn::Selu(bn_.Forward(conv1_.Forward(x))));
  return nn::Add(h, shortcut_ ? shortcut_->Forward(x) : x);
}

AntispoofModel::AntispoofModel(std::unique_ptr<Frontend> frontend,
                               const AntispoofConfig& config)
    : config_(config), rng_(config.seed), frontend_(std::move(frontend)) {
  config_.Validate();
  SPOOFBENCH_CHECK(frontend_ != nullptr, "anti-spoofing model needs a frontend");
  RegisterModule("frontend", frontend_.get());
  reduce_ = std::make_unique<nn::LinearLayer>(frontend_->config().embed_dim,
                                              config_.reduce_dim, rng_);
  RegisterModule("reduce", reduce_.get());
  input_bn_ = std::make_unique<nn::BatchNormLayer>(1);
  RegisterModule("input_bn", input_bn_.get());
  int64_t channels = 1;
  for (int64_t i = 0; i < config_.stage1_blocks; ++i) {
    stage1_.push_back(std::make_unique<ResidualBlock>(channels, config_.stage1_channels, rng_));
    channels = config_.stage1_channels;
    RegisterModule("stage1." + std::to_string(i), stage1_.back().get());
  }
  for (int64_t i = 0; i < config_.stage2_blocks; ++i) {
    stage2_.push_back(std::make_unique<ResidualBlock>(channels, config_.stage2_channels, rng_));
    channels = config_.stage2_channels;
    RegisterModule("stage2." + std::to_string(i), stage2_.back().get());
  }
  head_ = std::make_unique<nn::LinearLayer>(channels, config_.classes, rng_);
  RegisterModule("head", head_.get());
}

nn::Var AntispoofModel::Forward(const nn::Var& waveforms, AntispoofTrace* trace) {
  const int64_t n = waveforms.dim(0);
  nn::Var h = frontend_->Forward(waveforms);  // [N, T, D]
  const int64_t frames = h.dim(1);
  Record(trace, "frontend", {1, frames, h.dim(2)});

  h = reduce_->Forward(h);  // [N, T, R]
  h = nn::Reshape(h, {n, 1, frames, config_.reduce_dim});
  Record(trace, "reduce", PerExample(h.shape()));

  h = nn::MaxPool2d(h, config_.pool, config_.pool);
  Record(trace, "pool", PerExample(h.shape()));
  h = nn::Selu(input_bn_->Forward(h));
  Record(trace, "bn_selu", PerExample(h.shape()));

  for (auto& block : stage1_) h = block->Forward(h);
  Record(trace, "stage1", PerExample(h.shape()));
  for (auto& block : stage2_) h = block->Forward(h);
  Record(trace, "stage2", PerExample(h.shape()));
  if (trace != nullptr && trace->stage2_hook) trace->stage2_hook(h.mutable_value());

  h = nn::GlobalAveragePool(h);
  Record(trace, "gap", PerExample(h.shape()));
  h = head_->Forward(h);
  Record(trace, "head", PerExample(h.shape()));
  SPOOFBENCH_CHECK(h.dim(0) == n && h.dim(1) == config_.classes,
                   "anti-spoofing logits shape " + nn::ShapeToString(h.shape()));
  return h;
}

std::vector<std::pair<std::string, nn::Shape>> ExpectedAntispoofShapes(
    const FrontendConfig& frontend, const AntispoofConfig& config,
    int64_t num_samples) {
  const int64_t frames = frontend.FramesFor(num_samples);
  const int64_t ph = (frames - config.pool) / config.pool + 1;
  const int64_t pw = (config.reduce_dim - config.pool) / config.pool + 1;
  return {{"frontend", {1, frames, frontend.embed_dim}},
          {"reduce", {1, frames, config.reduce_dim}},
          {"pool", {1, ph, pw}},
          {"bn_selu", {1, ph, pw}},
          {"stage1", {config.stage1_channels, ph, pw}},
          {"stage2", {config.stage2_channels, ph, pw}},
          {"gap", {config.stage2_channels}},
          {"head", {config.classes}}};
}

Logits2 AntispoofForward(const Waveform& wav, AntispoofModel& model,
                         AntispoofTrace* trace) {
  nn::NoGradGuard no_grad;
  const bool was_training = model.training();
  model.SetTraining(false);
  nn::Tensor batch(nn::Shape{1, wav.size()},
                   std::vector<double>(wav.samples().begin(), wav.samples().end()));
  nn::Var logits = model.Forward(nn::Var(std::move(batch)), trace);
  model.SetTraining(was_training);
  SPOOFBENCH_CHECK(logits.value().AllFinite(), "non-finite logits");
  return {logits.value()[kSpoofClass], logits.value()[kBonafideClass]};
}

double BonafideScore(const Waveform& wav, AntispoofModel& model) {
  return AntispoofForward(wav, model).bonafide;
}

std::vector<double> BonafideScores(std::span<const Waveform> wavs,
                                   AntispoofModel& model, int batch) {
  nn::NoGradGuard no_grad;
  const bool was_training = model.training();
  model.SetTraining(false);
  std::vector<double> scores;
  scores.reserve(wavs.size());
  for (size_t start = 0; start < wavs.size(); start += static_cast<size_t>(batch)) {
    const size_t end = std::min(wavs.size(), start + static_cast<size_t>(batch));
    nn::Var logits = model.Forward(nn::Var(StackWaveforms(wavs.subspan(start, end - start))));
    for (size_t i = 0; i < end - start; ++i) {
      scores.push_back(logits.value()[static_cast<int64_t>(i) * 2 + kBonafideClass]);
    }
  }
  model.SetTraining(was_training);
  return scores;
}

namespace {

double BatchLoss(AntispoofModel& model, std::span<const LabeledUtterance> data,
                 std::span<const size_t> idx, bool backward) {
  std::vector<const Waveform*> wavs;
  std::vector<int64_t> labels;
  for (size_t i : idx) {
    wavs.push_back(&data[i].wav);
    labels.push_back(data[i].label);
  }
  nn::Var logits = model.Forward(nn::Var(StackWaveforms(std::span<const Waveform* const>(wavs))));
  nn::Var loss = nn::CrossEntropy(logits, labels);
  if (backward) loss.Backward();
  return loss.value()[0];
}

double DevLoss(AntispoofModel& model, std::span<const LabeledUtterance> dev, int batch) {
  nn::NoGradGuard no_grad;
  model.SetTraining(false);
  double total = 0.0;
  std::vector<size_t> idx(dev.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (size_t s = 0; s < idx.size(); s += static_cast<size_t>(batch)) {
    const size_t e = std::min(idx.size(), s + static_cast<size_t>(batch));
    total += BatchLoss(model, dev, std::span(idx).subspan(s, e - s), false) *
             static_cast<double>(e - s);
  }
  model.SetTraining(true);
  return total / static_cast<double>(dev.size());
}

}  // namespace

TrainReport TrainAntispoof(AntispoofModel& model,
                           std::span<const LabeledUtterance> train,
                           std::span<const LabeledUtterance> dev,
                           const AntispoofConfig& config) {
  config.Validate();
  bool has[2] = {false, false};
  for (const auto& u : train) {
    if (u.label != kSpoofClass && u.label != kBonafideClass) {
      throw ConfigError("anti-spoofing label must be 0 (spoof) or 1 (bona fide)");
    }
    has[u.label] = true;
  }
  if (!has[0] || !has[1]) {
    throw ConfigError("anti-spoofing training needs both bona fide and spoofed examples");
  }

  nn::Adam opt(model.Parameters(), {.lr = config.lr});
  std::mt19937_64 rng(config.seed ^ 0x5eedA5F00Dull);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  double best_dev = std::numeric_limits<double>::infinity();
  std::vector<nn::Tensor> best_state;
  model.SetTraining(true);
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (size_t s = 0; s < order.size(); s += static_cast<size_t>(config.batch)) {
      const size_t e = std::min(order.size(), s + static_cast<size_t>(config.batch));
      opt.ZeroGrad();
      total += BatchLoss(model, train, std::span(order).subspan(s, e - s), true) *
               static_cast<double>(e - s);
      opt.Step();
      ++report.iterations;
    }
    report.epoch_loss.push_back(total / static_cast<double>(train.size()));
    if (!dev.empty()) {
      const double d = DevLoss(model, dev, config.batch);
      report.dev_loss.push_back(d);
      if (d < best_dev) {
        best_dev = d;
        report.best_epoch = epoch;
        best_state.clear();
        for (const auto& entry : model.State()) best_state.push_back(entry.var.value());
      }
    } else {
      report.best_epoch = epoch;
    }
    VLOG(1) << "antispoof epoch " << epoch << " loss " << report.epoch_loss.back();
  }
  if (!best_state.empty()) {
    auto entries = model.State();
    for (size_t i = 0; i < entries.size(); ++i) entries[i].var.mutable_value() = best_state[i];
  }
  model.SetTraining(false);
  return report;
}

void SaveAntispoof(AntispoofModel& model, const std::filesystem::path& path) {
  nlohmann::json cfg = {{"frontend", model.frontend().config().ToJson()},
                        {"antispoof", model.config().ToJson()}};
  SaveCheckpoint(CheckpointFromModule(model, "antispoof", cfg), path);
}

std::unique_ptr<AntispoofModel> LoadAntispoof(const std::filesystem::path& path) {
  Checkpoint ckpt = LoadCheckpoint(path);
  if (ckpt.header.value("kind", "") != "antispoof") {
    throw ConfigError(path.string() + " is not an anti-spoofing checkpoint");
  }
  const auto& cfg = ckpt.header.at("config");
  auto model = std::make_unique<AntispoofModel>(
      BuildTinyFrontend(FrontendConfig::FromJson(cfg.at("frontend")), 0),
      AntispoofConfig::FromJson(cfg.at("antispoof")));
  model->LoadState(ckpt.tensors);
  model->SetTraining(false);
  return model;
}

}  // namespace spoofbench
