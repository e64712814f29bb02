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

#include "spoofbench/enhancer.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <glog/logging.h>

#include "spoofbench/checkpoint.h"
#include "spoofbench/error.h"
#include "spoofbench/nn/adam.h"

namespace spoofbench {

void EnhancerConfig::Validate() const {
  if (encoder_filters <= 0 || encoder_kernel <= 0 || encoder_stride <= 0 ||
      bottleneck_channels <= 0 || block_channels <= 0 || skip_channels <= 0 ||
      conv_kernel <= 0 || blocks_per_repeat <= 0 || repeats <= 0) {
    throw ConfigError("enhancer config has non-positive sizes");
  }
  if (conv_kernel % 2 == 0) throw ConfigError("enhancer depthwise kernel must be odd");
  if (encoder_stride > encoder_kernel) {
    throw ConfigError("enhancer stride must not exceed the encoder kernel");
  }
  if (identity_init &&
      (encoder_filters != 2 * encoder_kernel || encoder_kernel % encoder_stride != 0)) {
    throw ConfigError("identity_init needs encoder_filters == 2 * encoder_kernel and a "
                      "kernel divisible by the stride");
  }
  if (lr < 0.0) throw ConfigError("learning rate must be non-negative");
  if (epochs < 0 || batch <= 0) throw ConfigError("enhancer epochs/batch out of range");
}

nlohmann::json EnhancerConfig::ToJson() const {
  return {{"encoder_filters", encoder_filters},
          {"encoder_kernel", encoder_kernel},
          {"encoder_stride", encoder_stride},
          {"bottleneck_channels", bottleneck_channels},
          {"block_channels", block_channels},
          {"skip_channels", skip_channels},
          {"conv_kernel", conv_kernel},
          {"blocks_per_repeat", blocks_per_repeat},
          {"repeats", repeats},
          {"lr", lr},
          {"epochs", epochs},
          {"batch", batch},
          {"seed", seed},
          {"pairing", pairing == PairingMode::kResample ? "resample" : "fixed"},
          {"force_unit_mask", force_unit_mask},
          {"identity_init", identity_init}};
}

EnhancerConfig EnhancerConfig::FromJson(const nlohmann::json& j) {
  EnhancerConfig c;
  try {
    c.encoder_filters = j.at("encoder_filters");
    c.encoder_kernel = j.at("encoder_kernel");
    c.encoder_stride = j.at("encoder_stride");
    c.bottleneck_channels = j.at("bottleneck_channels");
    c.block_channels = j.at("block_channels");
    c.skip_channels = j.at("skip_channels");
    c.conv_kernel = j.at("conv_kernel");
    c.blocks_per_repeat = j.at("blocks_per_repeat");
    c.repeats = j.at("repeats");
    c.lr = j.at("lr");
    c.epochs = j.at("epochs");
    c.batch = j.at("batch");
    c.seed = j.at("seed");
    const std::string pairing = j.at("pairing");
    if (pairing == "resample") {
      c.pairing = PairingMode::kResample;
    } else if (pairing == "fixed") {
      c.pairing = PairingMode::kFixed;
    } else {
      throw ConfigError("unknown pairing mode '" + pairing + "'");
    }
    c.force_unit_mask = j.value("force_unit_mask", false);
    c.identity_init = j.value("identity_init", false);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("enhancer config: ") + e.what());
  }
  c.Validate();
  return c;
}

TemporalBlock::TemporalBlock(const EnhancerConfig& c, int64_t dilation, nn::Rng& rng)
    : in_conv_(c.bottleneck_channels, c.block_channels, 1, {}, rng),
      norm1_(c.block_channels),
      depthwise_(c.block_channels, c.block_channels, c.conv_kernel,
                 {.dilation = dilation,
                  .pad_left = dilation * (c.conv_kernel - 1) / 2,
                  .pad_right = dilation * (c.conv_kernel - 1) / 2,
                  .groups = c.block_channels},
                 rng),
      norm2_(c.block_channels),
      res_conv_(c.block_channels, c.bottleneck_channels, 1, {}, rng),
      skip_conv_(c.block_channels, c.skip_channels, 1, {}, rng) {
  RegisterModule("in_conv", &in_conv_);
  RegisterModule("act1", &act1_);
  RegisterModule("norm1", &norm1_);
  RegisterModule("depthwise", &depthwise_);
  RegisterModule("act2", &act2_);
  RegisterModule("norm2", &norm2_);
  RegisterModule("res_conv", &res_conv_);
  RegisterModule("skip_conv", &skip_conv_);
}

std::pair<nn::Var, nn::Var> TemporalBlock::Forward(const nn::Var& x) {
  nn::Var h = norm1_.Forward(act1_.Forward(in_conv_.Forward(x)));
  h = norm2_.Forward(act2_.Forward(depthwise_.Forward(h)));
  return {nn::Add(x, res_conv_.Forward(h)), skip_conv_.Forward(h)};
}

ConvTasNet::ConvTasNet(const EnhancerConfig& config) : config_(config), rng_(config.seed) {
  config_.Validate();
  const auto& c = config_;
  encoder_ = std::make_unique<nn::Conv1dLayer>(
      1, c.encoder_filters, c.encoder_kernel, nn::Conv1dOptions{.stride = c.encoder_stride},
      rng_, /*bias=*/false);
  input_norm_ = std::make_unique<nn::GlobalLayerNormLayer>(c.encoder_filters);
  bottleneck_ = std::make_unique<nn::Conv1dLayer>(c.encoder_filters, c.bottleneck_channels,
                                                  1, nn::Conv1dOptions{}, rng_);
  for (int64_t r = 0; r < c.repeats; ++r) {
    for (int64_t b = 0; b < c.blocks_per_repeat; ++b) {
      blocks_.push_back(std::make_unique<TemporalBlock>(c, int64_t{1} << b, rng_));
    }
  }
  mask_act_ = std::make_unique<nn::PReluLayer>();
  mask_conv_ = std::make_unique<nn::Conv1dLayer>(c.skip_channels, c.encoder_filters, 1,
                                                 nn::Conv1dOptions{}, rng_);
  decoder_ = std::make_unique<nn::ConvTranspose1dLayer>(
      c.encoder_filters, 1, c.encoder_kernel, c.encoder_stride, rng_, /*bias=*/false);

  RegisterModule("encoder", encoder_.get());
  RegisterModule("input_norm", input_norm_.get());
  RegisterModule("bottleneck", bottleneck_.get());
  for (size_t i = 0; i < blocks_.size(); ++i) {
    RegisterModule("tcn." + std::to_string(i), blocks_[i].get());
  }
  RegisterModule("mask_act", mask_act_.get());
  RegisterModule("mask_conv", mask_conv_.get());
  RegisterModule("decoder", decoder_.get());

  if (c.identity_init) {
    // Filter 2j picks sample j, filter 2j+1 its negation; the ReLU pair and
    // the decoder's +-g impulses rebuild x * g per frame, and overlap-add
    // sums kernel / stride frames per sample.
    const int64_t k = c.encoder_kernel;
    const double g = static_cast<double>(c.encoder_stride) / static_cast<double>(k);
    nn::Tensor& enc = encoder_->weight().mutable_value();
    nn::Tensor& dec = decoder_->weight().mutable_value();
    enc.Fill(0.0);
    dec.Fill(0.0);
    for (int64_t j = 0; j < k; ++j) {
      enc[(2 * j) * k + j] = 1.0;
      enc[(2 * j + 1) * k + j] = -1.0;
      dec[(2 * j) * k + j] = g;
      dec[(2 * j + 1) * k + j] = -g;
    }
  }
}

nn::Var ConvTasNet::Forward(const nn::Var& waveforms) {
  if (waveforms.value().rank() != 2) {
    throw InvalidInputError("enhancer expects [N, L] waveforms, got " +
                            nn::ShapeToString(waveforms.shape()));
  }
  const int64_t n = waveforms.dim(0), len = waveforms.dim(1);
  const int64_t k = config_.encoder_kernel, s = config_.encoder_stride;
  if (len < k) {
    throw InvalidInputError("waveform of " + std::to_string(len) +
                            " samples is shorter than the encoder kernel");
  }
  // Pad so every output sample is covered by whole frames on both sides.
  const int64_t rem = (len + 2 * s - k) % s;
  const int64_t pad_right = s + (s - rem) % s;
  nn::Var x = nn::Pad1d(nn::Reshape(waveforms, {n, 1, len}), s, pad_right);
  nn::Var enc = nn::Relu(encoder_->Forward(x));

  nn::Var masked = enc;
  if (!config_.force_unit_mask) {
    nn::Var h = bottleneck_->Forward(input_norm_->Forward(enc));
    nn::Var skip_sum;
    for (auto& block : blocks_) {
      auto [res, skip] = block->Forward(h);
      h = res;
      skip_sum = skip_sum.node() ? nn::Add(skip_sum, skip) : skip;
    }
    nn::Var mask = nn::Sigmoid(mask_conv_->Forward(mask_act_->Forward(skip_sum)));
    masked = nn::Mul(enc, mask);
  }
  nn::Var out = decoder_->Forward(masked);
  return nn::Reshape(nn::Crop1d(out, s, len), {n, len});
}

Waveform Enhance(const Waveform& wav, ConvTasNet& model) {
  return EnhanceBatch(std::span(&wav, 1), model, 1).front();
}

std::vector<Waveform> EnhanceBatch(std::span<const Waveform> wavs, ConvTasNet& model,
                                   int batch) {
  if (batch <= 0) throw InvalidInputError("batch must be positive");
  nn::NoGradGuard no_grad;
  std::vector<Waveform> out;
  out.reserve(wavs.size());
  size_t start = 0;
  while (start < wavs.size()) {
    // Batch runs of equal length only.
    size_t end = start + 1;
    while (end < wavs.size() && end - start < static_cast<size_t>(batch) &&
           wavs[end].size() == wavs[start].size()) {
      ++end;
    }
    nn::Var y = model.Forward(nn::Var(StackWaveforms(wavs.subspan(start, end - start))));
    const int64_t len = wavs[start].size();
    for (size_t i = 0; i < end - start; ++i) {
      const double* p = y.value().data() + static_cast<int64_t>(i) * len;
      std::vector<double> samples(p, p + len);
      for (double v : samples) {
        if (!std::isfinite(v)) throw NumericDomainError("enhancer produced non-finite output");
      }
      out.emplace_back(std::move(samples), kSampleRate);
    }
    start = end;
  }
  return out;
}

double EnhancementLoss(const Waveform& enhanced, const Waveform& bonafide,
                       SpeakerExtractor& extractor) {
  const double cos = CosineSimilarity(ExtractEmbedding(enhanced, extractor).vector,
                                      ExtractEmbedding(bonafide, extractor).vector);
  return std::clamp(1.0 - cos, 0.0, 2.0);
}

nn::Var EnhancementLoss(const nn::Var& enhanced, const nn::Tensor& bonafide_embeddings,
                        SpeakerExtractor& extractor) {
  nn::Var emb = extractor.Embed(enhanced);
  if (emb.shape() != bonafide_embeddings.shape()) {
    throw InvalidInputError("bona fide embeddings have shape " +
                            nn::ShapeToString(bonafide_embeddings.shape()) + ", expected " +
                            nn::ShapeToString(emb.shape()));
  }
  nn::Var cos = nn::CosineSimilarity(emb, nn::Var(bonafide_embeddings));
  return nn::Sub(nn::Var(nn::Tensor::Scalar(1.0)), nn::Mean(cos));
}

TrainReport TrainEnhancer(ConvTasNet& model, std::span<const SpoofPair> pairs,
                          SpeakerExtractor& extractor, const EnhancerConfig& config) {
  config.Validate();
  if (!extractor.frozen()) {
    throw ContractError("speaker extractor must be frozen before enhancer training");
  }
  if (pairs.empty()) throw InvalidInputError("no spoof/bona fide pairs to train on");

  const bool was_training = extractor.training();
  extractor.SetTraining(false);

  // Bona fide embeddings are fixed targets; compute them once.
  std::vector<std::vector<double>> bona_emb;
  bona_emb.reserve(pairs.size());
  std::map<std::string, std::vector<size_t>> pool;
  for (size_t i = 0; i < pairs.size(); ++i) {
    bona_emb.push_back(ExtractEmbedding(pairs[i].bonafide, extractor).vector);
    pool[pairs[i].target_speaker].push_back(i);
  }
  const int64_t dim = static_cast<int64_t>(bona_emb.front().size());

  nn::Adam opt(model.Parameters(), {.lr = config.lr});
  std::mt19937_64 rng(config.seed ^ 0xE4A7C3ull);
  std::vector<size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<size_t> target(pairs.size());

  TrainReport report;
  model.SetTraining(true);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t i = 0; i < pairs.size(); ++i) {
      if (config.pairing == PairingMode::kFixed) {
        target[i] = i;
      } else {
        const auto& candidates = pool.at(pairs[i].target_speaker);
        std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
        target[i] = candidates[pick(rng)];
      }
    }
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (size_t s = 0; s < order.size(); s += static_cast<size_t>(config.batch)) {
      const size_t e = std::min(order.size(), s + static_cast<size_t>(config.batch));
      std::vector<const Waveform*> wavs;
      nn::Tensor targets({static_cast<int64_t>(e - s), dim});
      for (size_t b = s; b < e; ++b) {
        wavs.push_back(&pairs[order[b]].spoof);
        const auto& t = bona_emb[target[order[b]]];
        std::copy(t.begin(), t.end(), targets.data() + static_cast<int64_t>(b - s) * dim);
      }
      opt.ZeroGrad();
      nn::Var enhanced =
          model.Forward(nn::Var(StackWaveforms(std::span<const Waveform* const>(wavs))));
      nn::Var loss = EnhancementLoss(enhanced, targets, extractor);
      loss.Backward();
      opt.Step();
      total += loss.value()[0] * static_cast<double>(e - s);
      ++report.iterations;
    }
    report.epoch_loss.push_back(total / static_cast<double>(pairs.size()));
    report.best_epoch = epoch;
    VLOG(1) << "enhancer epoch " << epoch << " loss " << report.epoch_loss.back();
  }
  model.SetTraining(false);
  extractor.SetTraining(was_training);
  return report;
}

void SaveEnhancer(const ConvTasNet& model, const std::filesystem::path& path) {
  SaveCheckpoint(CheckpointFromModule(model, "enhancer", model.config().ToJson()), path);
}

std::unique_ptr<ConvTasNet> LoadEnhancer(const std::filesystem::path& path) {
  Checkpoint ckpt = LoadCheckpoint(path);
  if (ckpt.header.value("kind", "") != "enhancer") {
    throw ConfigError(path.string() + " is not an enhancer checkpoint");
  }
  auto model = std::make_unique<ConvTasNet>(EnhancerConfig::FromJson(ckpt.header.at("config")));
  model->LoadState(ckpt.tensors);
  model->SetTraining(false);
  return model;
}

}  // namespace spoofbench
