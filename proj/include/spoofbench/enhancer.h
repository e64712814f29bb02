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

#ifndef SPOOFBENCH_ENHANCER_H_
#define SPOOFBENCH_ENHANCER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "spoofbench/audio.h"
#include "spoofbench/nn/module.h"
#include "spoofbench/spk_embed.h"
#include "spoofbench/train_report.h"

namespace spoofbench {

enum class PairingMode { kResample, kFixed };

// Conv-TasNet sizes follow the usual letters: N encoder filters, L kernel,
// B bottleneck, H block channels, Sc skip channels, P depthwise kernel,
// X blocks per repeat, R repeats.
struct EnhancerConfig {
  int64_t encoder_filters = 256;   // N
  int64_t encoder_kernel = 16;     // L
  int64_t encoder_stride = 8;
  int64_t bottleneck_channels = 128;  // B
  int64_t block_channels = 512;    // H
  int64_t skip_channels = 128;     // Sc
  int64_t conv_kernel = 3;         // P
  int64_t blocks_per_repeat = 8;   // X, block b uses dilation 2^b
  int64_t repeats = 3;             // R
  double lr = 1e-5;
  int epochs = 300;
  int batch = 8;
  uint64_t seed = 0;
  PairingMode pairing = PairingMode::kResample;
  // Bypasses the separator: the decoder sees the raw encoder output.
  bool force_unit_mask = false;
  // Starts the encoder/decoder pair as an exact analysis/synthesis
  // transform (signed unit impulses), so training departs from a scaled
  // copy of the input. Needs encoder_filters == 2 * encoder_kernel and a
  // kernel that is a multiple of the stride.
  bool identity_init = false;

  void Validate() const;
  nlohmann::json ToJson() const;
  static EnhancerConfig FromJson(const nlohmann::json& j);
};

class TemporalBlock : public nn::Module {
 public:
  TemporalBlock(const EnhancerConfig& c, int64_t dilation, nn::Rng& rng);
  // Returns (residual, skip).
  std::pair<nn::Var, nn::Var> Forward(const nn::Var& x);

 private:
  nn::Conv1dLayer in_conv_;
  nn::PReluLayer act1_;
  nn::GlobalLayerNormLayer norm1_;
  nn::Conv1dLayer depthwise_;
  nn::PReluLayer act2_;
  nn::GlobalLayerNormLayer norm2_;
  nn::Conv1dLayer res_conv_;
  nn::Conv1dLayer skip_conv_;
};

// Time-domain converter: encoder (conv + ReLU), temporal convolutional mask
// estimator, sigmoid mask on the encoder output, overlap-add decoder. One
// output source; output length equals input length.
class ConvTasNet : public nn::Module {
 public:
  explicit ConvTasNet(const EnhancerConfig& config);

  // waveforms [N, L] -> [N, L]
  nn::Var Forward(const nn::Var& waveforms);

  const EnhancerConfig& config() const { return config_; }
  EnhancerConfig& mutable_config() { return config_; }
  nn::Conv1dLayer& encoder() { return *encoder_; }
  nn::ConvTranspose1dLayer& decoder() { return *decoder_; }

 private:
  EnhancerConfig config_;
  nn::Rng rng_;
  std::unique_ptr<nn::Conv1dLayer> encoder_;
  std::unique_ptr<nn::GlobalLayerNormLayer> input_norm_;
  std::unique_ptr<nn::Conv1dLayer> bottleneck_;
  std::vector<std::unique_ptr<TemporalBlock>> blocks_;
  std::unique_ptr<nn::PReluLayer> mask_act_;
  std::unique_ptr<nn::Conv1dLayer> mask_conv_;
  std::unique_ptr<nn::ConvTranspose1dLayer> decoder_;
};

Waveform Enhance(const Waveform& wav, ConvTasNet& model);
std::vector<Waveform> EnhanceBatch(std::span<const Waveform> wavs, ConvTasNet& model,
                                   int batch = 8);

// 1 - cos(f_embed(enhanced), f_embed(bonafide)), in [0, 2].
double EnhancementLoss(const Waveform& enhanced, const Waveform& bonafide,
                       SpeakerExtractor& extractor);
// Batched differentiable form against precomputed bona fide embeddings [N, D].
nn::Var EnhancementLoss(const nn::Var& enhanced, const nn::Tensor& bonafide_embeddings,
                        SpeakerExtractor& extractor);

struct SpoofPair {
  Waveform spoof;
  Waveform bonafide;
  std::string target_speaker;
};

// Adam on the enhancer only. The extractor must be frozen; otherwise a
// ContractError is raised before anything is touched. In resample mode each
// spoof is re-paired every epoch with a uniformly drawn bona fide utterance
// of the same target speaker (the pool is every bona fide waveform in
// `pairs` for that speaker).
TrainReport TrainEnhancer(ConvTasNet& model, std::span<const SpoofPair> pairs,
                          SpeakerExtractor& extractor, const EnhancerConfig& config);

void SaveEnhancer(const ConvTasNet& model, const std::filesystem::path& path);
std::unique_ptr<ConvTasNet> LoadEnhancer(const std::filesystem::path& path);

}  // namespace spoofbench

#endif  // SPOOFBENCH_ENHANCER_H_
