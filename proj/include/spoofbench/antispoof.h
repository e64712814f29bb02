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

#ifndef SPOOFBENCH_ANTISPOOF_H_
#define SPOOFBENCH_ANTISPOOF_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spoofbench/audio.h"
#include "spoofbench/frontend.h"
#include "spoofbench/nn/module.h"
#include "spoofbench/train_report.h"

namespace spoofbench {

// Class indices of the two-way head.
inline constexpr int64_t kSpoofClass = 0;
inline constexpr int64_t kBonafideClass = 1;

struct AntispoofConfig {
  int64_t reduce_dim = 128;
  int64_t pool = 3;  // kernel and stride of the max pooling
  int64_t stage1_channels = 32;
  int64_t stage1_blocks = 2;
  int64_t stage2_channels = 64;
  int64_t stage2_blocks = 4;
  int64_t classes = 2;
  double lr = 1e-6;
  int max_epochs = 100;
  int batch = 32;
  uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static AntispoofConfig FromJson(const nlohmann::json& j);
};

struct Logits2 {
  double spoof = 0.0;
  double bonafide = 0.0;
};

// Optional instrumentation of a forward pass. Shapes are recorded per
// example, channels first: ("frontend", (1, 201, 768)), ("reduce", ...),
// ("pool", ...), ("bn_selu", ...), ("stage1", ...), ("stage2", ...),
// ("gap", (64)), ("head", (2)).
struct AntispoofTrace {
  std::vector<std::pair<std::string, nn::Shape>> shapes;
  // Called with the stage-2 feature map [N, C, H, W] before global pooling;
  // may rewrite it in place. Inference only.
  std::function<void(nn::Tensor&)> stage2_hook;
};

// conv3x3 -> BN -> SELU -> conv3x3, plus a shortcut that is the identity or a
// 1x1 convolution when the channel count changes.
class ResidualBlock : public nn::Module {
 public:
  ResidualBlock(int64_t in, int64_t out, nn::Rng& rng);
  nn::Var Forward(const nn::Var& x);

 private:
  nn::Conv2dLayer conv1_;
  nn::BatchNormLayer bn_;
  nn::Conv2dLayer conv2_;
  std::unique_ptr<nn::Conv2dLayer> shortcut_;
};

class AntispoofModel : public nn::Module {
 public:
  AntispoofModel(std::unique_ptr<Frontend> frontend, const AntispoofConfig& config);

  // waveforms [N, L] -> logits [N, 2] (spoof, bonafide).
  nn::Var Forward(const nn::Var& waveforms, AntispoofTrace* trace = nullptr);

  const AntispoofConfig& config() const { return config_; }
  Frontend& frontend() { return *frontend_; }
  const Frontend& frontend() const { return *frontend_; }
  nn::LinearLayer& head() { return *head_; }

 private:
  AntispoofConfig config_;
  nn::Rng rng_;
  std::unique_ptr<Frontend> frontend_;
  std::unique_ptr<nn::LinearLayer> reduce_;
  std::unique_ptr<nn::BatchNormLayer> input_bn_;
  std::vector<std::unique_ptr<ResidualBlock>> stage1_;
  std::vector<std::unique_ptr<ResidualBlock>> stage2_;
  std::unique_ptr<nn::LinearLayer> head_;
};

// Per-example output shapes implied by the layer rules, for a given input
// length; used to validate traces.
std::vector<std::pair<std::string, nn::Shape>> ExpectedAntispoofShapes(
    const FrontendConfig& frontend, const AntispoofConfig& config,
    int64_t num_samples);

// Single-utterance inference in eval mode.
Logits2 AntispoofForward(const Waveform& wav, AntispoofModel& model,
                         AntispoofTrace* trace = nullptr);
// Raw bona fide logit, no softmax.
double BonafideScore(const Waveform& wav, AntispoofModel& model);
std::vector<double> BonafideScores(std::span<const Waveform> wavs,
                                   AntispoofModel& model, int batch = 16);

struct LabeledUtterance {
  Waveform wav;
  int64_t label;  // kSpoofClass or kBonafideClass
};

// Cross-entropy training with Adam at a fixed learning rate. The frontend is
// trained jointly. With a non-empty dev set, the weights of the epoch with
// the lowest dev loss are restored at the end.
TrainReport TrainAntispoof(AntispoofModel& model,
                           std::span<const LabeledUtterance> train,
                           std::span<const LabeledUtterance> dev,
                           const AntispoofConfig& config);

void SaveAntispoof(AntispoofModel& model, const std::filesystem::path& path);
std::unique_ptr<AntispoofModel> LoadAntispoof(const std::filesystem::path& path);

}  // namespace spoofbench

#endif  // SPOOFBENCH_ANTISPOOF_H_
