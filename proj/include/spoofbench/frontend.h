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

#ifndef SPOOFBENCH_FRONTEND_H_
#define SPOOFBENCH_FRONTEND_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "json.hpp"
#include "spoofbench/audio.h"
#include "spoofbench/nn/module.h"

namespace spoofbench {

struct FrontendConfig {
  std::string name = "tiny";
  int64_t embed_dim = 768;
  int64_t hop = 320;
  int64_t window = 400;
  int64_t hidden_layers = 2;

  // Throws ConfigError on non-positive sizes.
  void Validate() const;
  // floor((len - window) / hop) + 1; 201 for 64600 samples at 400/320.
  int64_t FramesFor(int64_t num_samples) const;

  nlohmann::json ToJson() const;
  static FrontendConfig FromJson(const nlohmann::json& j);
};

// Frame-level representation of one utterance: values is [frames, embed_dim].
struct FrameRepresentation {
  nn::Tensor values;
  int64_t frames() const { return values.dim(0); }
  int64_t embed_dim() const { return values.dim(1); }
};

// Waveform batch [N, L] -> frame representations [N, T, D].
class Frontend : public nn::Module {
 public:
  virtual const FrontendConfig& config() const = 0;
  virtual nn::Var Forward(const nn::Var& waveforms) = 0;
};

// Strided 1-D convolution (kernel = window, stride = hop) followed by
// `hidden_layers` frame-wise fully connected layers with GELU.
class TinyFrontend : public Frontend {
 public:
  TinyFrontend(const FrontendConfig& config, uint64_t seed);

  const FrontendConfig& config() const override { return config_; }
  nn::Var Forward(const nn::Var& waveforms) override;

 private:
  FrontendConfig config_;
  nn::Rng rng_;
  std::unique_ptr<nn::Conv1dLayer> conv_;
  std::vector<std::unique_ptr<nn::LinearLayer>> hidden_;
};

FrameRepresentation FrontendForward(const Waveform& wav, Frontend& frontend);

std::unique_ptr<Frontend> BuildTinyFrontend(const FrontendConfig& config,
                                            uint64_t seed);

// Checkpoint round trip for any frontend built by this library.
void SaveFrontend(const Frontend& frontend, const std::filesystem::path& path);
std::unique_ptr<Frontend> LoadFrontend(const std::filesystem::path& path);
std::unique_ptr<Frontend> FrontendFromCheckpoint(
    const nlohmann::json& config, const std::vector<std::pair<std::string, nn::Tensor>>& state);

// Adapters for externally pretrained 768-dim frontends ("wav2vec2-base",
// "hubert-base", "wavlm-base", "wavlm-base-plus"). The checkpoint must be a
// frontend container whose config names the same adapter and honors the
// 768-dim, 400-sample window, 320-sample hop contract. Parameters come back
// trainable.
std::unique_ptr<Frontend> LoadExternalFrontend(const std::string& name,
                                               const std::filesystem::path& checkpoint);
bool IsKnownAdapter(const std::string& name);

}  // namespace spoofbench

#endif  // SPOOFBENCH_FRONTEND_H_
