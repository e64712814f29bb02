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

#include "spoofbench/frontend.h"

#include <array>
#include <algorithm>

#include "spoofbench/checkpoint.h"
#include "spoofbench/error.h"

namespace spoofbench {

namespace {

constexpr std::array<const char*, 4> kAdapters = {
    "wav2vec2-base", "hubert-base", "wavlm-base", "wavlm-base-plus"};
constexpr int64_t kAdapterDim = 768;
constexpr int64_t kAdapterWindow = 400;
constexpr int64_t kAdapterHop = 320;

}  // namespace

void FrontendConfig::Validate() const {
  if (embed_dim <= 0 || hop <= 0 || window <= 0 || hidden_layers < 0) {
    throw ConfigError("frontend config needs positive embed_dim/hop/window and "
                      "non-negative hidden_layers");
  }
}

int64_t FrontendConfig::FramesFor(int64_t num_samples) const {
  if (num_samples < window) return 0;
  return (num_samples - window) / hop + 1;
}

nlohmann::json FrontendConfig::ToJson() const {
  return {{"name", name},
          {"embed_dim", embed_dim},
          {"hop", hop},
          {"window", window},
          {"hidden_layers", hidden_layers}};
}

FrontendConfig FrontendConfig::FromJson(const nlohmann::json& j) {
  FrontendConfig c;
  try {
    c.name = j.at("name").get<std::string>();
    c.embed_dim = j.at("embed_dim").get<int64_t>();
    c.hop = j.at("hop").get<int64_t>();
    c.window = j.at("window").get<int64_t>();
    c.hidden_layers = j.at("hidden_layers").get<int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("frontend config: ") + e.what());
  }
  c.Validate();
  return c;
}

TinyFrontend::TinyFrontend(const FrontendConfig& config, uint64_t seed)
    : config_(config), rng_(seed) {
  config_.Validate();
  nn::Conv1dOptions opts;
  opts.stride = config_.hop;
  conv_ = std::make_unique<nn::Conv1dLayer>(1, config_.embed_dim, config_.window,
                                            opts, rng_);
  RegisterModule("conv", conv_.get());
  for (int64_t i = 0; i < config_.hidden_layers; ++i) {
    hidden_.push_back(std::make_unique<nn::LinearLayer>(
        config_.embed_dim, config_.embed_dim, rng_));
    RegisterModule("hidden" + std::to_string(i), hidden_.back().get());
  }
}

nn::Var TinyFrontend::Forward(const nn::Var& waveforms) {
  SPOOFBENCH_CHECK(waveforms.value().rank() == 2, "frontend expects [N, L]");
  const int64_t n = waveforms.dim(0), len = waveforms.dim(1);
  if (len < config_.window) {
    throw InvalidInputError("waveform of " + std::to_string(len) +
                            " samples is shorter than the frontend window " +
                            std::to_string(config_.window));
  }
  nn::Var h = conv_->Forward(nn::Reshape(waveforms, {n, 1, len}));
  h = nn::SwapLastAxes(h);  // [N, T, D]
  for (const auto& layer : hidden_) h = nn::Gelu(layer->Forward(h));
  SPOOFBENCH_CHECK(h.dim(1) == config_.FramesFor(len) &&
                       h.dim(2) == config_.embed_dim,
                   "frontend output shape " + nn::ShapeToString(h.shape()));
  return h;
}

FrameRepresentation FrontendForward(const Waveform& wav, Frontend& frontend) {
  nn::NoGradGuard no_grad;
  nn::Tensor batch(nn::Shape{1, wav.size()},
                   std::vector<double>(wav.samples().begin(), wav.samples().end()));
  nn::Var out = frontend.Forward(nn::Var(std::move(batch)));
  FrameRepresentation rep{out.value().Reshaped({out.dim(1), out.dim(2)})};
  SPOOFBENCH_CHECK(rep.values.AllFinite(), "non-finite frontend output");
  return rep;
}

std::unique_ptr<Frontend> BuildTinyFrontend(const FrontendConfig& config,
                                            uint64_t seed) {
  return std::make_unique<TinyFrontend>(config, seed);
}

void SaveFrontend(const Frontend& frontend, const std::filesystem::path& path) {
  SaveCheckpoint(CheckpointFromModule(frontend, "frontend", frontend.config().ToJson()),
                 path);
}

std::unique_ptr<Frontend> FrontendFromCheckpoint(
    const nlohmann::json& config,
    const std::vector<std::pair<std::string, nn::Tensor>>& state) {
  auto frontend = BuildTinyFrontend(FrontendConfig::FromJson(config), 0);
  frontend->LoadState(state);
  return frontend;
}

std::unique_ptr<Frontend> LoadFrontend(const std::filesystem::path& path) {
  Checkpoint ckpt = LoadCheckpoint(path);
  if (ckpt.header.value("kind", "") != "frontend") {
    throw ConfigError(path.string() + " is not a frontend checkpoint");
  }
  return FrontendFromCheckpoint(ckpt.header.at("config"), ckpt.tensors);
}

bool IsKnownAdapter(const std::string& name) {
  return std::find(kAdapters.begin(), kAdapters.end(), name) != kAdapters.end();
}

std::unique_ptr<Frontend> LoadExternalFrontend(
    const std::string& name, const std::filesystem::path& checkpoint) {
  if (!IsKnownAdapter(name)) throw AdapterError("unknown frontend adapter '" + name + "'");
  Checkpoint ckpt;
  try {
    ckpt = LoadCheckpoint(checkpoint);
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw AdapterError(std::string("unreadable checkpoint: ") + e.what());
  }
  if (ckpt.header.value("kind", "") != "frontend" || !ckpt.header.contains("config")) {
    throw AdapterError(checkpoint.string() + " is not a frontend checkpoint");
  }
  const nlohmann::json& cfg = ckpt.header["config"];
  if (cfg.value("name", "") != name) {
    throw AdapterError("checkpoint was exported for '" + cfg.value("name", "") +
                       "', not '" + name + "'");
  }
  if (cfg.value("embed_dim", 0) != kAdapterDim ||
      cfg.value("window", 0) != kAdapterWindow || cfg.value("hop", 0) != kAdapterHop) {
    throw AdapterError("checkpoint for '" + name +
                       "' does not honor the 768-dim / 400 / 320 frame contract");
  }
  std::unique_ptr<Frontend> frontend;
  try {
    frontend = FrontendFromCheckpoint(cfg, ckpt.tensors);
  } catch (const ConfigError& e) {
    throw AdapterError(std::string("shape mismatch: ") + e.what());
  }
  frontend->SetRequiresGrad(true);
  return frontend;
}

}  // namespace spoofbench
