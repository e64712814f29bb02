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

#ifndef SPOOFBENCH_NN_MODULE_H_
#define SPOOFBENCH_NN_MODULE_H_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "spoofbench/nn/autograd.h"
#include "spoofbench/nn/ops.h"

namespace spoofbench::nn {

using Rng = std::mt19937_64;

// Named entry of a module's serializable state.
struct StateEntry {
  std::string name;
  Var var;
  bool trainable;
};

// Base for layers and models. Owns its parameters and buffers (running
// statistics); children are registered members of the derived class, so
// modules are neither copyable nor movable.
class Module {
 public:
  Module() = default;
  virtual ~Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  // Parameters and buffers, depth-first in registration order, with
  // dotted names ("stage1.0.conv1.weight").
  std::vector<StateEntry> State() const;
  std::vector<Var> Parameters() const;
  int64_t NumParameters() const;

  void SetTraining(bool on);
  bool training() const { return training_; }
  // Freezing: toggles requires_grad on every parameter.
  void SetRequiresGrad(bool on);
  bool AllFrozen() const;
  void ZeroGrad();

  // Copies values from a state listing with identical names and shapes.
  void LoadState(const std::vector<std::pair<std::string, Tensor>>& state);

 protected:
  Var RegisterParameter(std::string name, Tensor init);
  Var RegisterBuffer(std::string name, Tensor init);
  void RegisterModule(std::string name, Module* child);

 private:
  void CollectState(const std::string& prefix, std::vector<StateEntry>* out) const;
  void SetTrainingRecursive(bool on);

  std::vector<StateEntry> own_;
  std::vector<std::pair<std::string, Module*>> children_;
  bool training_ = true;
};

// PyTorch-style default initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor UniformInit(Shape shape, int64_t fan_in, Rng& rng);

class LinearLayer : public Module {
 public:
  LinearLayer(int64_t in, int64_t out, Rng& rng, bool bias = true);
  Var Forward(const Var& x) const { return Linear(x, weight_, bias_); }
  Var& weight() { return weight_; }
  Var& bias() { return bias_; }

 private:
  Var weight_;
  Var bias_;
};

class Conv1dLayer : public Module {
 public:
  Conv1dLayer(int64_t in, int64_t out, int64_t kernel, Conv1dOptions opts,
              Rng& rng, bool bias = true);
  Var Forward(const Var& x) const { return Conv1d(x, weight_, bias_, opts_); }
  Var& weight() { return weight_; }
  const Conv1dOptions& options() const { return opts_; }

 private:
  Conv1dOptions opts_;
  Var weight_;
  Var bias_;
};

class ConvTranspose1dLayer : public Module {
 public:
  ConvTranspose1dLayer(int64_t in, int64_t out, int64_t kernel, int64_t stride,
                       Rng& rng, bool bias = true);
  Var Forward(const Var& x) const {
    return ConvTranspose1d(x, weight_, bias_, stride_);
  }
  Var& weight() { return weight_; }

 private:
  int64_t stride_;
  Var weight_;
  Var bias_;
};

class Conv2dLayer : public Module {
 public:
  Conv2dLayer(int64_t in, int64_t out, int64_t kernel, Rng& rng, bool bias = true);
  Var Forward(const Var& x) const { return Conv2dSame(x, weight_, bias_); }

 private:
  Var weight_;
  Var bias_;
};

class BatchNormLayer : public Module {
 public:
  explicit BatchNormLayer(int64_t channels);
  Var Forward(const Var& x);

 private:
  Var gamma_;
  Var beta_;
  Var running_mean_;
  Var running_var_;
};

class GlobalLayerNormLayer : public Module {
 public:
  explicit GlobalLayerNormLayer(int64_t channels);
  Var Forward(const Var& x) const { return GlobalLayerNorm(x, gamma_, beta_); }

 private:
  Var gamma_;
  Var beta_;
};

class PReluLayer : public Module {
 public:
  explicit PReluLayer(double init = 0.25);
  Var Forward(const Var& x) const { return PRelu(x, alpha_); }

 private:
  Var alpha_;
};

}  // namespace spoofbench::nn

#endif  // SPOOFBENCH_NN_MODULE_H_
