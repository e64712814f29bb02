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

#include "spoofbench/nn/module.h"

#include <cmath>
#include <map>

#include "spoofbench/error.h"

namespace spoofbench::nn {

std::vector<StateEntry> Module::State() const {
  std::vector<StateEntry> out;
  CollectState("", &out);
  return out;
}

void Module::CollectState(const std::string& prefix,
                          std::vector<StateEntry>* out) const {
  for (const StateEntry& e : own_) {
    out->push_back({prefix + e.name, e.var, e.trainable});
  }
  for (const auto& [name, child] : children_) {
    child->CollectState(prefix + name + ".", out);
  }
}

std::vector<Var> Module::Parameters() const {
  std::vector<Var> out;
  for (const StateEntry& e : State()) {
    if (e.trainable) out.push_back(e.var);
  }
  return out;
}

int64_t Module::NumParameters() const {
  int64_t n = 0;
  for (const Var& p : Parameters()) n += p.value().numel();
  return n;
}

void Module::SetTraining(bool on) { SetTrainingRecursive(on); }

void Module::SetTrainingRecursive(bool on) {
  training_ = on;
  for (auto& [name, child] : children_) child->SetTrainingRecursive(on);
}

void Module::SetRequiresGrad(bool on) {
  for (Var& p : Parameters()) p.set_requires_grad(on);
}

bool Module::AllFrozen() const {
  for (const Var& p : Parameters()) {
    if (p.requires_grad()) return false;
  }
  return true;
}

void Module::ZeroGrad() {
  for (Var& p : Parameters()) p.ZeroGrad();
}

void Module::LoadState(
    const std::vector<std::pair<std::string, Tensor>>& state) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : state) by_name[name] = &t;
  std::vector<StateEntry> mine = State();
  if (mine.size() != state.size()) {
    throw ConfigError("state has " + std::to_string(state.size()) +
                      " entries, module expects " + std::to_string(mine.size()));
  }
  for (StateEntry& e : mine) {
    auto it = by_name.find(e.name);
    if (it == by_name.end()) throw ConfigError("missing state entry " + e.name);
    if (it->second->shape() != e.var.shape()) {
      throw ConfigError("shape mismatch for " + e.name + ": " +
                        ShapeToString(it->second->shape()) + " vs " +
                        ShapeToString(e.var.shape()));
    }
    e.var.mutable_value() = *it->second;
  }
}

Var Module::RegisterParameter(std::string name, Tensor init) {
  Var v(std::move(init), true);
  own_.push_back({std::move(name), v, true});
  return v;
}

Var Module::RegisterBuffer(std::string name, Tensor init) {
  Var v(std::move(init), false);
  own_.push_back({std::move(name), v, false});
  return v;
}

void Module::RegisterModule(std::string name, Module* child) {
  children_.emplace_back(std::move(name), child);
}

Tensor UniformInit(Shape shape, int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

LinearLayer::LinearLayer(int64_t in, int64_t out, Rng& rng, bool bias) {
  if (in <= 0 || out <= 0) throw ConfigError("LinearLayer: non-positive size");
  weight_ = RegisterParameter("weight", UniformInit({out, in}, in, rng));
  if (bias) bias_ = RegisterParameter("bias", UniformInit({out}, in, rng));
}

Conv1dLayer::Conv1dLayer(int64_t in, int64_t out, int64_t kernel,
                         Conv1dOptions opts, Rng& rng, bool bias)
    : opts_(opts) {
  if (in <= 0 || out <= 0 || kernel <= 0 || opts.groups <= 0 ||
      in % opts.groups != 0 || out % opts.groups != 0) {
    throw ConfigError("Conv1dLayer: invalid geometry");
  }
  const int64_t fan_in = in / opts.groups * kernel;
  weight_ = RegisterParameter(
      "weight", UniformInit({out, in / opts.groups, kernel}, fan_in, rng));
  if (bias) bias_ = RegisterParameter("bias", UniformInit({out}, fan_in, rng));
}

ConvTranspose1dLayer::ConvTranspose1dLayer(int64_t in, int64_t out,
                                           int64_t kernel, int64_t stride,
                                           Rng& rng, bool bias)
    : stride_(stride) {
  if (in <= 0 || out <= 0 || kernel <= 0 || stride <= 0) {
    throw ConfigError("ConvTranspose1dLayer: invalid geometry");
  }
  // PyTorch computes fan_in from weight.size(1) * kernel for transposed convs.
  const int64_t fan_in = out * kernel;
  weight_ = RegisterParameter("weight", UniformInit({in, out, kernel}, fan_in, rng));
  if (bias) bias_ = RegisterParameter("bias", UniformInit({out}, fan_in, rng));
}

Conv2dLayer::Conv2dLayer(int64_t in, int64_t out, int64_t kernel, Rng& rng,
                         bool bias) {
  if (in <= 0 || out <= 0 || kernel <= 0 || kernel % 2 == 0) {
    throw ConfigError("Conv2dLayer: invalid geometry");
  }
  const int64_t fan_in = in * kernel * kernel;
  weight_ = RegisterParameter("weight",
                              UniformInit({out, in, kernel, kernel}, fan_in, rng));
  if (bias) bias_ = RegisterParameter("bias", UniformInit({out}, fan_in, rng));
}

BatchNormLayer::BatchNormLayer(int64_t channels) {
  gamma_ = RegisterParameter("gamma", Tensor({channels}, 1.0));
  beta_ = RegisterParameter("beta", Tensor({channels}, 0.0));
  running_mean_ = RegisterBuffer("running_mean", Tensor({channels}, 0.0));
  running_var_ = RegisterBuffer("running_var", Tensor({channels}, 1.0));
}

Var BatchNormLayer::Forward(const Var& x) {
  return BatchNorm(x, gamma_, beta_, &running_mean_.mutable_value(),
                   &running_var_.mutable_value(), training());
}

GlobalLayerNormLayer::GlobalLayerNormLayer(int64_t channels) {
  gamma_ = RegisterParameter("gamma", Tensor({channels}, 1.0));
  beta_ = RegisterParameter("beta", Tensor({channels}, 0.0));
}

PReluLayer::PReluLayer(double init) {
  alpha_ = RegisterParameter("alpha", Tensor({1}, init));
}

}  // namespace spoofbench::nn
