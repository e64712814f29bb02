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

#ifndef SPOOFBENCH_NN_AUTOGRAD_H_
#define SPOOFBENCH_NN_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <vector>

#include "spoofbench/nn/tensor.h"

namespace spoofbench::nn {

// Reverse-mode automatic differentiation over Tensor values.
//
// A Var is a handle to a node in a dynamically recorded graph. Leaf nodes
// created with requires_grad are parameters (or inputs we want gradients
// for); every op that consumes at least one such node records a backward
// closure. Calling Backward() on a scalar Var accumulates d(out)/d(leaf)
// into each leaf's grad.

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  // Returns the grad buffer, zero-initialized to value's shape if needed.
  Tensor& GradBuffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  int64_t dim(int axis) const { return node_->value.dim(axis); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  void ZeroGrad();

  // out must hold a single element.
  void Backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Var MakeResult(Tensor, std::vector<Var>,
                        std::function<void(Node&)>);

  std::shared_ptr<Node> node_;
};

// Builds an op result. The backward closure is kept only if grad mode is on
// and some parent requires grad. Inside the closure, parents are reachable
// as self.parents[i] in the order given here.
Var MakeResult(Tensor value, std::vector<Var> parents,
               std::function<void(Node&)> backward);

bool GradModeEnabled();

// Disables graph recording for its lifetime (thread-local).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace spoofbench::nn

#endif  // SPOOFBENCH_NN_AUTOGRAD_H_
