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

#ifndef SPOOFBENCH_NN_ADAM_H_
#define SPOOFBENCH_NN_ADAM_H_

#include <vector>

#include "spoofbench/nn/autograd.h"

namespace spoofbench::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Var> params, AdamOptions opts);

  // Applies one update from the accumulated grads. Parameters whose grad was
  // never touched are skipped.
  void Step();
  void ZeroGrad();
  void set_lr(double lr) { opts_.lr = lr; }
  double lr() const { return opts_.lr; }

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  AdamOptions opts_;
  long step_ = 0;
};

}  // namespace spoofbench::nn

#endif  // SPOOFBENCH_NN_ADAM_H_
