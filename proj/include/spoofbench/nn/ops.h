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

#ifndef SPOOFBENCH_NN_OPS_H_
#define SPOOFBENCH_NN_OPS_H_

#include <cstdint>
#include <span>

#include "spoofbench/nn/autograd.h"

namespace spoofbench::nn {

// Elementwise (operands must have identical shapes).
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& x, double factor);

// Activations.
Var Relu(const Var& x);
Var Selu(const Var& x);
Var Gelu(const Var& x);
Var Sigmoid(const Var& x);
// alpha holds a single learnable slope shared by all elements.
Var PRelu(const Var& x, const Var& alpha);

// Layout.
Var Reshape(const Var& x, Shape shape);
// [N, A, B] -> [N, B, A]
Var SwapLastAxes(const Var& x);
// [N, C, T]: zero-pad or crop along the last axis.
Var Pad1d(const Var& x, int64_t left, int64_t right);
Var Crop1d(const Var& x, int64_t start, int64_t length);

// x: [..., in], weight: [out, in], bias: [out] or undefined.
Var Linear(const Var& x, const Var& weight, const Var& bias);
// a: [M, K], b: [N, K] -> a * b^T, [M, N]
Var MatMulTransB(const Var& a, const Var& b);

struct Conv1dOptions {
  int64_t stride = 1;
  int64_t dilation = 1;
  int64_t pad_left = 0;
  int64_t pad_right = 0;
  int64_t groups = 1;
};

// x: [N, Cin, L], weight: [Cout, Cin / groups, K], bias: [Cout] or undefined.
Var Conv1d(const Var& x, const Var& weight, const Var& bias,
           const Conv1dOptions& opts);
// x: [N, Cin, T], weight: [Cin, Cout, K] -> [N, Cout, (T - 1) * stride + K]
Var ConvTranspose1d(const Var& x, const Var& weight, const Var& bias,
                    int64_t stride);
// x: [N, Cin, H, W], weight: [Cout, Cin, kh, kw]; stride 1, symmetric zero
// padding of (kh / 2, kw / 2) so odd kernels keep the spatial size.
Var Conv2dSame(const Var& x, const Var& weight, const Var& bias);
// Floor-mode max pooling without padding.
Var MaxPool2d(const Var& x, int64_t kernel, int64_t stride);

// Normalizes over every axis except 1 (channels). In training mode the batch
// statistics are used and the running estimates are updated in place.
Var BatchNorm(const Var& x, const Var& gamma, const Var& beta,
              Tensor* running_mean, Tensor* running_var, bool training,
              double momentum = 0.1, double eps = 1e-5);
// Conv-TasNet global layer norm: per sample over [C, T], per-channel affine.
Var GlobalLayerNorm(const Var& x, const Var& gamma, const Var& beta,
                    double eps = 1e-8);

// [N, T, D] -> [N, D], mean over axis 1.
Var MeanOverAxis1(const Var& x);
// [N, C, ...] -> [N, C], mean over all trailing axes.
Var GlobalAveragePool(const Var& x);
// [N, D] -> [N]
Var RowSum(const Var& x);
Var Sum(const Var& x);
Var Mean(const Var& x);

// [N, D] rows scaled to unit L2 norm. Throws NumericDomainError on a zero row.
Var RowL2Normalize(const Var& x);
// [N, D] x [N, D] -> [N]
Var CosineSimilarity(const Var& a, const Var& b);

// cosines: [N, K]. Replaces the target entry of each row by cos(theta + m),
// theta = acos(clamp(c, -1 + 1e-7, 1 - 1e-7)).
Var AddAngularMargin(const Var& cosines, std::span<const int64_t> labels,
                     double margin);
// logits: [N, K]; mean negative log-likelihood of labels.
Var CrossEntropy(const Var& logits, std::span<const int64_t> labels);

inline constexpr double kCosineClamp = 1e-7;

}  // namespace spoofbench::nn

#endif  // SPOOFBENCH_NN_OPS_H_
