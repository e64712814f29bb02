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

#include "spoofbench/nn/tensor.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "spoofbench/error.h"

namespace spoofbench::nn {

std::string ShapeToString(const Shape& shape) {
  std::string out = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    SPOOFBENCH_CHECK(d >= 0, "negative dimension in " + ShapeToString(shape));
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)),
      data_(static_cast<size_t>(NumElements(shape_)), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  SPOOFBENCH_CHECK(NumElements(shape_) == numel(),
                   "value count does not match shape " + ShapeToString(shape_));
}

int64_t Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  SPOOFBENCH_CHECK(axis >= 0 && axis < rank(), "axis out of range");
  return shape_[static_cast<size_t>(axis)];
}

Tensor Tensor::Reshaped(Shape shape) const {
  SPOOFBENCH_CHECK(NumElements(shape) == numel(),
                   "cannot reshape " + ShapeToString(shape_) + " to " +
                       ShapeToString(shape));
  return Tensor(std::move(shape), data_);
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace spoofbench::nn
