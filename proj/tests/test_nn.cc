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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spoofbench/error.h"
#include "spoofbench/nn/adam.h"
#include "spoofbench/nn/module.h"
#include "spoofbench/nn/ops.h"
#include "test_util.h"

namespace spoofbench::nn {
namespace {

using testing::GradientRelativeError;
using testing::RandomTensor;

constexpr double kGradTol = 1e-6;

// Weighted sum so every output element gets a distinct upstream gradient.
Var Project(const Var& y, uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  return Sum(Mul(y, Var(RandomTensor(y.shape(), rng))));
}

TEST(TensorTest, ShapeAndReshape) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.numel(), 6);
  EXPECT_EQ(t.dim(-1), 3);
  EXPECT_EQ(t.Reshaped({3, 2}).shape(), (Shape{3, 2}));
  EXPECT_THROW(t.Reshaped({4, 2}), Error);
  t[0] = std::nan("");
  EXPECT_FALSE(t.AllFinite());
}

TEST(AutogradTest, AccumulatesThroughSharedParents) {
  Var x(Tensor({1}, 3.0), true);
  Var y = Add(Mul(x, x), x);  // x^2 + x
  y.Backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 7.0);
}

TEST(AutogradTest, NoGradGuardSkipsGraph) {
  Var x(Tensor({2}, 1.0), true);
  NoGradGuard g;
  Var y = Sum(Scale(x, 2.0));
  EXPECT_FALSE(y.requires_grad());
}

TEST(AutogradTest, BackwardRequiresScalar) {
  Var x(Tensor({2}, 1.0), true);
  EXPECT_THROW(Scale(x, 2.0).Backward(), Error);
}

struct UnaryCase {
  const char* name;
  std::function<Var(const Var&)> fn;
};

class UnaryGradTest : public ::testing::TestWithParam<UnaryCase> {};

TEST_P(UnaryGradTest, MatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  Var x(RandomTensor({2, 3, 5}, rng), true);
  const auto& fn = GetParam().fn;
  EXPECT_LT(GradientRelativeError([&] { return Project(fn(x)); }, x), kGradTol);
}

INSTANTIATE_TEST_SUITE_P(
    Ops, UnaryGradTest,
    ::testing::Values(
        UnaryCase{"selu", [](const Var& x) { return Selu(x); }},
        UnaryCase{"gelu", [](const Var& x) { return Gelu(x); }},
        UnaryCase{"sigmoid", [](const Var& x) { return Sigmoid(x); }},
        UnaryCase{"swap", [](const Var& x) { return SwapLastAxes(x); }},
        UnaryCase{"pad", [](const Var& x) { return Pad1d(x, 2, 3); }},
        UnaryCase{"crop", [](const Var& x) { return Crop1d(x, 1, 3); }},
        UnaryCase{"mean_axis1", [](const Var& x) { return MeanOverAxis1(x); }},
        UnaryCase{"gap", [](const Var& x) { return GlobalAveragePool(x); }},
        UnaryCase{"scale", [](const Var& x) { return Scale(x, -2.5); }},
        UnaryCase{"reshape", [](const Var& x) { return Reshape(x, {6, 5}); }}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(OpsTest, ReluGradientAwayFromKink) {
  std::mt19937_64 rng(2);
  Tensor t = RandomTensor({4, 6}, rng);
  for (auto& v : t.values()) v += v > 0 ? 0.1 : -0.1;
  Var x(t, true);
  EXPECT_LT(GradientRelativeError([&] { return Project(Relu(x)); }, x), kGradTol);
}

TEST(OpsTest, PReluGradientsForInputAndSlope) {
  std::mt19937_64 rng(3);
  Tensor t = RandomTensor({3, 7}, rng);
  for (auto& v : t.values()) v += v > 0 ? 0.1 : -0.1;
  Var x(t, true);
  Var a(Tensor({1}, 0.25), true);
  EXPECT_LT(GradientRelativeError([&] { return Project(PRelu(x, a)); }, x), kGradTol);
  EXPECT_LT(GradientRelativeError([&] { return Project(PRelu(x, a)); }, a), kGradTol);
}

TEST(OpsTest, LinearGradients) {
  std::mt19937_64 rng(4);
  Var x(RandomTensor({2, 3, 4}, rng), true);
  Var w(RandomTensor({5, 4}, rng), true);
  Var b(RandomTensor({5}, rng), true);
  auto f = [&] { return Project(Linear(x, w, b)); };
  EXPECT_LT(GradientRelativeError(f, x), kGradTol);
  EXPECT_LT(GradientRelativeError(f, w), kGradTol);
  EXPECT_LT(GradientRelativeError(f, b), kGradTol);
}

TEST(OpsTest, MatMulTransBMatchesDirectProduct) {
  std::mt19937_64 rng(5);
  Var a(RandomTensor({3, 4}, rng), true);
  Var b(RandomTensor({2, 4}, rng), true);
  Var c = MatMulTransB(a, b);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += a.value()[i * 4 + k] * b.value()[j * 4 + k];
      EXPECT_NEAR(c.value()[i * 2 + j], s, 1e-12);
    }
  }
  auto f = [&] { return Project(MatMulTransB(a, b)); };
  EXPECT_LT(GradientRelativeError(f, a), kGradTol);
  EXPECT_LT(GradientRelativeError(f, b), kGradTol);
}

// Direct nested-loop convolution used as the forward oracle.
Tensor NaiveConv1d(const Tensor& x, const Tensor& w, const Conv1dOptions& o) {
  const int64_t n = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const int64_t cout = w.dim(0), cin_g = w.dim(1), k = w.dim(2);
  const int64_t out_len = (len + o.pad_left + o.pad_right - o.dilation * (k - 1) - 1) / o.stride + 1;
  const int64_t cout_g = cout / o.groups;
  Tensor y({n, cout, out_len});
  for (int64_t s = 0; s < n; ++s)
    for (int64_t co = 0; co < cout; ++co)
      for (int64_t t = 0; t < out_len; ++t) {
        double acc = 0.0;
        const int64_t g = co / cout_g;
        for (int64_t ci = 0; ci < cin_g; ++ci)
          for (int64_t j = 0; j < k; ++j) {
            const int64_t pos = t * o.stride + j * o.dilation - o.pad_left;
            if (pos < 0 || pos >= len) continue;
            acc += w[(co * cin_g + ci) * k + j] * x[(s * cin + g * cin_g + ci) * len + pos];
          }
        y[(s * cout + co) * out_len + t] = acc;
      }
  return y;
}

struct ConvCase {
  int64_t cin, cout, k;
  Conv1dOptions opts;
};

class Conv1dTest : public ::testing::TestWithParam<ConvCase> {};

TEST_P(Conv1dTest, ForwardMatchesNaiveAndGradientsMatchFiniteDifferences) {
  const ConvCase c = GetParam();
  std::mt19937_64 rng(6);
  Var x(RandomTensor({2, c.cin, 11}, rng), true);
  Var w(RandomTensor({c.cout, c.cin / c.opts.groups, c.k}, rng), true);
  Var b(RandomTensor({c.cout}, rng), true);
  const Tensor ref = NaiveConv1d(x.value(), w.value(), c.opts);
  const Var y = Conv1d(x, w, Var(), c.opts);
  ASSERT_EQ(y.shape(), ref.shape());
  for (int64_t i = 0; i < ref.numel(); ++i) EXPECT_NEAR(y.value()[i], ref[i], 1e-12);
  auto f = [&] { return Project(Conv1d(x, w, b, c.opts)); };
  EXPECT_LT(GradientRelativeError(f, x), kGradTol);
  EXPECT_LT(GradientRelativeError(f, w), kGradTol);
  EXPECT_LT(GradientRelativeError(f, b), kGradTol);
}

INSTANTIATE_TEST_SUITE_P(
    Geometry, Conv1dTest,
    ::testing::Values(ConvCase{3, 4, 3, {}}, ConvCase{2, 3, 4, {.stride = 3}},
                      ConvCase{2, 2, 3, {.dilation = 2, .pad_left = 2, .pad_right = 2}},
                      ConvCase{4, 4, 3, {.dilation = 4, .pad_left = 4, .pad_right = 4, .groups = 4}},
                      ConvCase{4, 6, 1, {.groups = 2}}));

TEST(OpsTest, Conv1dRejectsShortInput) {
  Var x(Tensor({1, 1, 3}));
  Var w(Tensor({1, 1, 5}));
  EXPECT_THROW(Conv1d(x, w, Var(), {}), InvalidInputError);
}

TEST(OpsTest, ConvTranspose1dIsAdjointOfConv1d) {
  // <conv(x), y> == <x, convT(y)> for matching weights and stride.
  std::mt19937_64 rng(7);
  const int64_t k = 6, s = 3, frames = 5, len = (frames - 1) * s + k;
  Tensor w = RandomTensor({2, 3, k}, rng);  // conv: 3 -> 2 channels
  Var x(RandomTensor({1, 3, len}, rng));
  Var y(RandomTensor({1, 2, frames}, rng));
  const Var cx = Conv1d(x, Var(w), Var(), {.stride = s});
  const Var ty = ConvTranspose1d(y, Var(w), Var(), s);  // [Cin=2] -> [Cout=3]
  ASSERT_EQ(ty.shape(), (Shape{1, 3, len}));
  double lhs = 0.0, rhs = 0.0;
  for (int64_t i = 0; i < cx.value().numel(); ++i) lhs += cx.value()[i] * y.value()[i];
  for (int64_t i = 0; i < ty.value().numel(); ++i) rhs += x.value()[i] * ty.value()[i];
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(OpsTest, ConvTranspose1dGradients) {
  std::mt19937_64 rng(8);
  Var x(RandomTensor({2, 3, 4}, rng), true);
  Var w(RandomTensor({3, 2, 5}, rng), true);
  Var b(RandomTensor({2}, rng), true);
  auto f = [&] { return Project(ConvTranspose1d(x, w, b, 2)); };
  EXPECT_LT(GradientRelativeError(f, x), kGradTol);
  EXPECT_LT(GradientRelativeError(f, w), kGradTol);
  EXPECT_LT(GradientRelativeError(f, b), kGradTol);
}

TEST(OpsTest, Conv2dSameKeepsSizeAndGradients) {
  std::mt19937_64 rng(9);
  Var x(RandomTensor({2, 2, 5, 4}, rng), true);
  Var w(RandomTensor({3, 2, 3, 3}, rng), true);
  Var b(RandomTensor({3}, rng), true);
  EXPECT_EQ(Conv2dSame(x, w, b).shape(), (Shape{2, 3, 5, 4}));
  auto f = [&] { return Project(Conv2dSame(x, w, b)); };
  EXPECT_LT(GradientRelativeError(f, x), kGradTol);
  EXPECT_LT(GradientRelativeError(f, w), kGradTol);
  EXPECT_LT(GradientRelativeError(f, b), kGradTol);
}

TEST(OpsTest, MaxPoolFloorModeAndGradient) {
  std::mt19937_64 rng(10);
  Var x(RandomTensor({1, 2, 7, 8}, rng), true);
  EXPECT_EQ(MaxPool2d(x, 3, 3).shape(), (Shape{1, 2, 2, 2}));
  EXPECT_LT(GradientRelativeError([&] { return Project(MaxPool2d(x, 3, 3)); }, x), kGradTol);
}

TEST(OpsTest, BatchNormTrainingGradientsAndRunningStats) {
  std::mt19937_64 rng(11);
  Var x(RandomTensor({4, 3, 5}, rng), true);
  Var gamma(RandomTensor({3}, rng, 0.5, 1.5), true);
  Var beta(RandomTensor({3}, rng), true);
  Tensor rm({3}), rv({3}, 1.0);
  auto f = [&] {
    Tensor m = rm, v = rv;
    return Project(BatchNorm(x, gamma, beta, &m, &v, true));
  };
  EXPECT_LT(GradientRelativeError(f, x), 1e-5);
  EXPECT_LT(GradientRelativeError(f, gamma), kGradTol);
  EXPECT_LT(GradientRelativeError(f, beta), kGradTol);

  BatchNorm(x, gamma, beta, &rm, &rv, true);
  double mean0 = 0.0;
  for (int s = 0; s < 4; ++s)
    for (int t = 0; t < 5; ++t) mean0 += x.value()[(s * 3 + 0) * 5 + t];
  EXPECT_NEAR(rm[0], 0.1 * mean0 / 20.0, 1e-12);
}

TEST(OpsTest, BatchNormEvalUsesRunningStats) {
  Var x(Tensor({1, 1, 2}, std::vector<double>{1.0, 3.0}));
  Var gamma(Tensor({1}, 2.0)), beta(Tensor({1}, 0.5));
  Tensor rm({1}, 1.0), rv({1}, 4.0);
  const Var y = BatchNorm(x, gamma, beta, &rm, &rv, false);
  EXPECT_NEAR(y.value()[0], 0.5, 1e-5);
  EXPECT_NEAR(y.value()[1], 2.0 * 2.0 / std::sqrt(4.0 + 1e-5) + 0.5, 1e-12);
}

TEST(OpsTest, GlobalLayerNormNormalizesPerSampleAndHasExactGradients) {
  std::mt19937_64 rng(12);
  Var x(RandomTensor({2, 3, 6}, rng, -2.0, 3.0), true);
  Var gamma(Tensor({3}, 1.0), true), beta(Tensor({3}), true);
  const Var y = GlobalLayerNorm(x, gamma, beta);
  for (int s = 0; s < 2; ++s) {
    double m = 0.0, v = 0.0;
    for (int i = 0; i < 18; ++i) m += y.value()[s * 18 + i];
    m /= 18;
    for (int i = 0; i < 18; ++i) v += std::pow(y.value()[s * 18 + i] - m, 2);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v / 18, 1.0, 1e-6);
  }
  auto f = [&] { return Project(GlobalLayerNorm(x, gamma, beta)); };
  EXPECT_LT(GradientRelativeError(f, x), 1e-5);
  EXPECT_LT(GradientRelativeError(f, gamma), kGradTol);
}

TEST(OpsTest, RowNormalizeAndCosine) {
  std::mt19937_64 rng(13);
  Var a(RandomTensor({3, 4}, rng), true);
  Var b(RandomTensor({3, 4}, rng), true);
  auto f = [&] { return Project(CosineSimilarity(a, b)); };
  EXPECT_LT(GradientRelativeError(f, a), kGradTol);
  EXPECT_LT(GradientRelativeError(f, b), kGradTol);
  EXPECT_THROW(RowL2Normalize(Var(Tensor({1, 3}))), NumericDomainError);
}

TEST(OpsTest, CrossEntropyOnUniformLogitsIsLogK) {
  Var logits(Tensor({3, 2}, 0.7));
  const std::vector<int64_t> labels{0, 1, 1};
  EXPECT_NEAR(CrossEntropy(logits, labels).value()[0], std::log(2.0), 1e-15);
}

TEST(OpsTest, AngularMarginAndCrossEntropyGradients) {
  std::mt19937_64 rng(14);
  Var c(RandomTensor({3, 4}, rng, -0.9, 0.9), true);
  const std::vector<int64_t> labels{2, 0, 3};
  auto f = [&] { return CrossEntropy(Scale(AddAngularMargin(c, labels, 0.3), 5.0), labels); };
  EXPECT_LT(GradientRelativeError(f, c), kGradTol);
}

TEST(OpsTest, AngularMarginClampsAtTheBoundary) {
  Var c(Tensor({1, 2}, std::vector<double>{1.0, -1.0}), true);
  const std::vector<int64_t> labels{0};
  const Var y = AddAngularMargin(c, labels, 0.3);
  EXPECT_NEAR(y.value()[0], std::cos(std::acos(1.0 - kCosineClamp) + 0.3), 1e-15);
  EXPECT_DOUBLE_EQ(y.value()[1], -1.0);
  Sum(y).Backward();
  EXPECT_EQ(c.grad()[0], 0.0);
}

class Toy : public Module {
 public:
  explicit Toy(Rng& rng) : lin_(3, 2, rng), bn_(2) {
    RegisterModule("lin", &lin_);
    RegisterModule("bn", &bn_);
  }
  LinearLayer lin_;
  BatchNormLayer bn_;
};

TEST(ModuleTest, StateNamesAndLoadState) {
  Rng rng(1);
  Toy a(rng), b(rng);
  const auto state = a.State();
  std::vector<std::string> names;
  for (const auto& e : state) names.push_back(e.name);
  EXPECT_EQ(names, (std::vector<std::string>{"lin.weight", "lin.bias", "bn.gamma", "bn.beta",
                                             "bn.running_mean", "bn.running_var"}));
  EXPECT_EQ(a.NumParameters(), 3 * 2 + 2 + 2 + 2);
  std::vector<std::pair<std::string, Tensor>> snap;
  for (const auto& e : state) snap.emplace_back(e.name, e.var.value());
  b.LoadState(snap);
  EXPECT_EQ(b.State()[0].var.value().values()[0], state[0].var.value().values()[0]);
  snap.pop_back();
  EXPECT_THROW(b.LoadState(snap), ConfigError);
}

TEST(ModuleTest, FreezeTogglesEveryParameter) {
  Rng rng(2);
  Toy a(rng);
  EXPECT_FALSE(a.AllFrozen());
  a.SetRequiresGrad(false);
  EXPECT_TRUE(a.AllFrozen());
}

TEST(ModuleTest, UniformInitBounds) {
  Rng rng(3);
  const Tensor t = UniformInit({1000}, 16, rng);
  for (double v : t.values()) EXPECT_LE(std::abs(v), 0.25);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * g / (|g| + eps).
  Var p(Tensor({2}, std::vector<double>{1.0, -1.0}), true);
  Adam opt({p}, {.lr = 0.1});
  Sum(Mul(p, Var(Tensor({2}, std::vector<double>{3.0, -0.5})))).Backward();
  opt.Step();
  EXPECT_NEAR(p.value()[0], 1.0 - 0.1, 1e-7);
  EXPECT_NEAR(p.value()[1], -1.0 + 0.1, 1e-7);
}

TEST(AdamTest, MinimizesQuadratic) {
  Var p(Tensor({1}, 5.0), true);
  Adam opt({p}, {.lr = 0.1});
  for (int i = 0; i < 500; ++i) {
    opt.ZeroGrad();
    Mul(p, p).Backward();
    opt.Step();
  }
  EXPECT_NEAR(p.value()[0], 0.0, 1e-2);
}

}  // namespace
}  // namespace spoofbench::nn
