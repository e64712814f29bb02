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

#include "spoofbench/nn/ops.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "spoofbench/error.h"

namespace spoofbench::nn {

namespace {

using MatRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

void CheckSameShape(const Var& a, const Var& b, const char* op) {
  SPOOFBENCH_CHECK(a.shape() == b.shape(),
                   std::string(op) + ": shape mismatch " +
                       ShapeToString(a.shape()) + " vs " +
                       ShapeToString(b.shape()));
}

void CheckRank(const Var& x, int rank, const char* op) {
  SPOOFBENCH_CHECK(x.value().rank() == rank,
                   std::string(op) + ": expected rank " + std::to_string(rank) +
                       ", got " + ShapeToString(x.shape()));
}

Node& Parent(Node& self, size_t i) { return *self.parents[i]; }

// Elementwise unary op from f(x) and f'(x) given (x, y).
template <typename F, typename DF>
Var Unary(const Var& x, F f, DF df) {
  Tensor out(x.shape());
  const Tensor& in = x.value();
  for (int64_t i = 0; i < in.numel(); ++i) out[i] = f(in[i]);
  return MakeResult(std::move(out), {x}, [df](Node& self) {
    Node& p = Parent(self, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.GradBuffer();
    for (int64_t i = 0; i < g.numel(); ++i) {
      g[i] += self.grad[i] * df(p.value[i], self.value[i]);
    }
  });
}

constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
constexpr double kSeluScale = 1.0507009873554804934193349852946;

// im2col for one sample of a 1-D convolution (one group).
void Im2Col1d(const double* x, int64_t channels, int64_t length, int64_t kernel,
              int64_t out_len, const Conv1dOptions& o, double* cols) {
  for (int64_t c = 0; c < channels; ++c) {
    for (int64_t k = 0; k < kernel; ++k) {
      double* row = cols + (c * kernel + k) * out_len;
      const int64_t offset = k * o.dilation - o.pad_left;
      for (int64_t t = 0; t < out_len; ++t) {
        const int64_t pos = t * o.stride + offset;
        row[t] = (pos >= 0 && pos < length) ? x[c * length + pos] : 0.0;
      }
    }
  }
}

void Col2Im1d(const double* cols, int64_t channels, int64_t length,
              int64_t kernel, int64_t out_len, const Conv1dOptions& o,
              double* dx) {
  for (int64_t c = 0; c < channels; ++c) {
    for (int64_t k = 0; k < kernel; ++k) {
      const double* row = cols + (c * kernel + k) * out_len;
      const int64_t offset = k * o.dilation - o.pad_left;
      for (int64_t t = 0; t < out_len; ++t) {
        const int64_t pos = t * o.stride + offset;
        if (pos >= 0 && pos < length) dx[c * length + pos] += row[t];
      }
    }
  }
}

void Im2Col2d(const double* x, int64_t channels, int64_t h, int64_t w,
              int64_t kh, int64_t kw, double* cols) {
  const int64_t ph = kh / 2, pw = kw / 2;
  const int64_t hw = h * w;
  for (int64_t c = 0; c < channels; ++c) {
    for (int64_t i = 0; i < kh; ++i) {
      for (int64_t j = 0; j < kw; ++j) {
        double* row = cols + ((c * kh + i) * kw + j) * hw;
        for (int64_t y = 0; y < h; ++y) {
          const int64_t sy = y + i - ph;
          for (int64_t xx = 0; xx < w; ++xx) {
            const int64_t sx = xx + j - pw;
            row[y * w + xx] = (sy >= 0 && sy < h && sx >= 0 && sx < w)
                                  ? x[(c * h + sy) * w + sx]
                                  : 0.0;
          }
        }
      }
    }
  }
}

void Col2Im2d(const double* cols, int64_t channels, int64_t h, int64_t w,
              int64_t kh, int64_t kw, double* dx) {
  const int64_t ph = kh / 2, pw = kw / 2;
  const int64_t hw = h * w;
  for (int64_t c = 0; c < channels; ++c) {
    for (int64_t i = 0; i < kh; ++i) {
      for (int64_t j = 0; j < kw; ++j) {
        const double* row = cols + ((c * kh + i) * kw + j) * hw;
        for (int64_t y = 0; y < h; ++y) {
          const int64_t sy = y + i - ph;
          if (sy < 0 || sy >= h) continue;
          for (int64_t xx = 0; xx < w; ++xx) {
            const int64_t sx = xx + j - pw;
            if (sx >= 0 && sx < w) dx[(c * h + sy) * w + sx] += row[y * w + xx];
          }
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Var Add(const Var& a, const Var& b) {
  CheckSameShape(a, b, "Add");
  Tensor out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return MakeResult(std::move(out), {a, b}, [](Node& self) {
    for (size_t k = 0; k < 2; ++k) {
      Node& p = Parent(self, k);
      if (!p.requires_grad) continue;
      Tensor& g = p.GradBuffer();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
    }
  });
}

Var Sub(const Var& a, const Var& b) {
  CheckSameShape(a, b, "Sub");
  Tensor out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  return MakeResult(std::move(out), {a, b}, [](Node& self) {
    for (size_t k = 0; k < 2; ++k) {
      Node& p = Parent(self, k);
      if (!p.requires_grad) continue;
      const double sign = k == 0 ? 1.0 : -1.0;
      Tensor& g = p.GradBuffer();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

Var Mul(const Var& a, const Var& b) {
  CheckSameShape(a, b, "Mul");
  Tensor out(a.shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
  return MakeResult(std::move(out), {a, b}, [](Node& self) {
    Node& pa = Parent(self, 0);
    Node& pb = Parent(self, 1);
    if (pa.requires_grad) {
      Tensor& g = pa.GradBuffer();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      Tensor& g = pb.GradBuffer();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Var Scale(const Var& x, double factor) {
  return Unary(
      x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Var Relu(const Var& x) {
  return Unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var Selu(const Var& x) {
  return Unary(
      x,
      [](double v) {
        return v > 0.0 ? kSeluScale * v : kSeluScale * kSeluAlpha * std::expm1(v);
      },
      [](double v, double) {
        return v > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(v);
      });
}

Var Gelu(const Var& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return Unary(
      x,
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [inv_sqrt_2pi](double v, double) {
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        return cdf + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      });
}

Var Sigmoid(const Var& x) {
  return Unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var PRelu(const Var& x, const Var& alpha) {
  SPOOFBENCH_CHECK(alpha.value().numel() == 1, "PRelu: alpha must be scalar");
  const double a = alpha.value()[0];
  Tensor out(x.shape());
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double v = x.value()[i];
    out[i] = v > 0.0 ? v : a * v;
  }
  return MakeResult(std::move(out), {x, alpha}, [a](Node& self) {
    Node& px = Parent(self, 0);
    Node& pa = Parent(self, 1);
    const Tensor& in = px.value;
    if (px.requires_grad) {
      Tensor& g = px.GradBuffer();
      for (int64_t i = 0; i < g.numel(); ++i) {
        g[i] += self.grad[i] * (in[i] > 0.0 ? 1.0 : a);
      }
    }
    if (pa.requires_grad) {
      double acc = 0.0;
      for (int64_t i = 0; i < in.numel(); ++i) {
        if (in[i] <= 0.0) acc += self.grad[i] * in[i];
      }
      pa.GradBuffer()[0] += acc;
    }
  });
}

// ---------------------------------------------------------------------------
// Layout

Var Reshape(const Var& x, Shape shape) {
  Tensor out = x.value().Reshaped(std::move(shape));
  return MakeResult(std::move(out), {x}, [](Node& self) {
    Node& p = Parent(self, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.GradBuffer();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
  });
}

Var SwapLastAxes(const Var& x) {
  CheckRank(x, 3, "SwapLastAxes");
  const int64_t n = x.dim(0), a = x.dim(1), b = x.dim(2);
  Tensor out({n, b, a});
  const double* in = x.value().data();
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t i = 0; i < a; ++i) {
      for (int64_t j = 0; j < b; ++j) {
        out[(s * b + j) * a + i] = in[(s * a + i) * b + j];
      }
    }
  }
  return MakeResult(std::move(out), {x}, [n, a, b](Node& self) {
    Node& p = Parent(self, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.GradBuffer();
    for (int64_t s = 0; s < n; ++s) {
      for (int64_t i = 0; i < a; ++i) {
        for (int64_t j = 0; j < b; ++j) {
          g[(s * a + i) * b + j] += self.grad[(s * b + j) * a + i];
        }
      }
    }
  });
}

Var Pad1d(const Var& x, int64_t left, int64_t right) {
  CheckRank(x, 3, "Pad1d");
  SPOOFBENCH_CHECK(left >= 0 && right >= 0, "Pad1d: negative padding");
  const int64_t rows = x.dim(0) * x.dim(1), len = x.dim(2);
  const int64_t out_len = len + left + right;
  Tensor out({x.dim(0), x.dim(1), out_len});
  for (int64_t r = 0; r < rows; ++r) {
    std::copy_n(x.value().data() + r * len, len,
                out.data() + r * out_len + left);
  }
  return MakeResult(std::move(out), {x}, [rows, len, out_len, left](Node& self) {
    Node& p = Parent(self, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.GradBuffer();
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t t = 0; t < len; ++t) {
        g[r * len + t] += self.grad[r * out_len + left + t];
      }
    }
  });
}

Var Crop1d(const Var& x, int64_t start, int64_t length) {
  CheckRank(x, 3, "Crop1d");
  const int64_t rows = x.dim(0) * x.dim(1), len = x.dim(2);
  SPOOFBENCH_CHECK(start >= 0 && length >= 0 && start + length <= len,
                   "Crop1d: window out of range");
  Tensor out({x.dim(0), x.dim(1), length});
  for (int64_t r = 0; r < rows; ++r) {
    std::copy_n(x.value().data() + r * len + start, length,
                out.data() + r * length);
  }
  return MakeResult(std::move(out), {x}, [rows, len, start, length](Node& self) {
    Node& p = Parent(self, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.GradBuffer();
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t t = 0; t < length; ++t) {
        g[r * len + start + t] += self.grad[r * length + t];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Dense

Var Linear(const Var& x, const Var& weight, const Var& bias) {
  CheckRank(weight, 2, "Linear weight");
  const int64_t in = weight.dim(1), out_dim = weight.dim(0);
  SPOOFBENCH_CHECK(x.value().rank() >= 1 && x.dim(-1) == in,
                   "Linear: input " + ShapeToString(x.shape()) +
                       " vs weight " + ShapeToString(weight.shape()));
  const int64_t rows = x.value().numel() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out_dim;
  Tensor out(out_shape);
  MapRM y(out.data(), rows, out_dim);
  y.noalias() = CMapRM(x.value().data(), rows, in) *
                CMapRM(weight.value().data(), out_dim, in).transpose();
  const bool has_bias = bias.defined();
  if (has_bias) {
    SPOOFBENCH_CHECK(bias.value().numel() == out_dim, "Linear: bias size");
    y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.value().data(),
                                                        out_dim);
  }
  std::vector<Var> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return MakeResult(
      std::move(out), std::move(parents),
      [rows, in, out_dim, has_bias](Node& self) {
        CMapRM dy(self.grad.data(), rows, out_dim);
        Node& px = Parent(self, 0);
        Node& pw = Parent(self, 1);
        if (px.requires_grad) {
          MapRM(px.GradBuffer().data(), rows, in).noalias() +=
              dy * CMapRM(pw.value.data(), out_dim, in);
        }
        if (pw.requires_grad) {
          MapRM(pw.GradBuffer().data(), out_dim, in).noalias() +=
              dy.transpose() * CMapRM(px.value.data(), rows, in);
        }
        if (has_bias && Parent(self, 2).requires_grad) {
          Eigen::Map<Eigen::RowVectorXd>(Parent(self, 2).GradBuffer().data(),
                                         out_dim) += dy.colwise().sum();
        }
      });
}

Var MatMulTransB(const Var& a, const Var& b) {
  CheckRank(a, 2, "MatMulTransB");
  CheckRank(b, 2, "MatMulTransB");
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  SPOOFBENCH_CHECK(b.dim(1) == k, "MatMulTransB: inner dimension mismatch");
  Tensor out({m, n});
  MapRM(out.data(), m, n).noalias() =
      CMapRM(a.value().data(), m, k) * CMapRM(b.value().data(), n, k).transpose();
  return MakeResult(std::move(out), {a, b}, [m, k, n](Node& self) {
    CMapRM dy(self.grad.data(), m, n);
    Node& pa = Parent(self, 0);
    Node& pb = Parent(self, 1);
    if (pa.requires_grad) {
      MapRM(pa.GradBuffer().data(), m, k).noalias() +=
          dy * CMapRM(pb.value.data(), n, k);
    }
    if (pb.requires_grad) {
      MapRM(pb.GradBuffer().data(), n, k).noalias() +=
          dy.transpose() * CMapRM(pa.value.data(), m, k);
    }
  });
}

// ---------------------------------------------------------------------------
// Convolutions

Var Conv1d(const Var& x, const Var& weight, const Var& bias,
           const Conv1dOptions& opts) {
  CheckRank(x, 3, "Conv1d input");
  CheckRank(weight, 3, "Conv1d weight");
  const int64_t n = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const int64_t cout = weight.dim(0), cin_g = weight.dim(1), kernel = weight.dim(2);
  const int64_t groups = opts.groups;
  SPOOFBENCH_CHECK(groups >= 1 && cin % groups == 0 && cout % groups == 0 &&
                       cin / groups == cin_g,
                   "Conv1d: channel/group mismatch, input " +
                       ShapeToString(x.shape()) + " weight " +
                       ShapeToString(weight.shape()));
  const int64_t cout_g = cout / groups;
  const int64_t span = opts.dilation * (kernel - 1) + 1;
  const int64_t padded = len + opts.pad_left + opts.pad_right;
  if (padded < span) {
    throw InvalidInputError("Conv1d: input length " + std::to_string(len) +
                            " shorter than receptive field " +
                            std::to_string(span));
  }
  const int64_t out_len = (padded - span) / opts.stride + 1;
  const bool has_bias = bias.defined();
  const bool depthwise = cin_g == 1 && cout_g == 1;

  Tensor out({n, cout, out_len});
  std::vector<double> cols(static_cast<size_t>(cin_g * kernel * out_len));
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t g = 0; g < groups; ++g) {
      const double* xs = x.value().data() + (s * cin + g * cin_g) * len;
      double* ys = out.data() + (s * cout + g * cout_g) * out_len;
      const double* wg = weight.value().data() + g * cout_g * cin_g * kernel;
      if (depthwise) {
        for (int64_t t = 0; t < out_len; ++t) {
          double acc = 0.0;
          for (int64_t k = 0; k < kernel; ++k) {
            const int64_t pos = t * opts.stride + k * opts.dilation - opts.pad_left;
            if (pos >= 0 && pos < len) acc += wg[k] * xs[pos];
          }
          ys[t] = acc;
        }
        continue;
      }
      Im2Col1d(xs, cin_g, len, kernel, out_len, opts, cols.data());
      MapRM(ys, cout_g, out_len).noalias() =
          CMapRM(wg, cout_g, cin_g * kernel) *
          CMapRM(cols.data(), cin_g * kernel, out_len);
    }
    if (has_bias) {
      for (int64_t c = 0; c < cout; ++c) {
        double* row = out.data() + (s * cout + c) * out_len;
        const double b = bias.value()[c];
        for (int64_t t = 0; t < out_len; ++t) row[t] += b;
      }
    }
  }

  std::vector<Var> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return MakeResult(
      std::move(out), std::move(parents),
      [=](Node& self) {
        Node& px = Parent(self, 0);
        Node& pw = Parent(self, 1);
        double* dx = px.requires_grad ? px.GradBuffer().data() : nullptr;
        double* dw = pw.requires_grad ? pw.GradBuffer().data() : nullptr;
        std::vector<double> buf(static_cast<size_t>(cin_g * kernel * out_len));
        for (int64_t s = 0; s < n; ++s) {
          for (int64_t g = 0; g < groups; ++g) {
            const double* xs = px.value.data() + (s * cin + g * cin_g) * len;
            const double* dys = self.grad.data() + (s * cout + g * cout_g) * out_len;
            const double* wg = pw.value.data() + g * cout_g * cin_g * kernel;
            if (depthwise) {
              for (int64_t t = 0; t < out_len; ++t) {
                const double d = dys[t];
                for (int64_t k = 0; k < kernel; ++k) {
                  const int64_t pos =
                      t * opts.stride + k * opts.dilation - opts.pad_left;
                  if (pos < 0 || pos >= len) continue;
                  if (dw) dw[g * kernel + k] += d * xs[pos];
                  if (dx) dx[(s * cin + g) * len + pos] += d * wg[k];
                }
              }
              continue;
            }
            CMapRM dy(dys, cout_g, out_len);
            if (dw) {
              Im2Col1d(xs, cin_g, len, kernel, out_len, opts, buf.data());
              MapRM(dw + g * cout_g * cin_g * kernel, cout_g, cin_g * kernel)
                  .noalias() +=
                  dy * CMapRM(buf.data(), cin_g * kernel, out_len).transpose();
            }
            if (dx) {
              MapRM(buf.data(), cin_g * kernel, out_len).noalias() =
                  CMapRM(wg, cout_g, cin_g * kernel).transpose() * dy;
              Col2Im1d(buf.data(), cin_g, len, kernel, out_len, opts,
                       dx + (s * cin + g * cin_g) * len);
            }
          }
        }
        if (has_bias && Parent(self, 2).requires_grad) {
          Tensor& db = Parent(self, 2).GradBuffer();
          for (int64_t s = 0; s < n; ++s) {
            for (int64_t c = 0; c < cout; ++c) {
              const double* row = self.grad.data() + (s * cout + c) * out_len;
              double acc = 0.0;
              for (int64_t t = 0; t < out_len; ++t) acc += row[t];
              db[c] += acc;
            }
          }
        }
      });
}

Var ConvTranspose1d(const Var& x, const Var& weight, const Var& bias,
                    int64_t stride) {
  CheckRank(x, 3, "ConvTranspose1d input");
  CheckRank(weight, 3, "ConvTranspose1d weight");
  const int64_t n = x.dim(0), cin = x.dim(1), frames = x.dim(2);
  const int64_t cout = weight.dim(1), kernel = weight.dim(2);
  SPOOFBENCH_CHECK(weight.dim(0) == cin, "ConvTranspose1d: channel mismatch");
  SPOOFBENCH_CHECK(frames >= 1 && stride >= 1, "ConvTranspose1d: bad geometry");
  const int64_t out_len = (frames - 1) * stride + kernel;
  const bool has_bias = bias.defined();
  const int64_t ck = cout * kernel;

  Tensor out({n, cout, out_len});
  std::vector<double> cols(static_cast<size_t>(ck * frames));
  for (int64_t s = 0; s < n; ++s) {
    MapRM(cols.data(), ck, frames).noalias() =
        CMapRM(weight.value().data(), cin, ck).transpose() *
        CMapRM(x.value().data() + s * cin * frames, cin, frames);
    for (int64_t o = 0; o < cout; ++o) {
      double* ys = out.data() + (s * cout + o) * out_len;
      for (int64_t k = 0; k < kernel; ++k) {
        const double* row = cols.data() + (o * kernel + k) * frames;
        for (int64_t t = 0; t < frames; ++t) ys[t * stride + k] += row[t];
      }
      if (has_bias) {
        for (int64_t i = 0; i < out_len; ++i) ys[i] += bias.value()[o];
      }
    }
  }

  std::vector<Var> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return MakeResult(std::move(out), std::move(parents), [=](Node& self) {
    Node& px = Parent(self, 0);
    Node& pw = Parent(self, 1);
    std::vector<double> dcols(static_cast<size_t>(ck * frames));
    for (int64_t s = 0; s < n; ++s) {
      for (int64_t o = 0; o < cout; ++o) {
        const double* dys = self.grad.data() + (s * cout + o) * out_len;
        for (int64_t k = 0; k < kernel; ++k) {
          double* row = dcols.data() + (o * kernel + k) * frames;
          for (int64_t t = 0; t < frames; ++t) row[t] = dys[t * stride + k];
        }
      }
      CMapRM dc(dcols.data(), ck, frames);
      if (px.requires_grad) {
        MapRM(px.GradBuffer().data() + s * cin * frames, cin, frames).noalias() +=
            CMapRM(pw.value.data(), cin, ck) * dc;
      }
      if (pw.requires_grad) {
        MapRM(pw.GradBuffer().data(), cin, ck).noalias() +=
            CMapRM(px.value.data() + s * cin * frames, cin, frames) *
            dc.transpose();
      }
    }
    if (has_bias && Parent(self, 2).requires_grad) {
      Tensor& db = Parent(self, 2).GradBuffer();
      for (int64_t s = 0; s < n; ++s) {
        for (int64_t o = 0; o < cout; ++o) {
          const double* dys = self.grad.data() + (s * cout + o) * out_len;
          double acc = 0.0;
          for (int64_t i = 0; i < out_len; ++i) acc += dys[i];
          db[o] += acc;
        }
      }
    }
  });
}

Var Conv2dSame(const Var& x, const Var& weight, const Var& bias) {
  CheckRank(x, 4, "Conv2d input");
  CheckRank(weight, 4, "Conv2d weight");
  const int64_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  SPOOFBENCH_CHECK(weight.dim(1) == cin,
                   "Conv2d: input " + ShapeToString(x.shape()) + " weight " +
                       ShapeToString(weight.shape()));
  SPOOFBENCH_CHECK(kh % 2 == 1 && kw % 2 == 1, "Conv2d: kernel must be odd");
  const int64_t hw = h * w, ckk = cin * kh * kw;
  const bool has_bias = bias.defined();
  const bool pointwise = kh == 1 && kw == 1;

  Tensor out({n, cout, h, w});
  std::vector<double> cols(pointwise ? 0 : static_cast<size_t>(ckk * hw));
  for (int64_t s = 0; s < n; ++s) {
    const double* xs = x.value().data() + s * cin * hw;
    const double* src = xs;
    if (!pointwise) {
      Im2Col2d(xs, cin, h, w, kh, kw, cols.data());
      src = cols.data();
    }
    MapRM ys(out.data() + s * cout * hw, cout, hw);
    ys.noalias() = CMapRM(weight.value().data(), cout, ckk) * CMapRM(src, ckk, hw);
    if (has_bias) {
      ys.colwise() +=
          Eigen::Map<const Eigen::VectorXd>(bias.value().data(), cout);
    }
  }

  std::vector<Var> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return MakeResult(std::move(out), std::move(parents), [=](Node& self) {
    Node& px = Parent(self, 0);
    Node& pw = Parent(self, 1);
    std::vector<double> buf(pointwise ? 0 : static_cast<size_t>(ckk * hw));
    for (int64_t s = 0; s < n; ++s) {
      const double* xs = px.value.data() + s * cin * hw;
      CMapRM dy(self.grad.data() + s * cout * hw, cout, hw);
      if (pw.requires_grad) {
        const double* src = xs;
        if (!pointwise) {
          Im2Col2d(xs, cin, h, w, kh, kw, buf.data());
          src = buf.data();
        }
        MapRM(pw.GradBuffer().data(), cout, ckk).noalias() +=
            dy * CMapRM(src, ckk, hw).transpose();
      }
      if (px.requires_grad) {
        double* dx = px.GradBuffer().data() + s * cin * hw;
        if (pointwise) {
          MapRM(dx, cin, hw).noalias() +=
              CMapRM(pw.value.data(), cout, ckk).transpose() * dy;
        } else {
          MapRM(buf.data(), ckk, hw).noalias() =
              CMapRM(pw.value.data(), cout, ckk).transpose() * dy;
          Col2Im2d(buf.data(), cin, h, w, kh, kw, dx);
        }
      }
    }
    if (has_bias && Parent(self, 2).requires_grad) {
      Tensor& db = Parent(self, 2).GradBuffer();
      for (int64_t s = 0; s < n; ++s) {
        CMapRM dy(self.grad.data() + s * cout * hw, cout, hw);
        Eigen::Map<Eigen::VectorXd>(db.data(), cout) += dy.rowwise().sum();
      }
    }
  });
}

Var MaxPool2d(const Var& x, int64_t kernel, int64_t stride) {
  CheckRank(x, 4, "MaxPool2d");
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  SPOOFBENCH_CHECK(h >= kernel && w >= kernel,
                   "MaxPool2d: input " + ShapeToString(x.shape()) +
                       " smaller than kernel");
  const int64_t oh = (h - kernel) / stride + 1;
  const int64_t ow = (w - kernel) / stride + 1;
  Tensor out({n, c, oh, ow});
  std::vector<int64_t> argmax(static_cast<size_t>(out.numel()));
  const double* in = x.value().data();
  for (int64_t plane = 0; plane < n * c; ++plane) {
    for (int64_t i = 0; i < oh; ++i) {
      for (int64_t j = 0; j < ow; ++j) {
        int64_t best = -1;
        double best_v = -std::numeric_limits<double>::infinity();
        for (int64_t a = 0; a < kernel; ++a) {
          for (int64_t b = 0; b < kernel; ++b) {
            const int64_t idx = (plane * h + i * stride + a) * w + j * stride + b;
            if (best < 0 || in[idx] > best_v) {
              best = idx;
              best_v = in[idx];
            }
          }
        }
        const int64_t o = (plane * oh + i) * ow + j;
        out[o] = best_v;
        argmax[static_cast<size_t>(o)] = best;
      }
    }
  }
  return MakeResult(std::move(out), {x},
                    [argmax = std::move(argmax)](Node& self) {
                      Node& p = Parent(self, 0);
                      if (!p.requires_grad) return;
                      Tensor& g = p.GradBuffer();
                      for (size_t o = 0; o < argmax.size(); ++o) {
                        g[argmax[o]] += self.grad[static_cast<int64_t>(o)];
                      }
                    });
}

// ---------------------------------------------------------------------------
// Normalization

Var BatchNorm(const Var& x, const Var& gamma, const Var& beta,
              Tensor* running_mean, Tensor* running_var, bool training,
              double momentum, double eps) {
  SPOOFBENCH_CHECK(x.value().rank() >= 2, "BatchNorm: rank < 2");
  const int64_t n = x.dim(0), c = x.dim(1);
  const int64_t inner = x.value().numel() / (n * c);
  const int64_t count = n * inner;
  SPOOFBENCH_CHECK(gamma.value().numel() == c && beta.value().numel() == c,
                   "BatchNorm: affine size");
  std::vector<double> mean(static_cast<size_t>(c)), invstd(static_cast<size_t>(c));
  const double* in = x.value().data();
  for (int64_t ch = 0; ch < c; ++ch) {
    if (training) {
      SPOOFBENCH_CHECK(count > 1, "BatchNorm: need more than one value per channel");
      double sum = 0.0;
      for (int64_t s = 0; s < n; ++s) {
        const double* p = in + (s * c + ch) * inner;
        for (int64_t i = 0; i < inner; ++i) sum += p[i];
      }
      const double mu = sum / static_cast<double>(count);
      double sq = 0.0;
      for (int64_t s = 0; s < n; ++s) {
        const double* p = in + (s * c + ch) * inner;
        for (int64_t i = 0; i < inner; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      const double var = sq / static_cast<double>(count);
      mean[ch] = mu;
      invstd[ch] = 1.0 / std::sqrt(var + eps);
      if (running_mean != nullptr && running_var != nullptr) {
        const double unbiased = sq / static_cast<double>(count - 1);
        (*running_mean)[ch] = (1.0 - momentum) * (*running_mean)[ch] + momentum * mu;
        (*running_var)[ch] = (1.0 - momentum) * (*running_var)[ch] + momentum * unbiased;
      }
    } else {
      SPOOFBENCH_CHECK(running_mean && running_var, "BatchNorm: no running stats");
      mean[ch] = (*running_mean)[ch];
      invstd[ch] = 1.0 / std::sqrt((*running_var)[ch] + eps);
    }
  }
  Tensor out(x.shape());
  Tensor xhat(x.shape());
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const int64_t base = (s * c + ch) * inner;
      const double g = gamma.value()[ch], b = beta.value()[ch];
      for (int64_t i = 0; i < inner; ++i) {
        const double v = (in[base + i] - mean[ch]) * invstd[ch];
        xhat[base + i] = v;
        out[base + i] = g * v + b;
      }
    }
  }
  return MakeResult(
      std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat)](Node& self) {
        Node& px = Parent(self, 0);
        Node& pg = Parent(self, 1);
        Node& pb = Parent(self, 2);
        const double* dy = self.grad.data();
        for (int64_t ch = 0; ch < c; ++ch) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int64_t s = 0; s < n; ++s) {
            const int64_t base = (s * c + ch) * inner;
            for (int64_t i = 0; i < inner; ++i) {
              sum_dy += dy[base + i];
              sum_dy_xhat += dy[base + i] * xhat[base + i];
            }
          }
          if (pg.requires_grad) pg.GradBuffer()[ch] += sum_dy_xhat;
          if (pb.requires_grad) pb.GradBuffer()[ch] += sum_dy;
          if (!px.requires_grad) continue;
          Tensor& dx = px.GradBuffer();
          const double g = pg.value[ch];
          const double m = static_cast<double>(count);
          for (int64_t s = 0; s < n; ++s) {
            const int64_t base = (s * c + ch) * inner;
            for (int64_t i = 0; i < inner; ++i) {
              if (training) {
                dx[base + i] += g * invstd[ch] / m *
                                (m * dy[base + i] - sum_dy -
                                 xhat[base + i] * sum_dy_xhat);
              } else {
                dx[base + i] += g * invstd[ch] * dy[base + i];
              }
            }
          }
        }
      });
}

Var GlobalLayerNorm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  CheckRank(x, 3, "GlobalLayerNorm");
  const int64_t n = x.dim(0), c = x.dim(1), t = x.dim(2);
  const int64_t per = c * t;
  SPOOFBENCH_CHECK(gamma.value().numel() == c && beta.value().numel() == c,
                   "GlobalLayerNorm: affine size");
  Tensor out(x.shape());
  Tensor xhat(x.shape());
  std::vector<double> invstd(static_cast<size_t>(n));
  const double* in = x.value().data();
  for (int64_t s = 0; s < n; ++s) {
    const double* p = in + s * per;
    double sum = 0.0;
    for (int64_t i = 0; i < per; ++i) sum += p[i];
    const double mu = sum / static_cast<double>(per);
    double sq = 0.0;
    for (int64_t i = 0; i < per; ++i) sq += (p[i] - mu) * (p[i] - mu);
    invstd[s] = 1.0 / std::sqrt(sq / static_cast<double>(per) + eps);
    for (int64_t ch = 0; ch < c; ++ch) {
      for (int64_t i = 0; i < t; ++i) {
        const int64_t idx = s * per + ch * t + i;
        xhat[idx] = (in[idx] - mu) * invstd[s];
        out[idx] = gamma.value()[ch] * xhat[idx] + beta.value()[ch];
      }
    }
  }
  return MakeResult(
      std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat), invstd = std::move(invstd)](Node& self) {
        Node& px = Parent(self, 0);
        Node& pg = Parent(self, 1);
        Node& pb = Parent(self, 2);
        const double* dy = self.grad.data();
        for (int64_t s = 0; s < n; ++s) {
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (int64_t ch = 0; ch < c; ++ch) {
            const double g = pg.value[ch];
            double dg = 0.0, db = 0.0;
            for (int64_t i = 0; i < t; ++i) {
              const int64_t idx = s * per + ch * t + i;
              dg += dy[idx] * xhat[idx];
              db += dy[idx];
              sum_dxhat += dy[idx] * g;
              sum_dxhat_xhat += dy[idx] * g * xhat[idx];
            }
            if (pg.requires_grad) pg.GradBuffer()[ch] += dg;
            if (pb.requires_grad) pb.GradBuffer()[ch] += db;
          }
          if (!px.requires_grad) continue;
          Tensor& dx = px.GradBuffer();
          const double m = static_cast<double>(per);
          for (int64_t ch = 0; ch < c; ++ch) {
            const double g = pg.value[ch];
            for (int64_t i = 0; i < t; ++i) {
              const int64_t idx = s * per + ch * t + i;
              dx[idx] += invstd[s] / m *
                         (m * dy[idx] * g - sum_dxhat - xhat[idx] * sum_dxhat_xhat);
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Reductions

Var MeanOverAxis1(const Var& x) {
  CheckRank(x, 3, "MeanOverAxis1");
  const int64_t n = x.dim(0), t = x.dim(1), d = x.dim(2);
  SPOOFBENCH_CHECK(t >= 1, "MeanOverAxis1: empty axis");
  Tensor out({n, d});
  for (int64_t s = 0; s < n; ++s) {
    for (int64_t i = 0; i < t; ++i) {
      const double* row = x.value().data() + (s * t + i) * d;
      for (int64_t j = 0; j < d; ++j) out[s * d + j] += row[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(t);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= inv;
  return MakeResult(std::move(out), {x}, [n, t, d, inv](Node& self) {
    Node& p = Parent(self, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.GradBuffer();
    for (int64_t s = 0; s < n; ++s) {
      for (int64_t i = 0; i < t; ++i) {
        for (int64_t j = 0; j < d; ++j) {
          g[(s * t + i) * d + j] += self.grad[s * d + j] * inv;
        }
      }
    }
  });
}

Var GlobalAveragePool(const Var& x) {
  SPOOFBENCH_CHECK(x.value().rank() >= 3, "GlobalAveragePool: rank < 3");
  const int64_t n = x.dim(0), c = x.dim(1);
  const int64_t inner = x.value().numel() / (n * c);
  Tensor out({n, c});
  for (int64_t r = 0; r < n * c; ++r) {
    double acc = 0.0;
    const double* p = x.value().data() + r * inner;
    for (int64_t i = 0; i < inner; ++i) acc += p[i];
    out[r] = acc / static_cast<double>(inner);
  }
  return MakeResult(std::move(out), {x}, [n, c, inner](Node& self) {
    Node& p = Parent(self, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.GradBuffer();
    const double inv = 1.0 / static_cast<double>(inner);
    for (int64_t r = 0; r < n * c; ++r) {
      const double d = self.grad[r] * inv;
      for (int64_t i = 0; i < inner; ++i) g[r * inner + i] += d;
    }
  });
}

Var RowSum(const Var& x) {
  CheckRank(x, 2, "RowSum");
  const int64_t n = x.dim(0), d = x.dim(1);
  Tensor out({n});
  for (int64_t s = 0; s < n; ++s) {
    double acc = 0.0;
    for (int64_t j = 0; j < d; ++j) acc += x.value()[s * d + j];
    out[s] = acc;
  }
  return MakeResult(std::move(out), {x}, [n, d](Node& self) {
    Node& p = Parent(self, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.GradBuffer();
    for (int64_t s = 0; s < n; ++s) {
      for (int64_t j = 0; j < d; ++j) g[s * d + j] += self.grad[s];
    }
  });
}

Var Sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().values()) acc += v;
  return MakeResult(Tensor::Scalar(acc), {x}, [](Node& self) {
    Node& p = Parent(self, 0);
    if (!p.requires_grad) return;
    Tensor& g = p.GradBuffer();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[0];
  });
}

Var Mean(const Var& x) {
  SPOOFBENCH_CHECK(x.value().numel() > 0, "Mean of empty tensor");
  return Scale(Sum(x), 1.0 / static_cast<double>(x.value().numel()));
}

// ---------------------------------------------------------------------------
// Losses

Var RowL2Normalize(const Var& x) {
  CheckRank(x, 2, "RowL2Normalize");
  const int64_t n = x.dim(0), d = x.dim(1);
  Tensor out({n, d});
  std::vector<double> norms(static_cast<size_t>(n));
  for (int64_t s = 0; s < n; ++s) {
    double sq = 0.0;
    for (int64_t j = 0; j < d; ++j) sq += x.value()[s * d + j] * x.value()[s * d + j];
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NumericDomainError("zero-norm or non-finite vector cannot be normalized");
    }
    norms[s] = norm;
    for (int64_t j = 0; j < d; ++j) out[s * d + j] = x.value()[s * d + j] / norm;
  }
  return MakeResult(std::move(out), {x},
                    [n, d, norms = std::move(norms)](Node& self) {
                      Node& p = Parent(self, 0);
                      if (!p.requires_grad) return;
                      Tensor& g = p.GradBuffer();
                      for (int64_t s = 0; s < n; ++s) {
                        double dot = 0.0;
                        for (int64_t j = 0; j < d; ++j) {
                          dot += self.grad[s * d + j] * self.value[s * d + j];
                        }
                        for (int64_t j = 0; j < d; ++j) {
                          g[s * d + j] += (self.grad[s * d + j] -
                                           self.value[s * d + j] * dot) /
                                          norms[s];
                        }
                      }
                    });
}

Var CosineSimilarity(const Var& a, const Var& b) {
  CheckSameShape(a, b, "CosineSimilarity");
  return RowSum(Mul(RowL2Normalize(a), RowL2Normalize(b)));
}

Var AddAngularMargin(const Var& cosines, std::span<const int64_t> labels,
                     double margin) {
  CheckRank(cosines, 2, "AddAngularMargin");
  const int64_t n = cosines.dim(0), k = cosines.dim(1);
  SPOOFBENCH_CHECK(static_cast<int64_t>(labels.size()) == n,
                   "AddAngularMargin: label count");
  Tensor out = cosines.value();
  std::vector<double> slope(static_cast<size_t>(n));
  std::vector<int64_t> idx(static_cast<size_t>(n));
  for (int64_t s = 0; s < n; ++s) {
    SPOOFBENCH_CHECK(labels[s] >= 0 && labels[s] < k, "AddAngularMargin: label range");
    const int64_t i = s * k + labels[s];
    const double raw = cosines.value()[i];
    const double c = std::clamp(raw, -1.0 + kCosineClamp, 1.0 - kCosineClamp);
    const double theta = std::acos(c);
    out[i] = std::cos(theta + margin);
    // d cos(theta + m) / d c = sin(theta + m) / sin(theta); zero when clamped.
    slope[s] = (raw == c) ? std::sin(theta + margin) / std::sin(theta) : 0.0;
    idx[s] = i;
  }
  return MakeResult(std::move(out), {cosines},
                    [slope = std::move(slope), idx = std::move(idx)](Node& self) {
                      Node& p = Parent(self, 0);
                      if (!p.requires_grad) return;
                      Tensor& g = p.GradBuffer();
                      std::vector<bool> target(static_cast<size_t>(g.numel()), false);
                      for (int64_t i : idx) target[static_cast<size_t>(i)] = true;
                      for (int64_t i = 0; i < g.numel(); ++i) {
                        if (!target[static_cast<size_t>(i)]) g[i] += self.grad[i];
                      }
                      for (size_t s = 0; s < idx.size(); ++s) {
                        g[idx[s]] += self.grad[idx[s]] * slope[s];
                      }
                    });
}

Var CrossEntropy(const Var& logits, std::span<const int64_t> labels) {
  CheckRank(logits, 2, "CrossEntropy");
  const int64_t n = logits.dim(0), k = logits.dim(1);
  SPOOFBENCH_CHECK(static_cast<int64_t>(labels.size()) == n && n > 0,
                   "CrossEntropy: label count");
  Tensor probs({n, k});
  double loss = 0.0;
  for (int64_t s = 0; s < n; ++s) {
    SPOOFBENCH_CHECK(labels[s] >= 0 && labels[s] < k, "CrossEntropy: label range");
    const double* row = logits.value().data() + s * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (int64_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double log_z = mx + std::log(z);
    for (int64_t j = 0; j < k; ++j) probs[s * k + j] = std::exp(row[j] - log_z);
    loss += log_z - row[labels[s]];
  }
  loss /= static_cast<double>(n);
  std::vector<int64_t> lab(labels.begin(), labels.end());
  return MakeResult(
      Tensor::Scalar(loss), {logits},
      [n, k, probs = std::move(probs), lab = std::move(lab)](Node& self) {
        Node& p = Parent(self, 0);
        if (!p.requires_grad) return;
        Tensor& g = p.GradBuffer();
        const double scale = self.grad[0] / static_cast<double>(n);
        for (int64_t s = 0; s < n; ++s) {
          for (int64_t j = 0; j < k; ++j) {
            const double onehot = (j == lab[s]) ? 1.0 : 0.0;
            g[s * k + j] += scale * (probs[s * k + j] - onehot);
          }
        }
      });
}

}  // namespace spoofbench::nn
