/**
 * Copyright 2026 The nvcnet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nvcnet/ad/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace nvc::ad {

namespace {
thread_local BranchRecorder* active_recorder = nullptr;
}  // namespace

BranchRecorder::BranchRecorder() : previous_(active_recorder) { active_recorder = this; }
BranchRecorder::~BranchRecorder() { active_recorder = previous_; }
BranchRecorder* BranchRecorder::active() { return active_recorder; }

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " +
                         to_string(b));
  }
}

template <class T>
void accumulate(Node<T>* node, std::size_t i, T g) {
  node->grad_buffer()[i] += g;
}

// Generic elementwise unary op: forward f(x), backward g * df(x, y).
template <class T, class F, class D>
Tensor<T> unary(const Tensor<T>& a, F f, D df) {
  const auto x = a.values();
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  auto an = a.node_ptr();
  std::vector<T> saved = y;
  return make_result<T>(a.shape(), std::move(y), {&a},
                        [an, saved = std::move(saved), df](std::span<const T> g) {
                          if (!an->requires_grad) return;
                          auto& ga = an->grad_buffer();
                          const auto& xv = an->value;
                          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(xv[i], saved[i]);
                        });
}

// Maps a padded coordinate back into [0, length) or returns -1 for zero padding.
// Reflection repeats (mirror period 2*(length-1)) so pads longer than the
// signal stay well defined; a length-1 signal reflects onto itself.
inline std::ptrdiff_t pad_index(std::ptrdiff_t idx, std::ptrdiff_t length, Padding mode) {
  if (idx >= 0 && idx < length) return idx;
  if (mode == Padding::kZero) return -1;
  if (length == 1) return 0;
  const std::ptrdiff_t period = 2 * (length - 1);
  std::ptrdiff_t m = idx % period;
  if (m < 0) m += period;
  return m < length ? m : period - m;
}

// Range [lo, hi) of output positions t whose source t*stride + offset lies
// inside [0, length).
inline std::pair<std::size_t, std::size_t> interior(std::ptrdiff_t offset, std::size_t stride,
                                                    std::ptrdiff_t length, std::size_t cols_len) {
  const auto st = static_cast<std::ptrdiff_t>(stride);
  const auto n = static_cast<std::ptrdiff_t>(cols_len);
  std::ptrdiff_t lo = offset >= 0 ? 0 : (-offset + st - 1) / st;
  std::ptrdiff_t hi = length - offset <= 0 ? 0 : (length - offset - 1) / st + 1;
  lo = std::min(lo, n);
  hi = std::clamp(hi, lo, n);
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// cols[c*k + j, t] = src[c, t*stride + j*dil - pad] for t < cols_len.
template <class T>
void im2col(const T* src, std::size_t channels, std::size_t length, std::size_t kernel,
            std::size_t stride, std::size_t dilation, std::size_t pad, Padding mode,
            std::size_t cols_len, T* cols) {
  const auto L = static_cast<std::ptrdiff_t>(length);
  for (std::size_t c = 0; c < channels; ++c) {
    const T* s = src + c * length;
    for (std::size_t j = 0; j < kernel; ++j) {
      T* dst = cols + (c * kernel + j) * cols_len;
      const auto offset = static_cast<std::ptrdiff_t>(j * dilation) - static_cast<std::ptrdiff_t>(pad);
      const auto [lo, hi] = interior(offset, stride, L, cols_len);
      for (std::size_t t = 0; t < lo; ++t) {
        const auto idx = pad_index(static_cast<std::ptrdiff_t>(t * stride) + offset, L, mode);
        dst[t] = idx < 0 ? T(0) : s[idx];
      }
      if (lo < hi) {
        const T* first = s + (static_cast<std::ptrdiff_t>(lo * stride) + offset);
        if (stride == 1) {
          std::copy(first, first + (hi - lo), dst + lo);
        } else {
          for (std::size_t t = lo; t < hi; ++t) dst[t] = first[(t - lo) * stride];
        }
      }
      for (std::size_t t = hi; t < cols_len; ++t) {
        const auto idx = pad_index(static_cast<std::ptrdiff_t>(t * stride) + offset, L, mode);
        dst[t] = idx < 0 ? T(0) : s[idx];
      }
    }
  }
}

// Adjoint of im2col: dst[c, ...] += scattered cols.
template <class T>
void col2im(const T* cols, std::size_t channels, std::size_t length, std::size_t kernel,
            std::size_t stride, std::size_t dilation, std::size_t pad, Padding mode,
            std::size_t cols_len, T* dst) {
  const auto L = static_cast<std::ptrdiff_t>(length);
  for (std::size_t c = 0; c < channels; ++c) {
    T* d = dst + c * length;
    for (std::size_t j = 0; j < kernel; ++j) {
      const T* src = cols + (c * kernel + j) * cols_len;
      const auto offset = static_cast<std::ptrdiff_t>(j * dilation) - static_cast<std::ptrdiff_t>(pad);
      const auto [lo, hi] = interior(offset, stride, L, cols_len);
      for (std::size_t t = 0; t < lo; ++t) {
        const auto idx = pad_index(static_cast<std::ptrdiff_t>(t * stride) + offset, L, mode);
        if (idx >= 0) d[idx] += src[t];
      }
      if (lo < hi) {
        T* first = d + (static_cast<std::ptrdiff_t>(lo * stride) + offset);
        for (std::size_t t = lo; t < hi; ++t) first[(t - lo) * stride] += src[t];
      }
      for (std::size_t t = hi; t < cols_len; ++t) {
        const auto idx = pad_index(static_cast<std::ptrdiff_t>(t * stride) + offset, L, mode);
        if (idx >= 0) d[idx] += src[t];
      }
    }
  }
}

struct Batched {
  std::size_t batch;
  std::size_t channels;
  std::size_t length;
  bool unbatched;
};

template <class T>
Batched batched_view(const Tensor<T>& x, const char* op) {
  if (x.rank() == 3) return {x.dim(0), x.dim(1), x.dim(2), false};
  if (x.rank() == 2) return {1, x.dim(0), x.dim(1), true};
  throw DimensionError(std::string(op) + ": expected [C, T] or [B, C, T], got " + to_string(x.shape()));
}

Shape batched_shape(const Batched& b, std::size_t channels, std::size_t length) {
  if (b.unbatched) return {channels, length};
  return {b.batch, channels, length};
}

template <class T>
double accumulate_sum(std::span<const T> v) {
  double s = 0.0;
  for (auto x : v) s += static_cast<double>(x);
  return s;
}

}  // namespace

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const Conv1dOptions& opt) {
  const std::size_t padded = length + 2 * opt.pad;
  const std::size_t span = opt.dilation * (kernel - 1) + 1;
  if (padded < span) {
    throw SizeError("conv1d: padded length " + std::to_string(padded) +
                    " is shorter than the effective kernel " + std::to_string(span));
  }
  return (padded - span) / opt.stride + 1;
}

std::size_t conv_transpose1d_output_length(std::size_t length, std::size_t kernel, std::size_t stride,
                                           std::size_t pad) {
  const std::size_t full = (length - 1) * stride + kernel;
  if (length == 0 || full <= 2 * pad) {
    throw SizeError("conv_transpose1d: output would be empty");
  }
  return full - 2 * pad;
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  const auto x = a.values();
  const auto y = b.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  return make_result<T>(a.shape(), std::move(out), {&a, &b}, [an, bn](std::span<const T> g) {
    for (auto* n : {an.get(), bn.get()}) {
      if (!n->requires_grad) continue;
      auto& gn = n->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gn[i] += g[i];
    }
  });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  const auto x = a.values();
  const auto y = b.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  return make_result<T>(a.shape(), std::move(out), {&a, &b}, [an, bn](std::span<const T> g) {
    if (an->requires_grad) {
      auto& ga = an->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (bn->requires_grad) {
      auto& gb = bn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  const auto x = a.values();
  const auto y = b.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  auto an = a.node_ptr();
  auto bn = b.node_ptr();
  return make_result<T>(a.shape(), std::move(out), {&a, &b}, [an, bn](std::span<const T> g) {
    if (an->requires_grad) {
      auto& ga = an->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      auto& gb = bn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * an->value[i];
    }
  });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  const auto x = a.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * factor;
  auto an = a.node_ptr();
  return make_result<T>(a.shape(), std::move(out), {&a}, [an, factor](std::span<const T> g) {
    auto& ga = an->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& a, T offset) {
  const auto x = a.values();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + offset;
  auto an = a.node_ptr();
  return make_result<T>(a.shape(), std::move(out), {&a}, [an](std::span<const T> g) {
    auto& ga = an->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

template <class T>
Tensor<T> square(const Tensor<T>& a) {
  return unary(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

namespace {
template <class T>
void record_branches(const Tensor<T>& a, T threshold) {
  if (auto* r = BranchRecorder::active()) {
    for (auto x : a.values()) r->add(x > threshold);
  }
}
}  // namespace

template <class T>
Tensor<T> abs(const Tensor<T>& a) {
  record_branches(a, T(0));
  return unary(
      a, [](T x) { return std::abs(x); },
      [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
}

template <class T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <class T>
Tensor<T> log(const Tensor<T>& a) {
  return unary(a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <class T>
Tensor<T> clamp_min(const Tensor<T>& a, T floor) {
  record_branches(a, floor);
  return unary(
      a, [floor](T x) { return x > floor ? x : floor; },
      [floor](T x, T) { return x > floor ? T(1) : T(0); });
}

template <class T>
Tensor<T> softplus(const Tensor<T>& a) {
  return unary(
      a, [](T x) { return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x))); },
      [](T x, T) { return T(1) / (T(1) + std::exp(-x)); });
}

template <class T>
Tensor<T> activation(const Tensor<T>& x, Activation kind) {
  switch (kind) {
    case Activation::kGelu: {
      constexpr T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
      constexpr T inv_sqrt2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
      return unary(
          x, [inv_sqrt2](T v) { return T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2)); },
          [inv_sqrt2, inv_sqrt2pi](T v, T) {
            const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
            return cdf + v * inv_sqrt2pi * std::exp(T(-0.5) * v * v);
          });
    }
    case Activation::kTanh:
      return unary(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
    case Activation::kSigmoid:
      return unary(
          x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); });
    case Activation::kLeakyRelu: {
      const T slope = static_cast<T>(kLeakySlope);
      record_branches(x, T(0));
      return unary(
          x, [slope](T v) { return v >= T(0) ? v : slope * v; },
          [slope](T v, T) { return v >= T(0) ? T(1) : slope; });
    }
    case Activation::kGatedTanh:
      break;
  }
  // Gated tanh: channels split in half, tanh(first) * sigmoid(second).
  const auto shape = batched_view(x, "gated_tanh");
  if (shape.channels % 2 != 0) {
    throw DimensionError("gated_tanh: channel count " + std::to_string(shape.channels) +
                         " is odd");
  }
  const std::size_t half = shape.channels / 2;
  const std::size_t plane = half * shape.length;
  const auto in = x.values();
  std::vector<T> out(shape.batch * plane);
  std::vector<T> th(out.size());
  std::vector<T> sg(out.size());
  for (std::size_t b = 0; b < shape.batch; ++b) {
    const T* a = in.data() + b * 2 * plane;
    const T* s = a + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const std::size_t o = b * plane + i;
      th[o] = std::tanh(a[i]);
      sg[o] = T(1) / (T(1) + std::exp(-s[i]));
      out[o] = th[o] * sg[o];
    }
  }
  auto xn = x.node_ptr();
  return make_result<T>(
      batched_shape(shape, half, shape.length), std::move(out), {&x},
      [xn, th = std::move(th), sg = std::move(sg), shape, plane](std::span<const T> g) {
        auto& gx = xn->grad_buffer();
        for (std::size_t b = 0; b < shape.batch; ++b) {
          T* ga = gx.data() + b * 2 * plane;
          T* gs = ga + plane;
          for (std::size_t i = 0; i < plane; ++i) {
            const std::size_t o = b * plane + i;
            ga[i] += g[o] * sg[o] * (T(1) - th[o] * th[o]);
            gs[i] += g[o] * th[o] * sg[o] * (T(1) - sg[o]);
          }
        }
      });
}

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  const T total = static_cast<T>(accumulate_sum(a.values()));
  auto an = a.node_ptr();
  return make_result<T>(Shape{}, {total}, {&a}, [an](std::span<const T> g) {
    auto& ga = an->grad_buffer();
    for (auto& v : ga) v += g[0];
  });
}

template <class T>
Tensor<T> mean(const Tensor<T>& a) {
  const std::size_t n = a.numel();
  if (n == 0) throw SizeError("mean of an empty tensor");
  const T avg = static_cast<T>(accumulate_sum(a.values()) / static_cast<double>(n));
  auto an = a.node_ptr();
  return make_result<T>(Shape{}, {avg}, {&a}, [an, n](std::span<const T> g) {
    auto& ga = an->grad_buffer();
    const T share = g[0] / static_cast<T>(n);
    for (auto& v : ga) v += share;
  });
}

template <class T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw DimensionError("reshape: " + to_string(a.shape()) + " -> " + to_string(shape));
  }
  std::vector<T> out(a.values().begin(), a.values().end());
  auto an = a.node_ptr();
  return make_result<T>(std::move(shape), std::move(out), {&a}, [an](std::span<const T> g) {
    auto& ga = an->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv1dOptions& opt) {
  const auto in = batched_view(x, "conv1d");
  if (weight.rank() != 3) throw DimensionError("conv1d: weight must be [C_out, C_in/groups, k]");
  if (opt.stride == 0 || opt.dilation == 0 || opt.groups == 0) {
    throw ContractError("conv1d: stride, dilation and groups must be >= 1");
  }
  const std::size_t c_out = weight.dim(0);
  const std::size_t cg_in = weight.dim(1);
  const std::size_t kernel = weight.dim(2);
  const std::size_t groups = opt.groups;
  if (cg_in * groups != in.channels || c_out % groups != 0) {
    throw DimensionError("conv1d: input has " + std::to_string(in.channels) +
                         " channels but weight " + to_string(weight.shape()) + " with " +
                         std::to_string(groups) + " groups expects " +
                         std::to_string(cg_in * groups));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != c_out)) {
    throw DimensionError("conv1d: bias shape " + to_string(bias.shape()) + " != [" +
                         std::to_string(c_out) + "]");
  }
  const std::size_t t_out = conv1d_output_length(in.length, kernel, opt);
  const std::size_t cg_out = c_out / groups;
  const std::size_t kc = cg_in * kernel;
  const bool pointwise = kernel == 1 && opt.stride == 1 && opt.pad == 0;

  const auto xv = x.values();
  const auto wv = weight.values();
  std::vector<T> out(in.batch * c_out * t_out);
  std::vector<T> cols(pointwise ? 0 : kc * t_out);
  for (std::size_t b = 0; b < in.batch; ++b) {
    const T* xb = xv.data() + b * in.channels * in.length;
    T* ob = out.data() + b * c_out * t_out;
    for (std::size_t g = 0; g < groups; ++g) {
      const T* xg = xb + g * cg_in * in.length;
      const T* colp = xg;
      if (!pointwise) {
        im2col(xg, cg_in, in.length, kernel, opt.stride, opt.dilation, opt.pad, opt.padding, t_out,
               cols.data());
        colp = cols.data();
      }
      ConstMatMap<T> w(wv.data() + g * cg_out * kc, cg_out, kc);
      ConstMatMap<T> c(colp, kc, t_out);
      MatMap<T> o(ob + g * cg_out * t_out, cg_out, t_out);
      o.noalias() = w * c;
    }
    if (bias.defined()) {
      const auto bv = bias.values();
      for (std::size_t co = 0; co < c_out; ++co) {
        T* row = ob + co * t_out;
        for (std::size_t t = 0; t < t_out; ++t) row[t] += bv[co];
      }
    }
  }

  auto xn = x.node_ptr();
  auto wn = weight.node_ptr();
  auto bn = bias.defined() ? bias.node_ptr() : nullptr;
  return make_result<T>(
      batched_shape(in, c_out, t_out), std::move(out), {&x, &weight, &bias},
      [xn, wn, bn, in, opt, c_out, cg_in, cg_out, kernel, kc, t_out, groups,
       pointwise](std::span<const T> gout) {
        const bool need_x = xn->requires_grad;
        const bool need_w = wn->requires_grad;
        std::vector<T> cols(pointwise ? 0 : kc * t_out);
        std::vector<T> dcols(pointwise ? 0 : kc * t_out);
        for (std::size_t b = 0; b < in.batch; ++b) {
          const T* gb = gout.data() + b * c_out * t_out;
          for (std::size_t g = 0; g < groups; ++g) {
            ConstMatMap<T> go(gb + g * cg_out * t_out, cg_out, t_out);
            const T* xg = xn->value.data() + b * in.channels * in.length + g * cg_in * in.length;
            if (need_w) {
              const T* colp = xg;
              if (!pointwise) {
                im2col(xg, cg_in, in.length, kernel, opt.stride, opt.dilation, opt.pad,
                       opt.padding, t_out, cols.data());
                colp = cols.data();
              }
              MatMap<T> gw(wn->grad_buffer().data() + g * cg_out * kc, cg_out, kc);
              gw.noalias() += go * ConstMatMap<T>(colp, kc, t_out).transpose();
            }
            if (need_x) {
              ConstMatMap<T> w(wn->value.data() + g * cg_out * kc, cg_out, kc);
              T* gx = xn->grad_buffer().data() + b * in.channels * in.length + g * cg_in * in.length;
              if (pointwise) {
                MatMap<T>(gx, kc, t_out).noalias() += w.transpose() * go;
              } else {
                MatMap<T>(dcols.data(), kc, t_out).noalias() = w.transpose() * go;
                col2im(dcols.data(), cg_in, in.length, kernel, opt.stride, opt.dilation, opt.pad,
                       opt.padding, t_out, gx);
              }
            }
          }
          if (bn && bn->requires_grad) {
            auto& gbias = bn->grad_buffer();
            for (std::size_t co = 0; co < c_out; ++co) {
              double s = 0.0;
              for (std::size_t t = 0; t < t_out; ++t) s += gb[co * t_out + t];
              gbias[co] += static_cast<T>(s);
            }
          }
        }
      });
}

template <class T>
Tensor<T> conv_transpose1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           std::size_t stride, std::size_t pad) {
  const auto in = batched_view(x, "conv_transpose1d");
  if (weight.rank() != 3) throw DimensionError("conv_transpose1d: weight must be [C_in, C_out, k]");
  if (stride == 0) throw ContractError("conv_transpose1d: stride must be >= 1");
  if (weight.dim(0) != in.channels) {
    throw DimensionError("conv_transpose1d: input has " + std::to_string(in.channels) +
                         " channels but weight expects " + std::to_string(weight.dim(0)));
  }
  const std::size_t c_out = weight.dim(1);
  const std::size_t kernel = weight.dim(2);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != c_out)) {
    throw DimensionError("conv_transpose1d: bias shape mismatch");
  }
  const std::size_t t_out = conv_transpose1d_output_length(in.length, kernel, stride, pad);
  const std::size_t ck = c_out * kernel;

  const auto xv = x.values();
  const auto wv = weight.values();
  std::vector<T> out(in.batch * c_out * t_out, T(0));
  std::vector<T> cols(ck * in.length);
  ConstMatMap<T> w(wv.data(), in.channels, ck);
  for (std::size_t b = 0; b < in.batch; ++b) {
    ConstMatMap<T> xb(xv.data() + b * in.channels * in.length, in.channels, in.length);
    MatMap<T>(cols.data(), ck, in.length).noalias() = w.transpose() * xb;
    T* ob = out.data() + b * c_out * t_out;
    col2im(cols.data(), c_out, t_out, kernel, stride, 1, pad, Padding::kZero, in.length, ob);
    if (bias.defined()) {
      const auto bv = bias.values();
      for (std::size_t co = 0; co < c_out; ++co) {
        T* row = ob + co * t_out;
        for (std::size_t t = 0; t < t_out; ++t) row[t] += bv[co];
      }
    }
  }

  auto xn = x.node_ptr();
  auto wn = weight.node_ptr();
  auto bn = bias.defined() ? bias.node_ptr() : nullptr;
  return make_result<T>(
      batched_shape(in, c_out, t_out), std::move(out), {&x, &weight, &bias},
      [xn, wn, bn, in, c_out, kernel, ck, stride, pad, t_out](std::span<const T> gout) {
        std::vector<T> dcols(ck * in.length);
        for (std::size_t b = 0; b < in.batch; ++b) {
          const T* gb = gout.data() + b * c_out * t_out;
          im2col(gb, c_out, t_out, kernel, stride, 1, pad, Padding::kZero, in.length, dcols.data());
          ConstMatMap<T> dc(dcols.data(), ck, in.length);
          if (xn->requires_grad) {
            ConstMatMap<T> w(wn->value.data(), in.channels, ck);
            MatMap<T>(xn->grad_buffer().data() + b * in.channels * in.length, in.channels, in.length)
                .noalias() += w * dc;
          }
          if (wn->requires_grad) {
            ConstMatMap<T> xb(xn->value.data() + b * in.channels * in.length, in.channels, in.length);
            MatMap<T>(wn->grad_buffer().data(), in.channels, ck).noalias() += xb * dc.transpose();
          }
          if (bn && bn->requires_grad) {
            auto& gbias = bn->grad_buffer();
            for (std::size_t co = 0; co < c_out; ++co) {
              double s = 0.0;
              for (std::size_t t = 0; t < t_out; ++t) s += gb[co * t_out + t];
              gbias[co] += static_cast<T>(s);
            }
          }
        }
      });
}

template <class T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2) throw DimensionError("dense: weight must be [M, N]");
  const bool unbatched = x.rank() == 1;
  if (!unbatched && x.rank() != 2) throw DimensionError("dense: input must be [N] or [B, N]");
  const std::size_t batch = unbatched ? 1 : x.dim(0);
  const std::size_t n = unbatched ? x.dim(0) : x.dim(1);
  const std::size_t m = weight.dim(0);
  if (weight.dim(1) != n) {
    throw DimensionError("dense: input size " + std::to_string(n) + " does not match weight " +
                         to_string(weight.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != m)) {
    throw DimensionError("dense: bias shape mismatch");
  }
  std::vector<T> out(batch * m);
  ConstMatMap<T> xm(x.values().data(), batch, n);
  ConstMatMap<T> w(weight.values().data(), m, n);
  MatMap<T> om(out.data(), batch, m);
  om.noalias() = xm * w.transpose();
  if (bias.defined()) {
    const auto bv = bias.values();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < m; ++j) out[b * m + j] += bv[j];
  }
  auto xn = x.node_ptr();
  auto wn = weight.node_ptr();
  auto bn = bias.defined() ? bias.node_ptr() : nullptr;
  Shape shape = unbatched ? Shape{m} : Shape{batch, m};
  return make_result<T>(std::move(shape), std::move(out), {&x, &weight, &bias},
                        [xn, wn, bn, batch, n, m](std::span<const T> g) {
                          ConstMatMap<T> gm(g.data(), batch, m);
                          if (xn->requires_grad) {
                            MatMap<T>(xn->grad_buffer().data(), batch, n).noalias() +=
                                gm * ConstMatMap<T>(wn->value.data(), m, n);
                          }
                          if (wn->requires_grad) {
                            MatMap<T>(wn->grad_buffer().data(), m, n).noalias() +=
                                gm.transpose() * ConstMatMap<T>(xn->value.data(), batch, n);
                          }
                          if (bn && bn->requires_grad) {
                            auto& gb = bn->grad_buffer();
                            for (std::size_t b = 0; b < batch; ++b)
                              for (std::size_t j = 0; j < m; ++j) gb[j] += g[b * m + j];
                          }
                        });
}

template <class T>
Tensor<T> avg_pool1d(const Tensor<T>& x, std::size_t kernel, std::size_t stride) {
  const auto in = batched_view(x, "avg_pool1d");
  if (kernel == 0 || stride == 0) throw ContractError("avg_pool1d: kernel and stride must be >= 1");
  if (in.length < kernel) {
    throw SizeError("avg_pool1d: input length " + std::to_string(in.length) +
                    " shorter than kernel " + std::to_string(kernel));
  }
  const std::size_t t_out = (in.length - kernel) / stride + 1;
  const std::size_t rows = in.batch * in.channels;
  const auto xv = x.values();
  std::vector<T> out(rows * t_out);
  const T inv = T(1) / static_cast<T>(kernel);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = xv.data() + r * in.length;
    for (std::size_t t = 0; t < t_out; ++t) {
      T s = T(0);
      for (std::size_t j = 0; j < kernel; ++j) s += src[t * stride + j];
      out[r * t_out + t] = s * inv;
    }
  }
  auto xn = x.node_ptr();
  return make_result<T>(batched_shape(in, in.channels, t_out), std::move(out), {&x},
                        [xn, rows, in, t_out, kernel, stride, inv](std::span<const T> g) {
                          auto& gx = xn->grad_buffer();
                          for (std::size_t r = 0; r < rows; ++r) {
                            T* dst = gx.data() + r * in.length;
                            for (std::size_t t = 0; t < t_out; ++t) {
                              const T share = g[r * t_out + t] * inv;
                              for (std::size_t j = 0; j < kernel; ++j) dst[t * stride + j] += share;
                            }
                          }
                        });
}

template <class T>
Tensor<T> mean_time(const Tensor<T>& x) {
  if (x.rank() != 3) throw DimensionError("mean_time: expected [B, C, T]");
  const std::size_t rows = x.dim(0) * x.dim(1);
  const std::size_t len = x.dim(2);
  if (len == 0) throw SizeError("mean_time: empty time axis");
  std::vector<T> out(rows);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = static_cast<T>(accumulate_sum(xv.subspan(r * len, len)) / static_cast<double>(len));
  }
  auto xn = x.node_ptr();
  return make_result<T>(Shape{x.dim(0), x.dim(1)}, std::move(out), {&x},
                        [xn, rows, len](std::span<const T> g) {
                          auto& gx = xn->grad_buffer();
                          for (std::size_t r = 0; r < rows; ++r) {
                            const T share = g[r] / static_cast<T>(len);
                            for (std::size_t t = 0; t < len; ++t) gx[r * len + t] += share;
                          }
                        });
}

template <class T>
Tensor<T> add_time_broadcast(const Tensor<T>& x, const Tensor<T>& y) {
  if (x.rank() != 3 || y.rank() != 2 || x.dim(0) != y.dim(0) || x.dim(1) != y.dim(1)) {
    throw DimensionError("add_time_broadcast: " + to_string(x.shape()) + " + " + to_string(y.shape()));
  }
  const std::size_t rows = x.dim(0) * x.dim(1);
  const std::size_t len = x.dim(2);
  const auto xv = x.values();
  const auto yv = y.values();
  std::vector<T> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < len; ++t) out[r * len + t] = xv[r * len + t] + yv[r];
  auto xn = x.node_ptr();
  auto yn = y.node_ptr();
  return make_result<T>(x.shape(), std::move(out), {&x, &y}, [xn, yn, rows, len](std::span<const T> g) {
    if (xn->requires_grad) {
      auto& gx = xn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (yn->requires_grad) {
      auto& gy = yn->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t t = 0; t < len; ++t) s += g[r * len + t];
        gy[r] += static_cast<T>(s);
      }
    }
  });
}

template <class T>
Tensor<T> normalize_channels(const Tensor<T>& x, T eps) {
  const auto in = batched_view(x, "normalize_channels");
  const auto xv = x.values();
  std::vector<T> out(xv.size());
  std::vector<T> norms(in.batch * in.length);
  for (std::size_t b = 0; b < in.batch; ++b) {
    const T* xb = xv.data() + b * in.channels * in.length;
    T* ob = out.data() + b * in.channels * in.length;
    for (std::size_t t = 0; t < in.length; ++t) {
      double s = 0.0;
      for (std::size_t c = 0; c < in.channels; ++c) {
        const double v = xb[c * in.length + t];
        s += v * v;
      }
      const T n = std::max(static_cast<T>(std::sqrt(s)), eps);
      norms[b * in.length + t] = n;
      for (std::size_t c = 0; c < in.channels; ++c) ob[c * in.length + t] = xb[c * in.length + t] / n;
    }
  }
  auto xn = x.node_ptr();
  std::vector<T> saved = out;
  return make_result<T>(
      x.shape(), std::move(out), {&x},
      [xn, in, eps, norms = std::move(norms), y = std::move(saved)](std::span<const T> g) {
        auto& gx = xn->grad_buffer();
        for (std::size_t b = 0; b < in.batch; ++b) {
          const std::size_t base = b * in.channels * in.length;
          for (std::size_t t = 0; t < in.length; ++t) {
            const T n = norms[b * in.length + t];
            if (n > eps) {
              double dot = 0.0;
              for (std::size_t c = 0; c < in.channels; ++c) {
                const std::size_t i = base + c * in.length + t;
                dot += static_cast<double>(g[i]) * y[i];
              }
              for (std::size_t c = 0; c < in.channels; ++c) {
                const std::size_t i = base + c * in.length + t;
                gx[i] += (g[i] - static_cast<T>(dot) * y[i]) / n;
              }
            } else {
              for (std::size_t c = 0; c < in.channels; ++c) {
                const std::size_t i = base + c * in.length + t;
                gx[i] += g[i] / eps;
              }
            }
          }
        }
      });
}

template <class T>
Tensor<T> weight_norm(const Tensor<T>& v, const Tensor<T>& g, std::size_t axis) {
  if (axis >= v.rank()) throw DimensionError("weight_norm: axis out of range");
  const std::size_t channels = v.dim(axis);
  if (g.rank() != 1 || g.dim(0) != channels) {
    throw DimensionError("weight_norm: scale shape " + to_string(g.shape()) + " vs " +
                         std::to_string(channels) + " channels");
  }
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < v.rank(); ++i) inner *= v.dim(i);
  const auto vv = v.values();
  const auto gv = g.values();
  auto channel_of = [inner, channels](std::size_t i) { return (i / inner) % channels; };

  std::vector<double> sq(channels, 0.0);
  for (std::size_t i = 0; i < vv.size(); ++i) sq[channel_of(i)] += static_cast<double>(vv[i]) * vv[i];
  std::vector<T> norm(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    if (!(sq[c] > 0.0)) throw ContractError("weight_norm: direction has a zero-norm channel");
    norm[c] = static_cast<T>(std::sqrt(sq[c]));
  }
  std::vector<T> w(vv.size());
  for (std::size_t i = 0; i < vv.size(); ++i) {
    const auto c = channel_of(i);
    w[i] = gv[c] * vv[i] / norm[c];
  }
  auto vn = v.node_ptr();
  auto gn = g.node_ptr();
  return make_result<T>(
      v.shape(), std::move(w), {&v, &g},
      [vn, gn, norm = std::move(norm), channel_of, channels](std::span<const T> dw) {
        const auto& vv = vn->value;
        std::vector<double> proj(channels, 0.0);  // sum dW * v per channel
        for (std::size_t i = 0; i < vv.size(); ++i) proj[channel_of(i)] += static_cast<double>(dw[i]) * vv[i];
        if (gn->requires_grad) {
          auto& dg = gn->grad_buffer();
          for (std::size_t c = 0; c < channels; ++c) dg[c] += static_cast<T>(proj[c] / norm[c]);
        }
        if (vn->requires_grad) {
          auto& dv = vn->grad_buffer();
          const auto& gv = gn->value;
          for (std::size_t i = 0; i < vv.size(); ++i) {
            const auto c = channel_of(i);
            const T n = norm[c];
            dv[i] += gv[c] / n * (dw[i] - static_cast<T>(proj[c] / (static_cast<double>(n) * n)) * vv[i]);
          }
        }
      });
}

template <class T>
Tensor<T> select_channel(const Tensor<T>& x, std::span<const std::size_t> index) {
  if (x.rank() != 3) throw DimensionError("select_channel: expected [B, C, T]");
  const std::size_t batch = x.dim(0);
  const std::size_t channels = x.dim(1);
  const std::size_t len = x.dim(2);
  if (index.size() != batch) throw DimensionError("select_channel: one index per batch row required");
  for (auto i : index) {
    if (i >= channels) {
      throw IndexError("select_channel: index " + std::to_string(i) + " >= " + std::to_string(channels));
    }
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  const auto xv = x.values();
  std::vector<T> out(batch * len);
  for (std::size_t b = 0; b < batch; ++b)
    std::copy_n(xv.data() + (b * channels + idx[b]) * len, len, out.data() + b * len);
  auto xn = x.node_ptr();
  return make_result<T>(Shape{batch, len}, std::move(out), {&x},
                        [xn, idx = std::move(idx), channels, len](std::span<const T> g) {
                          auto& gx = xn->grad_buffer();
                          for (std::size_t b = 0; b < idx.size(); ++b) {
                            T* dst = gx.data() + (b * channels + idx[b]) * len;
                            for (std::size_t t = 0; t < len; ++t) dst[t] += g[b * len + t];
                          }
                        });
}

template <class T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> index) {
  if (x.rank() != 2) throw DimensionError("gather_rows: expected [B, D]");
  const std::size_t rows = x.dim(0);
  const std::size_t width = x.dim(1);
  for (auto i : index) {
    if (i >= rows) throw IndexError("gather_rows: index " + std::to_string(i) + " >= " + std::to_string(rows));
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  const auto xv = x.values();
  std::vector<T> out(idx.size() * width);
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(xv.data() + idx[r] * width, width, out.data() + r * width);
  auto xn = x.node_ptr();
  const std::size_t n = idx.size();
  return make_result<T>(Shape{n, width}, std::move(out), {&x},
                        [xn, idx = std::move(idx), width](std::span<const T> g) {
                          auto& gx = xn->grad_buffer();
                          for (std::size_t r = 0; r < idx.size(); ++r)
                            for (std::size_t j = 0; j < width; ++j) gx[idx[r] * width + j] += g[r * width + j];
                        });
}

template <class T>
Tensor<T> apply_matrix(std::span<const T> matrix, std::size_t rows, std::size_t cols, const Tensor<T>& x) {
  if (matrix.size() != rows * cols) throw DimensionError("apply_matrix: matrix size mismatch");
  if (x.rank() != 3 || x.dim(1) != cols) {
    throw DimensionError("apply_matrix: expected [B, " + std::to_string(cols) + ", F], got " +
                         to_string(x.shape()));
  }
  const std::size_t batch = x.dim(0);
  const std::size_t frames = x.dim(2);
  std::vector<T> out(batch * rows * frames);
  ConstMatMap<T> m(matrix.data(), rows, cols);
  for (std::size_t b = 0; b < batch; ++b) {
    MatMap<T>(out.data() + b * rows * frames, rows, frames).noalias() =
        m * ConstMatMap<T>(x.values().data() + b * cols * frames, cols, frames);
  }
  std::vector<T> saved(matrix.begin(), matrix.end());
  auto xn = x.node_ptr();
  return make_result<T>(Shape{batch, rows, frames}, std::move(out), {&x},
                        [xn, m = std::move(saved), batch, rows, cols, frames](std::span<const T> g) {
                          ConstMatMap<T> mm(m.data(), rows, cols);
                          for (std::size_t b = 0; b < batch; ++b) {
                            MatMap<T>(xn->grad_buffer().data() + b * cols * frames, cols, frames).noalias() +=
                                mm.transpose() * ConstMatMap<T>(g.data() + b * rows * frames, rows, frames);
                          }
                        });
}

template <class T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2) throw DimensionError("cross_entropy: logits must be [B, S]");
  const std::size_t batch = logits.dim(0);
  const std::size_t classes = logits.dim(1);
  if (labels.size() != batch) throw DimensionError("cross_entropy: one label per row required");
  std::vector<T> probs(batch * classes);
  double total = 0.0;
  const auto lv = logits.values();
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] >= classes) throw IndexError("cross_entropy: label out of range");
    const T* row = lv.data() + b * classes;
    const T mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t s = 0; s < classes; ++s) z += std::exp(static_cast<double>(row[s] - mx));
    for (std::size_t s = 0; s < classes; ++s)
      probs[b * classes + s] = static_cast<T>(std::exp(static_cast<double>(row[s] - mx)) / z);
    total += -(static_cast<double>(row[labels[b]] - mx) - std::log(z));
  }
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  auto ln = logits.node_ptr();
  return make_result<T>(Shape{}, {static_cast<T>(total / static_cast<double>(batch))}, {&logits},
                        [ln, probs = std::move(probs), lab = std::move(lab), batch, classes](std::span<const T> g) {
                          auto& gl = ln->grad_buffer();
                          const T share = g[0] / static_cast<T>(batch);
                          for (std::size_t b = 0; b < batch; ++b)
                            for (std::size_t s = 0; s < classes; ++s) {
                              const T target = s == lab[b] ? T(1) : T(0);
                              gl[b * classes + s] += share * (probs[b * classes + s] - target);
                            }
                        });
}

template <class T>
Tensor<T> slice_batch(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  if (x.rank() == 0 || begin > end || end > x.dim(0)) {
    throw IndexError("slice_batch: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + to_string(x.shape()));
  }
  const std::size_t row = x.numel() / std::max<std::size_t>(x.dim(0), 1);
  Shape shape = x.shape();
  shape[0] = end - begin;
  std::vector<T> out(x.values().begin() + begin * row, x.values().begin() + end * row);
  auto xn = x.node_ptr();
  return make_result<T>(std::move(shape), std::move(out), {&x}, [xn, begin, row](std::span<const T> g) {
    auto& gx = xn->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gx[begin * row + i] += g[i];
  });
}

template <class T>
Tensor<T> concat_batch(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw SizeError("concat_batch: nothing to concatenate");
  Shape shape = parts[0].shape();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() != shape.size() || !std::equal(p.shape().begin() + 1, p.shape().end(), shape.begin() + 1)) {
      throw DimensionError("concat_batch: trailing shapes differ");
    }
    total += p.dim(0);
  }
  shape[0] = total;
  std::vector<T> out;
  out.reserve(numel(shape));
  std::vector<std::shared_ptr<Node<T>>> nodes;
  bool track = false;
  for (const auto& p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
    nodes.push_back(p.node_ptr());
    track = track || p.requires_grad();
  }
  // make_result only inspects the listed inputs, so pass a representative
  // tracked tensor when any part needs a gradient.
  const Tensor<T>* probe = nullptr;
  for (const auto& p : parts)
    if (p.requires_grad()) probe = &p;
  return make_result<T>(std::move(shape), std::move(out), {track ? probe : &parts[0]},
                        [nodes = std::move(nodes)](std::span<const T> g) {
                          std::size_t offset = 0;
                          for (const auto& n : nodes) {
                            const std::size_t count = n->value.size();
                            if (n->requires_grad) {
                              auto& gn = n->grad_buffer();
                              for (std::size_t i = 0; i < count; ++i) gn[i] += g[offset + i];
                            }
                            offset += count;
                          }
                        });
}

#define NVC_INSTANTIATE(T)                                                                          \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> scale(const Tensor<T>&, T);                                                    \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                               \
  template Tensor<T> square(const Tensor<T>&);                                                      \
  template Tensor<T> abs(const Tensor<T>&);                                                         \
  template Tensor<T> exp(const Tensor<T>&);                                                         \
  template Tensor<T> log(const Tensor<T>&);                                                         \
  template Tensor<T> clamp_min(const Tensor<T>&, T);                                                \
  template Tensor<T> softplus(const Tensor<T>&);                                                    \
  template Tensor<T> activation(const Tensor<T>&, Activation);                                      \
  template Tensor<T> sum(const Tensor<T>&);                                                         \
  template Tensor<T> mean(const Tensor<T>&);                                                        \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                              \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                   \
                            const Conv1dOptions&);                                                  \
  template Tensor<T> conv_transpose1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                      std::size_t, std::size_t);                                    \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> avg_pool1d(const Tensor<T>&, std::size_t, std::size_t);                        \
  template Tensor<T> mean_time(const Tensor<T>&);                                                   \
  template Tensor<T> add_time_broadcast(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> normalize_channels(const Tensor<T>&, T);                                       \
  template Tensor<T> weight_norm(const Tensor<T>&, const Tensor<T>&, std::size_t);                  \
  template Tensor<T> select_channel(const Tensor<T>&, std::span<const std::size_t>);                \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);                   \
  template Tensor<T> apply_matrix(std::span<const T>, std::size_t, std::size_t, const Tensor<T>&);  \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const std::size_t>);                 \
  template Tensor<T> slice_batch(const Tensor<T>&, std::size_t, std::size_t);                       \
  template Tensor<T> concat_batch(std::span<const Tensor<T>>);

NVC_INSTANTIATE(float)
NVC_INSTANTIATE(double)

#undef NVC_INSTANTIATE

}  // namespace nvc::ad
