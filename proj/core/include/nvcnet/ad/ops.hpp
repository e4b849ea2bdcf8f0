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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nvcnet/ad/tensor.hpp"

// Differentiable primitives. Activations are laid out [batch, channels, time]
// throughout; the convolution, pooling and activation entry points also take
// an unbatched [channels, time] tensor and return an unbatched result.
namespace nvc::ad {

enum class Padding { kZero, kReflect };

enum class Activation { kGelu, kTanh, kSigmoid, kLeakyRelu, kGatedTanh };

inline constexpr double kLeakySlope = 0.2;

// While in scope, piecewise-linear ops (abs, clamp_min, leaky ReLU) fold the
// branch taken by every element into a running digest. Two evaluations with
// equal digests took identical branches everywhere.
class BranchRecorder {
 public:
  BranchRecorder();
  ~BranchRecorder();
  BranchRecorder(const BranchRecorder&) = delete;
  BranchRecorder& operator=(const BranchRecorder&) = delete;

  std::uint64_t digest() const { return digest_; }
  std::size_t count() const { return count_; }
  void add(bool branch) {
    digest_ = (digest_ ^ (branch ? 0x9eULL : 0x35ULL)) * 0x100000001b3ULL;
    ++count_;
  }
  static BranchRecorder* active();

 private:
  BranchRecorder* previous_;
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
  std::size_t count_ = 0;
};

struct Conv1dOptions {
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::size_t pad = 0;
  Padding padding = Padding::kZero;
  std::size_t groups = 1;
};

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, const Conv1dOptions& opt);
std::size_t conv_transpose1d_output_length(std::size_t length, std::size_t kernel,
                                           std::size_t stride, std::size_t pad);

// Elementwise arithmetic; shapes must match exactly.
template <class T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <class T> Tensor<T> add_scalar(const Tensor<T>& a, T offset);
template <class T> Tensor<T> square(const Tensor<T>& a);
template <class T> Tensor<T> abs(const Tensor<T>& a);
template <class T> Tensor<T> exp(const Tensor<T>& a);
template <class T> Tensor<T> log(const Tensor<T>& a);
// max(a, floor); the gradient is zero wherever the floor is active.
template <class T> Tensor<T> clamp_min(const Tensor<T>& a, T floor);
// log(1 + e^a), evaluated without overflow.
template <class T> Tensor<T> softplus(const Tensor<T>& a);

template <class T> Tensor<T> activation(const Tensor<T>& x, Activation kind);
template <class T> Tensor<T> gelu(const Tensor<T>& x) { return activation(x, Activation::kGelu); }

// Full reductions to a scalar. Accumulation happens in double.
template <class T> Tensor<T> sum(const Tensor<T>& a);
template <class T> Tensor<T> mean(const Tensor<T>& a);

template <class T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);

template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv1dOptions& opt);

// weight is [C_in, C_out, kernel].
template <class T>
Tensor<T> conv_transpose1d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           std::size_t stride, std::size_t pad);

// x is [B, N] (or [N]); weight is [M, N].
template <class T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

template <class T>
Tensor<T> avg_pool1d(const Tensor<T>& x, std::size_t kernel, std::size_t stride);

// [B, C, T] -> [B, C]
template <class T> Tensor<T> mean_time(const Tensor<T>& x);

// [B, C, T] + [B, C] broadcast along time.
template <class T> Tensor<T> add_time_broadcast(const Tensor<T>& x, const Tensor<T>& y);

// Divides every time frame of [B, C, T] by max(l2 norm over C, eps).
template <class T> Tensor<T> normalize_channels(const Tensor<T>& x, T eps);

// W = g * v / ||v|| where the norm runs over every axis but `axis`.
template <class T>
Tensor<T> weight_norm(const Tensor<T>& v, const Tensor<T>& g, std::size_t axis);

// [B, C, T] -> [B, T] picking channel index[b] for row b.
template <class T>
Tensor<T> select_channel(const Tensor<T>& x, std::span<const std::size_t> index);

// Rows of [B, D] reordered/duplicated by index -> [index.size(), D].
template <class T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> index);

// Fixed (non-trainable) matrix [R, K] applied to [B, K, F] -> [B, R, F].
template <class T>
Tensor<T> apply_matrix(std::span<const T> matrix, std::size_t rows, std::size_t cols,
                       const Tensor<T>& x);

// Mean softmax cross-entropy of logits [B, S] against integer labels.
template <class T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> labels);

// Slices [B, ...] along the batch axis.
template <class T>
Tensor<T> slice_batch(const Tensor<T>& x, std::size_t begin, std::size_t end);

// Concatenates along the batch axis; trailing shapes must agree.
template <class T>
Tensor<T> concat_batch(std::span<const Tensor<T>> parts);

}  // namespace nvc::ad
