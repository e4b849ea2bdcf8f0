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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nvcnet/ad/ops.hpp"
#include "nvcnet/ad/tensor.hpp"

namespace nvc::model {

using Rng = std::mt19937_64;

template <class T>
struct NamedParameter {
  std::string name;
  ad::Tensor<T> tensor;
};

template <class T>
using ParameterList = std::vector<NamedParameter<T>>;

template <class T>
std::size_t count_scalars(const ParameterList<T>& params);

template <class T>
void set_requires_grad(ParameterList<T>& params, bool on);

template <class T>
void zero_grad(ParameterList<T>& params);

// Copies values between same-layout parameter lists (any precision).
template <class Dst, class Src>
void copy_values(const ParameterList<Src>& src, ParameterList<Dst>& dst);

// Trainable weight W = g * v / ||v||, normalized per output channel (`axis`).
// Initially v ~ U(-sqrt(3/fan_in), sqrt(3/fan_in)) and g = ||v||. Biases start at zero.
template <class T>
struct WeightNormParam {
  ad::Tensor<T> direction;
  ad::Tensor<T> scale;
  std::size_t axis = 0;

  static WeightNormParam init(ad::Shape shape, std::size_t axis, std::size_t fan_in, Rng& rng);
  ad::Tensor<T> effective() const { return ad::weight_norm(direction, scale, axis); }
  void collect(ParameterList<T>& out, const std::string& prefix) const;
};

template <class T>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, ad::Conv1dOptions options,
         Rng& rng);

  ad::Tensor<T> operator()(const ad::Tensor<T>& x) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

  WeightNormParam<T>& weight() { return weight_; }
  const WeightNormParam<T>& weight() const { return weight_; }
  ad::Tensor<T>& bias() { return bias_; }
  const ad::Conv1dOptions& options() const { return options_; }

 private:
  WeightNormParam<T> weight_;
  ad::Tensor<T> bias_;
  ad::Conv1dOptions options_;
};

// Weight stored [C_in, C_out, k]; normalized per output channel (axis 1).
template <class T>
class ConvTranspose1d {
 public:
  ConvTranspose1d() = default;
  ConvTranspose1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
                  std::size_t pad, Rng& rng);

  ad::Tensor<T> operator()(const ad::Tensor<T>& x) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

 private:
  WeightNormParam<T> weight_;
  ad::Tensor<T> bias_;
  std::size_t stride_ = 1;
  std::size_t pad_ = 0;
};

template <class T>
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t in_features, std::size_t out_features, Rng& rng);

  ad::Tensor<T> operator()(const ad::Tensor<T>& x) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

  WeightNormParam<T>& weight() { return weight_; }
  const WeightNormParam<T>& weight() const { return weight_; }
  ad::Tensor<T>& bias() { return bias_; }

 private:
  WeightNormParam<T> weight_;
  ad::Tensor<T> bias_;
};

// x + proj(gated_tanh(dilated_conv(x) [+ broadcast(cond_map(z))])).
template <class T>
class ResidualBlock {
 public:
  ResidualBlock() = default;
  // cond_dim == 0 builds an unconditioned block.
  ResidualBlock(std::size_t channels, std::size_t dilation, std::size_t cond_dim, Rng& rng);

  ad::Tensor<T> operator()(const ad::Tensor<T>& x, const ad::Tensor<T>* cond = nullptr) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

  Conv1d<T>& projection() { return proj_; }
  std::optional<Dense<T>>& conditioning() { return cond_; }
  std::size_t dilation() const { return dilation_; }

 private:
  std::size_t channels_ = 0;
  std::size_t dilation_ = 1;
  Conv1d<T> dilated_;
  std::optional<Dense<T>> cond_;
  Conv1d<T> proj_;
};

template <class T>
class ResidualStack {
 public:
  ResidualStack() = default;
  ResidualStack(std::size_t channels, const std::vector<std::size_t>& dilations, std::size_t cond_dim, Rng& rng);

  ad::Tensor<T> operator()(const ad::Tensor<T>& x, const ad::Tensor<T>* cond = nullptr) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

  std::vector<ResidualBlock<T>>& blocks() { return blocks_; }

 private:
  std::vector<ResidualBlock<T>> blocks_;
};

}  // namespace nvc::model
