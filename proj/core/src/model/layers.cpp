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

#include "nvcnet/model/layers.hpp"

#include <cmath>

namespace nvc::model {
namespace {

template <class T>
ad::Tensor<T> uniform(ad::Shape shape, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<T> v(ad::numel(shape));
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return ad::Tensor<T>(std::move(shape), std::move(v), true);
}

}  // namespace

template <class T>
std::size_t count_scalars(const ParameterList<T>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

template <class T>
void set_requires_grad(ParameterList<T>& params, bool on) {
  for (auto& p : params) p.tensor.set_requires_grad(on);
}

template <class T>
void zero_grad(ParameterList<T>& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

template <class Dst, class Src>
void copy_values(const ParameterList<Src>& src, ParameterList<Dst>& dst) {
  if (src.size() != dst.size()) throw DimensionError("copy_values: parameter lists differ in length");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].tensor.shape() != dst[i].tensor.shape() || src[i].name != dst[i].name) {
      throw DimensionError("copy_values: parameter '" + src[i].name + "' layout differs");
    }
    auto out = dst[i].tensor.mutable_values();
    const auto in = src[i].tensor.values();
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = static_cast<Dst>(in[j]);
  }
}

template <class T>
WeightNormParam<T> WeightNormParam<T>::init(ad::Shape shape, std::size_t axis, std::size_t fan_in, Rng& rng) {
  WeightNormParam p;
  p.axis = axis;
  const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
  p.direction = uniform<T>(shape, bound, rng);
  const std::size_t channels = shape[axis];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  std::vector<double> sq(channels, 0.0);
  const auto v = p.direction.values();
  for (std::size_t i = 0; i < v.size(); ++i) sq[(i / inner) % channels] += static_cast<double>(v[i]) * v[i];
  std::vector<T> g(channels);
  for (std::size_t c = 0; c < channels; ++c) g[c] = static_cast<T>(std::sqrt(sq[c]));
  p.scale = ad::Tensor<T>(ad::Shape{channels}, std::move(g), true);
  return p;
}

template <class T>
void WeightNormParam<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  out.push_back({prefix + ".v", direction});
  out.push_back({prefix + ".g", scale});
}

template <class T>
Conv1d<T>::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                  ad::Conv1dOptions options, Rng& rng)
    : options_(options) {
  const std::size_t per_group = in_channels / options.groups;
  const std::size_t fan_in = per_group * kernel;
  weight_ = WeightNormParam<T>::init({out_channels, per_group, kernel}, 0, fan_in, rng);
  bias_ = ad::Tensor<T>::zeros({out_channels}, true);
}

template <class T>
ad::Tensor<T> Conv1d<T>::operator()(const ad::Tensor<T>& x) const {
  return ad::conv1d(x, weight_.effective(), bias_, options_);
}

template <class T>
void Conv1d<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  weight_.collect(out, prefix + ".weight");
  out.push_back({prefix + ".bias", bias_});
}

template <class T>
ConvTranspose1d<T>::ConvTranspose1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                                    std::size_t stride, std::size_t pad, Rng& rng)
    : stride_(stride), pad_(pad) {
  const std::size_t fan_in = in_channels * kernel / stride;
  weight_ = WeightNormParam<T>::init({in_channels, out_channels, kernel}, 1, fan_in, rng);
  bias_ = ad::Tensor<T>::zeros({out_channels}, true);
}

template <class T>
ad::Tensor<T> ConvTranspose1d<T>::operator()(const ad::Tensor<T>& x) const {
  return ad::conv_transpose1d(x, weight_.effective(), bias_, stride_, pad_);
}

template <class T>
void ConvTranspose1d<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  weight_.collect(out, prefix + ".weight");
  out.push_back({prefix + ".bias", bias_});
}

template <class T>
Dense<T>::Dense(std::size_t in_features, std::size_t out_features, Rng& rng) {
  weight_ = WeightNormParam<T>::init({out_features, in_features}, 0, in_features, rng);
  bias_ = ad::Tensor<T>::zeros({out_features}, true);
}

template <class T>
ad::Tensor<T> Dense<T>::operator()(const ad::Tensor<T>& x) const {
  return ad::dense(x, weight_.effective(), bias_);
}

template <class T>
void Dense<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  weight_.collect(out, prefix + ".weight");
  out.push_back({prefix + ".bias", bias_});
}

template <class T>
ResidualBlock<T>::ResidualBlock(std::size_t channels, std::size_t dilation, std::size_t cond_dim, Rng& rng)
    : channels_(channels), dilation_(dilation) {
  ad::Conv1dOptions dil;
  dil.dilation = dilation;
  dil.pad = dilation;
  dil.padding = ad::Padding::kReflect;
  dilated_ = Conv1d<T>(channels, 2 * channels, 3, dil, rng);
  if (cond_dim > 0) cond_.emplace(cond_dim, 2 * channels, rng);
  proj_ = Conv1d<T>(channels, channels, 1, ad::Conv1dOptions{}, rng);
}

template <class T>
ad::Tensor<T> ResidualBlock<T>::operator()(const ad::Tensor<T>& x, const ad::Tensor<T>* cond) const {
  auto h = dilated_(x);
  if (cond_) {
    if (cond == nullptr) throw ContractError("conditioned residual block called without an embedding");
    const std::size_t expected = cond_->weight().direction.dim(1);
    if (cond->rank() != 2 || cond->dim(1) != expected) {
      throw DimensionError("residual block conditioning expects [B, " + std::to_string(expected) + "], got " +
                           ad::to_string(cond->shape()));
    }
    h = ad::add_time_broadcast(h, (*cond_)(*cond));
  } else if (cond != nullptr) {
    throw ContractError("unconditioned residual block received an embedding");
  }
  h = ad::activation(h, ad::Activation::kGatedTanh);
  return ad::add(x, proj_(h));
}

template <class T>
void ResidualBlock<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  dilated_.collect(out, prefix + ".dilated");
  if (cond_) cond_->collect(out, prefix + ".cond");
  proj_.collect(out, prefix + ".proj");
}

template <class T>
ResidualStack<T>::ResidualStack(std::size_t channels, const std::vector<std::size_t>& dilations,
                                std::size_t cond_dim, Rng& rng) {
  for (auto d : dilations) blocks_.emplace_back(channels, d, cond_dim, rng);
}

template <class T>
ad::Tensor<T> ResidualStack<T>::operator()(const ad::Tensor<T>& x, const ad::Tensor<T>* cond) const {
  auto h = x;
  for (const auto& b : blocks_) h = b(h, cond);
  return h;
}

template <class T>
void ResidualStack<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(out, prefix + "." + std::to_string(i));
}

#define NVC_INSTANTIATE(T)                                              \
  template std::size_t count_scalars(const ParameterList<T>&);         \
  template void set_requires_grad(ParameterList<T>&, bool);            \
  template void zero_grad(ParameterList<T>&);                          \
  template struct WeightNormParam<T>;                                  \
  template class Conv1d<T>;                                            \
  template class ConvTranspose1d<T>;                                   \
  template class Dense<T>;                                             \
  template class ResidualBlock<T>;                                     \
  template class ResidualStack<T>;

NVC_INSTANTIATE(float)
NVC_INSTANTIATE(double)

#undef NVC_INSTANTIATE

template void copy_values(const ParameterList<float>&, ParameterList<double>&);
template void copy_values(const ParameterList<double>&, ParameterList<float>&);
template void copy_values(const ParameterList<float>&, ParameterList<float>&);
template void copy_values(const ParameterList<double>&, ParameterList<double>&);

}  // namespace nvc::model
