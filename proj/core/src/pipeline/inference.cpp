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

#include "nvcnet/pipeline/inference.hpp"

#include <string>

#include "nvcnet/errors.hpp"

namespace nvc::pipeline {

namespace {

ad::Tensor<float> row(std::span<const float> x) {
  return ad::Tensor<float>({1, x.size()}, std::vector<float>(x.begin(), x.end()));
}

std::vector<float> to_vector(const ad::Tensor<float>& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

std::vector<float> crop_to_hop(std::span<const float> clip, std::size_t hop) {
  const std::size_t n = clip.size() / hop * hop;
  if (n == 0) {
    throw SizeError("clip of " + std::to_string(clip.size()) + " samples is shorter than one hop (" +
                    std::to_string(hop) + ")");
  }
  return {clip.begin(), clip.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<float> posterior_mean(const model::NvcNet<float>& net, std::span<const float> clip) {
  ad::NoGradScope<float> no_grad;
  return to_vector(net.speaker_encode(row(clip)).mean);
}

std::vector<float> reference_embedding(const model::NvcNet<float>& net, const std::vector<std::vector<float>>& clips) {
  if (clips.empty()) throw ContractError("reference_embedding needs at least one clip");
  std::vector<double> sum(net.config().d_spk, 0.0);
  for (const auto& clip : clips) {
    const auto mu = posterior_mean(net, clip);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += mu[i];
  }
  std::vector<float> out(sum.size());
  for (std::size_t i = 0; i < sum.size(); ++i) out[i] = static_cast<float>(sum[i] / static_cast<double>(clips.size()));
  return out;
}

std::vector<float> posterior_sample(const model::NvcNet<float>& net, std::span<const float> clip, model::Rng& rng) {
  ad::NoGradScope<float> no_grad;
  return to_vector(model::sample_embedding(net.speaker_encode(row(clip)), rng));
}

std::vector<float> prior_sample(std::size_t d_spk, std::uint64_t seed) {
  model::Rng rng(seed);
  return to_vector(model::sample_prior<float>(1, d_spk, rng));
}

std::vector<float> convert(const model::NvcNet<float>& net, std::span<const float> source,
                           std::span<const float> embedding) {
  if (embedding.size() != net.config().d_spk) {
    throw DimensionError("embedding has " + std::to_string(embedding.size()) + " values, the model expects " +
                         std::to_string(net.config().d_spk));
  }
  const auto x = crop_to_hop(source, net.config().hop_length());
  ad::NoGradScope<float> no_grad;
  const auto content = net.content_encode(row(x));
  return to_vector(net.generate(content, row(embedding)));
}

std::vector<float> reconstruct(const model::NvcNet<float>& net, std::span<const float> source) {
  return convert(net, source, posterior_mean(net, source));
}

}  // namespace nvc::pipeline
