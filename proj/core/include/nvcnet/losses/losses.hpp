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
#include <span>
#include <vector>

#include "nvcnet/ad/ops.hpp"
#include "nvcnet/model/networks.hpp"

namespace nvc::losses {

struct LossWeights {
  double reconstruction = 10.0;
  double content = 10.0;
  double kl = 0.02;
  double spectral = 1.0;  // beta
  std::vector<std::size_t> fft_sizes{2048, 1024, 512};
  // Minimize -log D instead of log(1 - D) on the generator side.
  bool non_saturating = false;

  void validate() const;
};

// Per-scale discriminator loss. Patch logits of branch labels[b] (real) and
// target_labels[b] (fake) only:
//   mean softplus(-l_real) + mean softplus(l_fake)
template <class T>
ad::Tensor<T> adv_loss_discriminator(const model::ScaleOutput<T>& real, std::span<const std::size_t> labels,
                                     const model::ScaleOutput<T>& fake,
                                     std::span<const std::size_t> target_labels);

// Sum over scales of mean log(1 - sigmoid(l)) on the target branch, i.e.
// -sum_k mean softplus(l). With non_saturating: sum_k mean softplus(-l).
template <class T>
ad::Tensor<T> adv_loss_generator(const model::DiscriminatorOutput<T>& fake,
                                 std::span<const std::size_t> target_labels, bool non_saturating = false);

// sum_k sum_i mean |D_i(real) - D_i(fake)|. Real features are detached.
template <class T>
ad::Tensor<T> feature_matching_loss(const model::DiscriminatorOutput<T>& real,
                                    const model::DiscriminatorOutput<T>& fake);

// Squared distance between log-mel features at FFT size w, summed per item
// and averaged over the batch. The real side is detached.
template <class T>
ad::Tensor<T> spectral_loss(const ad::Tensor<T>& real, const ad::Tensor<T>& fake, std::size_t fft_size);

template <class T>
ad::Tensor<T> spectral_loss(const ad::Tensor<T>& real, const ad::Tensor<T>& fake,
                            const dsp::SpectrogramConfig& cfg);

// feature matching + beta * sum over fft sizes of spectral_loss.
template <class T>
ad::Tensor<T> reconstruction_loss(const ad::Tensor<T>& real, const ad::Tensor<T>& fake,
                                  const model::DiscriminatorOutput<T>& real_features,
                                  const model::DiscriminatorOutput<T>& fake_features, const LossWeights& weights);

// Squared distance between two content codes [B, d_con, L], summed per item
// and averaged over the batch.
template <class T>
ad::Tensor<T> content_preservation_loss(const ad::Tensor<T>& code, const ad::Tensor<T>& code_of_conversion);

// KL(N(mu, sigma^2) || N(0, I)), summed over dimensions, averaged over batch.
template <class T>
ad::Tensor<T> kl_loss(const model::SpeakerPosterior<T>& posterior);

// Same from an explicit standard deviation; throws ContractError if any
// sigma <= 0.
template <class T>
ad::Tensor<T> kl_loss(const ad::Tensor<T>& mean, const ad::Tensor<T>& stddev);

// Everything one generator-side objective evaluation needs. `source` feeds
// E_c, `speaker_view` feeds E_s, `target` is the reconstruction target.
// `noise` is the reparameterization draw for z, `permutation[i]` the batch
// index whose embedding converts item i, `target_labels[i]` its speaker.
template <class T>
struct GeneratorInputs {
  ad::Tensor<T> source;
  ad::Tensor<T> target;
  ad::Tensor<T> speaker_view;
  ad::Tensor<T> noise;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> permutation;
  std::vector<std::size_t> target_labels;
};

template <class T>
struct GeneratorForward {
  ad::Tensor<T> content;
  model::SpeakerPosterior<T> posterior;
  ad::Tensor<T> embedding;
  ad::Tensor<T> reference_embedding;
  ad::Tensor<T> reconstruction;
  ad::Tensor<T> conversion;
};

template <class T>
GeneratorForward<T> generator_forward(const model::NvcNet<T>& net, const GeneratorInputs<T>& in);

template <class T>
struct GeneratorLoss {
  ad::Tensor<T> adversarial;
  ad::Tensor<T> feature_matching;
  std::vector<ad::Tensor<T>> spectral;  // one per fft size
  ad::Tensor<T> reconstruction;
  ad::Tensor<T> content;
  ad::Tensor<T> kl;
  ad::Tensor<T> total;
};

// adversarial + l_rec * reconstruction + l_con * content + l_kl * kl.
// The discriminator is evaluated as is; freezing it is the caller's job.
template <class T>
GeneratorLoss<T> total_generator_loss(const model::NvcNet<T>& net, const GeneratorInputs<T>& in,
                                      const GeneratorForward<T>& fwd, const LossWeights& weights);

template <class T>
GeneratorLoss<T> total_generator_loss(const model::NvcNet<T>& net, const GeneratorInputs<T>& in,
                                      const LossWeights& weights);

template <class T>
struct DiscriminatorInputs {
  ad::Tensor<T> real;
  ad::Tensor<T> fake;  // detached here
  std::vector<std::size_t> labels;
  std::vector<std::size_t> target_labels;
};

template <class T>
struct DiscriminatorLoss {
  std::vector<ad::Tensor<T>> per_scale;
  ad::Tensor<T> total;
};

template <class T>
DiscriminatorLoss<T> total_discriminator_loss(const model::NvcNet<T>& net, const DiscriminatorInputs<T>& in);

}  // namespace nvc::losses
