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

#include "nvcnet/losses/losses.hpp"

#include <string>

#include "nvcnet/dsp/spectrogram.hpp"
#include "nvcnet/errors.hpp"

namespace nvc::losses {

using ad::Tensor;

void LossWeights::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0)) throw ConfigError(std::string("loss weight ") + name + " must be >= 0, got " + std::to_string(v));
  };
  check(reconstruction, "reconstruction");
  check(content, "content");
  check(kl, "kl");
  check(spectral, "spectral");
  for (auto w : fft_sizes) {
    if (w < 4 || w % 4 != 0) throw ConfigError("spectral fft size must be a positive multiple of 4, got " + std::to_string(w));
  }
}

namespace {

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw SizeError(std::string(what) + ": shape " + ad::to_string(a.shape()) + " vs " + ad::to_string(b.shape()));
  }
}

template <class T>
void require_labels(std::span<const std::size_t> labels, std::size_t batch, std::size_t branches, const char* what) {
  if (labels.size() != batch) {
    throw DimensionError(std::string(what) + ": " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(batch));
  }
  for (auto y : labels) {
    if (y >= branches) {
      throw IndexError(std::string(what) + ": branch " + std::to_string(y) + " >= " + std::to_string(branches));
    }
  }
}

template <class T>
Tensor<T> batch_mean_of_sum(const Tensor<T>& per_element, std::size_t batch) {
  return ad::scale(ad::sum(per_element), static_cast<T>(1.0 / static_cast<double>(batch)));
}

}  // namespace

template <class T>
Tensor<T> adv_loss_discriminator(const model::ScaleOutput<T>& real, std::span<const std::size_t> labels,
                                 const model::ScaleOutput<T>& fake, std::span<const std::size_t> target_labels) {
  require_labels<T>(labels, real.logits.dim(0), real.logits.dim(1), "adv_loss_discriminator");
  require_labels<T>(target_labels, fake.logits.dim(0), fake.logits.dim(1), "adv_loss_discriminator");
  const auto lr = ad::select_channel(real.logits, labels);
  const auto lf = ad::select_channel(fake.logits, target_labels);
  return ad::add(ad::mean(ad::softplus(ad::scale(lr, T(-1)))), ad::mean(ad::softplus(lf)));
}

template <class T>
Tensor<T> adv_loss_generator(const model::DiscriminatorOutput<T>& fake, std::span<const std::size_t> target_labels,
                             bool non_saturating) {
  Tensor<T> total = Tensor<T>::scalar(T(0));
  for (const auto& scale : fake) {
    require_labels<T>(target_labels, scale.logits.dim(0), scale.logits.dim(1), "adv_loss_generator");
    const auto l = ad::select_channel(scale.logits, target_labels);
    const auto term = non_saturating ? ad::mean(ad::softplus(ad::scale(l, T(-1))))
                                     : ad::scale(ad::mean(ad::softplus(l)), T(-1));
    total = ad::add(total, term);
  }
  return total;
}

template <class T>
Tensor<T> feature_matching_loss(const model::DiscriminatorOutput<T>& real, const model::DiscriminatorOutput<T>& fake) {
  if (real.size() != fake.size()) throw SizeError("feature_matching_loss: scale count mismatch");
  Tensor<T> total = Tensor<T>::scalar(T(0));
  for (std::size_t k = 0; k < real.size(); ++k) {
    const auto& fr = real[k].features;
    const auto& ff = fake[k].features;
    if (fr.size() != ff.size()) throw SizeError("feature_matching_loss: layer count mismatch");
    for (std::size_t i = 0; i < fr.size(); ++i) {
      require_same_shape(fr[i], ff[i], "feature_matching_loss");
      total = ad::add(total, ad::mean(ad::abs(ad::sub(ff[i], fr[i].detach()))));
    }
  }
  return total;
}

template <class T>
Tensor<T> spectral_loss(const Tensor<T>& real, const Tensor<T>& fake, const dsp::SpectrogramConfig& cfg) {
  require_same_shape(real, fake, "spectral_loss");
  const auto length = real.shape().back();
  if (length < cfg.fft_size) {
    throw SizeError("spectral_loss: length " + std::to_string(length) + " < fft size " + std::to_string(cfg.fft_size));
  }
  const auto mr = dsp::log_mel(real.detach(), cfg);
  const auto mf = dsp::log_mel(fake, cfg);
  return batch_mean_of_sum(ad::square(ad::sub(mf, mr)), mf.dim(0));
}

template <class T>
Tensor<T> spectral_loss(const Tensor<T>& real, const Tensor<T>& fake, std::size_t fft_size) {
  return spectral_loss(real, fake, dsp::SpectrogramConfig::spectral_loss(fft_size));
}

template <class T>
Tensor<T> reconstruction_loss(const Tensor<T>& real, const Tensor<T>& fake,
                              const model::DiscriminatorOutput<T>& real_features,
                              const model::DiscriminatorOutput<T>& fake_features, const LossWeights& weights) {
  auto total = feature_matching_loss(real_features, fake_features);
  for (auto w : weights.fft_sizes) {
    total = ad::add(total, ad::scale(spectral_loss(real, fake, w), static_cast<T>(weights.spectral)));
  }
  return total;
}

template <class T>
Tensor<T> content_preservation_loss(const Tensor<T>& code, const Tensor<T>& code_of_conversion) {
  require_same_shape(code, code_of_conversion, "content_preservation_loss");
  if (code.rank() != 3) throw DimensionError("content_preservation_loss: expected [B, d_con, L]");
  return batch_mean_of_sum(ad::square(ad::sub(code, code_of_conversion)), code.dim(0));
}

template <class T>
Tensor<T> kl_loss(const model::SpeakerPosterior<T>& posterior) {
  const auto& mu = posterior.mean;
  const auto& lv = posterior.log_variance;
  require_same_shape(mu, lv, "kl_loss");
  if (mu.rank() != 2) throw DimensionError("kl_loss: expected [B, d_spk]");
  // mu^2 + sigma^2 - 1 - log sigma^2, elementwise
  const auto terms = ad::add_scalar(ad::add(ad::sub(ad::exp(lv), lv), ad::square(mu)), T(-1));
  return ad::scale(batch_mean_of_sum(terms, mu.dim(0)), T(0.5));
}

template <class T>
Tensor<T> kl_loss(const Tensor<T>& mean, const Tensor<T>& stddev) {
  require_same_shape(mean, stddev, "kl_loss");
  for (auto s : stddev.values()) {
    if (!(s > T(0))) throw ContractError("kl_loss: standard deviation must be positive, got " + std::to_string(s));
  }
  return kl_loss(model::SpeakerPosterior<T>{mean, ad::scale(ad::log(stddev), T(2))});
}

template <class T>
GeneratorForward<T> generator_forward(const model::NvcNet<T>& net, const GeneratorInputs<T>& in) {
  GeneratorForward<T> fwd;
  fwd.content = net.content_encode(in.source);
  fwd.posterior = net.speaker_encode(in.speaker_view);
  fwd.embedding = model::sample_embedding(fwd.posterior, in.noise);
  fwd.reference_embedding = ad::gather_rows(fwd.embedding, in.permutation);
  fwd.reconstruction = net.generate(fwd.content, fwd.embedding);
  fwd.conversion = net.generate(fwd.content, fwd.reference_embedding);
  return fwd;
}

template <class T>
GeneratorLoss<T> total_generator_loss(const model::NvcNet<T>& net, const GeneratorInputs<T>& in,
                                      const GeneratorForward<T>& fwd, const LossWeights& weights) {
  GeneratorLoss<T> out;
  const auto fake_conv = net.discriminate(fwd.conversion);
  out.adversarial = adv_loss_generator(fake_conv, in.target_labels, weights.non_saturating);

  model::DiscriminatorOutput<T> real_features;
  {
    ad::NoGradScope<T> no_grad;
    real_features = net.discriminate(in.target.detach());
  }
  const auto fake_rec = net.discriminate(fwd.reconstruction);
  out.feature_matching = feature_matching_loss(real_features, fake_rec);
  out.reconstruction = out.feature_matching;
  for (auto w : weights.fft_sizes) {
    out.spectral.push_back(spectral_loss(in.target, fwd.reconstruction, w));
    out.reconstruction = ad::add(out.reconstruction, ad::scale(out.spectral.back(), static_cast<T>(weights.spectral)));
  }

  out.content = content_preservation_loss(fwd.content, net.content_encode(fwd.conversion));
  out.kl = kl_loss(fwd.posterior);

  out.total = ad::add(ad::add(out.adversarial, ad::scale(out.reconstruction, static_cast<T>(weights.reconstruction))),
                      ad::add(ad::scale(out.content, static_cast<T>(weights.content)),
                              ad::scale(out.kl, static_cast<T>(weights.kl))));
  return out;
}

template <class T>
GeneratorLoss<T> total_generator_loss(const model::NvcNet<T>& net, const GeneratorInputs<T>& in,
                                      const LossWeights& weights) {
  return total_generator_loss(net, in, generator_forward(net, in), weights);
}

template <class T>
DiscriminatorLoss<T> total_discriminator_loss(const model::NvcNet<T>& net, const DiscriminatorInputs<T>& in) {
  DiscriminatorLoss<T> out;
  const auto real = net.discriminate(in.real.detach());
  const auto fake = net.discriminate(in.fake.detach());
  out.total = Tensor<T>::scalar(T(0));
  for (std::size_t k = 0; k < real.size(); ++k) {
    out.per_scale.push_back(adv_loss_discriminator(real[k], in.labels, fake[k], in.target_labels));
    out.total = ad::add(out.total, out.per_scale.back());
  }
  return out;
}

#define NVC_INSTANTIATE_LOSSES(T)                                                                              \
  template Tensor<T> adv_loss_discriminator(const model::ScaleOutput<T>&, std::span<const std::size_t>,       \
                                            const model::ScaleOutput<T>&, std::span<const std::size_t>);      \
  template Tensor<T> adv_loss_generator(const model::DiscriminatorOutput<T>&, std::span<const std::size_t>,   \
                                        bool);                                                                 \
  template Tensor<T> feature_matching_loss(const model::DiscriminatorOutput<T>&,                              \
                                           const model::DiscriminatorOutput<T>&);                             \
  template Tensor<T> spectral_loss(const Tensor<T>&, const Tensor<T>&, std::size_t);                          \
  template Tensor<T> spectral_loss(const Tensor<T>&, const Tensor<T>&, const dsp::SpectrogramConfig&);        \
  template Tensor<T> reconstruction_loss(const Tensor<T>&, const Tensor<T>&, const model::DiscriminatorOutput<T>&, \
                                         const model::DiscriminatorOutput<T>&, const LossWeights&);           \
  template Tensor<T> content_preservation_loss(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> kl_loss(const model::SpeakerPosterior<T>&);                                              \
  template Tensor<T> kl_loss(const Tensor<T>&, const Tensor<T>&);                                             \
  template GeneratorForward<T> generator_forward(const model::NvcNet<T>&, const GeneratorInputs<T>&);          \
  template GeneratorLoss<T> total_generator_loss(const model::NvcNet<T>&, const GeneratorInputs<T>&,          \
                                                 const GeneratorForward<T>&, const LossWeights&);             \
  template GeneratorLoss<T> total_generator_loss(const model::NvcNet<T>&, const GeneratorInputs<T>&,          \
                                                 const LossWeights&);                                         \
  template DiscriminatorLoss<T> total_discriminator_loss(const model::NvcNet<T>&, const DiscriminatorInputs<T>&);

NVC_INSTANTIATE_LOSSES(float)
NVC_INSTANTIATE_LOSSES(double)

}  // namespace nvc::losses
