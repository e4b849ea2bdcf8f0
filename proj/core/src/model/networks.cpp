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

#include "nvcnet/model/networks.hpp"

#include <string>

namespace nvc::model {
namespace {

ad::Conv1dOptions reflect_same(std::size_t kernel) {
  ad::Conv1dOptions opt;
  opt.pad = kernel / 2;
  opt.padding = ad::Padding::kReflect;
  return opt;
}

constexpr double kContentEps = 1e-8;

}  // namespace

template <class T>
ad::Tensor<T> as_batch(const ad::Tensor<T>& audio) {
  if (audio.rank() == 1) return ad::reshape(audio, ad::Shape{1, audio.dim(0)});
  if (audio.rank() == 2) return audio;
  if (audio.rank() == 3 && audio.dim(1) == 1) return ad::reshape(audio, ad::Shape{audio.dim(0), audio.dim(2)});
  throw DimensionError("audio must be [T], [B, T] or [B, 1, T], got " + ad::to_string(audio.shape()));
}

// ---- content encoder -------------------------------------------------------

template <class T>
ContentEncoder<T>::ContentEncoder(const ModelConfig& cfg, Rng& rng) : hop_(cfg.hop_length()) {
  input_ = Conv1d<T>(1, cfg.encoder_width(0), 7, reflect_same(7), rng);
  for (std::size_t i = 0; i < cfg.downsample_factors.size(); ++i) {
    const std::size_t f = cfg.downsample_factors[i];
    stacks_.emplace_back(cfg.encoder_width(i), cfg.residual_dilations, 0, rng);
    ad::Conv1dOptions down;
    down.stride = f;
    down.pad = f / 2;
    down.padding = ad::Padding::kReflect;
    downsample_.emplace_back(cfg.encoder_width(i), cfg.encoder_width(i + 1), 2 * f, down, rng);
  }
  output_a_ = Conv1d<T>(cfg.generator_top_width(), cfg.d_con, 7, reflect_same(7), rng);
  output_b_ = Conv1d<T>(cfg.d_con, cfg.d_con, 7, reflect_same(7), rng);
}

template <class T>
ad::Tensor<T> ContentEncoder<T>::operator()(const ad::Tensor<T>& audio) const {
  const auto x = as_batch(audio);
  const std::size_t length = x.dim(1);
  if (length == 0 || length % hop_ != 0) {
    throw SizeError("content encoder input length " + std::to_string(length) + " is not a positive multiple of " +
                    std::to_string(hop_));
  }
  auto h = input_(ad::reshape(x, ad::Shape{x.dim(0), 1, length}));
  for (std::size_t i = 0; i < stacks_.size(); ++i) {
    h = stacks_[i](h);
    h = downsample_[i](ad::gelu(h));
  }
  h = output_a_(ad::gelu(h));
  h = output_b_(ad::gelu(h));
  return ad::normalize_channels(h, static_cast<T>(kContentEps));
}

template <class T>
void ContentEncoder<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  input_.collect(out, prefix + ".input");
  for (std::size_t i = 0; i < stacks_.size(); ++i) {
    stacks_[i].collect(out, prefix + ".stack" + std::to_string(i));
    downsample_[i].collect(out, prefix + ".down" + std::to_string(i));
  }
  output_a_.collect(out, prefix + ".output_a");
  output_b_.collect(out, prefix + ".output_b");
}

// ---- speaker encoder -------------------------------------------------------

template <class T>
SpeakerEncoder<T>::SpeakerEncoder(const ModelConfig& cfg, Rng& rng)
    : mel_(cfg.speaker_mel), min_frames_(cfg.min_speaker_frames()) {
  input_ = Conv1d<T>(mel_.n_mels, cfg.speaker_width(0), 3, reflect_same(3), rng);
  for (std::size_t i = 0; i < cfg.speaker_down_blocks; ++i) {
    blocks_.emplace_back(cfg.speaker_width(i), cfg.speaker_width(i + 1), 3, reflect_same(3), rng);
  }
  width_ = cfg.speaker_width(cfg.speaker_down_blocks);
  mean_head_ = Dense<T>(width_, cfg.d_spk, rng);
  logvar_head_ = Dense<T>(width_, cfg.d_spk, rng);
}

template <class T>
ad::Tensor<T> SpeakerEncoder<T>::features(const ad::Tensor<T>& audio) const {
  const auto x = as_batch(audio);
  const std::size_t frames = mel_.frames(x.dim(1));
  if (frames < min_frames_ || x.dim(1) < mel_.window_size) {
    throw SizeError("speaker encoder needs at least " + std::to_string(min_frames_) + " mel frames, clip of " +
                    std::to_string(x.dim(1)) + " samples gives " + std::to_string(frames));
  }
  auto h = input_(dsp::log_mel(x, mel_));
  for (const auto& block : blocks_) {
    h = ad::avg_pool1d(ad::activation(block(h), ad::Activation::kLeakyRelu), 2, 2);
  }
  return ad::mean_time(h);
}

template <class T>
SpeakerPosterior<T> SpeakerEncoder<T>::operator()(const ad::Tensor<T>& audio) const {
  const auto h = features(audio);
  return {mean_head_(h), logvar_head_(h)};
}

template <class T>
void SpeakerEncoder<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  input_.collect(out, prefix + ".input");
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(out, prefix + ".down" + std::to_string(i));
  mean_head_.collect(out, prefix + ".mean");
  logvar_head_.collect(out, prefix + ".logvar");
}

// ---- generator -------------------------------------------------------------

template <class T>
Generator<T>::Generator(const ModelConfig& cfg, Rng& rng) : d_con_(cfg.d_con), d_spk_(cfg.d_spk) {
  const std::size_t top = cfg.generator_top_width();
  input_a_ = Conv1d<T>(cfg.d_con, top, 7, reflect_same(7), rng);
  input_b_ = Conv1d<T>(top, top, 7, reflect_same(7), rng);
  const std::size_t stages = cfg.downsample_factors.size();
  for (std::size_t i = 0; i < stages; ++i) {
    const std::size_t f = cfg.downsample_factors[stages - 1 - i];
    const std::size_t in = cfg.encoder_width(stages - i);
    const std::size_t out = cfg.encoder_width(stages - i - 1);
    upsample_.emplace_back(in, out, 2 * f, f, f / 2, rng);
    stacks_.emplace_back(out, cfg.residual_dilations, cfg.d_spk, rng);
  }
  output_ = Conv1d<T>(cfg.encoder_width(0), 1, 7, reflect_same(7), rng);
}

template <class T>
ad::Tensor<T> Generator<T>::operator()(const ad::Tensor<T>& content, const ad::Tensor<T>& embedding) const {
  if (content.rank() != 3 || content.dim(1) != d_con_) {
    throw DimensionError("generator content must be [B, " + std::to_string(d_con_) + ", L], got " +
                         ad::to_string(content.shape()));
  }
  if (embedding.rank() != 2 || embedding.dim(0) != content.dim(0) || embedding.dim(1) != d_spk_) {
    throw DimensionError("generator embedding must be [" + std::to_string(content.dim(0)) + ", " +
                         std::to_string(d_spk_) + "], got " + ad::to_string(embedding.shape()));
  }
  auto h = input_a_(content);
  h = input_b_(ad::gelu(h));
  for (std::size_t i = 0; i < upsample_.size(); ++i) {
    h = upsample_[i](ad::gelu(h));
    h = stacks_[i](h, &embedding);
  }
  h = ad::activation(output_(ad::gelu(h)), ad::Activation::kTanh);
  return ad::reshape(h, ad::Shape{h.dim(0), h.dim(2)});
}

template <class T>
void Generator<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  input_a_.collect(out, prefix + ".input_a");
  input_b_.collect(out, prefix + ".input_b");
  for (std::size_t i = 0; i < upsample_.size(); ++i) {
    upsample_[i].collect(out, prefix + ".up" + std::to_string(i));
    stacks_[i].collect(out, prefix + ".stack" + std::to_string(i));
  }
  output_.collect(out, prefix + ".output");
}

// ---- discriminators --------------------------------------------------------

template <class T>
ScaleDiscriminator<T>::ScaleDiscriminator(const ModelConfig& cfg, Rng& rng) {
  const auto widths = cfg.discriminator_widths();
  const auto groups = cfg.discriminator_groups();
  ad::Conv1dOptions first;
  first.pad = 7;
  body_.emplace_back(1, widths[0], 15, first, rng);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    ad::Conv1dOptions strided;
    strided.stride = 4;
    strided.pad = 20;
    strided.groups = groups[i];
    body_.emplace_back(widths[i], widths[i + 1], 41, strided, rng);
  }
  ad::Conv1dOptions last;
  last.pad = 2;
  body_.emplace_back(widths[4], widths[5], 5, last, rng);
  heads_ = Conv1d<T>(widths[5], cfg.n_speakers, 1, ad::Conv1dOptions{}, rng);
}

template <class T>
ScaleOutput<T> ScaleDiscriminator<T>::operator()(const ad::Tensor<T>& audio) const {
  ScaleOutput<T> out;
  auto h = audio;
  for (const auto& layer : body_) {
    h = ad::activation(layer(h), ad::Activation::kLeakyRelu);
    out.features.push_back(h);
  }
  out.logits = heads_(h);
  return out;
}

template <class T>
void ScaleDiscriminator<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < body_.size(); ++i) body_[i].collect(out, prefix + ".body" + std::to_string(i));
  heads_.collect(out, prefix + ".heads");
}

template <class T>
Discriminator<T>::Discriminator(const ModelConfig& cfg, Rng& rng) {
  for (std::size_t k = 0; k < cfg.n_discriminator_scales; ++k) scales_.emplace_back(cfg, rng);
}

template <class T>
DiscriminatorOutput<T> Discriminator<T>::operator()(const ad::Tensor<T>& audio) const {
  const auto x = as_batch(audio);
  auto h = ad::reshape(x, ad::Shape{x.dim(0), 1, x.dim(1)});
  DiscriminatorOutput<T> out;
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    if (k > 0) h = ad::avg_pool1d(h, 4, 2);
    out.push_back(scales_[k](h));
  }
  return out;
}

template <class T>
void Discriminator<T>::collect(ParameterList<T>& out, const std::string& prefix) const {
  for (std::size_t k = 0; k < scales_.size(); ++k) scales_[k].collect(out, prefix + ".scale" + std::to_string(k));
}

// ---- bundle ----------------------------------------------------------------

template <class T>
NvcNet<T>::NvcNet(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  content_encoder = ContentEncoder<T>(cfg_, rng);
  speaker_encoder = SpeakerEncoder<T>(cfg_, rng);
  generator = Generator<T>(cfg_, rng);
  discriminator = Discriminator<T>(cfg_, rng);
}

template <class T>
ad::Tensor<T> NvcNet<T>::convert(const ad::Tensor<T>& source, const ad::Tensor<T>& target) const {
  return generator(content_encoder(source), target);
}

template <class T>
ParameterList<T> NvcNet<T>::generator_side_parameters() const {
  ParameterList<T> out;
  content_encoder.collect(out);
  speaker_encoder.collect(out);
  generator.collect(out);
  return out;
}

template <class T>
ParameterList<T> NvcNet<T>::discriminator_parameters() const {
  ParameterList<T> out;
  discriminator.collect(out);
  return out;
}

template <class T>
ParameterList<T> NvcNet<T>::parameters() const {
  auto out = generator_side_parameters();
  discriminator.collect(out);
  return out;
}

// ---- sampling --------------------------------------------------------------

template <class T>
ad::Tensor<T> standard_normal(ad::Shape shape, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<T> v(ad::numel(shape));
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return ad::Tensor<T>(std::move(shape), std::move(v));
}

template <class T>
ad::Tensor<T> sample_embedding(const SpeakerPosterior<T>& posterior, const ad::Tensor<T>& eps) {
  if (eps.shape() != posterior.mean.shape()) {
    throw DimensionError("sample_embedding: eps shape " + ad::to_string(eps.shape()) + " != mean shape " +
                         ad::to_string(posterior.mean.shape()));
  }
  return ad::add(posterior.mean, ad::mul(posterior.stddev(), eps));
}

template <class T>
ad::Tensor<T> sample_embedding(const SpeakerPosterior<T>& posterior, Rng& rng) {
  return sample_embedding(posterior, standard_normal<T>(posterior.mean.shape(), rng));
}

template <class T>
ad::Tensor<T> sample_prior(std::size_t batch, std::size_t dim, Rng& rng) {
  return standard_normal<T>(ad::Shape{batch, dim}, rng);
}

#define NVC_INSTANTIATE(T)                                                                     \
  template ad::Tensor<T> as_batch(const ad::Tensor<T>&);                                       \
  template class ContentEncoder<T>;                                                            \
  template class SpeakerEncoder<T>;                                                            \
  template class Generator<T>;                                                                 \
  template class ScaleDiscriminator<T>;                                                        \
  template class Discriminator<T>;                                                             \
  template class NvcNet<T>;                                                                    \
  template ad::Tensor<T> standard_normal(ad::Shape, Rng&);                                     \
  template ad::Tensor<T> sample_embedding(const SpeakerPosterior<T>&, const ad::Tensor<T>&);   \
  template ad::Tensor<T> sample_embedding(const SpeakerPosterior<T>&, Rng&);                   \
  template ad::Tensor<T> sample_prior(std::size_t, std::size_t, Rng&);

NVC_INSTANTIATE(float)
NVC_INSTANTIATE(double)

#undef NVC_INSTANTIATE

}  // namespace nvc::model
