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

#include <cstdint>
#include <vector>

#include "nvcnet/model/config.hpp"
#include "nvcnet/model/layers.hpp"

namespace nvc::model {

// Diagonal Gaussian over speaker space, batched: mean and log-variance are
// both [B, d_spk]. sigma = exp(log_variance / 2) is strictly positive.
template <class T>
struct SpeakerPosterior {
  ad::Tensor<T> mean;
  ad::Tensor<T> log_variance;

  ad::Tensor<T> stddev() const { return ad::exp(ad::scale(log_variance, T(0.5))); }
};

// One discriminator scale: patch logits [B, n_speakers, P] plus the
// post-activation output of every body layer.
template <class T>
struct ScaleOutput {
  ad::Tensor<T> logits;
  std::vector<ad::Tensor<T>> features;
};

template <class T>
using DiscriminatorOutput = std::vector<ScaleOutput<T>>;

// Waveform [B, T] -> unit-norm content code [B, d_con, T / hop].
template <class T>
class ContentEncoder {
 public:
  ContentEncoder() = default;
  ContentEncoder(const ModelConfig& cfg, Rng& rng);

  ad::Tensor<T> operator()(const ad::Tensor<T>& audio) const;
  void collect(ParameterList<T>& out, const std::string& prefix = "content_encoder") const;

 private:
  std::size_t hop_ = 256;
  Conv1d<T> input_;
  std::vector<ResidualStack<T>> stacks_;
  std::vector<Conv1d<T>> downsample_;
  Conv1d<T> output_a_;
  Conv1d<T> output_b_;
};

// Waveform [B, T] -> posterior over speaker embeddings, from an 80-band
// log-mel view of the input.
template <class T>
class SpeakerEncoder {
 public:
  SpeakerEncoder() = default;
  SpeakerEncoder(const ModelConfig& cfg, Rng& rng);

  SpeakerPosterior<T> operator()(const ad::Tensor<T>& audio) const;
  // Body only: mel -> conv stack -> temporal mean, giving [B, width].
  ad::Tensor<T> features(const ad::Tensor<T>& audio) const;
  void collect(ParameterList<T>& out, const std::string& prefix = "speaker_encoder") const;
  std::size_t feature_width() const { return width_; }

 private:
  dsp::SpectrogramConfig mel_;
  std::size_t min_frames_ = 32;
  std::size_t width_ = 0;
  Conv1d<T> input_;
  std::vector<Conv1d<T>> blocks_;
  Dense<T> mean_head_;
  Dense<T> logvar_head_;
};

// (content [B, d_con, L], embedding [B, d_spk]) -> waveform [B, L * hop] in (-1, 1).
template <class T>
class Generator {
 public:
  Generator() = default;
  Generator(const ModelConfig& cfg, Rng& rng);

  ad::Tensor<T> operator()(const ad::Tensor<T>& content, const ad::Tensor<T>& embedding) const;
  void collect(ParameterList<T>& out, const std::string& prefix = "generator") const;

  std::vector<ResidualStack<T>>& stacks() { return stacks_; }

 private:
  std::size_t d_con_ = 4;
  std::size_t d_spk_ = 128;
  Conv1d<T> input_a_;
  Conv1d<T> input_b_;
  std::vector<ConvTranspose1d<T>> upsample_;
  std::vector<ResidualStack<T>> stacks_;
  Conv1d<T> output_;
};

// Single-resolution patch discriminator with one logit branch per speaker.
template <class T>
class ScaleDiscriminator {
 public:
  ScaleDiscriminator() = default;
  ScaleDiscriminator(const ModelConfig& cfg, Rng& rng);

  // audio [B, 1, T]
  ScaleOutput<T> operator()(const ad::Tensor<T>& audio) const;
  void collect(ParameterList<T>& out, const std::string& prefix) const;

 private:
  std::vector<Conv1d<T>> body_;
  Conv1d<T> heads_;
};

// Identical discriminators applied at 1x, 2x, 4x, ... downsampled audio
// (average pooling, kernel 4, stride 2 between scales).
template <class T>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const ModelConfig& cfg, Rng& rng);

  DiscriminatorOutput<T> operator()(const ad::Tensor<T>& audio) const;
  void collect(ParameterList<T>& out, const std::string& prefix = "discriminator") const;
  std::size_t scales() const { return scales_.size(); }
  const ScaleDiscriminator<T>& scale(std::size_t k) const { return scales_[k]; }

 private:
  std::vector<ScaleDiscriminator<T>> scales_;
};

template <class T>
class NvcNet {
 public:
  NvcNet(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  ad::Tensor<T> content_encode(const ad::Tensor<T>& audio) const { return content_encoder(audio); }
  SpeakerPosterior<T> speaker_encode(const ad::Tensor<T>& audio) const { return speaker_encoder(audio); }
  ad::Tensor<T> generate(const ad::Tensor<T>& content, const ad::Tensor<T>& embedding) const {
    return generator(content, embedding);
  }
  DiscriminatorOutput<T> discriminate(const ad::Tensor<T>& audio) const { return discriminator(audio); }
  // generate(content_encode(source), target)
  ad::Tensor<T> convert(const ad::Tensor<T>& source, const ad::Tensor<T>& target) const;

  // Encoders and generator, trained jointly.
  ParameterList<T> generator_side_parameters() const;
  ParameterList<T> discriminator_parameters() const;
  // Generator side followed by discriminator, the checkpoint order.
  ParameterList<T> parameters() const;

  ContentEncoder<T> content_encoder;
  SpeakerEncoder<T> speaker_encoder;
  Generator<T> generator;
  Discriminator<T> discriminator;

 private:
  ModelConfig cfg_;
};

// z = mean + sigma * eps with eps ~ N(0, I) drawn from rng.
template <class T>
ad::Tensor<T> sample_embedding(const SpeakerPosterior<T>& posterior, Rng& rng);

// Same with a caller-supplied eps tensor of the posterior's shape.
template <class T>
ad::Tensor<T> sample_embedding(const SpeakerPosterior<T>& posterior, const ad::Tensor<T>& eps);

// [batch, dim] draws from N(0, I).
template <class T>
ad::Tensor<T> sample_prior(std::size_t batch, std::size_t dim, Rng& rng);

template <class T>
ad::Tensor<T> standard_normal(ad::Shape shape, Rng& rng);

// Accepts [T] or [B, T] audio and returns [B, T].
template <class T>
ad::Tensor<T> as_batch(const ad::Tensor<T>& audio);

}  // namespace nvc::model
