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
#include <string>
#include <vector>

#include "nvcnet/dsp/spectrogram.hpp"

namespace nvc::model {

// Width and depth knobs for the four networks. Channel widths of every stage
// derive from `base_channels` (encoder/generator) and
// `discriminator_base_channels`; the defaults reproduce the full-size model.
struct ModelConfig {
  std::size_t d_con = 4;
  std::size_t d_spk = 128;
  std::size_t base_channels = 32;
  std::size_t n_speakers = 2;
  std::vector<std::size_t> downsample_factors{2, 2, 8, 8};
  std::vector<std::size_t> residual_dilations{1, 3, 9, 27};
  std::size_t n_discriminator_scales = 3;
  std::size_t discriminator_base_channels = 16;
  std::size_t speaker_down_blocks = 5;
  dsp::SpectrogramConfig speaker_mel = dsp::SpectrogramConfig::speaker_input();

  // Full-size networks.
  static ModelConfig standard(std::size_t n_speakers);
  // Channels / 4 and two residual blocks per stack.
  static ModelConfig desk(std::size_t n_speakers);
  // Tiny widths for finite-difference checks.
  static ModelConfig micro(std::size_t n_speakers);

  void validate() const;

  // Product of the downsampling factors (256 by default).
  std::size_t hop_length() const;
  std::size_t residual_receptive_field(std::size_t kernel = 3) const;

  std::size_t encoder_width(std::size_t stage) const;   // stage 0 .. stages
  std::size_t generator_top_width() const;               // widest generator layer
  std::size_t speaker_width(std::size_t block) const;    // 0 = input conv
  std::vector<std::size_t> discriminator_widths() const;  // body layer outputs
  std::vector<std::size_t> discriminator_groups() const;  // per strided layer
  std::size_t min_speaker_frames() const { return std::size_t{1} << speaker_down_blocks; }

  bool operator==(const ModelConfig&) const = default;
};

// Stable textual form used for checkpoint digests.
std::string describe(const ModelConfig& cfg);

// FNV-1a 64 of describe(cfg).
std::uint64_t config_digest(const ModelConfig& cfg);

// JSON object with every field. Parsing starts from `base` and overrides the
// keys present; a "preset" key ("standard", "desk", "micro") replaces the
// base first. Unknown keys and invalid values raise ConfigError.
std::string to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text, const ModelConfig& base = ModelConfig{});

}  // namespace nvc::model
