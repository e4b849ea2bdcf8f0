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

#include "nvcnet/model/config.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "nvcnet/errors.hpp"
#include "nvcnet/io/binary.hpp"

namespace nvc::model {

ModelConfig ModelConfig::standard(std::size_t n_speakers) {
  ModelConfig cfg;
  cfg.n_speakers = n_speakers;
  return cfg;
}

ModelConfig ModelConfig::desk(std::size_t n_speakers) {
  ModelConfig cfg;
  cfg.n_speakers = n_speakers;
  cfg.base_channels = 8;
  cfg.discriminator_base_channels = 4;
  cfg.residual_dilations = {1, 3};
  return cfg;
}

ModelConfig ModelConfig::micro(std::size_t n_speakers) {
  ModelConfig cfg;
  cfg.n_speakers = n_speakers;
  cfg.base_channels = 2;
  cfg.d_spk = 8;
  cfg.discriminator_base_channels = 1;
  cfg.residual_dilations = {1, 3};
  return cfg;
}

void ModelConfig::validate() const {
  if (d_con == 0 || d_spk == 0) throw ConfigError("d_con and d_spk must be positive");
  if (base_channels == 0 || discriminator_base_channels == 0) throw ConfigError("channel widths must be positive");
  if (n_speakers == 0) throw ConfigError("n_speakers must be positive");
  if (downsample_factors.empty()) throw ConfigError("downsample_factors must be nonempty");
  for (auto f : downsample_factors) {
    if (f < 2 || f % 2 != 0) throw ConfigError("downsample factors must be even and >= 2");
  }
  if (residual_dilations.empty()) throw ConfigError("residual_dilations must be nonempty");
  for (auto d : residual_dilations) {
    if (d == 0) throw ConfigError("residual dilations must be positive");
  }
  if (n_discriminator_scales == 0) throw ConfigError("need at least one discriminator scale");
  if (speaker_down_blocks == 0) throw ConfigError("speaker encoder needs at least one down block");
  speaker_mel.validate();
}

std::size_t ModelConfig::hop_length() const {
  std::size_t h = 1;
  for (auto f : downsample_factors) h *= f;
  return h;
}

std::size_t ModelConfig::residual_receptive_field(std::size_t kernel) const {
  std::size_t rf = 1;
  for (auto d : residual_dilations) rf += (kernel - 1) * d;
  return rf;
}

std::size_t ModelConfig::encoder_width(std::size_t stage) const { return base_channels << stage; }

std::size_t ModelConfig::generator_top_width() const { return encoder_width(downsample_factors.size()); }

std::size_t ModelConfig::speaker_width(std::size_t block) const {
  const std::size_t cap = base_channels * 16;
  return std::min(base_channels << block, cap);
}

std::vector<std::size_t> ModelConfig::discriminator_widths() const {
  const std::size_t b = discriminator_base_channels;
  return {b, b * 4, b * 16, b * 64, b * 64, b * 64};
}

std::vector<std::size_t> ModelConfig::discriminator_groups() const {
  const auto w = discriminator_widths();
  std::vector<std::size_t> groups;
  for (std::size_t i = 0; i < 4; ++i) groups.push_back(std::max<std::size_t>(1, w[i] / 4));
  return groups;
}

std::string describe(const ModelConfig& cfg) {
  std::ostringstream os;
  auto list = [&os](const std::vector<std::size_t>& v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
  };
  os << "d_con=" << cfg.d_con << ";d_spk=" << cfg.d_spk << ";base_channels=" << cfg.base_channels
     << ";n_speakers=" << cfg.n_speakers << ";downsample_factors=";
  list(cfg.downsample_factors);
  os << ";residual_dilations=";
  list(cfg.residual_dilations);
  os << ";n_discriminator_scales=" << cfg.n_discriminator_scales
     << ";discriminator_base_channels=" << cfg.discriminator_base_channels
     << ";speaker_down_blocks=" << cfg.speaker_down_blocks << ";speaker_mel=" << cfg.speaker_mel.fft_size << '/'
     << cfg.speaker_mel.window_size << '/' << cfg.speaker_mel.hop << '/' << cfg.speaker_mel.n_mels
     << std::setprecision(17) << '/' << cfg.speaker_mel.sample_rate << '/' << cfg.speaker_mel.log_floor;
  return os.str();
}

std::uint64_t config_digest(const ModelConfig& cfg) { return io::fnv1a64(describe(cfg)); }

std::string to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["d_con"] = cfg.d_con;
  j["d_spk"] = cfg.d_spk;
  j["base_channels"] = cfg.base_channels;
  j["n_speakers"] = cfg.n_speakers;
  j["downsample_factors"] = cfg.downsample_factors;
  j["residual_dilations"] = cfg.residual_dilations;
  j["n_discriminator_scales"] = cfg.n_discriminator_scales;
  j["discriminator_base_channels"] = cfg.discriminator_base_channels;
  j["speaker_down_blocks"] = cfg.speaker_down_blocks;
  j["speaker_mel"] = {{"fft_size", cfg.speaker_mel.fft_size},
                      {"window_size", cfg.speaker_mel.window_size},
                      {"hop", cfg.speaker_mel.hop},
                      {"n_mels", cfg.speaker_mel.n_mels},
                      {"log_floor", cfg.speaker_mel.log_floor}};
  return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& text, const ModelConfig& base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig cfg = base;
  try {
    if (j.contains("preset")) {
      const auto preset = j.at("preset").get<std::string>();
      const auto speakers = j.value("n_speakers", base.n_speakers);
      if (preset == "standard") cfg = ModelConfig::standard(speakers);
      else if (preset == "desk") cfg = ModelConfig::desk(speakers);
      else if (preset == "micro") cfg = ModelConfig::micro(speakers);
      else throw ConfigError("model config: unknown preset '" + preset + "'");
    }
    for (const auto& [key, value] : j.items()) {
      if (key == "preset") continue;
      else if (key == "d_con") cfg.d_con = value.get<std::size_t>();
      else if (key == "d_spk") cfg.d_spk = value.get<std::size_t>();
      else if (key == "base_channels") cfg.base_channels = value.get<std::size_t>();
      else if (key == "n_speakers") cfg.n_speakers = value.get<std::size_t>();
      else if (key == "downsample_factors") cfg.downsample_factors = value.get<std::vector<std::size_t>>();
      else if (key == "residual_dilations") cfg.residual_dilations = value.get<std::vector<std::size_t>>();
      else if (key == "n_discriminator_scales") cfg.n_discriminator_scales = value.get<std::size_t>();
      else if (key == "discriminator_base_channels") cfg.discriminator_base_channels = value.get<std::size_t>();
      else if (key == "speaker_down_blocks") cfg.speaker_down_blocks = value.get<std::size_t>();
      else if (key == "speaker_mel") {
        for (const auto& [mk, mv] : value.items()) {
          if (mk == "fft_size") cfg.speaker_mel.fft_size = mv.get<std::size_t>();
          else if (mk == "window_size") cfg.speaker_mel.window_size = mv.get<std::size_t>();
          else if (mk == "hop") cfg.speaker_mel.hop = mv.get<std::size_t>();
          else if (mk == "n_mels") cfg.speaker_mel.n_mels = mv.get<std::size_t>();
          else if (mk == "log_floor") cfg.speaker_mel.log_floor = mv.get<double>();
          else throw ConfigError("model config: unknown speaker_mel key '" + mk + "'");
        }
      } else {
        throw ConfigError("model config: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace nvc::model
