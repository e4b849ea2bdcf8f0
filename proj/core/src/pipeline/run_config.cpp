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

#include "nvcnet/pipeline/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nvcnet/errors.hpp"

namespace nvc::pipeline {

namespace {

using json = nlohmann::ordered_json;

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

[[noreturn]] void unknown(const std::string& section, const std::string& key) {
  throw ConfigError("run config: unknown key '" + key + "' in '" + section + "'");
}

void parse_weights(const json& j, losses::LossWeights& w) {
  for (const auto& [key, value] : j.items()) {
    if (key == "reconstruction") w.reconstruction = value.get<double>();
    else if (key == "content") w.content = value.get<double>();
    else if (key == "kl") w.kl = value.get<double>();
    else if (key == "spectral") w.spectral = value.get<double>();
    else if (key == "fft_sizes") w.fft_sizes = value.get<std::vector<std::size_t>>();
    else if (key == "non_saturating") w.non_saturating = value.get<bool>();
    else unknown("train.loss_weights", key);
  }
}

void parse_train(const json& j, training::TrainConfig& t) {
  for (const auto& [key, value] : j.items()) {
    if (key == "lr") t.lr = value.get<double>();
    else if (key == "adam_beta1") t.adam_beta1 = value.get<double>();
    else if (key == "adam_beta2") t.adam_beta2 = value.get<double>();
    else if (key == "adam_eps") t.adam_eps = value.get<double>();
    else if (key == "batch_size") t.batch_size = value.get<std::size_t>();
    else if (key == "clip_length") t.clip_length = value.get<std::size_t>();
    else if (key == "steps") t.steps = value.get<std::size_t>();
    else if (key == "seed") t.seed = value.get<std::uint64_t>();
    else if (key == "desk_scale") t.desk_scale = value.get<bool>();
    else if (key == "log_every") t.log_every = value.get<std::size_t>();
    else if (key == "checkpoint_every") t.checkpoint_every = value.get<std::size_t>();
    else if (key == "spoof_lr") t.spoof_lr = value.get<double>();
    else if (key == "spoof_decay") t.spoof_decay = value.get<double>();
    else if (key == "spoof_epochs") t.spoof_epochs = value.get<std::size_t>();
    else if (key == "spoof_clip_length") t.spoof_clip_length = value.get<std::size_t>();
    else if (key == "loss_weights") parse_weights(value, t.weights);
    else unknown("train", key);
  }
}

void parse_augment(const json& j, augment::AugmentConfig& a) {
  for (const auto& [key, value] : j.items()) {
    if (key == "amp_min") a.amp_min = value.get<double>();
    else if (key == "amp_max") a.amp_max = value.get<double>();
    else if (key == "jitter") a.jitter = value.get<int>();
    else if (key == "segment_min_seconds") a.segment_min_seconds = value.get<double>();
    else if (key == "segment_max_seconds") a.segment_max_seconds = value.get<double>();
    else if (key == "sample_rate") a.sample_rate = value.get<double>();
    else unknown("augment", key);
  }
}

training::SyntheticSpec parse_synthetic(const json& j) {
  training::SyntheticSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key == "n_speakers") s.n_speakers = value.get<std::size_t>();
    else if (key == "clips_per_speaker") s.clips_per_speaker = value.get<std::size_t>();
    else if (key == "length") s.length = value.get<std::size_t>();
    else if (key == "seed") s.seed = value.get<std::uint64_t>();
    else unknown("data.synthetic", key);
  }
  return s;
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  if (manifest.empty() == !synthetic.has_value()) {
    throw ConfigError("run config: 'data' needs exactly one of 'manifest' or 'synthetic'");
  }
  if (synthetic && (synthetic->n_speakers < 2 || synthetic->clips_per_speaker == 0 || synthetic->length == 0)) {
    throw ConfigError("run config: synthetic data needs at least 2 speakers and nonempty clips");
  }
  if (output_dir.empty()) throw ConfigError("run config: output.dir must not be empty");
  if (synthetic) {
    model_config(synthetic->n_speakers);
  } else {
    const auto base = train.desk_scale ? model::ModelConfig::desk(2) : model::ModelConfig::standard(2);
    model::model_config_from_json(model_json, base);
  }
}

model::ModelConfig RunConfig::model_config(std::size_t n_speakers) const {
  const auto base = train.desk_scale ? model::ModelConfig::desk(n_speakers) : model::ModelConfig::standard(n_speakers);
  auto cfg = model::model_config_from_json(model_json, base);
  if (cfg.n_speakers != n_speakers) {
    throw ConfigError("run config: model.n_speakers = " + std::to_string(cfg.n_speakers) + " but the data has " +
                      std::to_string(n_speakers) + " speakers");
  }
  return cfg;
}

RunConfig run_config_from_json(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "model") {
        if (!value.is_object()) throw ConfigError("run config: 'model' must be an object");
        cfg.model_json = value.dump();
      } else if (key == "train") {
        parse_train(value, cfg.train);
      } else if (key == "augment") {
        parse_augment(value, cfg.train.augment);
      } else if (key == "data") {
        for (const auto& [dk, dv] : value.items()) {
          if (dk == "manifest") cfg.manifest = resolve(dv.get<std::string>(), base_dir);
          else if (dk == "synthetic") cfg.synthetic = parse_synthetic(dv);
          else unknown("data", dk);
        }
      } else if (key == "output") {
        for (const auto& [ok, ov] : value.items()) {
          if (ok == "dir") cfg.output_dir = resolve(ov.get<std::string>(), base_dir);
          else unknown("output", ok);
        }
      } else {
        unknown("top level", key);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read run config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path().string();
  return run_config_from_json(text.str(), dir.empty() ? "." : dir);
}

std::string to_json(const RunConfig& cfg) {
  const auto& t = cfg.train;
  const auto& a = t.augment;
  json j;
  j["model"] = json::parse(cfg.model_json);
  j["train"] = {{"lr", t.lr},
                {"adam_beta1", t.adam_beta1},
                {"adam_beta2", t.adam_beta2},
                {"adam_eps", t.adam_eps},
                {"batch_size", t.batch_size},
                {"clip_length", t.clip_length},
                {"steps", t.steps},
                {"seed", t.seed},
                {"desk_scale", t.desk_scale},
                {"log_every", t.log_every},
                {"checkpoint_every", t.checkpoint_every},
                {"spoof_lr", t.spoof_lr},
                {"spoof_decay", t.spoof_decay},
                {"spoof_epochs", t.spoof_epochs},
                {"spoof_clip_length", t.spoof_clip_length},
                {"loss_weights",
                 {{"reconstruction", t.weights.reconstruction},
                  {"content", t.weights.content},
                  {"kl", t.weights.kl},
                  {"spectral", t.weights.spectral},
                  {"fft_sizes", t.weights.fft_sizes},
                  {"non_saturating", t.weights.non_saturating}}}};
  j["augment"] = {{"amp_min", a.amp_min},
                  {"amp_max", a.amp_max},
                  {"jitter", a.jitter},
                  {"segment_min_seconds", a.segment_min_seconds},
                  {"segment_max_seconds", a.segment_max_seconds},
                  {"sample_rate", a.sample_rate}};
  if (cfg.synthetic) {
    const auto& s = *cfg.synthetic;
    j["data"] = {{"synthetic",
                  {{"n_speakers", s.n_speakers},
                   {"clips_per_speaker", s.clips_per_speaker},
                   {"length", s.length},
                   {"seed", s.seed}}}};
  } else {
    j["data"] = {{"manifest", cfg.manifest}};
  }
  j["output"] = {{"dir", cfg.output_dir}};
  return j.dump(2) + "\n";
}

}  // namespace nvc::pipeline
