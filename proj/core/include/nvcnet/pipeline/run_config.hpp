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
#include <string>

#include "nvcnet/model/config.hpp"
#include "nvcnet/training/config.hpp"
#include "nvcnet/training/data.hpp"

namespace nvc::pipeline {

// Everything a training run needs, read from one JSON file:
//
//   {
//     "model":   { "preset": "desk", ... },        model config keys
//     "train":   { "lr": 1e-4, "steps": 1000, "loss_weights": { ... }, ... },
//     "augment": { "amp_min": 0.25, "jitter": 30, ... },
//     "data":    { "manifest": "data/train.tsv" }  or  { "synthetic": { ... } },
//     "output":  { "dir": "runs/desk" }
//   }
//
// Relative paths resolve against the config file's directory.
struct RunConfig {
  std::string model_json = "{}";  // applied over the preset chosen by train.desk_scale
  training::TrainConfig train;
  std::string manifest;
  std::optional<training::SyntheticSpec> synthetic;
  std::string output_dir = "nvcnet-run";

  void validate() const;
  // Model config for `n_speakers` training speakers.
  model::ModelConfig model_config(std::size_t n_speakers) const;
};

RunConfig run_config_from_json(const std::string& text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);
std::string to_json(const RunConfig& cfg);

}  // namespace nvc::pipeline
