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

#include "nvcnet/model/layers.hpp"

namespace nvc::training {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
};

// First and second moments, one buffer per parameter tensor.
struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::uint64_t step = 0;

  static AdamState for_parameters(const model::ParameterList<float>& params);
  bool operator==(const AdamState&) const = default;
};

// Bias-corrected Adam on every tensor of `params` from its gradient buffer
// (absent buffers count as zero). `lr` overrides cfg.lr when positive.
void adam_step(model::ParameterList<float>& params, AdamState& state, const AdamConfig& cfg, double lr = -1.0);

}  // namespace nvc::training
