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

#include "nvcnet/training/config.hpp"

#include <cmath>
#include <string>

#include "nvcnet/errors.hpp"

namespace nvc::training {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
  if (batch_size < 2) fail("batch_size must be at least 2 for derangement pairing");
  if (clip_length == 0 || clip_length % 256 != 0) {
    fail("clip_length must be a positive multiple of 256, got " + std::to_string(clip_length));
  }
  if (log_every == 0) fail("log_every must be at least 1");
  if (!(spoof_lr > 0.0)) fail("spoof_lr must be positive");
  if (!(spoof_decay > 0.0 && spoof_decay <= 1.0)) fail("spoof_decay must lie in (0, 1]");
  if (spoof_epochs == 0) fail("spoof_epochs must be at least 1");
  if (spoof_clip_length == 0 || spoof_clip_length % 256 != 0) fail("spoof_clip_length must be a multiple of 256");
  weights.validate();
  augment.validate();
  if (clip_length <= 2 * static_cast<std::size_t>(augment.jitter)) fail("clip_length too short for the jitter range");
}

}  // namespace nvc::training
