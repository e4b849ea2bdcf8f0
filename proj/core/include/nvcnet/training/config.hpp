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

#include "nvcnet/augment/augment.hpp"
#include "nvcnet/losses/losses.hpp"

namespace nvc::training {

struct TrainConfig {
  double lr = 1e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  double adam_eps = 1e-8;
  std::size_t batch_size = 8;
  std::size_t clip_length = 32768;
  std::size_t steps = 1000;
  std::uint64_t seed = 0;
  bool desk_scale = true;
  losses::LossWeights weights;
  augment::AugmentConfig augment;
  std::size_t log_every = 1;
  std::size_t checkpoint_every = 0;  // 0: only at the end

  // Spoofing classifier (speaker-encoder body plus a softmax head).
  double spoof_lr = 5e-4;
  double spoof_decay = 0.99;  // per epoch
  std::size_t spoof_epochs = 30;
  std::size_t spoof_clip_length = 16384;

  void validate() const;
};

}  // namespace nvc::training
