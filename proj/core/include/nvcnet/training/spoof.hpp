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
#include <span>
#include <vector>

#include "nvcnet/model/config.hpp"
#include "nvcnet/model/networks.hpp"
#include "nvcnet/training/config.hpp"
#include "nvcnet/training/data.hpp"

namespace nvc::training {

// Speaker-encoder body (log-mel conv stack, temporal mean) with a dense
// softmax head over the training speakers.
class SpoofClassifier {
 public:
  SpoofClassifier(const model::ModelConfig& cfg, std::uint64_t seed);

  // audio [B, T] -> logits [B, n_speakers]
  ad::Tensor<float> logits(const ad::Tensor<float>& audio) const;
  std::size_t predict(std::span<const float> clip) const;
  model::ParameterList<float> parameters() const;
  std::size_t n_classes() const { return n_classes_; }

 private:
  std::size_t n_classes_ = 0;
  model::SpeakerEncoder<float> body_;
  model::Dense<float> head_;
};

struct SpoofTrainReport {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;  // percent, whole training clips
};

// Cross-entropy with Adam (spoof_lr, decayed by spoof_decay after every
// epoch) on random crops of spoof_clip_length samples.
SpoofTrainReport train_spoof_classifier(SpoofClassifier& clf, const Dataset& data, const TrainConfig& cfg, Rng& rng);

double classification_accuracy(const SpoofClassifier& clf, const Dataset& data);

// Percentage of predictions equal to the target.
double spoofing_rate(std::span<const std::size_t> predictions, std::span<const std::size_t> targets);

// Percentage of clips whose predicted speaker equals the target.
double evaluate_spoofing(const SpoofClassifier& clf, const std::vector<std::vector<float>>& clips,
                         std::span<const std::size_t> targets);

}  // namespace nvc::training
