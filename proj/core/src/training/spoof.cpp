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

#include "nvcnet/training/spoof.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "nvcnet/ad/ops.hpp"
#include "nvcnet/errors.hpp"
#include "nvcnet/training/adam.hpp"

namespace nvc::training {

SpoofClassifier::SpoofClassifier(const model::ModelConfig& cfg, std::uint64_t seed) : n_classes_(cfg.n_speakers) {
  cfg.validate();
  model::Rng rng(seed);
  body_ = model::SpeakerEncoder<float>(cfg, rng);
  head_ = model::Dense<float>(body_.feature_width(), n_classes_, rng);
}

ad::Tensor<float> SpoofClassifier::logits(const ad::Tensor<float>& audio) const {
  return head_(body_.features(audio));
}

std::size_t SpoofClassifier::predict(std::span<const float> clip) const {
  ad::NoGradScope<float> no_grad;
  const auto out = logits(ad::Tensor<float>({1, clip.size()}, std::vector<float>(clip.begin(), clip.end())));
  const auto v = out.values();
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

model::ParameterList<float> SpoofClassifier::parameters() const {
  model::ParameterList<float> out;
  body_.collect(out, "spoof.body");
  head_.collect(out, "spoof.head");
  return out;
}

double classification_accuracy(const SpoofClassifier& clf, const Dataset& data) {
  if (data.utterances.empty()) throw DataError("classification_accuracy: empty dataset");
  std::size_t hits = 0;
  for (const auto& u : data.utterances) hits += clf.predict(u.samples) == u.speaker ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(data.size());
}

SpoofTrainReport train_spoof_classifier(SpoofClassifier& clf, const Dataset& data, const TrainConfig& cfg, Rng& rng) {
  std::set<std::size_t> classes;
  for (const auto& u : data.utterances) classes.insert(u.speaker);
  if (classes.size() < 2) throw DataError("spoof classifier needs utterances from at least two speakers");
  if (*classes.rbegin() >= clf.n_classes()) throw DataError("speaker index outside the classifier's classes");

  auto params = clf.parameters();
  auto state = AdamState::for_parameters(params);
  AdamConfig adam{cfg.spoof_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  const std::size_t L = cfg.spoof_clip_length;
  const std::size_t B = std::max<std::size_t>(1, std::min(cfg.batch_size, data.size()));

  SpoofTrainReport report;
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 0; epoch < cfg.spoof_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += B) {
      const std::size_t end = std::min(order.size(), begin + B);
      std::vector<float> audio;
      std::vector<std::size_t> labels;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& u = data.utterances[order[i]];
        std::size_t offset = 0;
        if (u.samples.size() > L) offset = std::uniform_int_distribution<std::size_t>(0, u.samples.size() - L)(rng);
        const auto crop = cyclic_crop(u.samples, offset, L);
        audio.insert(audio.end(), crop.begin(), crop.end());
        labels.push_back(u.speaker);
      }
      ad::Tape<float> tape;
      ad::TapeScope<float> scope(tape);
      const auto loss = ad::cross_entropy(clf.logits(ad::Tensor<float>({end - begin, L}, std::move(audio))), labels);
      loss_sum += loss.item();
      ++batches;
      tape.backward(loss);
      adam_step(params, state, adam);
      model::zero_grad(params);
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
    adam.lr *= cfg.spoof_decay;
  }
  report.train_accuracy = classification_accuracy(clf, data);
  return report;
}

double spoofing_rate(std::span<const std::size_t> predictions, std::span<const std::size_t> targets) {
  if (predictions.empty()) throw DataError("spoofing rate of an empty set");
  if (predictions.size() != targets.size()) throw SizeError("spoofing rate: one target label per prediction required");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == targets[i] ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double evaluate_spoofing(const SpoofClassifier& clf, const std::vector<std::vector<float>>& clips,
                         std::span<const std::size_t> targets) {
  if (clips.empty()) throw DataError("evaluate_spoofing: no converted clips");
  if (clips.size() != targets.size()) throw SizeError("evaluate_spoofing: one target label per clip required");
  std::vector<std::size_t> predictions;
  for (const auto& clip : clips) predictions.push_back(clf.predict(clip));
  return spoofing_rate(predictions, targets);
}

}  // namespace nvc::training
