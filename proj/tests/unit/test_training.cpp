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

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nvcnet/errors.hpp"
#include "nvcnet/training/adam.hpp"
#include "nvcnet/training/data.hpp"
#include "nvcnet/training/spoof.hpp"
#include "nvcnet/training/trainer.hpp"

namespace nvc::training {
namespace {

namespace fs = std::filesystem;

TrainConfig micro_train(std::uint64_t seed = 5) {
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.clip_length = 8192;
  cfg.seed = seed;
  cfg.weights.fft_sizes = {1024, 512};
  return cfg;
}

const Dataset& toy_data() {
  static const Dataset d = synthetic_dataset({2, 2, 16384, 3});
  return d;
}

std::vector<std::vector<float>> snapshot(const model::ParameterList<float>& params) {
  std::vector<std::vector<float>> out;
  for (const auto& p : params) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("nvcnet_training_" + name)).string();
}

TEST(Adam, FirstStepMovesByLearningRate) {
  model::ParameterList<float> params{{"p", ad::Tensor<float>({1}, {0.5f}, true)}};
  params[0].tensor.mutable_grad()[0] = 1.0f;
  auto state = AdamState::for_parameters(params);
  const AdamConfig cfg;
  adam_step(params, state, cfg);
  EXPECT_FLOAT_EQ(params[0].tensor.values()[0], static_cast<float>(0.5 - 1e-4 / (1.0 + 1e-8)));
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  model::ParameterList<float> params{{"p", ad::Tensor<float>({3}, {0.1f, -2.0f, 7.0f}, true)},
                                     {"q", ad::Tensor<float>({2}, {1.0f, 2.0f}, true)}};
  params[0].tensor.mutable_grad();
  auto state = AdamState::for_parameters(params);
  const auto before = snapshot(params);
  for (int i = 0; i < 3; ++i) adam_step(params, state, AdamConfig{});
  EXPECT_EQ(snapshot(params), before);
}

TEST(Adam, MismatchedStateIsDimensionError) {
  model::ParameterList<float> a{{"p", ad::Tensor<float>({3}, {0, 0, 0}, true)}};
  model::ParameterList<float> b{{"p", ad::Tensor<float>({4}, {0, 0, 0, 0}, true)}};
  auto state = AdamState::for_parameters(a);
  EXPECT_THROW(adam_step(b, state, AdamConfig{}), DimensionError);
}

TEST(Derangement, NoFixedPointsAndUniformOverSmallN) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto p = draw_derangement(8, rng);
    for (std::size_t j = 0; j < p.size(); ++j) ASSERT_NE(p[j], j);
  }
  std::map<std::vector<std::size_t>, int> seen;
  for (int i = 0; i < 4000; ++i) ++seen[draw_derangement(3, rng)];
  ASSERT_EQ(seen.size(), 2u);
  for (const auto& [perm, count] : seen) EXPECT_NEAR(count, 2000, 200);
  EXPECT_THROW(draw_derangement(1, rng), ContractError);
}

TEST(Data, SyntheticSetShapeAndDeterminism) {
  const auto a = synthetic_dataset({});
  const auto b = synthetic_dataset({});
  ASSERT_EQ(a.size(), 8u);
  EXPECT_EQ(a.n_speakers(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.utterances[i].samples.size(), 32768u);
    EXPECT_EQ(a.utterances[i].samples, b.utterances[i].samples);
    float peak = 0.0f;
    for (float v : a.utterances[i].samples) peak = std::max(peak, std::abs(v));
    EXPECT_NEAR(peak, 0.6f, 1e-6f);
  }
}

TEST(Data, CyclicCropWraps) {
  const std::vector<float> x{1, 2, 3};
  EXPECT_EQ(cyclic_crop(x, 2, 5), (std::vector<float>{3, 1, 2, 3, 1}));
}

TEST(Data, BatchContract) {
  TrainConfig cfg;
  cfg.clip_length = 8192;
  const auto data = synthetic_dataset({});
  Rng a(7), b(7);
  for (int i = 0; i < 20; ++i) {
    const auto x = make_batch(data, a, cfg, 16);
    const auto y = make_batch(data, b, cfg, 16);
    const auto& in = x.inputs;
    ASSERT_EQ(in.source.shape(), (ad::Shape{8, 8192}));
    ASSERT_EQ(in.target.shape(), (ad::Shape{8, 8192}));
    ASSERT_EQ(in.speaker_view.shape(), (ad::Shape{8, 8192}));
    ASSERT_EQ(in.noise.shape(), (ad::Shape{8, 16}));
    for (std::size_t j = 0; j < 8; ++j) {
      ASSERT_NE(in.permutation[j], j);
      ASSERT_EQ(in.labels[j], data.utterances[x.items[j]].speaker);
      ASSERT_EQ(in.target_labels[j], in.labels[in.permutation[j]]);
    }
    ASSERT_TRUE(std::equal(in.source.values().begin(), in.source.values().end(), y.inputs.source.values().begin()));
    ASSERT_EQ(in.permutation, y.inputs.permutation);
  }
  EXPECT_THROW(make_batch(Dataset{}, a, cfg, 16), DataError);
}

TEST(Data, FullLengthClipsAreDefault) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.clip_length, 32768u);
  Rng rng(8);
  const auto b = make_batch(synthetic_dataset({2, 1, 20000, 1}), rng, cfg, 4);
  EXPECT_EQ(b.inputs.source.dim(1), 32768u);
}

TEST(Config, ValidationRules) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.clip_length = 1000;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.batch_size = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.weights.reconstruction = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.adam_beta2 = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Trainer, UpdatesAreScopedToTheirNetworks) {
  Trainer t(model::ModelConfig::micro(2), micro_train());
  const auto batch = t.next_batch(toy_data());
  const auto g0 = snapshot(t.net().generator_side_parameters());
  const auto d0 = snapshot(t.net().discriminator_parameters());
  auto pending = t.begin_step(batch);
  t.discriminator_update(batch, *pending);
  const auto g1 = snapshot(t.net().generator_side_parameters());
  const auto d1 = snapshot(t.net().discriminator_parameters());
  EXPECT_EQ(g1, g0);
  EXPECT_NE(d1, d0);
  const auto report = t.generator_update(batch, *pending);
  EXPECT_EQ(snapshot(t.net().discriminator_parameters()), d1);
  EXPECT_NE(snapshot(t.net().generator_side_parameters()), g1);
  EXPECT_EQ(report.step, 1u);
  EXPECT_EQ(t.steps_done(), 1u);
  for (double v : report.losses()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Trainer, FixedSeedReproducesTrajectoryBitwise) {
  Trainer a(model::ModelConfig::micro(2), micro_train(9));
  Trainer b(model::ModelConfig::micro(2), micro_train(9));
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a.step(toy_data()).losses(), b.step(toy_data()).losses());
  EXPECT_EQ(snapshot(a.net().parameters()), snapshot(b.net().parameters()));
}

TEST(Trainer, CheckpointRoundTripAndResume) {
  const auto path = temp_path("resume.nvc");
  Trainer unbroken(model::ModelConfig::micro(2), micro_train(11));
  Trainer first(model::ModelConfig::micro(2), micro_train(11));
  unbroken.step(toy_data());
  first.step(toy_data());
  first.save_checkpoint(path);

  Trainer resumed(model::ModelConfig::micro(2), micro_train(99));
  resumed.load_checkpoint(path);
  EXPECT_EQ(resumed.steps_done(), 1u);
  EXPECT_EQ(snapshot(resumed.net().parameters()), snapshot(first.net().parameters()));
  EXPECT_EQ(resumed.generator_optimizer(), first.generator_optimizer());
  EXPECT_EQ(resumed.discriminator_optimizer(), first.discriminator_optimizer());
  for (int i = 0; i < 2; ++i) EXPECT_EQ(resumed.step(toy_data()).losses(), unbroken.step(toy_data()).losses());
  fs::remove(path);
}

TEST(Trainer, LoadedModelForwardIsBitwiseIdentical) {
  const auto path = temp_path("model.nvc");
  Trainer t(model::ModelConfig::micro(2), micro_train(12));
  t.step(toy_data());
  t.save_checkpoint(path);
  const auto net = load_model(path);
  const auto x = ad::Tensor<float>({1, 8192}, std::vector<float>(toy_data().utterances[0].samples.begin(),
                                                                 toy_data().utterances[0].samples.begin() + 8192));
  ad::NoGradScope<float> no_grad;
  const auto a = t.net().convert(x, t.net().speaker_encode(x).mean);
  const auto b = net.convert(x, net.speaker_encode(x).mean);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  fs::remove(path);
}

TEST(Trainer, WrongConfigOnLoadIsIncompatible) {
  const auto path = temp_path("wrong.nvc");
  Trainer t(model::ModelConfig::micro(2), micro_train());
  t.save_checkpoint(path);
  auto other = model::ModelConfig::micro(2);
  other.d_spk = 16;
  Trainer u(other, micro_train());
  EXPECT_THROW(u.load_checkpoint(path), IncompatibleError);
  fs::remove(path);
}

TEST(Trainer, DeskCheckpointUnder50MB) {
  const auto path = temp_path("desk.nvc");
  Trainer t(model::ModelConfig::desk(2), TrainConfig{});
  t.save_checkpoint(path);
  EXPECT_LT(fs::file_size(path), 50u * 1024u * 1024u);
  fs::remove(path);
}

TEST(Trainer, NonFiniteLossIsTrainingError) {
  Trainer t(model::ModelConfig::micro(2), micro_train());
  auto batch = t.next_batch(toy_data());
  std::vector<float> bad(batch.inputs.source.values().begin(), batch.inputs.source.values().end());
  bad[100] = std::numeric_limits<float>::quiet_NaN();
  batch.inputs.source = ad::Tensor<float>(batch.inputs.source.shape(), bad);
  EXPECT_THROW(t.train_step(batch), TrainingError);
}

TEST(Log, KeyValueRecord) {
  StepReport r;
  r.step = 3;
  r.d_scales = {1.0, 2.0};
  r.spectral = {0.5, 0.25};
  const auto line = format_log_line(r, {1024, 512});
  EXPECT_EQ(line.rfind("step=3 d_total=0 d_scale0=1 d_scale1=2 g_total=0", 0), 0u) << line;
  EXPECT_NE(line.find(" spec1024=0.5 spec512=0.25 rec="), std::string::npos);
  EXPECT_NE(line.find(" lr="), std::string::npos);
  EXPECT_NE(line.find(" wall="), std::string::npos);
}

TEST(Spoof, RateDefinition) {
  const std::vector<std::size_t> t{0, 1, 2, 1};
  EXPECT_EQ(spoofing_rate(t, t), 100.0);
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  std::vector<std::size_t> pred(20000), target(20000);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = pick(rng);
    target[i] = pick(rng);
  }
  EXPECT_NEAR(spoofing_rate(pred, target), 25.0, 1.5);
  EXPECT_THROW(spoofing_rate({}, {}), DataError);
}

TEST(Spoof, SingleClassDatasetIsDataError) {
  SpoofClassifier clf(model::ModelConfig::micro(2), 1);
  Dataset one = synthetic_dataset({2, 1, 16384, 1});
  one.utterances.pop_back();
  Rng rng(1);
  EXPECT_THROW(train_spoof_classifier(clf, one, TrainConfig{}, rng), DataError);
}

TEST(Spoof, SeparableToySetReachesFullTrainAccuracy) {
  const auto data = synthetic_dataset({});
  SpoofClassifier clf(model::ModelConfig::desk(2), 2);
  Rng rng(3);
  const TrainConfig cfg;
  const auto report = train_spoof_classifier(clf, data, cfg, rng);
  EXPECT_EQ(report.epoch_loss.size(), cfg.spoof_epochs);
  EXPECT_EQ(report.train_accuracy, 100.0);
  ad::NoGradScope<float> no_grad;
  EXPECT_EQ(clf.logits(ad::Tensor<float>::zeros({1, 16384})).dim(1), 2u);
}

}  // namespace
}  // namespace nvc::training
