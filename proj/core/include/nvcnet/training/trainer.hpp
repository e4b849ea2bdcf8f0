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
#include <memory>
#include <string>
#include <vector>

#include "nvcnet/losses/losses.hpp"
#include "nvcnet/model/config.hpp"
#include "nvcnet/model/networks.hpp"
#include "nvcnet/training/adam.hpp"
#include "nvcnet/training/config.hpp"
#include "nvcnet/training/data.hpp"

namespace nvc::training {

struct StepReport {
  std::uint64_t step = 0;  // 1-based index of the completed step
  double d_total = 0.0;
  std::vector<double> d_scales;
  double g_total = 0.0;
  double adversarial = 0.0;
  double feature_matching = 0.0;
  std::vector<double> spectral;
  double reconstruction = 0.0;
  double content = 0.0;
  double kl = 0.0;
  double lr = 0.0;
  double seconds = 0.0;  // wall clock for this step

  // Losses only, in a fixed order (for exact trajectory comparison).
  std::vector<double> losses() const;
};

// One key=value record per line:
//   step=N d_total=.. d_scale0=.. .. g_total=.. adv=.. fm=.. spec<w>=.. rec=.. con=.. kl=.. lr=.. wall=..
std::string format_log_line(const StepReport& r, const std::vector<std::size_t>& fft_sizes);

// Generator-side forward pass of a step in progress, recorded on its own tape.
struct PendingStep {
  ad::Tape<float> tape;
  losses::GeneratorForward<float> forward;
  StepReport report;
};

class Trainer {
 public:
  Trainer(const model::ModelConfig& model_cfg, const TrainConfig& cfg);

  // One discriminator update followed by one generator-side update:
  // begin_step, discriminator_update, generator_update.
  StepReport train_step(const Batch& batch);
  std::unique_ptr<PendingStep> begin_step(const Batch& batch);
  // Updates D on the detached conversion; G-side parameters are untouched.
  void discriminator_update(const Batch& batch, PendingStep& pending);
  // Updates E_c, E_s and G against the current D; D is untouched.
  StepReport generator_update(const Batch& batch, PendingStep& pending);
  // Draws the next batch from the trainer's generator, then train_step.
  StepReport step(const Dataset& data);

  Batch next_batch(const Dataset& data);

  // Parameters, both optimizer states, step counter and the batch generator.
  void save_checkpoint(const std::string& path) const;
  // Throws IncompatibleError if the stored model config differs.
  void load_checkpoint(const std::string& path);

  model::NvcNet<float>& net() { return net_; }
  const model::NvcNet<float>& net() const { return net_; }
  const TrainConfig& config() const { return cfg_; }
  std::uint64_t steps_done() const { return step_; }
  const AdamState& generator_optimizer() const { return g_state_; }
  const AdamState& discriminator_optimizer() const { return d_state_; }

 private:
  TrainConfig cfg_;
  model::NvcNet<float> net_;
  model::ParameterList<float> g_params_;
  model::ParameterList<float> d_params_;
  AdamState g_state_;
  AdamState d_state_;
  Rng rng_;
  std::uint64_t step_ = 0;
};

// Model parameters from a checkpoint, for inference.
model::NvcNet<float> load_model(const std::string& path);

}  // namespace nvc::training
