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

#include "nvcnet/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "nvcnet/errors.hpp"
#include "nvcnet/io/binary.hpp"
#include "nvcnet/losses/losses.hpp"

namespace nvc::training {

namespace {

constexpr char kMagic[8] = {'N', 'V', 'C', 'C', 'K', 'P', 'T', '\1'};
constexpr std::uint32_t kVersion = 1;

AdamConfig adam_config(const TrainConfig& cfg) { return {cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps}; }

std::uint64_t batch_seed(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x62617463u};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

void require_finite(const StepReport& r, const char* phase) {
  const auto values = r.losses();
  for (double v : values) {
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "non-finite loss during " << phase << " at step " << r.step << ":";
      msg << " d_total=" << r.d_total << " g_total=" << r.g_total << " adv=" << r.adversarial
          << " fm=" << r.feature_matching << " rec=" << r.reconstruction << " con=" << r.content << " kl=" << r.kl;
      throw TrainingError(msg.str());
    }
  }
}

void write_params(io::BinaryWriter& w, const model::ParameterList<float>& params) {
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str(p.name);
    const auto& shape = p.tensor.shape();
    w.u32(static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) w.u64(d);
    w.floats(p.tensor.values());
  }
}

void read_params(io::BinaryReader& r, model::ParameterList<float>& params) {
  const auto n = r.u32();
  if (n != params.size()) {
    throw IncompatibleError("'" + r.path() + "': " + std::to_string(n) + " parameter tensors, expected " +
                            std::to_string(params.size()));
  }
  for (auto& p : params) {
    const auto name = r.str();
    if (name != p.name) throw IncompatibleError("'" + r.path() + "': parameter '" + name + "', expected '" + p.name + "'");
    const auto rank = r.u32();
    ad::Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    if (shape != p.tensor.shape()) {
      throw IncompatibleError("'" + r.path() + "': parameter '" + name + "' has shape " + ad::to_string(shape) +
                              ", expected " + ad::to_string(p.tensor.shape()));
    }
    const auto values = r.floats(p.tensor.numel());
    std::copy(values.begin(), values.end(), p.tensor.mutable_values().begin());
  }
}

void write_adam(io::BinaryWriter& w, const AdamState& s) {
  w.u64(s.step);
  w.u32(static_cast<std::uint32_t>(s.m.size()));
  for (std::size_t i = 0; i < s.m.size(); ++i) {
    w.u64(s.m[i].size());
    w.floats(s.m[i]);
    w.floats(s.v[i]);
  }
}

AdamState read_adam(io::BinaryReader& r, const AdamState& layout) {
  AdamState s;
  s.step = r.u64();
  const auto n = r.u32();
  if (n != layout.m.size()) throw IncompatibleError("'" + r.path() + "': optimizer state does not match the model");
  for (std::size_t i = 0; i < n; ++i) {
    const auto size = r.u64();
    if (size != layout.m[i].size()) throw IncompatibleError("'" + r.path() + "': optimizer moment size mismatch");
    s.m.push_back(r.floats(size));
    s.v.push_back(r.floats(size));
  }
  return s;
}

// Header fields shared by the trainer and inference loaders.
model::ModelConfig read_header(io::BinaryReader& r) {
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError("'" + r.path() + "' is not a checkpoint");
  const auto version = r.u32();
  if (version != kVersion) {
    throw IncompatibleError("'" + r.path() + "': checkpoint version " + std::to_string(version) + ", expected " +
                            std::to_string(kVersion));
  }
  const auto digest = r.u64();
  const auto cfg = model::model_config_from_json(r.str());
  if (model::config_digest(cfg) != digest) {
    throw FormatError("'" + r.path() + "': config digest does not match the embedded config");
  }
  return cfg;
}

}  // namespace

std::vector<double> StepReport::losses() const {
  std::vector<double> out{d_total};
  out.insert(out.end(), d_scales.begin(), d_scales.end());
  out.insert(out.end(), {g_total, adversarial, feature_matching});
  out.insert(out.end(), spectral.begin(), spectral.end());
  out.insert(out.end(), {reconstruction, content, kl});
  return out;
}

std::string format_log_line(const StepReport& r, const std::vector<std::size_t>& fft_sizes) {
  std::ostringstream o;
  o << std::setprecision(9);
  o << "step=" << r.step << " d_total=" << r.d_total;
  for (std::size_t k = 0; k < r.d_scales.size(); ++k) o << " d_scale" << k << "=" << r.d_scales[k];
  o << " g_total=" << r.g_total << " adv=" << r.adversarial << " fm=" << r.feature_matching;
  for (std::size_t k = 0; k < r.spectral.size(); ++k) {
    o << " spec" << (k < fft_sizes.size() ? fft_sizes[k] : k) << "=" << r.spectral[k];
  }
  o << " rec=" << r.reconstruction << " con=" << r.content << " kl=" << r.kl << " lr=" << r.lr
    << " wall=" << std::setprecision(4) << r.seconds;
  return o.str();
}

Trainer::Trainer(const model::ModelConfig& model_cfg, const TrainConfig& cfg)
    : cfg_(cfg), net_(model_cfg, cfg.seed), rng_(batch_seed(cfg.seed)) {
  cfg_.validate();
  g_params_ = net_.generator_side_parameters();
  d_params_ = net_.discriminator_parameters();
  g_state_ = AdamState::for_parameters(g_params_);
  d_state_ = AdamState::for_parameters(d_params_);
}

Batch Trainer::next_batch(const Dataset& data) { return make_batch(data, rng_, cfg_, net_.config().d_spk); }

StepReport Trainer::step(const Dataset& data) { return train_step(next_batch(data)); }

StepReport Trainer::train_step(const Batch& batch) {
  auto pending = begin_step(batch);
  discriminator_update(batch, *pending);
  return generator_update(batch, *pending);
}

std::unique_ptr<PendingStep> Trainer::begin_step(const Batch& batch) {
  const auto start = std::chrono::steady_clock::now();
  auto pending = std::make_unique<PendingStep>();
  pending->report.step = step_ + 1;
  pending->report.lr = cfg_.lr;
  model::zero_grad(g_params_);
  model::zero_grad(d_params_);
  model::set_requires_grad(g_params_, true);
  model::set_requires_grad(d_params_, false);
  {
    ad::TapeScope<float> scope(pending->tape);
    pending->forward = losses::generator_forward(net_, batch.inputs);
  }
  pending->report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return pending;
}

void Trainer::discriminator_update(const Batch& batch, PendingStep& pending) {
  const auto start = std::chrono::steady_clock::now();
  const auto& in = batch.inputs;
  auto& report = pending.report;
  model::set_requires_grad(d_params_, true);
  {
    ad::Tape<float> tape;
    ad::TapeScope<float> scope(tape);
    const auto d = losses::total_discriminator_loss(
        net_, losses::DiscriminatorInputs<float>{in.source, pending.forward.conversion, in.labels, in.target_labels});
    report.d_total = d.total.item();
    report.d_scales.clear();
    for (const auto& s : d.per_scale) report.d_scales.push_back(s.item());
    require_finite(report, "the discriminator step");
    tape.backward(d.total);
  }
  adam_step(d_params_, d_state_, adam_config(cfg_));
  model::zero_grad(d_params_);
  model::set_requires_grad(d_params_, false);
  report.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

StepReport Trainer::generator_update(const Batch& batch, PendingStep& pending) {
  const auto start = std::chrono::steady_clock::now();
  auto& report = pending.report;
  {
    ad::TapeScope<float> scope(pending.tape);
    const auto g = losses::total_generator_loss(net_, batch.inputs, pending.forward, cfg_.weights);
    report.g_total = g.total.item();
    report.adversarial = g.adversarial.item();
    report.feature_matching = g.feature_matching.item();
    report.spectral.clear();
    for (const auto& s : g.spectral) report.spectral.push_back(s.item());
    report.reconstruction = g.reconstruction.item();
    report.content = g.content.item();
    report.kl = g.kl.item();
    require_finite(report, "the generator step");
    pending.tape.backward(g.total);
  }
  adam_step(g_params_, g_state_, adam_config(cfg_));
  model::zero_grad(g_params_);
  model::zero_grad(d_params_);
  ++step_;
  report.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void Trainer::save_checkpoint(const std::string& path) const {
  io::BinaryWriter w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u64(model::config_digest(net_.config()));
  w.str(model::to_json(net_.config()));
  w.u64(step_);
  std::ostringstream rng_text;
  rng_text << rng_;
  w.str(rng_text.str());
  write_params(w, net_.parameters());
  write_adam(w, g_state_);
  write_adam(w, d_state_);
  w.close();
}

void Trainer::load_checkpoint(const std::string& path) {
  io::BinaryReader r(path);
  const auto stored = read_header(r);
  if (!(stored == net_.config())) {
    throw IncompatibleError("'" + path + "': checkpoint model config (digest " + io::hex64(model::config_digest(stored)) +
                            ") differs from the requested one (digest " + io::hex64(model::config_digest(net_.config())) +
                            ")");
  }
  const auto step = r.u64();
  std::istringstream rng_text(r.str());
  Rng rng;
  rng_text >> rng;
  if (!rng_text) throw FormatError("'" + path + "': unreadable generator state");
  auto params = net_.parameters();
  read_params(r, params);
  g_state_ = read_adam(r, g_state_);
  d_state_ = read_adam(r, d_state_);
  if (!r.at_end()) throw FormatError("'" + path + "': trailing bytes");
  step_ = step;
  rng_ = rng;
}

model::NvcNet<float> load_model(const std::string& path) {
  io::BinaryReader r(path);
  const auto cfg = read_header(r);
  model::NvcNet<float> net(cfg, 0);
  r.u64();
  r.str();
  auto params = net.parameters();
  read_params(r, params);
  return net;
}

}  // namespace nvc::training
