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

#include "nvcnet/pipeline/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "nvcnet/errors.hpp"
#include "nvcnet/io/binary.hpp"
#include "nvcnet/io/embedding.hpp"
#include "nvcnet/io/manifest.hpp"
#include "nvcnet/io/wav.hpp"
#include "nvcnet/model/param_count.hpp"
#include "nvcnet/pipeline/inference.hpp"
#include "nvcnet/pipeline/run_config.hpp"
#include "nvcnet/training/spoof.hpp"
#include "nvcnet/training/trainer.hpp"

namespace nvc::pipeline {

namespace {

namespace fs = std::filesystem;

struct RunData {
  training::Dataset train;
  training::Dataset eval;
};

RunData load_run_data(const RunConfig& cfg) {
  if (cfg.synthetic) {
    auto d = training::synthetic_dataset(*cfg.synthetic);
    return {d, d};
  }
  const auto manifest = io::load_manifest(cfg.manifest);
  manifest.require_trainable();
  return {training::load_dataset(manifest, io::Split::kTrain), training::load_dataset(manifest, io::Split::kTest)};
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ContractError(std::string("missing ") + what + " path");
  if (!fs::is_regular_file(path)) throw IoError(std::string(what) + " '" + path + "' does not exist");
}

void prepare_output(const std::string& path) {
  if (path.empty()) throw ContractError("missing --out path");
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::vector<float> load_clip(const std::string& path) { return io::load_wav(path).samples; }

}  // namespace

int cmd_train(const TrainOptions& opt, std::ostream& out) {
  require_file(opt.config, "run config");
  auto cfg = load_run_config(opt.config);
  if (opt.seed) cfg.train.seed = *opt.seed;
  if (opt.steps) cfg.train.steps = *opt.steps;
  if (opt.out) cfg.output_dir = *opt.out;
  if (opt.desk_scale) cfg.train.desk_scale = *opt.desk_scale;
  cfg.validate();
  if (!opt.resume.empty()) require_file(opt.resume, "checkpoint");

  const auto data = load_run_data(cfg);
  const auto model_cfg = cfg.model_config(data.train.n_speakers());
  training::Trainer trainer(model_cfg, cfg.train);
  if (!opt.resume.empty()) trainer.load_checkpoint(opt.resume);

  fs::create_directories(cfg.output_dir);
  {
    std::ofstream c(fs::path(cfg.output_dir) / "config.json");
    c << to_json(cfg);
  }
  const auto log_path = (fs::path(cfg.output_dir) / "train.log").string();
  std::ofstream log(log_path, opt.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw IoError("cannot write training log '" + log_path + "'");

  out << "model_digest=" << io::hex64(model::config_digest(model_cfg)) << " speakers=" << data.train.n_speakers()
      << " utterances=" << data.train.size() << " start_step=" << trainer.steps_done()
      << " steps=" << cfg.train.steps << "\n";
  const auto& fft = cfg.train.weights.fft_sizes;
  while (trainer.steps_done() < cfg.train.steps) {
    const auto report = trainer.step(data.train);
    const auto line = training::format_log_line(report, fft);
    log << line << "\n";
    if (report.step % cfg.train.log_every == 0 || report.step == cfg.train.steps) {
      log.flush();
      out << line << "\n";
    }
    if (cfg.train.checkpoint_every > 0 && report.step % cfg.train.checkpoint_every == 0) {
      trainer.save_checkpoint((fs::path(cfg.output_dir) / ("checkpoint-" + std::to_string(report.step) + ".nvc")).string());
    }
  }
  const auto final_path = (fs::path(cfg.output_dir) / "checkpoint.nvc").string();
  trainer.save_checkpoint(final_path);
  out << "checkpoint=" << final_path << " log=" << log_path << "\n";
  return 0;
}

TargetKind parse_target_kind(const std::string& name) {
  if (name == "wav") return TargetKind::kWav;
  if (name == "emb") return TargetKind::kEmbedding;
  if (name == "prior") return TargetKind::kPrior;
  throw ConfigError("unknown target '" + name + "', expected wav, emb or prior");
}

int cmd_convert(const ConvertOptions& opt, std::ostream& out) {
  require_file(opt.checkpoint, "checkpoint");
  require_file(opt.source, "source");
  if (opt.target != TargetKind::kPrior) require_file(opt.reference, "reference");
  prepare_output(opt.out);
  const auto source = load_clip(opt.source);
  const auto net = training::load_model(opt.checkpoint);
  const auto hop = net.config().hop_length();
  crop_to_hop(source, hop);

  std::vector<float> z;
  switch (opt.target) {
    case TargetKind::kPrior:
      z = prior_sample(net.config().d_spk, opt.seed);
      break;
    case TargetKind::kEmbedding: {
      const auto emb = io::load_embedding(opt.reference);
      if (emb.config_digest != model::config_digest(net.config())) {
        throw IncompatibleError("embedding '" + opt.reference + "' was computed by a different model config");
      }
      z = emb.values;
      break;
    }
    case TargetKind::kWav: {
      const auto ref = load_clip(opt.reference);
      if (opt.sample_reference) {
        model::Rng rng(opt.seed);
        z = posterior_sample(net, ref, rng);
      } else {
        z = posterior_mean(net, ref);
      }
      break;
    }
  }
  const auto y = convert(net, source, z);
  io::save_wav(opt.out, y);
  out << "out=" << opt.out << " samples=" << y.size() << " dropped=" << source.size() - y.size() << "\n";
  return 0;
}

int cmd_embed(const EmbedOptions& opt, std::ostream& out) {
  require_file(opt.checkpoint, "checkpoint");
  if (opt.references.empty()) throw ContractError("embed needs at least one reference wav");
  for (const auto& r : opt.references) require_file(r, "reference");
  prepare_output(opt.out);
  const auto net = training::load_model(opt.checkpoint);
  std::vector<std::vector<float>> clips;
  for (const auto& r : opt.references) clips.push_back(load_clip(r));
  io::save_embedding(opt.out, {model::config_digest(net.config()), reference_embedding(net, clips)});
  out << "out=" << opt.out << " references=" << clips.size() << " d_spk=" << net.config().d_spk << "\n";
  return 0;
}

int cmd_sample(const SampleOptions& opt, std::ostream& out) {
  require_file(opt.checkpoint, "checkpoint");
  if (!opt.reference.empty()) require_file(opt.reference, "reference");
  prepare_output(opt.out);
  const auto net = training::load_model(opt.checkpoint);
  std::vector<float> z;
  if (opt.reference.empty()) {
    z = prior_sample(net.config().d_spk, opt.seed);
  } else {
    model::Rng rng(opt.seed);
    z = posterior_sample(net, load_clip(opt.reference), rng);
  }
  io::save_embedding(opt.out, {model::config_digest(net.config()), z});
  out << "out=" << opt.out << " source=" << (opt.reference.empty() ? "prior" : "posterior") << " seed=" << opt.seed
      << "\n";
  return 0;
}

int cmd_reconstruct(const ReconstructOptions& opt, std::ostream& out) {
  require_file(opt.checkpoint, "checkpoint");
  require_file(opt.source, "source");
  prepare_output(opt.out);
  const auto source = load_clip(opt.source);
  const auto net = training::load_model(opt.checkpoint);
  const auto y = reconstruct(net, source);
  io::save_wav(opt.out, y);
  out << "out=" << opt.out << " samples=" << y.size() << "\n";
  return 0;
}

int cmd_eval_spoof(const EvalSpoofOptions& opt, std::ostream& out) {
  require_file(opt.config, "run config");
  require_file(opt.checkpoint, "checkpoint");
  auto cfg = load_run_config(opt.config);
  if (opt.seed) cfg.train.seed = *opt.seed;
  const auto data = load_run_data(cfg);
  const auto net = training::load_model(opt.checkpoint);
  if (net.config().n_speakers != data.train.n_speakers()) {
    throw IncompatibleError("checkpoint has " + std::to_string(net.config().n_speakers) + " speakers, the data " +
                            std::to_string(data.train.n_speakers()));
  }
  if (data.eval.utterances.empty()) throw DataError("no evaluation utterances");

  training::Rng rng(cfg.train.seed);
  training::SpoofClassifier clf(net.config(), cfg.train.seed);
  const auto trained = training::train_spoof_classifier(clf, data.train, cfg.train, rng);
  out << "classifier_epochs=" << trained.epoch_loss.size() << " classifier_loss=" << trained.epoch_loss.back()
      << " classifier_train_accuracy=" << trained.train_accuracy << "\n";

  const std::size_t S = data.train.n_speakers();
  std::vector<std::vector<float>> speaker_embedding(S);
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<std::vector<float>> clips;
    for (const auto& u : data.train.utterances) {
      if (u.speaker == s) clips.push_back(u.samples);
    }
    speaker_embedding[s] = reference_embedding(net, clips);
  }
  std::vector<std::vector<float>> converted;
  std::vector<std::size_t> targets;
  for (const auto& u : data.eval.utterances) {
    for (std::size_t t = 0; t < S; ++t) {
      if (t == u.speaker) continue;
      converted.push_back(convert(net, u.samples, speaker_embedding[t]));
      targets.push_back(t);
    }
  }
  const double pct = training::evaluate_spoofing(clf, converted, targets);
  std::ostringstream line;
  line << "spoof_accuracy=" << pct << " conversions=" << converted.size();
  out << line.str() << "\n";
  if (!opt.out.empty()) {
    prepare_output(opt.out);
    std::ofstream f(opt.out);
    f << "classifier_train_accuracy=" << trained.train_accuracy << "\n" << line.str() << "\n";
  }
  return 0;
}

BenchReport run_bench(const BenchOptions& opt, std::ostream& out) {
  if (opt.repeats < 3) throw ContractError("bench needs at least 3 repeats for a median");
  if (!(opt.duration > 0.0)) throw ContractError("bench duration must be positive");
  if (!opt.checkpoint.empty()) require_file(opt.checkpoint, "checkpoint");
  const auto net = opt.checkpoint.empty()
                       ? model::NvcNet<float>(opt.desk_scale ? model::ModelConfig::desk(2) : model::ModelConfig::standard(2),
                                              opt.seed)
                       : training::load_model(opt.checkpoint);
  const auto hop = net.config().hop_length();
  BenchReport report;
  report.samples = static_cast<std::size_t>(std::llround(opt.duration * 22050.0));
  const std::size_t padded = (report.samples + hop - 1) / hop * hop;

  model::Rng rng(opt.seed);
  std::normal_distribution<float> noise(0.0f, 0.1f);
  std::vector<float> audio(padded);
  for (auto& v : audio) v = noise(rng);
  const auto z = prior_sample(net.config().d_spk, opt.seed);
  const ad::Tensor<float> x({1, padded}, audio);
  const ad::Tensor<float> emb({1, z.size()}, z);

  ad::NoGradScope<float> no_grad;
  for (std::size_t r = 0; r < opt.repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    const auto y = net.generate(net.content_encode(x), emb);
    report.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (y.numel() != padded) throw Error("bench: generator returned " + std::to_string(y.numel()) + " samples");
  }
  auto sorted = report.seconds;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted.size() % 2 ? sorted[sorted.size() / 2]
                                          : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
  const auto khz = [&](double s) { return static_cast<double>(report.samples) / s / 1000.0; };
  report.median_khz = khz(median);
  report.min_khz = khz(sorted.back());
  report.max_khz = khz(sorted.front());

  const auto counts = model::count_parameters(net.config());
  out << std::setprecision(6) << "samples=" << report.samples << " repeats=" << opt.repeats
      << " median_khz=" << report.median_khz << " min_khz=" << report.min_khz << " max_khz=" << report.max_khz
      << " reference_cpu_khz=" << kReferenceCpuKhz << "\n";
  out << "params_content_encoder=" << counts.content_encoder.total
      << " params_speaker_encoder=" << counts.speaker_encoder.total << " params_generator=" << counts.generator.total
      << " params_total=" << counts.encoders_and_generator() << "\n";
  return report;
}

int cmd_bench(const BenchOptions& opt, std::ostream& out) {
  run_bench(opt, out);
  return 0;
}

int cmd_grad_check(const GradCheckOptions& opt, std::ostream& out) {
  const auto report = losses::run_gradient_suite(opt.suite);
  const auto text = losses::format_gradient_report(report, opt.suite);
  out << text;
  if (!opt.out.empty()) {
    prepare_output(opt.out);
    std::ofstream f(opt.out);
    f << text;
  }
  return report.passed() ? 0 : 1;
}

}  // namespace nvc::pipeline
