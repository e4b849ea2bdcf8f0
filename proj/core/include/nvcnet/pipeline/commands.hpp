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
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nvcnet/losses/grad_suite.hpp"

namespace nvc::pipeline {

// Every command validates its inputs before heavy compute, reports progress
// and results as key=value lines on `out`, and signals failure by throwing
// an nvc::Error (or returning nonzero for grad-check failures).

struct TrainOptions {
  std::string config;
  std::string resume;  // checkpoint to continue from
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<std::string> out;
  std::optional<bool> desk_scale;
};
// Writes <out>/train.log, <out>/config.json, <out>/checkpoint.nvc and,
// every checkpoint_every steps, <out>/checkpoint-<step>.nvc.
int cmd_train(const TrainOptions& opt, std::ostream& out);

enum class TargetKind { kWav, kEmbedding, kPrior };
TargetKind parse_target_kind(const std::string& name);

struct ConvertOptions {
  std::string checkpoint;
  std::string source;
  TargetKind target = TargetKind::kWav;
  std::string reference;  // wav or embedding file; unused for the prior
  std::uint64_t seed = 0;
  bool sample_reference = false;  // z ~ posterior instead of its mean
  std::string out;
};
int cmd_convert(const ConvertOptions& opt, std::ostream& out);

struct EmbedOptions {
  std::string checkpoint;
  std::vector<std::string> references;
  std::string out;
};
int cmd_embed(const EmbedOptions& opt, std::ostream& out);

// Embedding drawn from the prior, or from a reference's posterior.
struct SampleOptions {
  std::string checkpoint;
  std::string reference;
  std::uint64_t seed = 0;
  std::string out;
};
int cmd_sample(const SampleOptions& opt, std::ostream& out);

struct ReconstructOptions {
  std::string checkpoint;
  std::string source;
  std::string out;
};
int cmd_reconstruct(const ReconstructOptions& opt, std::ostream& out);

// Trains the spoofing classifier on the run's training data, converts every
// evaluation utterance to every other speaker and reports the percentage
// classified as the target.
struct EvalSpoofOptions {
  std::string config;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::string out;  // optional report file
};
int cmd_eval_spoof(const EvalSpoofOptions& opt, std::ostream& out);

struct BenchOptions {
  std::string checkpoint;  // empty: freshly initialized model
  bool desk_scale = false;
  double duration = 1.0;  // seconds of audio per run
  std::size_t repeats = 3;
  std::uint64_t seed = 0;
};
struct BenchReport {
  std::size_t samples = 0;
  std::vector<double> seconds;
  double median_khz = 0.0;
  double min_khz = 0.0;
  double max_khz = 0.0;
};
inline constexpr double kReferenceCpuKhz = 7.49;
BenchReport run_bench(const BenchOptions& opt, std::ostream& out);
int cmd_bench(const BenchOptions& opt, std::ostream& out);

struct GradCheckOptions {
  losses::GradSuiteOptions suite;
  std::string out;  // optional report file
};
int cmd_grad_check(const GradCheckOptions& opt, std::ostream& out);

}  // namespace nvc::pipeline
