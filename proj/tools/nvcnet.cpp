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

// nvcnet: train, convert, embed, sample, reconstruct, eval-spoof, bench, grad-check.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nvcnet/errors.hpp"
#include "nvcnet/pipeline/commands.hpp"

namespace {

using namespace nvc::pipeline;

std::optional<bool> desk_flag(std::int64_t count) {
  if (count > 0) return true;
  if (count < 0) return false;
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Raw-waveform voice conversion: training, conversion and evaluation"};
  app.require_subcommand(1);

  TrainOptions train;
  std::uint64_t train_seed = 0;
  std::size_t train_steps = 0;
  std::string train_out;
  std::int64_t train_desk = 0;
  auto* c_train = app.add_subcommand("train", "Train on the data named by a run config");
  c_train->add_option("--config", train.config, "Run config (JSON)")->required();
  c_train->add_option("--checkpoint", train.resume, "Resume from this checkpoint");
  auto* o_train_seed = c_train->add_option("--seed", train_seed, "Override train.seed");
  auto* o_train_steps = c_train->add_option("--steps", train_steps, "Override train.steps");
  auto* o_train_out = c_train->add_option("--out", train_out, "Override output.dir");
  c_train->add_flag("--desk-scale,!--full-scale", train_desk, "Reduced (desk) or full-size model");

  ConvertOptions convert;
  std::string convert_target = "wav";
  auto* c_convert = app.add_subcommand("convert", "Convert SOURCE to the voice given by --target");
  c_convert->add_option("--checkpoint", convert.checkpoint, "Model checkpoint")->required();
  c_convert->add_option("source", convert.source, "Source wav")->required();
  c_convert->add_option("reference", convert.reference, "Reference wav (--target wav) or embedding (--target emb)");
  c_convert->add_option("--target", convert_target, "wav | emb | prior")->check(CLI::IsMember({"wav", "emb", "prior"}));
  c_convert->add_option("--seed", convert.seed, "Seed for prior or posterior sampling");
  c_convert->add_flag("--sample", convert.sample_reference, "Sample z from the reference posterior instead of its mean");
  c_convert->add_option("--out", convert.out, "Output wav")->required();

  EmbedOptions embed;
  auto* c_embed = app.add_subcommand("embed", "Average speaker embedding of reference wavs");
  c_embed->add_option("--checkpoint", embed.checkpoint, "Model checkpoint")->required();
  c_embed->add_option("references", embed.references, "Reference wavs")->required();
  c_embed->add_option("--out", embed.out, "Output embedding file")->required();

  SampleOptions sample;
  auto* c_sample = app.add_subcommand("sample", "Draw an embedding from the prior or a reference posterior");
  c_sample->add_option("--checkpoint", sample.checkpoint, "Model checkpoint")->required();
  c_sample->add_option("reference", sample.reference, "Reference wav (omit for the prior)");
  c_sample->add_option("--seed", sample.seed, "Sampling seed");
  c_sample->add_option("--out", sample.out, "Output embedding file")->required();

  ReconstructOptions recon;
  auto* c_recon = app.add_subcommand("reconstruct", "Resynthesize SOURCE with its own speaker embedding");
  c_recon->add_option("--checkpoint", recon.checkpoint, "Model checkpoint")->required();
  c_recon->add_option("source", recon.source, "Source wav")->required();
  c_recon->add_option("--out", recon.out, "Output wav")->required();

  EvalSpoofOptions spoof;
  std::uint64_t spoof_seed = 0;
  auto* c_spoof = app.add_subcommand("eval-spoof", "Spoofing rate of conversions under a speaker classifier");
  c_spoof->add_option("--config", spoof.config, "Run config (JSON)")->required();
  c_spoof->add_option("--checkpoint", spoof.checkpoint, "Model checkpoint")->required();
  auto* o_spoof_seed = c_spoof->add_option("--seed", spoof_seed, "Classifier seed");
  c_spoof->add_option("--out", spoof.out, "Report file");

  BenchOptions bench;
  std::int64_t bench_desk = 0;
  auto* c_bench = app.add_subcommand("bench", "Single-thread synthesis throughput");
  c_bench->add_option("--checkpoint", bench.checkpoint, "Model checkpoint (default: fresh model)");
  c_bench->add_flag("--desk-scale,!--full-scale", bench_desk, "Fresh desk-scale model instead of full size");
  c_bench->add_option("--duration", bench.duration, "Seconds of audio per run");
  c_bench->add_option("--repeats", bench.repeats, "Timed runs (>= 3)");
  c_bench->add_option("--seed", bench.seed, "Seed for weights and input");

  GradCheckOptions grad;
  auto* c_grad = app.add_subcommand("grad-check", "Finite-difference check of every loss gradient");
  c_grad->add_option("--seed", grad.suite.seed, "Seed for weights and inputs");
  c_grad->add_option("--filter", grad.suite.filter, "Only checks whose name contains this");
  c_grad->add_option("--corrupt-gradient", grad.suite.corrupt_gradient, "Scale analytic gradients by 1 + x");
  c_grad->add_option("--out", grad.out, "Report file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_train->parsed()) {
      if (*o_train_seed) train.seed = train_seed;
      if (*o_train_steps) train.steps = train_steps;
      if (*o_train_out) train.out = train_out;
      train.desk_scale = desk_flag(train_desk);
      return cmd_train(train, std::cout);
    }
    if (c_convert->parsed()) {
      convert.target = parse_target_kind(convert_target);
      return cmd_convert(convert, std::cout);
    }
    if (c_embed->parsed()) return cmd_embed(embed, std::cout);
    if (c_sample->parsed()) return cmd_sample(sample, std::cout);
    if (c_recon->parsed()) return cmd_reconstruct(recon, std::cout);
    if (c_spoof->parsed()) {
      if (*o_spoof_seed) spoof.seed = spoof_seed;
      return cmd_eval_spoof(spoof, std::cout);
    }
    if (c_bench->parsed()) {
      bench.desk_scale = bench_desk > 0;
      return cmd_bench(bench, std::cout);
    }
    if (c_grad->parsed()) return cmd_grad_check(grad, std::cout);
  } catch (const nvc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: unexpected: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
