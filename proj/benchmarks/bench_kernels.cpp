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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "nvcnet/ad/ops.hpp"
#include "nvcnet/dsp/spectrogram.hpp"
#include "nvcnet/model/networks.hpp"

namespace {

using nvc::ad::Tensor;

Tensor<float> noise(nvc::ad::Shape shape, std::uint64_t seed, bool grad = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 0.1f);
  std::vector<float> v(nvc::ad::numel(shape));
  for (auto& x : v) x = n(rng);
  return Tensor<float>(std::move(shape), std::move(v), grad);
}

// Residual-block convolution: k3, dilation from the range argument.
void BM_Conv1dForward(benchmark::State& state) {
  const std::size_t channels = static_cast<std::size_t>(state.range(0));
  const std::size_t dilation = static_cast<std::size_t>(state.range(1));
  const auto x = noise({4, channels, 8192}, 1);
  const auto w = noise({channels, channels, 3}, 2);
  const auto b = noise({channels}, 3);
  nvc::ad::Conv1dOptions opt;
  opt.dilation = dilation;
  opt.pad = dilation;
  opt.padding = nvc::ad::Padding::kReflect;
  nvc::ad::NoGradScope<float> no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(nvc::ad::conv1d(x, w, b, opt));
  state.SetItemsProcessed(state.iterations() * 4 * 8192);
}
BENCHMARK(BM_Conv1dForward)->Args({32, 1})->Args({32, 27})->Args({128, 1})->Unit(benchmark::kMillisecond);

void BM_Conv1dBackward(benchmark::State& state) {
  const std::size_t channels = static_cast<std::size_t>(state.range(0));
  const auto x = noise({4, channels, 8192}, 1, true);
  const auto w = noise({channels, channels, 3}, 2, true);
  const auto b = noise({channels}, 3, true);
  nvc::ad::Conv1dOptions opt;
  opt.pad = 1;
  opt.padding = nvc::ad::Padding::kReflect;
  for (auto _ : state) {
    nvc::ad::Tape<float> tape;
    nvc::ad::TapeScope<float> scope(tape);
    const auto y = nvc::ad::sum(nvc::ad::conv1d(x, w, b, opt));
    tape.backward(y);
  }
  state.SetItemsProcessed(state.iterations() * 4 * 8192);
}
BENCHMARK(BM_Conv1dBackward)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_LogMel(benchmark::State& state) {
  const auto cfg = nvc::dsp::SpectrogramConfig::spectral_loss(static_cast<std::size_t>(state.range(0)));
  const auto x = noise({8, 32768}, 4);
  nvc::ad::NoGradScope<float> no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(nvc::dsp::log_mel(x, cfg));
  state.SetItemsProcessed(state.iterations() * 8 * 32768);
}
BENCHMARK(BM_LogMel)->Arg(512)->Arg(1024)->Arg(2048)->Unit(benchmark::kMillisecond);

// content_encode + generate, samples per second on one thread.
void BM_Synthesis(benchmark::State& state) {
  const auto cfg = state.range(0) ? nvc::model::ModelConfig::desk(2) : nvc::model::ModelConfig::standard(2);
  const nvc::model::NvcNet<float> net(cfg, 0);
  const auto x = noise({1, 22016}, 5);
  const auto z = noise({1, cfg.d_spk}, 6);
  nvc::ad::NoGradScope<float> no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(net.generate(net.content_encode(x), z));
  state.SetItemsProcessed(state.iterations() * 22016);
}
BENCHMARK(BM_Synthesis)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
