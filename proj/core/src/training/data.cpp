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

#include "nvcnet/training/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nvcnet/augment/augment.hpp"
#include "nvcnet/errors.hpp"
#include "nvcnet/io/wav.hpp"
#include "nvcnet/model/networks.hpp"

namespace nvc::training {

Dataset load_dataset(const io::Manifest& manifest, io::Split split) {
  Dataset d;
  d.speakers = manifest.speakers;
  for (const auto& e : manifest.entries) {
    if (e.split != split) continue;
    auto wav = io::load_wav(e.path);
    d.utterances.push_back({e.path, std::move(wav.samples), e.speaker_index});
  }
  return d;
}

namespace {

struct Voice {
  double f0_low;
  std::vector<double> formants;
  double bandwidth;
};

Voice voice_for(std::size_t speaker, Rng& rng) {
  // The first two voices are fixed and far apart; further voices are drawn.
  if (speaker == 0) return {110.0, {650.0, 1100.0, 2500.0}, 140.0};
  if (speaker == 1) return {220.0, {350.0, 2000.0, 3100.0}, 140.0};
  std::uniform_real_distribution<double> pitch(90.0, 260.0), f1(300.0, 800.0), f2(900.0, 2300.0),
      f3(2400.0, 3400.0);
  return {pitch(rng), {f1(rng), f2(rng), f3(rng)}, 140.0};
}

std::vector<float> synthesize(const Voice& v, std::size_t length, double sr, Rng& rng) {
  std::vector<double> out(length, 0.0);
  std::uniform_real_distribution<double> dur(0.08, 0.25);
  std::uniform_int_distribution<int> step(0, 7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t pos = 0;
  while (pos < length) {
    const auto n = std::min(length - pos, static_cast<std::size_t>(dur(rng) * sr));
    const bool rest = unit(rng) < 0.1;
    const double f0 = v.f0_low * std::pow(2.0, step(rng) / 12.0);
    const double gain = 0.6 + 0.4 * unit(rng);
    if (!rest) {
      const auto attack = std::min<std::size_t>(n / 2, static_cast<std::size_t>(0.01 * sr));
      const auto release = std::min<std::size_t>(n / 2, static_cast<std::size_t>(0.02 * sr));
      for (std::size_t h = 1; h * f0 < std::min(6000.0, 0.45 * sr); ++h) {
        const double f = static_cast<double>(h) * f0;
        double amp = 0.02;
        for (double fm : v.formants) amp += std::exp(-0.5 * std::pow((f - fm) / v.bandwidth, 2.0));
        amp /= static_cast<double>(h);
        const double phase = 2.0 * M_PI * unit(rng);
        for (std::size_t t = 0; t < n; ++t) {
          double env = 1.0;
          if (t < attack) env = 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(t) / static_cast<double>(attack));
          else if (n - t <= release)
            env = 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(n - t) / static_cast<double>(release));
          out[pos + t] += gain * env * amp * std::sin(phase + 2.0 * M_PI * f * static_cast<double>(t) / sr);
        }
      }
    }
    pos += n;
  }
  std::normal_distribution<double> noise(0.0, 0.002);
  double peak = 0.0;
  for (auto& s : out) {
    s += noise(rng);
    peak = std::max(peak, std::abs(s));
  }
  std::vector<float> clip(length);
  const double norm = peak > 0.0 ? 0.6 / peak : 1.0;
  for (std::size_t t = 0; t < length; ++t) clip[t] = static_cast<float>(out[t] * norm);
  return clip;
}

}  // namespace

Dataset synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.n_speakers < 1 || spec.clips_per_speaker < 1 || spec.length == 0) {
    throw ConfigError("synthetic dataset needs at least one speaker, clip and sample");
  }
  Rng rng(spec.seed);
  Dataset d;
  std::vector<Voice> voices;
  for (std::size_t s = 0; s < spec.n_speakers; ++s) {
    voices.push_back(voice_for(s, rng));
    d.speakers.push_back("speaker" + std::to_string(s));
  }
  for (std::size_t c = 0; c < spec.clips_per_speaker; ++c) {
    for (std::size_t s = 0; s < spec.n_speakers; ++s) {
      d.utterances.push_back({"speaker" + std::to_string(s) + "_clip" + std::to_string(c),
                              synthesize(voices[s], spec.length, 22050.0, rng), s});
    }
  }
  return d;
}

std::vector<std::size_t> draw_derangement(std::size_t n, Rng& rng) {
  if (n < 2) throw ContractError("a derangement needs at least 2 elements");
  std::vector<std::size_t> p(n);
  for (;;) {
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::shuffle(p.begin(), p.end(), rng);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) ok = p[i] != i;
    if (ok) return p;
  }
}

std::vector<float> cyclic_crop(const std::vector<float>& x, std::size_t offset, std::size_t length) {
  if (x.empty()) throw DataError("cannot crop an empty utterance");
  std::vector<float> out(length);
  for (std::size_t t = 0; t < length; ++t) out[t] = x[(offset + t) % x.size()];
  return out;
}

Batch make_batch(const Dataset& data, Rng& rng, const TrainConfig& cfg, std::size_t d_spk) {
  if (data.utterances.empty()) throw DataError("make_batch: empty dataset");
  const std::size_t B = cfg.batch_size;
  const std::size_t L = cfg.clip_length;
  Batch batch;
  if (data.size() >= B) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::shuffle(all.begin(), all.end(), rng);
    batch.items.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(B));
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    for (std::size_t i = 0; i < B; ++i) batch.items.push_back(pick(rng));
  }

  std::vector<float> source(B * L), target(B * L), view(B * L);
  auto& in = batch.inputs;
  for (std::size_t i = 0; i < B; ++i) {
    const auto& utt = data.utterances[batch.items[i]];
    std::size_t offset = 0;
    if (utt.samples.size() > L) {
      std::uniform_int_distribution<std::size_t> start(0, utt.samples.size() - L);
      offset = start(rng);
    }
    auto clip = cyclic_crop(utt.samples, offset, L);
    clip = augment::sign_flip(clip, rng);
    clip = augment::amplitude_scale(clip, rng, cfg.augment);
    const auto jittered = augment::temporal_jitter_target(clip, rng, cfg.augment);
    const auto shuffled = augment::shuffle_segments(clip, rng, cfg.augment);
    std::copy(clip.begin(), clip.end(), source.begin() + static_cast<std::ptrdiff_t>(i * L));
    std::copy(jittered.begin(), jittered.end(), target.begin() + static_cast<std::ptrdiff_t>(i * L));
    std::copy(shuffled.begin(), shuffled.end(), view.begin() + static_cast<std::ptrdiff_t>(i * L));
    in.labels.push_back(utt.speaker);
  }
  in.source = ad::Tensor<float>({B, L}, std::move(source));
  in.target = ad::Tensor<float>({B, L}, std::move(target));
  in.speaker_view = ad::Tensor<float>({B, L}, std::move(view));
  in.permutation = draw_derangement(B, rng);
  for (std::size_t i = 0; i < B; ++i) in.target_labels.push_back(in.labels[in.permutation[i]]);
  in.noise = model::standard_normal<float>({B, d_spk}, rng);
  return batch;
}

}  // namespace nvc::training
