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

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nvcnet/ad/tensor.hpp"
#include "nvcnet/io/manifest.hpp"
#include "nvcnet/losses/losses.hpp"
#include "nvcnet/training/config.hpp"

namespace nvc::training {

using Rng = std::mt19937_64;

struct Utterance {
  std::string name;
  std::vector<float> samples;
  std::size_t speaker = 0;
};

struct Dataset {
  std::vector<Utterance> utterances;
  std::vector<std::string> speakers;

  std::size_t n_speakers() const { return speakers.size(); }
  std::size_t size() const { return utterances.size(); }
};

// Loads every entry of `split` from the manifest (WAV files).
Dataset load_dataset(const io::Manifest& manifest, io::Split split);

// Harmonic note sequences shaped by a per-speaker formant envelope and
// pitch register, `clips_per_speaker` clips of `length` samples each.
struct SyntheticSpec {
  std::size_t n_speakers = 2;
  std::size_t clips_per_speaker = 4;
  std::size_t length = 32768;
  std::uint64_t seed = 1;
};
Dataset synthetic_dataset(const SyntheticSpec& spec);

// Uniform random permutation with no fixed point (rejection sampling).
std::vector<std::size_t> draw_derangement(std::size_t n, Rng& rng);

// `length` samples from `x` starting at `offset`, wrapping around the end.
std::vector<float> cyclic_crop(const std::vector<float>& x, std::size_t offset, std::size_t length);

struct Batch {
  std::vector<std::size_t> items;  // dataset indices
  losses::GeneratorInputs<float> inputs;
};

// Random crops (distinct utterances when the dataset is large enough), a
// derangement pairing, augmented views and reparameterization noise.
Batch make_batch(const Dataset& data, Rng& rng, const TrainConfig& cfg, std::size_t d_spk);

}  // namespace nvc::training
