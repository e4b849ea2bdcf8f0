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
#include <random>
#include <span>
#include <vector>

namespace nvc::augment {

using Rng = std::mt19937_64;
using Clip = std::vector<float>;

struct AugmentConfig {
  double amp_min = 0.25;
  double amp_max = 1.0;
  int jitter = 30;  // shifts drawn from [-jitter, jitter]
  double segment_min_seconds = 0.35;
  double segment_max_seconds = 0.45;
  double sample_rate = 22050.0;

  void validate() const;
  // Segment length bounds in samples: ceil(min * sr) and floor(max * sr).
  std::size_t min_segment() const;
  std::size_t max_segment() const;
};

// -x with probability 1/2, else x.
Clip sign_flip(std::span<const float> x, Rng& rng);
Clip apply_sign(std::span<const float> x, bool flip);

// a * x with a ~ U[amp_min, amp_max].
double draw_amplitude(Rng& rng, const AugmentConfig& cfg);
Clip amplitude_scale(std::span<const float> x, Rng& rng, const AugmentConfig& cfg);
Clip scale_amplitude(std::span<const float> x, float a);

// x delayed by delta samples (negative: advanced), vacated edge zero-filled.
int draw_jitter(Rng& rng, const AugmentConfig& cfg);
Clip temporal_jitter_target(std::span<const float> x, Rng& rng, const AugmentConfig& cfg);
Clip shift(std::span<const float> x, int delta);

// Left-to-right partition into segments of random length; the tail that
// cannot hold another full draw is its own segment. Returns segment start
// offsets plus a final entry equal to the length.
std::vector<std::size_t> draw_segments(std::size_t length, Rng& rng, const AugmentConfig& cfg);
// Concatenates segments in `order` (a permutation of segment indices).
Clip reorder_segments(std::span<const float> x, std::span<const std::size_t> bounds,
                      std::span<const std::size_t> order);
// Random partition, uniformly permuted. Clips shorter than max_segment come
// back unchanged.
Clip shuffle_segments(std::span<const float> x, Rng& rng, const AugmentConfig& cfg);

}  // namespace nvc::augment
