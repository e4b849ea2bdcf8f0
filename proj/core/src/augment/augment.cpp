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

#include "nvcnet/augment/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nvcnet/errors.hpp"

namespace nvc::augment {

void AugmentConfig::validate() const {
  if (!(amp_min > 0.0 && amp_min <= amp_max && amp_max <= 1.0)) {
    throw ConfigError("augment: amplitude range must satisfy 0 < min <= max <= 1");
  }
  if (jitter < 0) throw ConfigError("augment: jitter must be >= 0");
  if (!(segment_min_seconds > 0.0 && segment_min_seconds <= segment_max_seconds)) {
    throw ConfigError("augment: segment range must satisfy 0 < min <= max");
  }
  if (!(sample_rate > 0.0)) throw ConfigError("augment: sample rate must be positive");
  if (min_segment() == 0 || min_segment() > max_segment()) {
    throw ConfigError("augment: segment range holds no whole sample count");
  }
}

std::size_t AugmentConfig::min_segment() const {
  return static_cast<std::size_t>(std::ceil(segment_min_seconds * sample_rate));
}

std::size_t AugmentConfig::max_segment() const {
  return static_cast<std::size_t>(std::floor(segment_max_seconds * sample_rate));
}

Clip apply_sign(std::span<const float> x, bool flip) {
  Clip out(x.begin(), x.end());
  if (flip) {
    for (auto& v : out) v = -v;
  }
  return out;
}

Clip sign_flip(std::span<const float> x, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  return apply_sign(x, coin(rng));
}

double draw_amplitude(Rng& rng, const AugmentConfig& cfg) {
  std::uniform_real_distribution<double> dist(cfg.amp_min, cfg.amp_max);
  return std::clamp(dist(rng), cfg.amp_min, cfg.amp_max);
}

Clip scale_amplitude(std::span<const float> x, float a) {
  Clip out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
  return out;
}

Clip amplitude_scale(std::span<const float> x, Rng& rng, const AugmentConfig& cfg) {
  return scale_amplitude(x, static_cast<float>(draw_amplitude(rng, cfg)));
}

int draw_jitter(Rng& rng, const AugmentConfig& cfg) {
  std::uniform_int_distribution<int> dist(-cfg.jitter, cfg.jitter);
  return dist(rng);
}

Clip shift(std::span<const float> x, int delta) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  Clip out(x.size(), 0.0f);
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const std::ptrdiff_t src = t - delta;
    if (src >= 0 && src < n) out[static_cast<std::size_t>(t)] = x[static_cast<std::size_t>(src)];
  }
  return out;
}

Clip temporal_jitter_target(std::span<const float> x, Rng& rng, const AugmentConfig& cfg) {
  if (x.size() <= 2 * static_cast<std::size_t>(cfg.jitter)) {
    throw SizeError("temporal_jitter_target: clip of " + std::to_string(x.size()) + " samples is too short");
  }
  return shift(x, draw_jitter(rng, cfg));
}

std::vector<std::size_t> draw_segments(std::size_t length, Rng& rng, const AugmentConfig& cfg) {
  std::vector<std::size_t> bounds{0};
  if (length < cfg.max_segment()) {
    bounds.push_back(length);
    return bounds;
  }
  std::uniform_int_distribution<std::size_t> dist(cfg.min_segment(), cfg.max_segment());
  std::size_t pos = 0;
  while (pos < length) {
    const std::size_t seg = dist(rng);
    pos = seg >= length - pos ? length : pos + seg;
    bounds.push_back(pos);
  }
  return bounds;
}

Clip reorder_segments(std::span<const float> x, std::span<const std::size_t> bounds,
                      std::span<const std::size_t> order) {
  if (bounds.size() < 2 || bounds.back() != x.size() || order.size() != bounds.size() - 1) {
    throw DimensionError("reorder_segments: bounds and order do not describe a partition of the clip");
  }
  Clip out;
  out.reserve(x.size());
  for (auto s : order) {
    if (s + 1 >= bounds.size()) throw IndexError("reorder_segments: segment index out of range");
    out.insert(out.end(), x.begin() + static_cast<std::ptrdiff_t>(bounds[s]),
               x.begin() + static_cast<std::ptrdiff_t>(bounds[s + 1]));
  }
  if (out.size() != x.size()) throw DimensionError("reorder_segments: order is not a permutation");
  return out;
}

Clip shuffle_segments(std::span<const float> x, Rng& rng, const AugmentConfig& cfg) {
  const auto bounds = draw_segments(x.size(), rng, cfg);
  std::vector<std::size_t> order(bounds.size() - 1);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  return reorder_segments(x, bounds, order);
}

}  // namespace nvc::augment
