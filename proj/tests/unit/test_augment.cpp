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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nvcnet/augment/augment.hpp"
#include "nvcnet/dsp/spectrogram.hpp"
#include "nvcnet/errors.hpp"

namespace nvc::augment {
namespace {

Clip ramp(std::size_t n) {
  Clip x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<float>(i % 1000) / 1000.0f - 0.5f;
  return x;
}

TEST(SignFlip, EitherIdentityOrNegation) {
  Rng rng(1);
  const auto x = ramp(512);
  int flips = 0;
  for (int i = 0; i < 400; ++i) {
    const auto y = sign_flip(x, rng);
    const bool flipped = y[1] == -x[1];
    flips += flipped;
    for (std::size_t t = 0; t < x.size(); ++t) ASSERT_EQ(y[t], flipped ? -x[t] : x[t]);
  }
  EXPECT_GT(flips, 150);
  EXPECT_LT(flips, 250);
}

TEST(SignFlip, LogMelUnchangedUnderForcedFlip) {
  const auto x = ramp(4096);
  const auto cfg = dsp::SpectrogramConfig::spectral_loss(1024);
  const auto a = dsp::log_mel(ad::Tensor<float>({x.size()}, x), cfg);
  const auto y = apply_sign(x, true);
  const auto b = dsp::log_mel(ad::Tensor<float>({y.size()}, y), cfg);
  for (std::size_t i = 0; i < a.numel(); ++i) ASSERT_EQ(a.values()[i], b.values()[i]);
}

TEST(Amplitude, FactorWithinConfiguredRange) {
  Rng rng(2);
  const AugmentConfig cfg;
  for (int i = 0; i < 1000; ++i) {
    const double a = draw_amplitude(rng, cfg);
    ASSERT_GE(a, 0.25);
    ASSERT_LE(a, 1.0);
  }
  const auto y = scale_amplitude(ramp(10), 0.5f);
  EXPECT_FLOAT_EQ(y[3], 0.5f * ramp(10)[3]);
}

TEST(Jitter, ShiftWithinRangeAndZeroFilled) {
  Rng rng(3);
  const AugmentConfig cfg;
  for (int i = 0; i < 1000; ++i) {
    const int d = draw_jitter(rng, cfg);
    ASSERT_GE(d, -30);
    ASSERT_LE(d, 30);
  }
  const auto x = ramp(100);
  const auto delayed = shift(x, 5);
  for (int t = 0; t < 5; ++t) EXPECT_EQ(delayed[t], 0.0f);
  EXPECT_EQ(delayed[10], x[5]);
  const auto advanced = shift(x, -5);
  EXPECT_EQ(advanced[0], x[5]);
  EXPECT_EQ(advanced[99], 0.0f);
  EXPECT_EQ(shift(x, 0), x);
}

TEST(Jitter, ClipTooShortIsSizeError) {
  Rng rng(4);
  EXPECT_THROW(temporal_jitter_target(ramp(60), rng, AugmentConfig{}), SizeError);
}

TEST(Segments, BoundsRespectConfiguredLengths) {
  const AugmentConfig cfg;
  EXPECT_EQ(cfg.min_segment(), 7718u);
  EXPECT_EQ(cfg.max_segment(), 9922u);
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto b = draw_segments(32768, rng, cfg);
    ASSERT_EQ(b.front(), 0u);
    ASSERT_EQ(b.back(), 32768u);
    for (std::size_t i = 1; i + 1 < b.size(); ++i) {
      const auto len = b[i] - b[i - 1];
      ASSERT_GE(len, cfg.min_segment());
      ASSERT_LE(len, cfg.max_segment());
    }
    ASSERT_LE(b.back() - b[b.size() - 2], cfg.max_segment());
  }
}

TEST(Segments, ShufflePreservesLengthAndMultiset) {
  Rng rng(6);
  std::mt19937_64 gen(7);
  std::normal_distribution<float> n(0.0f, 0.3f);
  Clip x(32768);
  for (auto& v : x) v = n(gen);
  bool moved = false;
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = shuffle_segments(x, rng, AugmentConfig{});
    ASSERT_EQ(y.size(), x.size());
    auto a = x, b = y;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    ASSERT_EQ(a, b);
    moved = moved || y != x;
  }
  EXPECT_TRUE(moved);
}

TEST(Segments, ShortClipComesBackUnchanged) {
  Rng rng(8);
  const auto x = ramp(5000);
  EXPECT_EQ(shuffle_segments(x, rng, AugmentConfig{}), x);
}

TEST(Segments, ReorderRejectsBadPartition) {
  const auto x = ramp(10);
  const std::vector<std::size_t> bounds{0, 4, 9};
  const std::vector<std::size_t> order{1, 0};
  EXPECT_THROW(reorder_segments(x, bounds, order), DimensionError);
  const std::vector<std::size_t> good{0, 4, 10};
  const auto y = reorder_segments(x, good, order);
  EXPECT_EQ(y[0], x[4]);
  EXPECT_EQ(y[6], x[0]);
}

TEST(Config, InvalidRangesRejected) {
  AugmentConfig cfg;
  cfg.amp_min = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AugmentConfig{};
  cfg.segment_min_seconds = 0.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AugmentConfig{};
  cfg.jitter = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace nvc::augment
