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

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nvcnet/ad/grad_check.hpp"
#include "nvcnet/ad/ops.hpp"
#include "nvcnet/dsp/spectrogram.hpp"
#include "nvcnet/errors.hpp"

namespace nvc::dsp {
namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

// O(N^2) DFT of a reflect-padded, Hann-windowed frame.
std::vector<double> naive_stft_frame(const std::vector<double>& x, std::size_t frame, const SpectrogramConfig& cfg) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto half = static_cast<std::ptrdiff_t>(cfg.fft_size / 2);
  std::vector<double> mags(cfg.bins());
  for (std::size_t k = 0; k < cfg.bins(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < cfg.fft_size; ++j) {
      std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(frame * cfg.hop + j) - half;
      if (idx < 0) idx = -idx;
      if (idx >= n) idx = 2 * (n - 1) - idx;
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) /
                                             static_cast<double>(cfg.fft_size));
      acc += w * x[static_cast<std::size_t>(idx)] *
             std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(cfg.fft_size));
    }
    mags[k] = std::abs(acc);
  }
  return mags;
}

TEST(Mel, HtkScaleRoundTrip) {
  EXPECT_NEAR(hz_to_mel(700.0), 2595.0 * std::log10(2.0), 1e-9);
  for (double hz : {0.0, 440.0, 4000.0, 11025.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(hz)), hz, 1e-9);
}

TEST(Mel, FilterbankShapeAndTriangles) {
  const auto cfg = SpectrogramConfig::speaker_input();
  const auto fb = mel_filterbank(cfg);
  ASSERT_EQ(fb.n_mels, 80u);
  ASSERT_EQ(fb.n_bins, 513u);
  for (std::size_t m = 0; m < fb.n_mels; ++m) {
    double peak = 0.0;
    for (std::size_t b = 0; b < fb.n_bins; ++b) {
      EXPECT_GE(fb.at(m, b), 0.0);
      peak = std::max(peak, fb.at(m, b));
    }
    EXPECT_GT(peak, 0.0) << "empty band " << m;
  }
}

TEST(Window, PeriodicHann) {
  const auto w = hann_window(8);
  EXPECT_DOUBLE_EQ(w[0], 0.0);
  EXPECT_NEAR(w[4], 1.0, 1e-15);
  EXPECT_NEAR(w[2], 0.5, 1e-15);
}

TEST(Stft, MatchesDirectDft) {
  SpectrogramConfig cfg;
  cfg.fft_size = cfg.window_size = 64;
  cfg.hop = 16;
  cfg.n_mels = 8;
  const auto x = noise(200, 1);
  const auto mags = stft_magnitude(ad::Tensor<double>({200}, x), cfg);
  ASSERT_EQ(mags.shape(), (ad::Shape{cfg.bins(), cfg.frames(200)}));
  for (std::size_t f : {0u, 5u, 12u}) {
    const auto ref = naive_stft_frame(x, f, cfg);
    for (std::size_t k = 0; k < cfg.bins(); ++k) {
      EXPECT_NEAR(mags.values()[k * cfg.frames(200) + f], ref[k], 1e-10) << "frame " << f << " bin " << k;
    }
  }
}

TEST(Stft, PureToneEnergyLandsInItsBin) {
  const auto cfg = SpectrogramConfig::spectral_loss(1024);
  std::vector<double> x(8192);
  const double bin = 37.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    x[t] = std::sin(2.0 * std::numbers::pi * bin * static_cast<double>(t) / 1024.0);
  }
  const auto m = stft_magnitude(ad::Tensor<double>({x.size()}, x), cfg);
  const std::size_t frames = cfg.frames(x.size()), mid = frames / 2;
  std::size_t best = 0;
  for (std::size_t k = 0; k < cfg.bins(); ++k) {
    if (m.values()[k * frames + mid] > m.values()[best * frames + mid]) best = k;
  }
  EXPECT_EQ(best, 37u);
}

TEST(LogMel, ZeroSignalIsLogFloor) {
  const auto cfg = SpectrogramConfig::speaker_input();
  const auto y = log_mel(ad::Tensor<float>::zeros({2, 4096}), cfg);
  ASSERT_EQ(y.shape(), (ad::Shape{2, 80, cfg.frames(4096)}));
  for (float v : y.values()) EXPECT_EQ(v, static_cast<float>(std::log(cfg.log_floor)));
}

TEST(LogMel, SignFlipIsBitwiseInvariant) {
  const auto x = to_float(noise(2 * 8192, 2));
  std::vector<float> neg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  for (std::size_t w : {512u, 1024u, 2048u}) {
    const auto cfg = SpectrogramConfig::spectral_loss(w);
    const auto a = log_mel(ad::Tensor<float>({2, 8192}, x), cfg);
    const auto b = log_mel(ad::Tensor<float>({2, 8192}, neg), cfg);
    ASSERT_EQ(a.numel(), b.numel());
    for (std::size_t i = 0; i < a.numel(); ++i) ASSERT_EQ(a.values()[i], b.values()[i]);
  }
}

TEST(LogMel, AmplitudeScalingNeverIncreases) {
  const auto cfg = SpectrogramConfig::speaker_input();
  const auto x = noise(8192, 3);
  const auto full = log_mel(ad::Tensor<double>({8192}, x), cfg);
  for (double a : {1.0, 0.7, 0.25, 1e-3}) {
    std::vector<double> scaled(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = a * x[i];
    const auto s = log_mel(ad::Tensor<double>({8192}, scaled), cfg);
    for (std::size_t i = 0; i < s.numel(); ++i) ASSERT_LE(s.values()[i], full.values()[i] + 1e-12);
  }
}

TEST(LogMel, GradientMatchesFiniteDifferences) {
  SpectrogramConfig cfg;
  cfg.fft_size = cfg.window_size = 128;
  cfg.hop = 32;
  cfg.n_mels = 10;
  const ad::Tensor<double> x({2, 512}, noise(1024, 4));
  const auto w = noise(2 * 10 * cfg.frames(512), 5, 1.0);
  auto f = [&](const ad::Tensor<double>& t) {
    return ad::sum(ad::mul(log_mel(t, cfg), ad::Tensor<double>({2, 10, cfg.frames(512)}, w)));
  };
  const auto coords = ad::sample_coordinates(1024, 60, 6);
  const auto r = ad::grad_check<double>(f, x, 1e-6, coords);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(Spectrogram, InvalidConfigIsRejected) {
  SpectrogramConfig cfg;
  cfg.window_size = 2048;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(stft_magnitude(ad::Tensor<float>::zeros({100}), SpectrogramConfig::speaker_input()), SizeError);
}

}  // namespace
}  // namespace nvc::dsp
