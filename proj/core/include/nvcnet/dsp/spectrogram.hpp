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
#include <vector>

#include "nvcnet/ad/tensor.hpp"

namespace nvc::dsp {

inline constexpr double kSampleRate = 22050.0;

struct SpectrogramConfig {
  std::size_t fft_size = 1024;
  std::size_t window_size = 1024;
  std::size_t hop = 256;
  std::size_t n_mels = 80;
  double sample_rate = kSampleRate;
  double log_floor = 1e-5;

  void validate() const;
  std::size_t bins() const { return fft_size / 2 + 1; }
  // Centered framing: floor(length / hop) + 1 frames.
  std::size_t frames(std::size_t length) const { return length / hop + 1; }

  // Speaker-encoder input: 80 bands, FFT/window 1024, hop 256.
  static SpectrogramConfig speaker_input();
  // Spectral-loss analysis at FFT size w: window w, hop w/4, 80 bands.
  static SpectrogramConfig spectral_loss(std::size_t fft_size);

  bool operator==(const SpectrogramConfig&) const = default;
};

// Periodic Hann window of `size` samples.
std::vector<double> hann_window(std::size_t size);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters on the HTK mel scale from 0 Hz to sample_rate / 2,
// stored row-major [n_mels, fft_size / 2 + 1].
struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_bins = 0;
  std::vector<double> weights;

  double at(std::size_t mel, std::size_t bin) const { return weights[mel * n_bins + bin]; }
};

MelFilterbank mel_filterbank(const SpectrogramConfig& cfg);

// |STFT| of [B, T] (or [T]) audio -> [B, fft/2+1, frames] (or unbatched).
// Frames are centered with reflect padding of fft/2 samples and Hann windowed.
template <class T>
ad::Tensor<T> stft_magnitude(const ad::Tensor<T>& audio, const SpectrogramConfig& cfg);

// log(max(mel_filterbank * |STFT|, log_floor)) -> [B, n_mels, frames].
template <class T>
ad::Tensor<T> log_mel(const ad::Tensor<T>& audio, const SpectrogramConfig& cfg);

}  // namespace nvc::dsp
