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

#include "nvcnet/dsp/spectrogram.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "nvcnet/ad/ops.hpp"

namespace nvc::dsp {
namespace {

// Thin wrapper over FFTW's double-precision real transforms. Plans are
// created once per size with FFTW_ESTIMATE, which keeps results bitwise
// reproducible.
struct Fft {
  using Complex = fftw_complex;
  using Plan = fftw_plan;
  static void* alloc(std::size_t bytes) { return fftw_malloc(bytes); }
  static void release(void* p) { fftw_free(p); }
  static Plan r2c(int n, double* in, Complex* out) { return fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE); }
  static Plan c2r(int n, Complex* in, double* out) { return fftw_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE); }
  static void exec_r2c(Plan p, double* in, Complex* out) { fftw_execute_dft_r2c(p, in, out); }
  static void exec_c2r(Plan p, Complex* in, double* out) { fftw_execute_dft_c2r(p, in, out); }
};

struct FftBuffer {
  using F = Fft;
  explicit FftBuffer(std::size_t n)
      : real(static_cast<double*>(F::alloc(sizeof(double) * n))),
        spec(static_cast<typename F::Complex*>(F::alloc(sizeof(typename F::Complex) * (n / 2 + 1)))) {}
  ~FftBuffer() {
    F::release(real);
    F::release(spec);
  }
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;
  double* real;
  F::Complex* spec;
};

struct Plans {
  Fft::Plan forward;
  Fft::Plan inverse;
};

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

Plans plans_for(std::size_t n) {
  static std::map<std::size_t, Plans> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  FftBuffer scratch(n);
  Plans p{Fft::r2c(static_cast<int>(n), scratch.real, scratch.spec),
          Fft::c2r(static_cast<int>(n), scratch.spec, scratch.real)};
  cache.emplace(n, p);
  return p;
}

inline std::size_t reflect(std::ptrdiff_t idx, std::ptrdiff_t length) {
  if (idx < 0) idx = -idx;
  if (idx >= length) idx = 2 * (length - 1) - idx;
  return static_cast<std::size_t>(idx);
}

// Window of window_size samples centered inside an fft_size frame.
std::vector<double> analysis_window(const SpectrogramConfig& cfg) {
  std::vector<double> w(cfg.fft_size, 0.0);
  const auto hann = hann_window(cfg.window_size);
  const std::size_t offset = (cfg.fft_size - cfg.window_size) / 2;
  for (std::size_t i = 0; i < cfg.window_size; ++i) w[offset + i] = hann[i];
  return w;
}

}  // namespace

void SpectrogramConfig::validate() const {
  if (fft_size < 2 || fft_size % 2 != 0) throw ConfigError("fft_size must be even and >= 2");
  if (window_size == 0 || window_size > fft_size) throw ConfigError("window_size must lie in [1, fft_size]");
  if (hop == 0) throw ConfigError("hop must be positive");
  if (n_mels == 0 || n_mels >= fft_size / 2) throw ConfigError("n_mels must lie in [1, fft_size/2)");
  if (!(sample_rate > 0.0)) throw ConfigError("sample_rate must be positive");
  if (!(log_floor > 0.0)) throw ConfigError("log_floor must be positive");
}

SpectrogramConfig SpectrogramConfig::speaker_input() { return SpectrogramConfig{}; }

SpectrogramConfig SpectrogramConfig::spectral_loss(std::size_t fft_size) {
  SpectrogramConfig cfg;
  cfg.fft_size = fft_size;
  cfg.window_size = fft_size;
  cfg.hop = fft_size / 4;
  cfg.n_mels = 80;
  return cfg;
}

std::vector<double> hann_window(std::size_t size) {
  std::vector<double> w(size);
  for (std::size_t i = 0; i < size; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(size));
  }
  return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(const SpectrogramConfig& cfg) {
  cfg.validate();
  MelFilterbank fb;
  fb.n_mels = cfg.n_mels;
  fb.n_bins = cfg.bins();
  fb.weights.assign(fb.n_mels * fb.n_bins, 0.0);
  const double top = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(cfg.n_mels + 1));
  }
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m];
    const double mid = edges[m + 1];
    const double hi = edges[m + 2];
    for (std::size_t k = 0; k < fb.n_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / static_cast<double>(cfg.fft_size);
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      fb.weights[m * fb.n_bins + k] = w;
    }
  }
  return fb;
}

template <class T>
ad::Tensor<T> stft_magnitude(const ad::Tensor<T>& audio, const SpectrogramConfig& cfg) {
  cfg.validate();
  const bool unbatched = audio.rank() == 1;
  if (!unbatched && audio.rank() != 2) {
    throw DimensionError("stft_magnitude: audio must be [T] or [B, T], got " + ad::to_string(audio.shape()));
  }
  const std::size_t batch = unbatched ? 1 : audio.dim(0);
  const std::size_t length = unbatched ? audio.dim(0) : audio.dim(1);
  if (length < cfg.window_size || length <= cfg.fft_size / 2) {
    throw SizeError("stft_magnitude: clip of " + std::to_string(length) +
                    " samples is shorter than one analysis window (" + std::to_string(cfg.fft_size) + ")");
  }
  const std::size_t n = cfg.fft_size;
  const std::size_t bins = cfg.bins();
  const std::size_t frames = cfg.frames(length);
  // Transforms run in double for both precisions; only the magnitudes are
  // rounded to T.
  auto window = analysis_window(cfg);
  const auto plans = plans_for(n);

  std::vector<T> mags(batch * bins * frames);
  std::vector<double> mags64(batch * bins * frames);
  // Complex spectra kept for the backward pass: [B, frames, bins] (re, im).
  std::vector<double> spectra(batch * frames * bins * 2);
  FftBuffer buf(n);
  const auto xv = audio.values();
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  const auto len = static_cast<std::ptrdiff_t>(length);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* x = xv.data() + b * length;
    for (std::size_t m = 0; m < frames; ++m) {
      const auto start = static_cast<std::ptrdiff_t>(m * cfg.hop) - half;
      for (std::size_t i = 0; i < n; ++i) {
        buf.real[i] = window[i] * static_cast<double>(x[reflect(start + static_cast<std::ptrdiff_t>(i), len)]);
      }
      Fft::exec_r2c(plans.forward, buf.real, buf.spec);
      double* s = spectra.data() + (b * frames + m) * bins * 2;
      for (std::size_t k = 0; k < bins; ++k) {
        const double re = buf.spec[k][0];
        const double im = buf.spec[k][1];
        s[2 * k] = re;
        s[2 * k + 1] = im;
        const double mag = std::sqrt(re * re + im * im);
        mags64[(b * bins + k) * frames + m] = mag;
        mags[(b * bins + k) * frames + m] = static_cast<T>(mag);
      }
    }
  }
  ad::Shape shape = unbatched ? ad::Shape{bins, frames} : ad::Shape{batch, bins, frames};
  auto xn = audio.node_ptr();
  return ad::make_result<T>(
      std::move(shape), std::move(mags), {&audio},
      [xn, spectra = std::move(spectra), mags = std::move(mags64), window = std::move(window), batch,
       length, bins, frames, n, hop = cfg.hop](std::span<const T> g) {
        const auto plans = plans_for(n);
        FftBuffer buf(n);
        auto& gx = xn->grad_buffer();
        const auto half = static_cast<std::ptrdiff_t>(n / 2);
        const auto len = static_cast<std::ptrdiff_t>(length);
        std::vector<double> dx(length);
        for (std::size_t b = 0; b < batch; ++b) {
          std::fill(dx.begin(), dx.end(), 0.0);
          for (std::size_t m = 0; m < frames; ++m) {
            const double* s = spectra.data() + (b * frames + m) * bins * 2;
            for (std::size_t k = 0; k < bins; ++k) {
              const double mag = mags[(b * bins + k) * frames + m];
              const double gk = g[(b * bins + k) * frames + m];
              double re = 0.0;
              double im = 0.0;
              if (mag > 0.0 && gk != 0.0) {
                // Interior bins appear twice in the Hermitian inverse, so halve them.
                const double w = (k == 0 || k == bins - 1) ? gk / mag : 0.5 * gk / mag;
                re = w * s[2 * k];
                im = w * s[2 * k + 1];
              }
              buf.spec[k][0] = re;
              buf.spec[k][1] = im;
            }
            Fft::exec_c2r(plans.inverse, buf.spec, buf.real);
            const auto start = static_cast<std::ptrdiff_t>(m * hop) - half;
            for (std::size_t i = 0; i < n; ++i) {
              dx[reflect(start + static_cast<std::ptrdiff_t>(i), len)] += window[i] * buf.real[i];
            }
          }
          T* out = gx.data() + b * length;
          for (std::size_t t = 0; t < length; ++t) out[t] += static_cast<T>(dx[t]);
        }
      });
}

template <class T>
ad::Tensor<T> log_mel(const ad::Tensor<T>& audio, const SpectrogramConfig& cfg) {
  const auto fb = mel_filterbank(cfg);
  std::vector<T> matrix(fb.weights.begin(), fb.weights.end());
  auto mag = stft_magnitude(audio, cfg);
  const bool unbatched = mag.rank() == 2;
  if (unbatched) mag = ad::reshape(mag, ad::Shape{1, mag.dim(0), mag.dim(1)});
  auto mel = ad::apply_matrix<T>(matrix, fb.n_mels, fb.n_bins, mag);
  auto out = ad::log(ad::clamp_min(mel, static_cast<T>(cfg.log_floor)));
  if (unbatched) out = ad::reshape(out, ad::Shape{out.dim(1), out.dim(2)});
  return out;
}

template ad::Tensor<float> stft_magnitude(const ad::Tensor<float>&, const SpectrogramConfig&);
template ad::Tensor<double> stft_magnitude(const ad::Tensor<double>&, const SpectrogramConfig&);
template ad::Tensor<float> log_mel(const ad::Tensor<float>&, const SpectrogramConfig&);
template ad::Tensor<double> log_mel(const ad::Tensor<double>&, const SpectrogramConfig&);

}  // namespace nvc::dsp
