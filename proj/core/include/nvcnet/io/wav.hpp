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
#include <span>
#include <string>
#include <vector>

namespace nvc::io {

inline constexpr unsigned kWavSampleRate = 22050;

struct WavData {
  std::vector<float> samples;  // int16 / 32768, in [-1, 1)
  unsigned sample_rate = kWavSampleRate;
};

// Mono 16-bit PCM at 22,050 Hz only. Other rates raise RateError, more than
// one channel ChannelError, anything unparsable FormatError.
WavData load_wav(const std::string& path);

// Writes mono 16-bit PCM. Samples outside [-1, 1] are clamped; the number of
// clamped samples is returned and a warning goes to stderr.
std::size_t save_wav(const std::string& path, std::span<const float> samples, unsigned sample_rate = kWavSampleRate);

}  // namespace nvc::io
