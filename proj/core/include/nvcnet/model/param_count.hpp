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
#include <string>
#include <vector>

#include "nvcnet/model/config.hpp"

namespace nvc::model {

struct NetworkCount {
  std::string name;
  std::size_t total = 0;    // every trainable scalar
  std::size_t weights = 0;  // weight-norm directions only (no biases or scales)
};

struct ParameterCounts {
  NetworkCount content_encoder;
  NetworkCount speaker_encoder;
  NetworkCount generator;
  std::vector<NetworkCount> discriminator_scales;

  std::size_t encoders_and_generator() const;
  std::size_t discriminators() const;
  std::size_t with_discriminators() const;
};

// Exact trainable-scalar counts; independent of input length.
ParameterCounts count_parameters(const ModelConfig& cfg);

// Published size of the full model (millions of parameters).
inline constexpr double kReferenceParametersMillions = 15.13;

// Human-readable breakdown; also the golden-file format.
std::string format_parameter_report(const ParameterCounts& counts);

}  // namespace nvc::model
