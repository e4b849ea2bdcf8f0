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

#include <cstdint>
#include <span>
#include <vector>

#include "nvcnet/model/networks.hpp"

namespace nvc::pipeline {

// Largest prefix whose length is a multiple of `hop`; SizeError if shorter than one hop.
std::vector<float> crop_to_hop(std::span<const float> clip, std::size_t hop);

// Posterior mean of one clip.
std::vector<float> posterior_mean(const model::NvcNet<float>& net, std::span<const float> clip);

// Posterior means averaged over clips.
std::vector<float> reference_embedding(const model::NvcNet<float>& net, const std::vector<std::vector<float>>& clips);

// mean + sigma * eps for one clip, eps drawn from `rng`.
std::vector<float> posterior_sample(const model::NvcNet<float>& net, std::span<const float> clip, model::Rng& rng);

std::vector<float> prior_sample(std::size_t d_spk, std::uint64_t seed);

// G(E_c(source), embedding) on the hop-cropped source.
std::vector<float> convert(const model::NvcNet<float>& net, std::span<const float> source,
                           std::span<const float> embedding);

// Conversion with the source's own posterior mean.
std::vector<float> reconstruct(const model::NvcNet<float>& net, std::span<const float> source);

}  // namespace nvc::pipeline
