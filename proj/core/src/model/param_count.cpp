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

#include "nvcnet/model/param_count.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "nvcnet/model/networks.hpp"

namespace nvc::model {
namespace {

template <class Net>
NetworkCount tally(const std::string& name, const Net& net, const std::string& prefix) {
  ParameterList<float> params;
  net.collect(params, prefix);
  NetworkCount c{name, 0, 0};
  for (const auto& p : params) {
    c.total += p.tensor.numel();
    if (p.name.size() >= 2 && p.name.compare(p.name.size() - 2, 2, ".v") == 0) c.weights += p.tensor.numel();
  }
  return c;
}

}  // namespace

std::size_t ParameterCounts::encoders_and_generator() const {
  return content_encoder.total + speaker_encoder.total + generator.total;
}

std::size_t ParameterCounts::discriminators() const {
  std::size_t n = 0;
  for (const auto& d : discriminator_scales) n += d.total;
  return n;
}

std::size_t ParameterCounts::with_discriminators() const { return encoders_and_generator() + discriminators(); }

ParameterCounts count_parameters(const ModelConfig& cfg) {
  const NvcNet<float> net(cfg, 0);
  ParameterCounts counts;
  counts.content_encoder = tally("content_encoder", net.content_encoder, "content_encoder");
  counts.speaker_encoder = tally("speaker_encoder", net.speaker_encoder, "speaker_encoder");
  counts.generator = tally("generator", net.generator, "generator");
  for (std::size_t k = 0; k < net.discriminator.scales(); ++k) {
    counts.discriminator_scales.push_back(
        tally("discriminator_scale" + std::to_string(k), net.discriminator.scale(k), "d"));
  }
  return counts;
}

std::string format_parameter_report(const ParameterCounts& counts) {
  std::ostringstream os;
  auto line = [&os](const NetworkCount& c) {
    os << c.name << " total=" << c.total << " weights=" << c.weights << '\n';
  };
  line(counts.content_encoder);
  line(counts.speaker_encoder);
  line(counts.generator);
  for (const auto& d : counts.discriminator_scales) line(d);
  const double eg = static_cast<double>(counts.encoders_and_generator()) / 1e6;
  const double all = static_cast<double>(counts.with_discriminators()) / 1e6;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "encoders_and_generator=%zu (%.2fM)\n", counts.encoders_and_generator(), eg);
  os << buf;
  std::snprintf(buf, sizeof(buf), "with_discriminators=%zu (%.2fM)\n", counts.with_discriminators(), all);
  os << buf;
  const bool eg_closer = std::abs(eg - kReferenceParametersMillions) <= std::abs(all - kReferenceParametersMillions);
  std::snprintf(buf, sizeof(buf), "reference=%.2fM nearer=%s\n", kReferenceParametersMillions,
                eg_closer ? "encoders_and_generator" : "with_discriminators");
  os << buf;
  return os.str();
}

}  // namespace nvc::model
