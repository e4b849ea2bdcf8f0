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

#include "nvcnet/training/adam.hpp"

#include <cmath>
#include <string>

#include "nvcnet/errors.hpp"

namespace nvc::training {

AdamState AdamState::for_parameters(const model::ParameterList<float>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor.numel(), 0.0f);
    s.v.emplace_back(p.tensor.numel(), 0.0f);
  }
  return s;
}

void adam_step(model::ParameterList<float>& params, AdamState& state, const AdamConfig& cfg, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state holds " + std::to_string(state.m.size()) + " tensors, got " +
                         std::to_string(params.size()) + " parameters");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.m[k].size() != params[k].tensor.numel() || state.v[k].size() != params[k].tensor.numel()) {
      throw DimensionError("adam_step: moment shape mismatch for '" + params[k].name + "'");
    }
  }
  ++state.step;
  const double rate = lr > 0.0 ? lr : cfg.lr;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k].tensor;
    const bool has_grad = p.has_grad();
    const auto g = has_grad ? p.grad() : std::span<const float>{};
    auto w = p.mutable_values();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = has_grad ? g[i] : 0.0;
      m[i] = static_cast<float>(cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi);
      v[i] = static_cast<float>(cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] = static_cast<float>(w[i] - rate * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

}  // namespace nvc::training
