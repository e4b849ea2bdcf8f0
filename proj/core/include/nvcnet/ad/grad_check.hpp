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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "nvcnet/ad/tensor.hpp"

namespace nvc::ad {

// |analytic - numeric| / max(|analytic|, |numeric|, 1e-12)
inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Picks up to `count` distinct coordinates out of [0, n), sorted.
inline std::vector<std::size_t> sample_coordinates(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (count >= n) return all;
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

// Central-difference check of a tensor-to-scalar map at `point`. When
// `coords` is empty every coordinate is checked.
template <class T>
GradCheckResult grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& fn, const Tensor<T>& point,
                           double step, std::span<const std::size_t> coords = {}) {
  Tensor<T> x = point.detach();
  x.set_requires_grad(true);
  {
    Tape<T> tape;
    TapeScope<T> scope(tape);
    Tensor<T> loss = fn(x);
    tape.backward(loss);
  }
  std::vector<T> analytic(x.numel(), T(0));
  if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());

  std::vector<std::size_t> all;
  if (coords.empty()) {
    all.resize(x.numel());
    std::iota(all.begin(), all.end(), std::size_t{0});
    coords = all;
  }
  GradCheckResult result;
  NoGradScope<T> no_grad;
  for (auto i : coords) {
    Tensor<T> probe = point.detach();
    const T original = probe.values()[i];
    probe.mutable_values()[i] = original + static_cast<T>(step);
    const double up = fn(probe).item();
    probe.mutable_values()[i] = original - static_cast<T>(step);
    const double down = fn(probe).item();
    const double numeric = (up - down) / (2.0 * step);
    const double err = relative_error(analytic[i], numeric);
    ++result.checked;
    if (err > result.max_relative_error || result.checked == 1) {
      result.max_relative_error = err;
      result.worst_index = i;
      result.worst_analytic = analytic[i];
      result.worst_numeric = numeric;
    }
  }
  return result;
}

// Same check, but perturbing leaf parameters in place. `loss` must rebuild the
// forward pass from the current parameter values every time it is called.
// Gradients on `params` are cleared before and after.
template <class T>
GradCheckResult grad_check_params(const std::function<Tensor<T>()>& loss, std::span<Tensor<T>> params,
                                  double step, std::size_t coords_per_tensor, std::uint64_t seed) {
  for (auto& p : params) p.zero_grad();
  {
    Tape<T> tape;
    TapeScope<T> scope(tape);
    Tensor<T> l = loss();
    tape.backward(l);
  }
  std::vector<std::vector<T>> analytic;
  for (auto& p : params) {
    if (p.has_grad()) analytic.emplace_back(p.grad().begin(), p.grad().end());
    else analytic.emplace_back(p.numel(), T(0));
  }
  GradCheckResult result;
  NoGradScope<T> no_grad;
  std::size_t flat_offset = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    const auto coords = sample_coordinates(p.numel(), coords_per_tensor, seed + k);
    for (auto i : coords) {
      const T original = p.values()[i];
      p.mutable_values()[i] = original + static_cast<T>(step);
      const double up = loss().item();
      p.mutable_values()[i] = original - static_cast<T>(step);
      const double down = loss().item();
      p.mutable_values()[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(analytic[k][i], numeric);
      ++result.checked;
      if (err > result.max_relative_error || result.checked == 1) {
        result.max_relative_error = err;
        result.worst_index = flat_offset + i;
        result.worst_analytic = analytic[k][i];
        result.worst_numeric = numeric;
      }
    }
    flat_offset += p.numel();
  }
  for (auto& p : params) p.zero_grad();
  return result;
}

}  // namespace nvc::ad
