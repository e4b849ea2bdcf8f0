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
#include <string>
#include <vector>

namespace nvc::losses {

// Central finite-difference audit of every training objective on a micro
// model. Numeric derivatives are always taken in double precision; the
// 32-bit analytic gradients are evaluated at the same (float-representable)
// point and compared against them.
struct GradSuiteOptions {
  std::uint64_t seed = 7;
  std::size_t batch = 2;
  std::size_t length = 8192;
  std::size_t coords_per_tensor = 1;
  // Parameter tensors sampled per check (all of them when fewer).
  std::size_t max_tensors = 64;
  std::size_t audio_coords = 24;
  double step = 1e-5;
  // Tenfold step reductions tried when a perturbation crosses a kink.
  std::size_t step_shrinks = 2;
  double max_skipped_fraction = 0.25;
  double tolerance32 = 1e-4;
  double tolerance64 = 1e-6;
  // Test hook: perturbs every analytic gradient by this relative amount.
  double corrupt_gradient = 0.0;
  // Only run checks whose name contains this substring (empty: all).
  std::string filter;
};

struct GradCheckEntry {
  std::string name;
  std::string variables;
  std::size_t coordinates = 0;
  // Coordinates left out because every tried step crossed a kink.
  std::size_t skipped = 0;
  // ||analytic - numeric|| / max(||analytic||, ||numeric||) over the
  // sampled coordinates.
  double error32 = 0.0;
  double error64 = 0.0;
  // Largest single-coordinate relative error, for diagnostics.
  double worst_coordinate32 = 0.0;
  double worst_coordinate64 = 0.0;
  double gradient_norm = 0.0;
  bool passed = false;
};

struct GradSuiteReport {
  std::vector<GradCheckEntry> entries;
  double seconds = 0.0;
  bool passed() const;
};

GradSuiteReport run_gradient_suite(const GradSuiteOptions& options = {});

// One line per check: name=... wrt=... coords=... err32=... err64=... status=...
std::string format_gradient_report(const GradSuiteReport& report, const GradSuiteOptions& options);

}  // namespace nvc::losses
