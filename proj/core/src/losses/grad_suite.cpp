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

#include "nvcnet/losses/grad_suite.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "nvcnet/ad/grad_check.hpp"
#include "nvcnet/losses/losses.hpp"

namespace nvc::losses {

namespace {

using ad::Tensor;

enum class Wrt { kGeneratorSide, kDiscriminator, kSpeakerEncoder, kFakeAudio };

const char* wrt_name(Wrt w) {
  switch (w) {
    case Wrt::kGeneratorSide: return "generator_side";
    case Wrt::kDiscriminator: return "discriminator";
    case Wrt::kSpeakerEncoder: return "speaker_encoder";
    case Wrt::kFakeAudio: return "fake_audio";
  }
  return "?";
}

template <class T>
struct Context {
  using value_type = T;

  explicit Context(const model::ModelConfig& cfg, std::uint64_t seed) : net(cfg, seed) {}

  model::NvcNet<T> net;
  LossWeights weights;
  GeneratorInputs<T> gen;
  DiscriminatorInputs<T> disc;
  Tensor<T> real_audio;
  Tensor<T> fake_audio;

  std::vector<Tensor<T>> variables(Wrt w) {
    std::vector<Tensor<T>> out;
    model::ParameterList<T> list;
    switch (w) {
      case Wrt::kGeneratorSide: list = net.generator_side_parameters(); break;
      case Wrt::kDiscriminator: list = net.discriminator_parameters(); break;
      case Wrt::kSpeakerEncoder: net.speaker_encoder.collect(list); break;
      case Wrt::kFakeAudio: out.push_back(fake_audio); return out;
    }
    for (auto& p : list) out.push_back(p.tensor);
    return out;
  }

  void freeze_all() {
    auto all = net.parameters();
    model::set_requires_grad(all, false);
    fake_audio.set_requires_grad(false);
  }
};

struct Case {
  std::string name;
  Wrt wrt;
  std::function<Tensor<float>(Context<float>&)> f32;
  std::function<Tensor<double>(Context<double>&)> f64;
};

template <class F>
Case make_case(std::string name, Wrt wrt, F f) {
  return Case{std::move(name), wrt, [f](Context<float>& c) { return f(c); },
              [f](Context<double>& c) { return f(c); }};
}

template <class T, class S>
Tensor<T> cast_tensor(const Tensor<S>& x) {
  std::vector<T> v(x.values().begin(), x.values().end());
  return Tensor<T>(x.shape(), std::move(v));
}

// Tones with a little noise, [B, T], in double; the float context receives a
// rounded copy and the double context receives that copy widened.
Tensor<double> test_audio(std::size_t batch, std::size_t length, double base_hz, model::Rng& rng) {
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<double> v(batch * length);
  for (std::size_t b = 0; b < batch; ++b) {
    const double f0 = base_hz * (1.0 + 0.37 * static_cast<double>(b));
    for (std::size_t t = 0; t < length; ++t) {
      const double s = static_cast<double>(t) / 22050.0;
      v[b * length + t] = 0.4 * std::sin(2.0 * M_PI * f0 * s) + 0.2 * std::sin(2.0 * M_PI * 2.3 * f0 * s) + noise(rng);
    }
  }
  return Tensor<double>({batch, length}, std::move(v));
}

template <class T>
Tensor<T> round_through_float(const Tensor<double>& x) {
  return cast_tensor<T>(cast_tensor<double>(cast_tensor<float>(x)));
}

template <class T>
void fill_inputs(Context<T>& c, const GradSuiteOptions& opt) {
  model::Rng rng(opt.seed ^ 0x5eedULL);
  const auto& cfg = c.net.config();
  const std::size_t B = opt.batch;
  const std::size_t L = opt.length;
  c.real_audio = round_through_float<T>(test_audio(B, L, 180.0, rng));
  c.fake_audio = round_through_float<T>(test_audio(B, L, 260.0, rng));

  c.gen.source = c.real_audio;
  c.gen.target = round_through_float<T>(test_audio(B, L, 181.0, rng));
  c.gen.speaker_view = round_through_float<T>(test_audio(B, L, 179.0, rng));
  c.gen.noise = round_through_float<T>(model::standard_normal<double>({B, cfg.d_spk}, rng));
  c.gen.labels.resize(B);
  c.gen.permutation.resize(B);
  c.gen.target_labels.resize(B);
  for (std::size_t b = 0; b < B; ++b) {
    c.gen.labels[b] = b % cfg.n_speakers;
    c.gen.permutation[b] = (b + 1) % B;
  }
  for (std::size_t b = 0; b < B; ++b) c.gen.target_labels[b] = c.gen.labels[c.gen.permutation[b]];

  c.disc.real = c.real_audio;
  c.disc.fake = c.fake_audio;
  c.disc.labels = c.gen.labels;
  c.disc.target_labels = c.gen.target_labels;
}

std::vector<Case> make_cases() {
  std::vector<Case> cases;
  for (std::size_t k = 0; k < 3; ++k) {
    cases.push_back(make_case("adv_discriminator_scale" + std::to_string(k), Wrt::kDiscriminator, [k](auto& c) {
      const auto real = c.net.discriminate(c.disc.real);
      const auto fake = c.net.discriminate(c.disc.fake);
      return adv_loss_discriminator(real[k], c.disc.labels, fake[k], c.disc.target_labels);
    }));
  }
  cases.push_back(make_case("adv_generator", Wrt::kGeneratorSide, [](auto& c) {
    const auto fwd = generator_forward(c.net, c.gen);
    return adv_loss_generator(c.net.discriminate(fwd.conversion), c.gen.target_labels, false);
  }));
  cases.push_back(make_case("adv_generator_non_saturating", Wrt::kGeneratorSide, [](auto& c) {
    const auto fwd = generator_forward(c.net, c.gen);
    return adv_loss_generator(c.net.discriminate(fwd.conversion), c.gen.target_labels, true);
  }));
  cases.push_back(make_case("feature_matching", Wrt::kGeneratorSide, [](auto& c) {
    const auto fwd = generator_forward(c.net, c.gen);
    return feature_matching_loss(c.net.discriminate(c.gen.target), c.net.discriminate(fwd.reconstruction));
  }));
  for (std::size_t w : {2048, 1024, 512}) {
    cases.push_back(make_case("spectral_w" + std::to_string(w), Wrt::kFakeAudio, [w](auto& c) {
      return spectral_loss(c.real_audio, c.fake_audio, w);
    }));
  }
  cases.push_back(make_case("reconstruction", Wrt::kGeneratorSide, [](auto& c) {
    const auto fwd = generator_forward(c.net, c.gen);
    return reconstruction_loss(c.gen.target, fwd.reconstruction, c.net.discriminate(c.gen.target),
                               c.net.discriminate(fwd.reconstruction), c.weights);
  }));
  cases.push_back(make_case("content_preservation", Wrt::kGeneratorSide, [](auto& c) {
    const auto fwd = generator_forward(c.net, c.gen);
    return content_preservation_loss(fwd.content, c.net.content_encode(fwd.conversion));
  }));
  cases.push_back(make_case("kl", Wrt::kSpeakerEncoder, [](auto& c) {
    return kl_loss(c.net.speaker_encode(c.gen.speaker_view));
  }));
  cases.push_back(make_case("total_generator", Wrt::kGeneratorSide, [](auto& c) {
    return total_generator_loss(c.net, c.gen, c.weights).total;
  }));
  cases.push_back(make_case("total_discriminator", Wrt::kDiscriminator, [](auto& c) {
    return total_discriminator_loss(c.net, c.disc).total;
  }));
  return cases;
}

template <class T>
std::vector<double> analytic_gradient(Context<T>& c, const std::function<Tensor<T>(Context<T>&)>& fn, Wrt wrt,
                                      const std::vector<std::vector<std::size_t>>& coords) {
  c.freeze_all();
  auto vars = c.variables(wrt);
  for (auto& v : vars) {
    v.set_requires_grad(true);
    v.zero_grad();
  }
  {
    ad::Tape<T> tape;
    ad::TapeScope<T> scope(tape);
    tape.backward(fn(c));
  }
  std::vector<double> out;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    for (auto i : coords[k]) out.push_back(vars[k].has_grad() ? static_cast<double>(vars[k].grad()[i]) : 0.0);
    vars[k].zero_grad();
  }
  c.freeze_all();
  return out;
}

struct Numeric {
  std::vector<double> values;
  std::vector<bool> valid;
  std::size_t skipped = 0;
};

// Five-point central differences, shrinking the step tenfold whenever the perturbation
// changes the branch pattern of a piecewise-linear op; a coordinate that
// still straddles a kink at the smallest step is marked invalid.
Numeric numeric_gradient(Context<double>& c, const std::function<Tensor<double>(Context<double>&)>& fn, Wrt wrt,
                         const std::vector<std::vector<std::size_t>>& coords, double h, std::size_t shrinks) {
  c.freeze_all();
  ad::NoGradScope<double> no_grad;
  std::uint64_t base = 0;
  {
    ad::BranchRecorder rec;
    fn(c);
    base = rec.digest();
  }
  auto eval = [&](std::uint64_t& digest) {
    ad::BranchRecorder rec;
    const double v = fn(c).item();
    digest = rec.digest();
    return v;
  };
  auto vars = c.variables(wrt);
  Numeric out;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    for (auto i : coords[k]) {
      auto values = vars[k].mutable_values();
      const double original = values[i];
      double step = h;
      bool ok = false;
      double estimate = 0.0;
      for (std::size_t attempt = 0; attempt <= shrinks && !ok; ++attempt, step /= 10.0) {
        // Five-point stencil: truncation error O(step^4).
        ok = true;
        double f[4];
        const double offsets[4] = {2.0, 1.0, -1.0, -2.0};
        for (int j = 0; j < 4; ++j) {
          std::uint64_t digest = 0;
          values[i] = original + offsets[j] * step;
          f[j] = eval(digest);
          ok = ok && digest == base;
        }
        values[i] = original;
        estimate = (-f[0] + 8.0 * f[1] - 8.0 * f[2] + f[3]) / (12.0 * step);
      }
      out.values.push_back(estimate);
      out.valid.push_back(ok);
      if (!ok) ++out.skipped;
    }
  }
  return out;
}

struct Comparison {
  double normwise = 0.0;
  double worst = 0.0;
  double norm = 0.0;
};

Comparison compare(const std::vector<double>& analytic, const Numeric& num) {
  const auto& numeric = num.values;
  double diff = 0.0, na = 0.0, nn = 0.0;
  Comparison out;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    if (!num.valid[i]) continue;
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
    out.worst = std::max(out.worst, ad::relative_error(analytic[i], numeric[i]));
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-300});
  out.normwise = std::sqrt(diff) / denom;
  out.norm = std::sqrt(nn);
  return out;
}

}  // namespace

bool GradSuiteReport::passed() const {
  if (entries.empty()) return false;
  for (const auto& e : entries) {
    if (!e.passed) return false;
  }
  return true;
}

GradSuiteReport run_gradient_suite(const GradSuiteOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = model::ModelConfig::micro(2);
  Context<float> c32(cfg, opt.seed);
  Context<double> c64(cfg, opt.seed);
  {
    auto src = c32.net.parameters();
    auto dst = c64.net.parameters();
    model::copy_values(src, dst);
  }
  fill_inputs(c32, opt);
  fill_inputs(c64, opt);

  GradSuiteReport report;
  std::uint64_t case_seed = opt.seed;
  for (const auto& cs : make_cases()) {
    ++case_seed;
    if (!opt.filter.empty() && cs.name.find(opt.filter) == std::string::npos) continue;
    const auto vars = c64.variables(cs.wrt);
    std::vector<std::vector<std::size_t>> coords;
    const std::size_t per = cs.wrt == Wrt::kFakeAudio ? opt.audio_coords : opt.coords_per_tensor;
    const auto chosen = ad::sample_coordinates(vars.size(), opt.max_tensors, case_seed);
    std::vector<bool> use(vars.size(), false);
    for (auto k : chosen) use[k] = true;
    for (std::size_t k = 0; k < vars.size(); ++k) {
      coords.push_back(use[k] ? ad::sample_coordinates(vars[k].numel(), per, case_seed * 1000003ULL + k)
                              : std::vector<std::size_t>{});
    }
    auto a32 = analytic_gradient(c32, cs.f32, cs.wrt, coords);
    auto a64 = analytic_gradient(c64, cs.f64, cs.wrt, coords);
    if (opt.corrupt_gradient != 0.0) {
      for (auto& g : a32) g *= 1.0 + opt.corrupt_gradient;
      for (auto& g : a64) g *= 1.0 + opt.corrupt_gradient;
    }
    const auto numeric = numeric_gradient(c64, cs.f64, cs.wrt, coords, opt.step, opt.step_shrinks);
    const auto r32 = compare(a32, numeric);
    const auto r64 = compare(a64, numeric);

    GradCheckEntry e;
    e.name = cs.name;
    e.variables = wrt_name(cs.wrt);
    e.coordinates = numeric.values.size();
    e.skipped = numeric.skipped;
    e.error32 = r32.normwise;
    e.error64 = r64.normwise;
    e.worst_coordinate32 = r32.worst;
    e.worst_coordinate64 = r64.worst;
    e.gradient_norm = r64.norm;
    e.passed = e.error32 < opt.tolerance32 && e.error64 < opt.tolerance64 && r64.norm > 0.0 &&
               static_cast<double>(e.skipped) <= opt.max_skipped_fraction * static_cast<double>(e.coordinates);
    report.entries.push_back(e);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string format_gradient_report(const GradSuiteReport& report, const GradSuiteOptions& opt) {
  std::ostringstream os;
  os.precision(3);
  for (const auto& e : report.entries) {
    os << "name=" << e.name << " wrt=" << e.variables << " coords=" << e.coordinates << " kinks=" << e.skipped << std::scientific
       << " err32=" << e.error32 << " err64=" << e.error64 << " worst32=" << e.worst_coordinate32
       << " worst64=" << e.worst_coordinate64 << " grad_norm=" << e.gradient_norm << std::defaultfloat
       << " status=" << (e.passed ? "pass" : "FAIL") << "\n";
  }
  os << std::scientific << "tolerance32=" << opt.tolerance32 << " tolerance64=" << opt.tolerance64
     << std::defaultfloat << " seconds=" << report.seconds << " result=" << (report.passed() ? "pass" : "FAIL")
     << "\n";
  return os.str();
}

}  // namespace nvc::losses
