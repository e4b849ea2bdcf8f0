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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nvcnet/errors.hpp"
#include "nvcnet/losses/grad_suite.hpp"
#include "nvcnet/ad/ops.hpp"
#include "nvcnet/losses/losses.hpp"

namespace nvc::losses {
namespace {

using ad::Tensor;

Tensor<double> random_tensor(ad::Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(ad::numel(shape));
  for (auto& x : v) x = n(rng);
  return Tensor<double>(std::move(shape), std::move(v));
}

model::ScaleOutput<double> scale_with_logits(Tensor<double> logits) { return {std::move(logits), {}}; }

double softplus(double x) { return std::log1p(std::exp(x)); }

TEST(Kl, StandardNormalPosteriorIsExactlyZero) {
  const auto mu = Tensor<double>::zeros({3, 16});
  EXPECT_EQ(kl_loss(mu, Tensor<double>::full({3, 16}, 1.0)).item(), 0.0);
  EXPECT_EQ(kl_loss(model::SpeakerPosterior<double>{mu, Tensor<double>::zeros({3, 16})}).item(), 0.0);
  const auto muf = Tensor<float>::zeros({2, 8});
  EXPECT_EQ(kl_loss(muf, Tensor<float>::full({2, 8}, 1.0f)).item(), 0.0f);
}

TEST(Kl, AgreesWithMonteCarloEstimate) {
  // E_{z~q}[log q(z) - log p(z)] with 1e5 draws; Gaussian constants cancel.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> sig(0.4, 1.8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 8;
    std::vector<double> mu(d), sigma(d);
    for (std::size_t j = 0; j < d; ++j) {
      mu[j] = n(rng);
      sigma[j] = sig(rng);
    }
    const double closed = kl_loss(Tensor<double>({1, d}, mu), Tensor<double>({1, d}, sigma)).item();
    double acc = 0.0;
    const int draws = 100000;
    for (int s = 0; s < draws; ++s) {
      double lr = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double e = n(rng);
        const double z = mu[j] + sigma[j] * e;
        lr += -0.5 * e * e - std::log(sigma[j]) + 0.5 * z * z;
      }
      acc += lr;
    }
    const double mc = acc / draws;
    EXPECT_NEAR(mc, closed, 0.02 * closed) << "trial " << trial;
  }
}

TEST(Kl, NonPositiveSigmaIsContractError) {
  EXPECT_THROW(kl_loss(Tensor<double>::zeros({1, 2}), Tensor<double>({1, 2}, {1.0, 0.0})), ContractError);
}

TEST(Adversarial, ZeroLogitsGiveTwoLogTwoPerScale) {
  const auto zero = scale_with_logits(Tensor<double>::zeros({2, 3, 5}));
  const std::vector<std::size_t> y{0, 1}, yt{1, 2};
  EXPECT_NEAR(adv_loss_discriminator(zero, y, zero, yt).item(), 2.0 * std::log(2.0), 1e-15);
}

TEST(Adversarial, MatchesPatchwiseLogSigmoidDefinition) {
  const auto real = random_tensor({2, 3, 4}, 2), fake = random_tensor({2, 3, 4}, 3);
  const std::vector<std::size_t> y{2, 0}, yt{1, 2};
  double expected = 0.0;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t p = 0; p < 4; ++p) {
      expected += softplus(-real.values()[(b * 3 + y[b]) * 4 + p]) / 8.0;
      expected += softplus(fake.values()[(b * 3 + yt[b]) * 4 + p]) / 8.0;
    }
  EXPECT_NEAR(adv_loss_discriminator(scale_with_logits(real), y, scale_with_logits(fake), yt).item(), expected,
              1e-12);
}

TEST(Adversarial, OnlyLabelledBranchesContribute) {
  auto real = random_tensor({2, 3, 4}, 4), fake = random_tensor({2, 3, 4}, 5);
  const std::vector<std::size_t> y{0, 0}, yt{1, 1};
  const double before = adv_loss_discriminator(scale_with_logits(real), y, scale_with_logits(fake), yt).item();
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t p = 0; p < 4; ++p) {
      real.mutable_values()[(b * 3 + 2) * 4 + p] += 5.0;
      fake.mutable_values()[(b * 3 + 2) * 4 + p] -= 5.0;
    }
  EXPECT_EQ(adv_loss_discriminator(scale_with_logits(real), y, scale_with_logits(fake), yt).item(), before);
}

TEST(Adversarial, BadLabelsAreRejected) {
  const auto s = scale_with_logits(Tensor<double>::zeros({2, 3, 4}));
  EXPECT_THROW(adv_loss_discriminator(s, std::vector<std::size_t>{0, 3}, s, std::vector<std::size_t>{0, 1}),
               IndexError);
  EXPECT_THROW(adv_loss_discriminator(s, std::vector<std::size_t>{0}, s, std::vector<std::size_t>{0, 1}),
               DimensionError);
}

TEST(Adversarial, GeneratorLossDecreasesWithFakeProbability) {
  auto at = [](double p) {
    const double logit = std::log(p / (1.0 - p));
    model::DiscriminatorOutput<double> out{scale_with_logits(Tensor<double>::full({1, 2, 3}, logit))};
    return adv_loss_generator(out, std::vector<std::size_t>{1}, false).item();
  };
  EXPECT_LT(at(0.9), at(0.1));
  EXPECT_NEAR(at(0.25), std::log(0.75), 1e-12);
}

TEST(Adversarial, NonSaturatingVariant) {
  model::DiscriminatorOutput<double> out{scale_with_logits(Tensor<double>::full({1, 2, 3}, 0.3))};
  EXPECT_NEAR(adv_loss_generator(out, std::vector<std::size_t>{0}, true).item(), softplus(-0.3), 1e-12);
}

TEST(FeatureMatching, ZeroForIdenticalFeaturesAndL1Otherwise) {
  const auto f = random_tensor({2, 4, 6}, 6);
  const auto g = random_tensor({2, 4, 6}, 7);
  model::DiscriminatorOutput<double> a{{Tensor<double>::zeros({2, 1, 1}), {f}}};
  model::DiscriminatorOutput<double> b{{Tensor<double>::zeros({2, 1, 1}), {g}}};
  EXPECT_EQ(feature_matching_loss(a, a).item(), 0.0);
  double l1 = 0.0;
  for (std::size_t i = 0; i < f.numel(); ++i) l1 += std::abs(f.values()[i] - g.values()[i]);
  EXPECT_NEAR(feature_matching_loss(a, b).item(), l1 / static_cast<double>(f.numel()), 1e-12);
}

TEST(Spectral, InvariantToWaveformSign) {
  const auto x = random_tensor({2, 4096}, 8, 0.3);
  std::vector<double> neg(x.values().begin(), x.values().end());
  for (auto& v : neg) v = -v;
  for (std::size_t w : {512u, 1024u, 2048u}) {
    EXPECT_EQ(spectral_loss(x, Tensor<double>({2, 4096}, neg), w).item(), 0.0);
  }
  EXPECT_GT(spectral_loss(x, random_tensor({2, 4096}, 9, 0.3), 512).item(), 0.0);
}

TEST(Spectral, ClipShorterThanFftIsSizeError) {
  EXPECT_THROW(spectral_loss(random_tensor({1, 1000}, 10), random_tensor({1, 1000}, 11), 2048), SizeError);
}

TEST(Content, ZeroForIdenticalCodes) {
  const auto c = random_tensor({2, 4, 8}, 12);
  EXPECT_EQ(content_preservation_loss(c, c).item(), 0.0);
  EXPECT_NEAR(content_preservation_loss(c, Tensor<double>::zeros({2, 4, 8})).item(),
              [&] {
                double s = 0.0;
                for (double v : c.values()) s += v * v;
                return s / 2.0;
              }(),
              1e-12);
}

TEST(Weights, NegativeWeightIsConfigError) {
  LossWeights w;
  w.kl = -0.1;
  EXPECT_THROW(w.validate(), ConfigError);
  w = LossWeights{};
  w.fft_sizes = {1000, 510};
  EXPECT_THROW(w.validate(), ConfigError);
}

TEST(Totals, GeneratorTotalIsTheWeightedSum) {
  const model::NvcNet<double> net(model::ModelConfig::micro(2), 3);
  GeneratorInputs<double> in;
  in.source = random_tensor({2, 8192}, 13, 0.2);
  in.target = random_tensor({2, 8192}, 14, 0.2);
  in.speaker_view = random_tensor({2, 8192}, 15, 0.2);
  in.noise = random_tensor({2, net.config().d_spk}, 16);
  in.labels = {0, 1};
  in.permutation = {1, 0};
  in.target_labels = {1, 0};
  LossWeights w;
  w.fft_sizes = {1024, 512};
  ad::NoGradScope<double> no_grad;
  const auto g = total_generator_loss(net, in, w);
  double rec = g.feature_matching.item();
  for (const auto& s : g.spectral) rec += s.item();
  EXPECT_NEAR(g.reconstruction.item(), rec, 1e-9 * std::abs(rec));
  const double total = g.adversarial.item() + 10.0 * g.reconstruction.item() + 10.0 * g.content.item() +
                       0.02 * g.kl.item();
  EXPECT_NEAR(g.total.item(), total, 1e-9 * std::abs(total));
  EXPECT_LT(g.adversarial.item(), 0.0);
  EXPECT_GT(g.content.item(), 0.0);
}

GeneratorInputs<double> micro_inputs(const model::NvcNet<double>& net) {
  GeneratorInputs<double> in;
  in.source = random_tensor({2, 8192}, 21, 0.2);
  in.target = random_tensor({2, 8192}, 22, 0.2);
  in.speaker_view = random_tensor({2, 8192}, 23, 0.2);
  in.noise = random_tensor({2, net.config().d_spk}, 24);
  in.labels = {0, 1};
  in.permutation = {1, 0};
  in.target_labels = {1, 0};
  return in;
}

TEST(Totals, ZeroWeightsLeaveTheAdversarialTerm) {
  const model::NvcNet<double> net(model::ModelConfig::micro(2), 4);
  LossWeights w;
  w.reconstruction = w.content = w.kl = 0.0;
  w.fft_sizes = {1024, 512};
  ad::NoGradScope<double> no_grad;
  const auto g = total_generator_loss(net, micro_inputs(net), w);
  EXPECT_EQ(g.total.item(), g.adversarial.item());
}

TEST(Content, BoundedByFourPerFrame) {
  const auto a = ad::normalize_channels(random_tensor({3, 4, 16}, 31), 1e-8);
  const auto b = ad::normalize_channels(random_tensor({3, 4, 16}, 32), 1e-8);
  const double l = content_preservation_loss(a, b).item();
  EXPECT_GT(l, 0.0);
  EXPECT_LE(l, 4.0 * 16);
  EXPECT_NEAR(content_preservation_loss(a, ad::scale(a, -1.0)).item(), 4.0 * 16, 1e-9);
}

TEST(Discriminator, TotalIsSumOfScalesAndLeavesGeneratorUntouched) {
  const model::NvcNet<double> net(model::ModelConfig::micro(2), 5);
  const auto in = micro_inputs(net);
  ad::Tape<double> tape;
  ad::TapeScope<double> scope(tape);
  const auto fake = net.convert(in.source, ad::gather_rows(in.noise, std::vector<std::size_t>{1, 0}));
  const auto d = total_discriminator_loss<double>(net, {in.source, fake, in.labels, in.target_labels});
  ASSERT_EQ(d.per_scale.size(), 3u);
  double sum = 0.0;
  for (const auto& s : d.per_scale) sum += s.item();
  EXPECT_NEAR(d.total.item(), sum, 1e-12);
  EXPECT_GT(d.total.item(), 0.0);
  tape.backward(d.total);
  for (const auto& p : net.generator_side_parameters()) {
    for (double g : p.tensor.grad()) ASSERT_EQ(g, 0.0) << p.name;
  }
  std::size_t touched = 0;
  for (const auto& p : net.discriminator_parameters()) touched += p.tensor.has_grad();
  EXPECT_GT(touched, 0u);
}

TEST(Totals, GradientReachesEveryGeneratorSideTensor) {
  const model::NvcNet<double> net(model::ModelConfig::micro(2), 6);
  const auto in = micro_inputs(net);
  LossWeights w;
  w.fft_sizes = {1024, 512};
  ad::Tape<double> tape;
  {
    ad::TapeScope<double> scope(tape);
    tape.backward(total_generator_loss(net, in, w).total);
  }
  const auto params = net.generator_side_parameters();
  std::size_t nonzero = 0;
  for (const auto& p : params) {
    const auto g = p.tensor.grad();
    nonzero += std::any_of(g.begin(), g.end(), [](double v) { return v != 0.0; });
  }
  EXPECT_GE(static_cast<double>(nonzero), 0.99 * static_cast<double>(params.size()))
      << nonzero << " of " << params.size();
}

TEST(GradSuite, CorruptedGradientFails) {
  GradSuiteOptions opt;
  opt.filter = "kl";
  opt.corrupt_gradient = 0.01;
  const auto report = run_gradient_suite(opt);
  ASSERT_FALSE(report.entries.empty());
  EXPECT_FALSE(report.passed());
}

TEST(GradSuite, KlCheckPassesAndReportsByName) {
  GradSuiteOptions opt;
  opt.filter = "kl";
  const auto report = run_gradient_suite(opt);
  ASSERT_EQ(report.entries.size(), 1u);
  EXPECT_TRUE(report.passed());
  EXPECT_NE(format_gradient_report(report, opt).find("name=kl"), std::string::npos);
}

}  // namespace
}  // namespace nvc::losses
