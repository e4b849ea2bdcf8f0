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

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "nvcnet/errors.hpp"
#include "nvcnet/model/networks.hpp"
#include "nvcnet/model/param_count.hpp"

namespace nvc::model {
namespace {

ad::Tensor<float> audio(std::size_t batch, std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 0.2f);
  std::vector<float> v(batch * length);
  for (auto& x : v) x = n(rng);
  return ad::Tensor<float>({batch, length}, std::move(v));
}

class ShapeLaw : public ::testing::TestWithParam<std::size_t> {
 protected:
  static const NvcNet<float>& net() {
    static const NvcNet<float> n(ModelConfig::standard(2), 1);
    return n;
  }
};

TEST_P(ShapeLaw, ContentCodeAndGeneratorLengths) {
  const std::size_t T = GetParam();
  ad::NoGradScope<float> no_grad;
  const auto code = net().content_encode(audio(1, T, T));
  ASSERT_EQ(code.shape(), (ad::Shape{1, 4, T / 256}));
  Rng rng(3);
  const auto y = net().generate(code, sample_prior<float>(1, 128, rng));
  ASSERT_EQ(y.shape(), (ad::Shape{1, T}));
  for (float v : y.values()) {
    ASSERT_GT(v, -1.0f);
    ASSERT_LT(v, 1.0f);
  }
}

INSTANTIATE_TEST_SUITE_P(Lengths, ShapeLaw, ::testing::Values(256, 4096, 32768));

TEST(ContentEncoder, ColumnsAreUnitNorm) {
  const NvcNet<float> net(ModelConfig::desk(2), 2);
  ad::NoGradScope<float> no_grad;
  const auto code = net.content_encode(audio(2, 8192, 4));
  const std::size_t C = code.dim(1), L = code.dim(2);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t t = 0; t < L; ++t) {
      double s = 0.0;
      for (std::size_t c = 0; c < C; ++c) s += std::pow(code.values()[(b * C + c) * L + t], 2);
      EXPECT_NEAR(std::sqrt(s), 1.0, 1e-5);
    }
}

TEST(ContentEncoder, RejectsLengthsOffTheHopGrid) {
  const NvcNet<float> net(ModelConfig::micro(2), 2);
  EXPECT_THROW(net.content_encode(audio(1, 1000, 5)), SizeError);
}

TEST(SpeakerEncoder, SignFlipIsBitwiseInvariant) {
  const NvcNet<float> net(ModelConfig::desk(2), 5);
  const auto x = audio(2, 16384, 6);
  std::vector<float> neg(x.values().begin(), x.values().end());
  for (auto& v : neg) v = -v;
  ad::NoGradScope<float> no_grad;
  const auto a = net.speaker_encode(x);
  const auto b = net.speaker_encode(ad::Tensor<float>({2, 16384}, neg));
  for (std::size_t i = 0; i < a.mean.numel(); ++i) {
    ASSERT_EQ(a.mean.values()[i], b.mean.values()[i]);
    ASSERT_EQ(a.log_variance.values()[i], b.log_variance.values()[i]);
  }
}

TEST(SpeakerEncoder, PosteriorShapesAndPositiveSigma) {
  const NvcNet<float> net(ModelConfig::desk(2), 6);
  ad::NoGradScope<float> no_grad;
  const auto p = net.speaker_encode(audio(3, 8192, 7));
  ASSERT_EQ(p.mean.shape(), (ad::Shape{3, 128}));
  ASSERT_EQ(p.log_variance.shape(), (ad::Shape{3, 128}));
  const auto sigma = p.stddev();
  for (float s : sigma.values()) EXPECT_GT(s, 0.0f);
}

TEST(SpeakerEncoder, TooShortReferenceIsSizeError) {
  const NvcNet<float> net(ModelConfig::desk(2), 6);
  EXPECT_THROW(net.speaker_encode(audio(1, 2048, 8)), SizeError);
}

TEST(Discriminator, OneBranchPerSpeakerAtEveryScale) {
  const NvcNet<float> net(ModelConfig::desk(3), 7);
  ad::NoGradScope<float> no_grad;
  const auto out = net.discriminate(ad::reshape(audio(2, 8192, 9), {2, 1, 8192}));
  ASSERT_EQ(out.size(), 3u);
  std::size_t previous = 0;
  for (const auto& scale : out) {
    EXPECT_EQ(scale.logits.dim(0), 2u);
    EXPECT_EQ(scale.logits.dim(1), 3u);
    EXPECT_FALSE(scale.features.empty());
    if (previous) {
      EXPECT_LT(scale.logits.dim(2), previous);
    }
    previous = scale.logits.dim(2);
  }
}

// Support of the response to a unit impulse, measured against a zero input.
std::size_t impulse_support(const ResidualStack<double>& stack, std::size_t length) {
  std::vector<double> delta(4 * length, 0.0);
  for (std::size_t c = 0; c < 4; ++c) delta[c * length + length / 2] = 1.0;
  ad::NoGradScope<double> no_grad;
  const auto base = stack(ad::Tensor<double>::zeros({1, 4, length}));
  const auto hit = stack(ad::Tensor<double>({1, 4, length}, delta));
  std::size_t first = length, last = 0;
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t t = 0; t < length; ++t) {
      if (hit.values()[c * length + t] != base.values()[c * length + t]) {
        first = std::min(first, t);
        last = std::max(last, t);
      }
    }
  return last - first + 1;
}

TEST(ResidualStack, ReceptiveFieldIs81) {
  Rng rng(8);
  const ResidualStack<double> stack(4, {1, 3, 9, 27}, 0, rng);
  EXPECT_EQ(impulse_support(stack, 301), 81u);
  EXPECT_EQ(ModelConfig::standard(2).residual_receptive_field(3), 81u);
}

TEST(WeightNorm, InitialScaleEqualsDirectionNorm) {
  Rng rng(9);
  const Conv1d<double> conv(6, 5, 3, ad::Conv1dOptions{}, rng);
  ParameterList<double> params;
  conv.collect(params, "c");
  ASSERT_EQ(params.size(), 3u);
  const auto& v = params[0].tensor;
  const auto& g = params[1].tensor;
  const double bound = std::sqrt(3.0 / 18.0);
  for (std::size_t o = 0; o < 5; ++o) {
    double s = 0.0;
    for (std::size_t i = 0; i < 18; ++i) {
      const double x = v.values()[o * 18 + i];
      EXPECT_LE(std::abs(x), bound);
      s += x * x;
    }
    EXPECT_NEAR(g.values()[o], std::sqrt(s), 1e-12);
  }
}

TEST(ParameterCount, MatchesLayerFormula) {
  // Weight-normed conv: C_out * C_in * k directions + C_out scales + C_out biases.
  Rng rng(10);
  const Conv1d<float> conv(7, 9, 5, ad::Conv1dOptions{}, rng);
  ParameterList<float> params;
  conv.collect(params, "c");
  EXPECT_EQ(count_scalars(params), 9u * 7u * 5u + 9u + 9u);
}

TEST(ParameterCount, CountsEqualInstantiatedNetworks) {
  for (const auto& cfg : {ModelConfig::desk(2), ModelConfig::standard(4)}) {
    const auto counts = count_parameters(cfg);
    const NvcNet<float> net(cfg, 0);
    EXPECT_EQ(counts.encoders_and_generator(), count_scalars(net.generator_side_parameters()));
    EXPECT_EQ(counts.discriminators(), count_scalars(net.discriminator_parameters()));
  }
}

TEST(ParameterCount, DefaultModelWithinPublishedBand) {
  const auto total = count_parameters(ModelConfig::standard(2)).encoders_and_generator();
  EXPECT_GE(total, 13'500'000u);
  EXPECT_LE(total, 16'600'000u);
}

TEST(ParameterCount, MatchesGoldenFile) {
  std::ifstream in(std::string(NVCNET_GOLDEN_DIR) + "/param_counts.txt");
  ASSERT_TRUE(in) << "missing golden file";
  std::stringstream golden;
  golden << in.rdbuf();
  EXPECT_EQ(format_parameter_report(count_parameters(ModelConfig::standard(2))), golden.str());
}

TEST(ParameterCount, HalvingWidthsQuartersConvWeights) {
  const auto full = ModelConfig::standard(2);
  auto half = full;
  half.base_channels /= 2;
  half.discriminator_base_channels /= 2;
  const auto a = count_parameters(full), b = count_parameters(half);
  const auto weights = [](const ParameterCounts& c) {
    double w = static_cast<double>(c.content_encoder.weights + c.speaker_encoder.weights + c.generator.weights);
    for (const auto& d : c.discriminator_scales) w += static_cast<double>(d.weights);
    return w;
  };
  EXPECT_NEAR(weights(a) / weights(b), 4.0, 0.4);
}

TEST(Config, DigestTracksEveryField) {
  auto a = ModelConfig::desk(2);
  auto b = a;
  EXPECT_EQ(config_digest(a), config_digest(b));
  b.d_spk = 64;
  EXPECT_NE(config_digest(a), config_digest(b));
  b = a;
  b.speaker_mel.log_floor = 1e-6;
  EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(Config, JsonRoundTripAndStrictKeys) {
  const auto cfg = ModelConfig::desk(3);
  EXPECT_EQ(model_config_from_json(to_json(cfg)), cfg);
  EXPECT_EQ(model_config_from_json(R"({"preset": "micro", "n_speakers": 5})"), ModelConfig::micro(5));
  EXPECT_THROW(model_config_from_json(R"({"d_spkk": 3})"), ConfigError);
  EXPECT_THROW(model_config_from_json(R"({"downsample_factors": [3]})"), ConfigError);
}

TEST(Prior, SamplesAreSeedDeterministic) {
  Rng a(11), b(11), c(12);
  const auto x = sample_prior<float>(2, 16, a);
  const auto y = sample_prior<float>(2, 16, b);
  const auto z = sample_prior<float>(2, 16, c);
  EXPECT_TRUE(std::equal(x.values().begin(), x.values().end(), y.values().begin()));
  EXPECT_FALSE(std::equal(x.values().begin(), x.values().end(), z.values().begin()));
}

}  // namespace
}  // namespace nvc::model
