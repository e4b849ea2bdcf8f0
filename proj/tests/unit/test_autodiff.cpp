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
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "nvcnet/ad/grad_check.hpp"
#include "nvcnet/ad/ops.hpp"
#include "nvcnet/errors.hpp"

namespace nvc::ad {
namespace {

Tensor<double> random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = n(rng);
  return Tensor<double>(std::move(shape), std::move(v));
}

// Weighted sum with fixed pseudo-random weights so every output matters.
Tensor<double> probe(const Tensor<double>& y) {
  const auto w = random_tensor(y.shape(), 99);
  return sum(mul(y, w));
}

void expect_gradient(const std::function<Tensor<double>(const Tensor<double>&)>& f, const Tensor<double>& x,
                     double tol = 1e-7, double step = 1e-6) {
  const auto r = grad_check<double>([&](const Tensor<double>& t) { return probe(f(t)); }, x, step);
  EXPECT_LT(r.max_relative_error, tol) << "worst index " << r.worst_index << " analytic " << r.worst_analytic
                                       << " numeric " << r.worst_numeric;
}

// Direct loops, no im2col.
std::vector<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                               const Conv1dOptions& o) {
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const std::size_t Co = w.dim(0), Cg = w.dim(1), K = w.dim(2);
  const std::size_t To = conv1d_output_length(L, K, o);
  const std::size_t cog = Co / o.groups;
  std::vector<double> y(B * Co * To, 0.0);
  for (std::size_t bb = 0; bb < B; ++bb)
    for (std::size_t co = 0; co < Co; ++co) {
      const std::size_t g = co / cog;
      for (std::size_t t = 0; t < To; ++t) {
        double s = b.values()[co];
        for (std::size_t ci = 0; ci < Cg; ++ci)
          for (std::size_t k = 0; k < K; ++k) {
            std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(t * o.stride + k * o.dilation) -
                                 static_cast<std::ptrdiff_t>(o.pad);
            const auto n = static_cast<std::ptrdiff_t>(L);
            if (o.padding == Padding::kReflect) {
              while (idx < 0 || idx >= n) idx = idx < 0 ? -idx : 2 * (n - 1) - idx;
            } else if (idx < 0 || idx >= n) {
              continue;
            }
            s += w.values()[(co * Cg + ci) * K + k] * x.values()[(bb * C + g * Cg + ci) * L + idx];
          }
        y[(bb * Co + co) * To + t] = s;
      }
    }
  (void)C;
  return y;
}

TEST(Tape, BackwardAccumulatesIntoLeaves) {
  Tensor<double> a({3}, {1.0, 2.0, 3.0}, true);
  Tape<double> tape;
  {
    TapeScope<double> scope(tape);
    const auto y = sum(mul(a, a));
    tape.backward(y);
  }
  ASSERT_TRUE(a.has_grad());
  EXPECT_DOUBLE_EQ(a.grad()[0], 2.0);
  EXPECT_DOUBLE_EQ(a.grad()[2], 6.0);
}

TEST(Tape, NoGradScopeRecordsNothing) {
  Tensor<double> a({2}, {1.0, 2.0}, true);
  Tape<double> tape;
  TapeScope<double> scope(tape);
  {
    NoGradScope<double> off;
    const auto y = sum(square(a));
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Tape, DetachBlocksGradient) {
  Tensor<double> a({2}, {1.0, 2.0}, true);
  Tape<double> tape;
  {
    TapeScope<double> scope(tape);
    const auto y = sum(mul(a, a.detach()));
    tape.backward(y);
  }
  EXPECT_DOUBLE_EQ(a.grad()[0], 1.0);
  EXPECT_DOUBLE_EQ(a.grad()[1], 2.0);
}

TEST(Ops, ShapeMismatchIsDimensionError) {
  const auto a = random_tensor({2, 3}, 1);
  const auto b = random_tensor({3, 2}, 2);
  EXPECT_THROW(add(a, b), DimensionError);
}

TEST(Ops, ElementwiseGradients) {
  const auto x = random_tensor({2, 3, 5}, 3);
  expect_gradient([](const auto& t) { return square(t); }, x);
  expect_gradient([](const auto& t) { return exp(scale(t, 0.5)); }, x);
  expect_gradient([](const auto& t) { return softplus(t); }, x);
  expect_gradient([](const auto& t) { return log(add_scalar(square(t), 1.0)); }, x);
}

TEST(Ops, ActivationGradients) {
  const auto x = random_tensor({2, 4, 7}, 4);
  for (auto kind : {Activation::kGelu, Activation::kTanh, Activation::kSigmoid, Activation::kLeakyRelu,
                    Activation::kGatedTanh}) {
    expect_gradient([kind](const auto& t) { return activation(t, kind); }, x);
  }
}

TEST(Ops, SoftplusIsStableForLargeInputs) {
  Tensor<double> x({3}, {-800.0, 0.0, 800.0});
  const auto y = softplus(x);
  EXPECT_NEAR(y.values()[0], 0.0, 1e-300);
  EXPECT_NEAR(y.values()[1], std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(y.values()[2], 800.0);
}

struct ConvCase {
  std::size_t c_in, c_out, kernel, stride, dilation, pad, groups;
  Padding padding;
};

class Conv1dTest : public ::testing::TestWithParam<ConvCase> {};

TEST_P(Conv1dTest, MatchesDirectLoopsAndGradients) {
  const auto p = GetParam();
  Conv1dOptions o{p.stride, p.dilation, p.pad, p.padding, p.groups};
  const auto x = random_tensor({2, p.c_in, 23}, 5);
  const auto w = random_tensor({p.c_out, p.c_in / p.groups, p.kernel}, 6);
  const auto b = random_tensor({p.c_out}, 7);
  const auto y = conv1d(x, w, b, o);
  const auto ref = naive_conv(x, w, b, o);
  ASSERT_EQ(y.numel(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.values()[i], ref[i], 1e-12);
  // Linear in each argument, so a large step carries no truncation error.
  expect_gradient([&](const auto& t) { return conv1d(t, w, b, o); }, x, 1e-7, 1e-2);
  expect_gradient([&](const auto& t) { return conv1d(x, t, b, o); }, w, 1e-7, 1e-2);
  expect_gradient([&](const auto& t) { return conv1d(x, w, t, o); }, b, 1e-7, 1e-2);
}

INSTANTIATE_TEST_SUITE_P(Shapes, Conv1dTest,
                         ::testing::Values(ConvCase{3, 4, 3, 1, 1, 1, 1, Padding::kZero},
                                           ConvCase{3, 4, 3, 1, 3, 3, 1, Padding::kReflect},
                                           ConvCase{4, 6, 5, 2, 1, 2, 2, Padding::kReflect},
                                           ConvCase{2, 2, 1, 1, 1, 0, 1, Padding::kZero},
                                           ConvCase{4, 8, 41, 4, 1, 20, 4, Padding::kZero},
                                           ConvCase{2, 3, 7, 1, 1, 30, 1, Padding::kReflect}));

TEST(Ops, ConvTransposeIsAdjointOfStridedConv) {
  // <conv_T(x), y> = <x, conv(y)> with shared weights and no bias.
  const std::size_t stride = 4, kernel = 8, pad = 2;
  const auto x = random_tensor({1, 3, 9}, 8);
  const auto w = random_tensor({3, 2, kernel}, 9);  // [C_in, C_out, k]
  const auto y_len = conv_transpose1d_output_length(9, kernel, stride, pad);
  const auto y = random_tensor({1, 2, y_len}, 10);
  const auto up = conv_transpose1d(x, w, Tensor<double>(), stride, pad);
  ASSERT_EQ(up.dim(2), y_len);
  // conv weight [C_out=3, C_in=2, k] is the same buffer read as [3, 2, k].
  const auto down = conv1d(y, w, Tensor<double>(), Conv1dOptions{stride, 1, pad, Padding::kZero, 1});
  ASSERT_EQ(down.dim(2), 9u);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < up.numel(); ++i) lhs += up.values()[i] * y.values()[i];
  for (std::size_t i = 0; i < down.numel(); ++i) rhs += down.values()[i] * x.values()[i];
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
}

TEST(Ops, ConvTransposeGradients) {
  const auto x = random_tensor({2, 3, 6}, 11);
  const auto w = random_tensor({3, 2, 4}, 12);
  const auto b = random_tensor({2}, 13);
  expect_gradient([&](const auto& t) { return conv_transpose1d(t, w, b, 2, 1); }, x);
  expect_gradient([&](const auto& t) { return conv_transpose1d(x, t, b, 2, 1); }, w);
  expect_gradient([&](const auto& t) { return conv_transpose1d(x, w, t, 2, 1); }, b);
}

TEST(Ops, PoolingAndReductionsGradients) {
  const auto x = random_tensor({2, 3, 16}, 14);
  expect_gradient([](const auto& t) { return avg_pool1d(t, 4, 2); }, x);
  expect_gradient([](const auto& t) { return mean_time(t); }, x);
  expect_gradient([](const auto& t) { return normalize_channels(t, 1e-8); }, x);
  expect_gradient([](const auto& t) { return mean(t); }, x);
}

TEST(Ops, NormalizeChannelsGivesUnitColumns) {
  const auto y = normalize_channels(random_tensor({2, 4, 9}, 15), 1e-8);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t t = 0; t < 9; ++t) {
      double s = 0.0;
      for (std::size_t c = 0; c < 4; ++c) s += std::pow(y.values()[(b * 4 + c) * 9 + t], 2);
      EXPECT_NEAR(std::sqrt(s), 1.0, 1e-12);
    }
}

TEST(Ops, WeightNormGradients) {
  const auto v = random_tensor({4, 3, 5}, 16);
  const auto g = random_tensor({4}, 17);
  expect_gradient([&](const auto& t) { return weight_norm(t, g, 0); }, v);
  expect_gradient([&](const auto& t) { return weight_norm(v, t, 0); }, g);
  const auto w = weight_norm(v, g, 0);
  for (std::size_t o = 0; o < 4; ++o) {
    double s = 0.0;
    for (std::size_t i = 0; i < 15; ++i) s += std::pow(w.values()[o * 15 + i], 2);
    EXPECT_NEAR(std::sqrt(s), std::abs(g.values()[o]), 1e-12);
  }
}

TEST(Ops, IndexingGradients) {
  const auto x = random_tensor({3, 4, 5}, 18);
  const std::vector<std::size_t> channel{2, 0, 3};
  expect_gradient([&](const auto& t) { return select_channel(t, channel); }, x);
  const auto rows = random_tensor({4, 3}, 19);
  const std::vector<std::size_t> perm{1, 3, 0, 2};
  expect_gradient([&](const auto& t) { return gather_rows(t, perm); }, rows);
  EXPECT_THROW(gather_rows(rows, std::vector<std::size_t>{4}), IndexError);
}

TEST(Ops, DenseAndBroadcastGradients) {
  const auto x = random_tensor({2, 5}, 20);
  const auto w = random_tensor({3, 5}, 21);
  const auto b = random_tensor({3}, 22);
  expect_gradient([&](const auto& t) { return dense(t, w, b); }, x);
  expect_gradient([&](const auto& t) { return dense(x, t, b); }, w);
  const auto h = random_tensor({2, 3, 6}, 23);
  const auto c = random_tensor({2, 3}, 24);
  expect_gradient([&](const auto& t) { return add_time_broadcast(t, c); }, h);
  expect_gradient([&](const auto& t) { return add_time_broadcast(h, t); }, c);
}

TEST(Ops, CrossEntropyMatchesDefinition) {
  const auto logits = random_tensor({3, 4}, 25);
  const std::vector<std::size_t> labels{0, 3, 1};
  double expected = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    double z = 0.0;
    for (std::size_t s = 0; s < 4; ++s) z += std::exp(logits.values()[b * 4 + s]);
    expected += std::log(z) - logits.values()[b * 4 + labels[b]];
  }
  EXPECT_NEAR(cross_entropy(logits, labels).item(), expected / 3.0, 1e-12);
  expect_gradient([&](const auto& t) { return cross_entropy(t, labels); }, logits);
}

TEST(Ops, BatchSliceAndConcatRoundTrip) {
  const auto x = random_tensor({4, 2, 3}, 26);
  const std::vector<Tensor<double>> parts{slice_batch(x, 0, 1), slice_batch(x, 1, 4)};
  const auto y = concat_batch<double>(parts);
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.values()[i], x.values()[i]);
  expect_gradient([](const auto& t) { return slice_batch(t, 1, 3); }, x);
}

TEST(BranchRecorder, DigestChangesWhenABranchFlips) {
  auto digest_of = [](double v) {
    BranchRecorder rec;
    abs(Tensor<double>({2}, {v, 1.0}));
    return rec.digest();
  };
  EXPECT_EQ(digest_of(0.5), digest_of(0.7));
  EXPECT_NE(digest_of(0.5), digest_of(-0.5));
}

}  // namespace
}  // namespace nvc::ad
