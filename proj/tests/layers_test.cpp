#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck_util.hpp"
#include "mxp/layers.hpp"

using namespace mxp;
using mxp::testing::max_rel_error;
using mxp::testing::numeric_gradient;

namespace {

// Scalar loss used by all finite-difference checks: weighted sum of the
// forward output, with fixed pseudo-random weights.
Tensor loss_weights(const std::vector<std::size_t>& shape, std::uint64_t seed) {
  SeededRng rng(seed);
  return seeded_uniform(rng, shape, -1, 1);
}

double weighted_sum(const Tensor& t, const Tensor& w) {
  double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * w[i];
  return s;
}

}  // namespace

TEST(DenseTest, OneHotSelectsRow) {
  SeededRng rng(1);
  Tensor w = seeded_uniform(rng, {5, 3}, -1, 1);
  Tensor x({1, 5});
  x(0, 0) = 1.0;
  Tensor y = dense_forward(x, w);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(y(0, j), w(0, j));
}

TEST(DenseTest, IdentityWeights) {
  Tensor w = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor x = Tensor::from({1, 2}, {3, -4});
  Tensor y = dense_forward(x, w);
  EXPECT_EQ(y(0, 0), 3);
  EXPECT_EQ(y(0, 1), -4);
}

TEST(DenseTest, GradientsMatchFiniteDifferences) {
  SeededRng rng(2);
  Tensor x = seeded_uniform(rng, {2, 5}, -1, 1);
  Tensor w = seeded_uniform(rng, {5, 3}, -1, 1);
  Tensor lw = loss_weights({2, 3}, 99);

  DenseGrads g = dense_backward(x, w, lw);
  Tensor num_w = numeric_gradient(
      [&](const Tensor& wp) { return weighted_sum(dense_forward(x, wp), lw); },
      w);
  Tensor num_x = numeric_gradient(
      [&](const Tensor& xp) { return weighted_sum(dense_forward(xp, w), lw); },
      x);
  EXPECT_LT(max_rel_error(g.grad_w, num_w), 1e-6);
  EXPECT_LT(max_rel_error(g.grad_x, num_x), 1e-6);
}

TEST(ReluTest, Elementwise) {
  Tensor x = Tensor::from({3}, {-1, 0, 2});
  Tensor y = relu_forward(x);
  EXPECT_EQ(y[0], 0);
  EXPECT_EQ(y[1], 0);
  EXPECT_EQ(y[2], 2);
}

TEST(ReluTest, GradientMatchesFiniteDifferences) {
  SeededRng rng(3);
  Tensor x = seeded_uniform(rng, {4, 4}, -1, 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) < 0.05) x[i] = 0.1;  // stay away from the kink
  }
  Tensor lw = loss_weights({4, 4}, 5);
  Tensor g = relu_backward(x, lw);
  Tensor num = numeric_gradient(
      [&](const Tensor& xp) { return weighted_sum(relu_forward(xp), lw); }, x);
  EXPECT_LT(max_rel_error(g, num), 1e-6);
}

TEST(ConvTest, OneByOneKernelIsIdentity) {
  SeededRng rng(4);
  Tensor x = seeded_uniform(rng, {1, 1, 3, 3}, -1, 1);
  Tensor k = Tensor::from({1, 1, 1, 1}, {1.0});
  Tensor y = conv2d_forward(x, {k, 1, 0});
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(ConvTest, ImpulseReproducesFlippedKernel) {
  Tensor x({1, 1, 5, 5});
  x(0, 0, 2, 2) = 1.0;  // centered delta
  SeededRng rng(5);
  Tensor k = seeded_uniform(rng, {1, 1, 3, 3}, -1, 1);
  Tensor y = conv2d_forward(x, {k, 1, 1});  // same-size output
  // cross-correlation: the impulse response is the kernel mirrored
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t s = 0; s < 3; ++s) {
      EXPECT_DOUBLE_EQ(y(0, 0, 1 + r, 1 + s), k(0, 0, 2 - r, 2 - s));
    }
  }
}

// Oracle: direct 4-loop single-channel cross-correlation, stride 1, no pad.
TEST(ConvTest, MatchesDirectLoopOracle) {
  SeededRng rng(6);
  Tensor x = seeded_uniform(rng, {1, 1, 7, 7}, -1, 1);
  Tensor k = seeded_uniform(rng, {1, 1, 3, 3}, -1, 1);
  Tensor y = conv2d_forward(x, {k, 1, 0});
  for (std::size_t oh = 0; oh < 5; ++oh) {
    for (std::size_t ow = 0; ow < 5; ++ow) {
      double acc = 0;
      for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t s = 0; s < 3; ++s) {
          acc += x(0, 0, oh + r, ow + s) * k(0, 0, r, s);
        }
      }
      ASSERT_NEAR(y(0, 0, oh, ow), acc, 1e-12);
    }
  }
}

TEST(ConvTest, GradientsMatchFiniteDifferences) {
  SeededRng rng(7);
  Tensor x = seeded_uniform(rng, {1, 2, 6, 6}, -1, 1);
  Tensor k = seeded_uniform(rng, {3, 2, 3, 3}, -1, 1);
  ConvParams p{k, 1, 1};
  Tensor y = conv2d_forward(x, p);
  Tensor lw = loss_weights(y.shape(), 8);
  ConvGrads g = conv2d_backward(x, p, lw);
  Tensor num_k = numeric_gradient(
      [&](const Tensor& kp) {
        return weighted_sum(conv2d_forward(x, {kp, 1, 1}), lw);
      },
      k);
  Tensor num_x = numeric_gradient(
      [&](const Tensor& xp) { return weighted_sum(conv2d_forward(xp, p), lw); },
      x);
  EXPECT_LT(max_rel_error(g.grad_k, num_k), 1e-5);
  EXPECT_LT(max_rel_error(g.grad_x, num_x), 1e-5);
}

TEST(ConvTest, RejectsBadShapes) {
  Tensor x({1, 2, 4, 4});
  Tensor k({3, 1, 3, 3});  // channel mismatch
  EXPECT_THROW(conv2d_forward(x, {k, 1, 0}), DimensionError);
}

TEST(MaxPoolTest, SingleWindow) {
  Tensor x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
  MaxPoolResult r = maxpool2x2_forward(x);
  EXPECT_EQ(r.out(0, 0, 0, 0), 4);
}

TEST(MaxPoolTest, ConstantImageTiesToFirstCell) {
  Tensor x({1, 1, 4, 4}, 2.5);
  MaxPoolResult r = maxpool2x2_forward(x);
  for (std::size_t i = 0; i < r.out.size(); ++i) EXPECT_EQ(r.out[i], 2.5);
  // grads route to the first cell of each window
  Tensor grad({1, 1, 2, 2}, 1.0);
  Tensor gx = maxpool2x2_backward(x.shape(), r.winners, grad);
  EXPECT_EQ(gx(0, 0, 0, 0), 1.0);
  EXPECT_EQ(gx(0, 0, 0, 1), 0.0);
  EXPECT_EQ(gx(0, 0, 1, 1), 0.0);
  EXPECT_EQ(gx(0, 0, 0, 2), 1.0);
  EXPECT_EQ(gx(0, 0, 2, 0), 1.0);
}

TEST(MaxPoolTest, OddDimsRejected) {
  Tensor x({1, 1, 3, 4});
  EXPECT_THROW(maxpool2x2_forward(x), DimensionError);
}

TEST(MaxPoolTest, GradientMatchesFiniteDifferences) {
  SeededRng rng(9);
  Tensor x = seeded_uniform(rng, {2, 2, 4, 4}, -1, 1);  // distinct values: off ties
  MaxPoolResult r = maxpool2x2_forward(x);
  Tensor lw = loss_weights(r.out.shape(), 10);
  Tensor g = maxpool2x2_backward(x.shape(), r.winners, lw);
  Tensor num = numeric_gradient(
      [&](const Tensor& xp) {
        return weighted_sum(maxpool2x2_forward(xp).out, lw);
      },
      x);
  EXPECT_LT(max_rel_error(g, num), 1e-6);
}

TEST(SoftmaxXentTest, UniformLogitsGiveLogK) {
  Tensor logits({4, 10}, 0.0);
  XentResult r = softmax_xent(logits, {0, 3, 7, 9});
  EXPECT_NEAR(r.loss, std::log(10.0), 1e-12);
}

TEST(SoftmaxXentTest, SaturatedTrueClass) {
  Tensor logits({1, 10}, 0.0);
  logits(0, 4) = 30.0;
  XentResult r = softmax_xent(logits, {4});
  EXPECT_LT(r.loss, 1e-9);
}

TEST(SoftmaxXentTest, LabelOutOfRange) {
  Tensor logits({1, 10}, 0.0);
  EXPECT_THROW(softmax_xent(logits, {10}), ArgumentError);
}

TEST(SoftmaxXentTest, GradMatchesFiniteDifferences) {
  SeededRng rng(11);
  Tensor logits = seeded_uniform(rng, {4, 10}, -2, 2);
  std::vector<std::size_t> labels = {1, 0, 9, 5};
  XentResult r = softmax_xent(logits, labels);
  Tensor num = numeric_gradient(
      [&](const Tensor& lp) { return softmax_xent(lp, labels).loss; }, logits);
  EXPECT_LT(max_rel_error(r.grad_logits, num), 1e-6);
}

TEST(SoftmaxXentTest, ShiftInvariantPerSample) {
  SeededRng rng(12);
  Tensor logits = seeded_uniform(rng, {3, 10}, -1, 1);
  std::vector<std::size_t> labels = {2, 4, 8};
  const double base = softmax_xent(logits, labels).loss;
  Tensor shifted = logits;
  for (std::size_t k = 0; k < 10; ++k) {
    shifted(1, k) += 7.25;
    shifted(2, k) -= 3.5;
  }
  EXPECT_NEAR(softmax_xent(shifted, labels).loss, base, 1e-12);
}
