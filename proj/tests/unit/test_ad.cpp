#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "beamgat/ad/ops.hpp"
#include "beamgat/errors.hpp"
#include "gradcheck.hpp"

using namespace beamgat;
using namespace beamgat::ad;

namespace {

using oracle::random_segments;
using oracle::random_tensor;

constexpr int kInstances = 20;
constexpr double kOpTol = 1e-5;

}  // namespace

TEST(Tensor, ShapeChecks) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  EXPECT_THROW(Tensor::matrix({{1, 2}, {3}}), ShapeError);
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_EQ(m.at(1, 0), 3.0);
  EXPECT_EQ(m.shape_string(), "[2,2]");
}

TEST(Ops, MatmulExamples) {
  Tape t;
  const Var a = t.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  const Var i = t.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  EXPECT_EQ(matmul(a, i).value(), a.value());
  const Var v = t.constant(Tensor::matrix({{5}, {7}}));
  EXPECT_EQ(matmul(i, v).value(), v.value());
  EXPECT_THROW(matmul(v, v), ShapeError);
}

TEST(Ops, LeakyReluExamples) {
  Tape t;
  const Var x = t.constant(Tensor::vector({-1, 0, 2}));
  const Tensor y = leaky_relu(x, 0.2).value();
  EXPECT_DOUBLE_EQ(y[0], -0.2);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_EQ(y[2], 2.0);
  EXPECT_EQ(leaky_relu(x, 1.0).value(), x.value());
}

TEST(Ops, SegmentSoftmaxExamples) {
  Tape t;
  const Segments one{make_index({0, 2})};
  const Tensor a = segment_softmax(t.constant(Tensor::vector({0, 0})), one).value();
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], 0.5);
  const Tensor s = segment_softmax(t.constant(Tensor::vector({42})), {make_index({0, 1})}).value();
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  const Tensor b = segment_softmax(t.constant(Tensor::vector({1, 2, 3})), {make_index({0, 3})}).value();
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(b[static_cast<std::size_t>(i)], std::exp(i + 1.0) / z, 1e-15);
  EXPECT_NEAR(b[0], 0.09003, 1e-5);
  EXPECT_NEAR(b[1], 0.24473, 1e-5);
  EXPECT_NEAR(b[2], 0.66524, 1e-5);
  EXPECT_THROW(segment_softmax(t.constant(Tensor::vector({1, 2})), {make_index({0, 0, 2})}), ConfigError);
}

TEST(Ops, SegmentSoftmaxShiftInvarianceAndNormalization) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < kInstances; ++trial) {
    const Segments seg = random_segments(6, 5, rng);
    Tensor logits = random_tensor({seg.total()}, rng);
    Tensor shifted = logits;
    std::uniform_real_distribution<double> c(-50, 50);
    for (std::size_t s = 0; s < seg.count(); ++s) {
      const double shift = c(rng);
      for (std::size_t e = seg.begin(s); e < seg.end(s); ++e) shifted[e] += shift;
    }
    Tape t;
    const Tensor a = segment_softmax(t.constant(logits), seg).value();
    const Tensor b = segment_softmax(t.constant(shifted), seg).value();
    for (std::size_t s = 0; s < seg.count(); ++s) {
      double total = 0;
      for (std::size_t e = seg.begin(s); e < seg.end(s); ++e) {
        total += a[e];
        EXPECT_NEAR(a[e], b[e], 1e-12);
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Ops, SegmentWeightedSumExamples) {
  Tape t;
  const Segments seg{make_index({0, 1, 2})};
  const Var values = t.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  const Tensor copy = segment_weighted_sum(values, t.constant(Tensor::vector({1, 1})), seg).value();
  EXPECT_EQ(copy, values.value());
  const Tensor avg = segment_weighted_sum(t.constant(Tensor::matrix({{2}, {4}})), t.constant(Tensor::vector({0.5, 0.5})),
                                          {make_index({0, 2})})
                         .value();
  EXPECT_DOUBLE_EQ(avg[0], 3.0);
}

TEST(Ops, LayerNormExamples) {
  Tape t;
  const Var gain = t.constant(Tensor::vector({1, 1}));
  const Var bias = t.constant(Tensor::vector({0, 0}));
  const Tensor c = layer_norm(t.constant(Tensor::matrix({{3, 3}})), gain, bias).value();
  EXPECT_EQ(c[0], 0.0);
  EXPECT_EQ(c[1], 0.0);
  const Tensor r = layer_norm(t.constant(Tensor::matrix({{-1, 1}})), gain, bias).value();
  EXPECT_NEAR(r[0], -1.0 / std::sqrt(1.0 + 1e-5), 1e-15);
  EXPECT_NEAR(r[1], 1.0, 1e-5);
}

TEST(Ops, LayerNormMomentsOfRows) {
  std::mt19937_64 rng(5);
  Tape t;
  Tensor x = random_tensor({10, 16}, rng);
  for (double& v : x.storage()) v *= 10.0;
  const Tensor y =
      layer_norm(t.constant(x), t.constant(Tensor({16}, 1.0)), t.constant(Tensor({16}, 0.0))).value();
  for (std::size_t i = 0; i < 10; ++i) {
    double m = 0, v = 0;
    for (std::size_t j = 0; j < 16; ++j) m += y.at(i, j);
    m /= 16;
    for (std::size_t j = 0; j < 16; ++j) v += (y.at(i, j) - m) * (y.at(i, j) - m);
    v /= 16;
    EXPECT_LE(std::abs(m), 1e-10);
    EXPECT_NEAR(v, 1.0, 1e-6);
  }
}

TEST(Ops, SmallExamples) {
  Tape t;
  const Var x = t.constant(Tensor::vector({1, 2, 3}));
  EXPECT_EQ(mse_loss(x, x).value()[0], 0.0);
  EXPECT_EQ(mse_loss(t.constant(Tensor::vector({0})), t.constant(Tensor::vector({2}))).value()[0], 4.0);
  EXPECT_EQ(sigmoid(t.constant(Tensor::scalar(0))).value()[0], 0.5);
  EXPECT_THROW(mse_loss(x, t.constant(Tensor::vector({1}))), ShapeError);
  EXPECT_THROW(add(x, t.constant(Tensor::vector({1}))), ShapeError);
}

TEST(Tape, SumGradientIsOnes) {
  Tape t;
  const Var w = t.parameter(Tensor::vector({0.3, -2, 5}));
  t.backward(sum(w));
  EXPECT_EQ(t.grad(w), Tensor::vector({1, 1, 1}));
}

TEST(Tape, LinearRegressionClosedForm) {
  // loss = mean((Xw - y)^2); gradient 2 X^T (Xw - y) / M.
  const Tensor X = Tensor::matrix({{1, 2}, {3, -1}});
  const Tensor w0 = Tensor::matrix({{0.5}, {-0.25}});
  const Tensor y = Tensor::matrix({{1}, {2}});
  Tape t;
  const Var w = t.parameter(w0);
  t.backward(mse_loss(matmul(t.constant(X), w), t.constant(y)));
  const double r0 = (1 * 0.5 + 2 * -0.25) - 1, r1 = (3 * 0.5 - 1 * -0.25) - 2;
  const Tensor g = t.grad(w);
  EXPECT_NEAR(g[0], 2 * (1 * r0 + 3 * r1) / 2, 1e-15);
  EXPECT_NEAR(g[1], 2 * (2 * r0 - 1 * r1) / 2, 1e-15);
}

TEST(Tape, ErrorsAndVisits) {
  Tape t;
  const Var w = t.parameter(Tensor::vector({1, 2}));
  const Var c = t.constant(Tensor::vector({3, 4}));
  const Var y = add(scale(w, 2.0), c);
  EXPECT_THROW(t.backward(y), ShapeError);
  const Var loss = sum(y);
  t.backward(loss);
  EXPECT_EQ(t.backward_visits(), 3u);  // scale, add, sum
  EXPECT_THROW(t.backward(loss), ConfigError);
  EXPECT_EQ(t.grad(c), Tensor::vector({0, 0}));
}

TEST(Tape, NonFiniteOutputRejected) {
  Tape t;
  const Var x = t.constant(Tensor::vector({1e308, 1e308}));
  EXPECT_THROW(scale(x, 10.0), NumericError);
}

TEST(Tape, AccumulationOrderIndependent) {
  // x used by many consumers: the gradient equals the sorted sum of contributions.
  std::mt19937_64 rng(9);
  const Tensor x0 = random_tensor({5}, rng);
  std::vector<double> factors;
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 12; ++i) factors.push_back(u(rng));
  Tape t;
  const Var x = t.parameter(x0);
  Var acc = scale(x, factors[0]);
  for (std::size_t i = 1; i < factors.size(); ++i) acc = add(acc, scale(x, factors[i]));
  t.backward(sum(acc));
  auto sorted = factors;
  std::sort(sorted.begin(), sorted.end());
  double expect = 0;
  for (double f : sorted) expect += f;
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(t.grad(x)[i], expect, 1e-12);
}

// -- Finite-difference suite: every differentiable op, 20 seeded instances --

class OpGradients : public ::testing::TestWithParam<int> {};

TEST_P(OpGradients, MatchCentralDifferences) {
  for (const auto& c : oracle::op_gradient_suite(GetParam())) EXPECT_LT(c.error, kOpTol) << c.op;
}

INSTANTIATE_TEST_SUITE_P(Seeded, OpGradients, ::testing::Range(0, kInstances));
