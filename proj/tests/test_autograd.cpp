// Copyright 2026 The debias-bench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "debias/autograd.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "debias/error.hpp"

namespace debias::ad {
namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(r, c);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

TEST(Tensor, ShapeChecked) {
  EXPECT_THROW(Tensor(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  const Tensor t(2, 3, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_TRUE(t.all_finite());
}

TEST(Ops, MatmulForward) {
  const Value a = Value::constant(Tensor(2, 2, {1, 2, 3, 4}));
  const Value b = Value::constant(Tensor(2, 1, {5, 6}));
  EXPECT_EQ(matmul(a, b).data(), Tensor(2, 1, {17, 39}));
  EXPECT_THROW(matmul(b, b), ShapeError);
}

TEST(Ops, SoftmaxRowsNormalizedAndShiftInvariant) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(4, 5, rng, -30, 30);
  const Tensor p = softmax_rows(Value::constant(x)).data();
  Tensor shifted = x;
  for (auto& v : shifted.values()) v += 1000.0;
  const Tensor q = softmax_rows(Value::constant(shifted)).data();
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
      s += p(r, c);
      EXPECT_NEAR(p(r, c), q(r, c), 1e-12);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Ops, BroadcastRules) {
  const Value a = Value::constant(Tensor(2, 3, 1.0));
  const Value row = Value::constant(Tensor(1, 3, {1, 2, 3}));
  const Value col = Value::constant(Tensor(2, 1, {10, 20}));
  EXPECT_EQ(add(a, row).data(), Tensor(2, 3, {2, 3, 4, 2, 3, 4}));
  EXPECT_EQ(mul(a, col).data(), Tensor(2, 3, {10, 10, 10, 20, 20, 20}));
  EXPECT_THROW(add(a, Value::constant(Tensor(3, 2))), ShapeError);
}

TEST(Ops, DomainAndShapeErrors) {
  EXPECT_THROW(log(Value::constant(Tensor(1, 2, {1.0, 0.0}))), DomainError);
  EXPECT_THROW(pow(Value::constant(Tensor(1, 1, -1.0)), 0.5), DomainError);
  EXPECT_THROW(Value::constant(Tensor(1, 2)).item(), ShapeError);
  EXPECT_THROW(Value::parameter(Tensor(2, 2)).backward(), ShapeError);
  EXPECT_THROW(gather_rows(Value::constant(Tensor(2, 2)), std::vector<std::size_t>{2}), ShapeError);
}

TEST(Ops, BceWithLogitsIsStable) {
  const Tensor t(1, 3, {1.0, 0.0, 0.5});
  const Value z = Value::constant(Tensor(1, 3, {800.0, -800.0, 0.0}));
  const Tensor l = bce_with_logits(z, t).data();
  EXPECT_NEAR(l(0, 0), 0.0, 1e-300);
  EXPECT_NEAR(l(0, 1), 0.0, 1e-300);
  EXPECT_NEAR(l(0, 2), std::log(2.0), 1e-15);
}

TEST(Backward, AnalyticGradientOfQuadratic) {
  // f(w) = sum((x w)^2) => df/dw = 2 x^T x w.
  const Value x = Value::constant(Tensor(2, 2, {1, 2, 3, 4}));
  const Value w = Value::parameter(Tensor(2, 1, {0.5, -1}));
  sum(mul(matmul(x, w), matmul(x, w))).backward();
  // x w = [-1.5, -2.5]; 2 x^T (x w) = 2 [1*-1.5 + 3*-2.5, 2*-1.5 + 4*-2.5] = [-18, -26]
  EXPECT_EQ(w.grad(), Tensor(2, 1, {-18, -26}));
}

TEST(Backward, ComposedPrimitivesPassGradCheck) {
  std::mt19937_64 rng(3);
  const Value x = Value::constant(random_tensor(5, 4, rng));
  const Value w = Value::parameter(random_tensor(4, 3, rng));
  const Value b = Value::parameter(random_tensor(1, 3, rng));
  const Value v = Value::parameter(random_tensor(3, 2, rng));
  const Tensor targets = random_tensor(5, 2, rng, 0.0, 1.0);
  const std::vector<std::size_t> rows{4, 0, 2, 2};
  auto loss = [&] {
    const Value h = relu(affine(x, w, b));
    const Value s = sigmoid(matmul(h, v));
    const Value p = softmax_rows(concat_cols(s, transpose(transpose(h))));
    const Value part = slice_cols(p, 1, 4);
    const Value logp = log(clamp(part, 1e-6, 1.0));
    const Value g = gather_rows(mul(logp, row_sum(part)), rows);
    const Value sq = squared_l2(pow(add_scalar(s, 0.1), 1.5));
    return add(add(scale(mean(g), -1.0), sq), mean(bce_with_logits(matmul(h, v), targets)));
  };
  const std::vector<Value> params{w, b, v};
  EXPECT_LE(grad_check(loss, params), 1e-6);
}

TEST(Backward, GradReverseNegatesAndScales) {
  const Value w = Value::parameter(Tensor(1, 2, {1.0, -2.0}));
  sum(grad_reverse(scale(w, 3.0), 0.5)).backward();
  EXPECT_EQ(w.grad(), Tensor(1, 2, {-1.5, -1.5}));
  EXPECT_EQ(grad_reverse(w, 0.5).data(), w.data());

  const Value z = Value::parameter(Tensor(1, 2, {1.0, -2.0}));
  sum(grad_reverse(z, 0.0)).backward();
  EXPECT_EQ(z.grad(), Tensor(1, 2, {0.0, 0.0}));
}

TEST(Backward, DetachBlocksGradient) {
  const Value w = Value::parameter(Tensor(1, 1, 2.0));
  const Value y = mul(w, detach(w));  // d/dw = detach(w) = 2
  y.backward();
  EXPECT_DOUBLE_EQ(w.grad()(0, 0), 2.0);
}

TEST(GradCheck, DetachedQuantitiesStayFrozen) {
  // loss = w * stop(w^2): the applied gradient is w^2, which the check must
  // accept; without freezing, finite differences would see 3 w^2.
  const Value w = Value::parameter(Tensor(1, 1, 1.3));
  auto loss = [&] { return sum(mul(w, detach(mul(w, w)))); };
  EXPECT_LE(grad_check(loss, std::vector<Value>{w}), 1e-8);
}

TEST(GradCheck, DetectsWrongGradient) {
  // Analytic graph descends w^2, objective is w^3: the check must fail.
  const Value w = Value::parameter(Tensor(1, 1, 1.5));
  const double err = grad_check([&] { return sum(mul(w, w)); },
                                [&] { const double v = w.data()(0, 0); return v * v * v; },
                                std::vector<Value>{w});
  EXPECT_GT(err, 0.1);
}

TEST(GradCheck, RejectsBadEps) {
  const Value w = Value::parameter(Tensor(1, 1, 1.0));
  EXPECT_THROW(grad_check([&] { return sum(w); }, std::vector<Value>{w}, 1.0), ConfigError);
}

TEST(Reductions, BitReproducible) {
  std::mt19937_64 rng(11);
  const Tensor t = random_tensor(50, 40, rng);
  const double a = sum(Value::constant(t)).item();
  const double b = sum(Value::constant(t)).item();
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace debias::ad
