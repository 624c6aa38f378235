/* Copyright (c) 2026 The glyphscreen Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <gtest/gtest.h>

#include "glyphscreen/optim.hpp"

namespace glyph {
namespace {

void set_grad(Tensor& p, double g) {
  auto buf = p.node().grad_buffer();
  std::fill(buf.begin(), buf.end(), g);
}

TEST(Sgd, PlainStepSubtractsGradient) {
  std::vector<Tensor> params{Tensor::from({2}, {1.0, -3.0}, true)};
  set_grad(params[0], 0.25);
  SgdState s;
  s.momentum = 0.0;
  s.weight_decay = 0.0;
  sgd_step(params, s, 1.0);
  EXPECT_EQ(params[0].values()[0], 0.75);
  EXPECT_EQ(params[0].values()[1], -3.25);
}

TEST(Sgd, MomentumRecursion) {
  const double lr = 0.1, g = 0.5;
  std::vector<Tensor> params{Tensor::from({1}, {2.0}, true)};
  SgdState s;
  s.weight_decay = 0.0;
  set_grad(params[0], g);
  sgd_step(params, s, lr);
  const double after_first = params[0].values()[0];
  sgd_step(params, s, lr);
  EXPECT_NEAR(after_first - params[0].values()[0], lr * 1.9 * g, 1e-15);
}

TEST(Sgd, PureWeightDecay) {
  std::vector<Tensor> params{Tensor::from({1}, {4.0}, true)};
  set_grad(params[0], 0.0);
  SgdState s;
  sgd_step(params, s, 0.5);
  EXPECT_DOUBLE_EQ(params[0].values()[0], 4.0 * (1 - 0.5 * 1e-4));
}

TEST(Sgd, MissingGradientIsAnError) {
  std::vector<Tensor> params{Tensor::from({1}, {4.0}, true)};
  SgdState s;
  EXPECT_THROW(sgd_step(params, s, 0.1), NumericError);
}

TEST(CosineLr, Endpoints) {
  SgdState s;  // base 0.05, batch 256
  EXPECT_EQ(cosine_lr(0, 100, s), 0.05);
  EXPECT_EQ(cosine_lr(100, 100, s), 0.0);
  EXPECT_EQ(cosine_lr(50, 100, s), 0.025);
  s.batch_size = 32;
  EXPECT_EQ(cosine_lr(0, 10, s), 0.05 * 32 / 256);
  EXPECT_THROW(cosine_lr(11, 10, s), ParameterError);
  EXPECT_THROW(cosine_lr(0, 0, s), ParameterError);
}

TEST(CosineLr, NonIncreasing) {
  SgdState s;
  for (long total : {1L, 7L, 100L, 1000L}) {
    double prev = cosine_lr(0, total, s);
    for (long t = 1; t <= total; ++t) {
      const double cur = cosine_lr(t, total, s);
      EXPECT_LE(cur, prev);
      prev = cur;
    }
  }
}

}  // namespace
}  // namespace glyph
