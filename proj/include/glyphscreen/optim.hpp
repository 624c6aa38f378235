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

#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "glyphscreen/error.hpp"
#include "glyphscreen/tensor.hpp"

namespace glyph {

/// SGD with heavy-ball momentum and L2 weight decay folded into the velocity.
struct SgdState {
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double base_lr = 0.05;
  int batch_size = 256;
  std::vector<std::vector<double>> velocity;

  /// Linear scaling rule: base_lr * batch_size / 256.
  double scaled_lr() const { return base_lr * batch_size / 256.0; }
};

/// v <- momentum*v + grad + weight_decay*param;  param <- param - lr_t*v
inline void sgd_step(std::span<Tensor> params, SgdState& state, double lr_t) {
  if (state.velocity.empty()) {
    state.velocity.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) state.velocity[i].assign(params[i].numel(), 0.0);
  }
  if (state.velocity.size() != params.size()) {
    throw NumericError("sgd_step: optimizer state tracks " + std::to_string(state.velocity.size()) +
                       " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw NumericError("sgd_step: parameter " + std::to_string(i) + " " +
                         shape_str(params[i].shape()) + " has no gradient");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_values();
    const auto g = params[i].grad();
    auto& v = state.velocity[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = state.momentum * v[k] + g[k] + state.weight_decay * w[k];
      w[k] -= lr_t * v[k];
    }
  }
}

inline void zero_grad(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

/// Half-cosine decay from the scaled base rate at t = 0 to zero at t = T.
inline double cosine_lr(long step, long total, const SgdState& state) {
  if (total < 1) throw ParameterError("cosine_lr: total steps must be >= 1");
  if (step < 0 || step > total) {
    throw ParameterError("cosine_lr: step " + std::to_string(step) + " outside [0, " +
                         std::to_string(total) + "]");
  }
  const double progress = static_cast<double>(step) / static_cast<double>(total);
  return state.scaled_lr() * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace glyph
