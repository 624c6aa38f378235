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
#include <span>
#include <string>
#include <vector>

#include "glyphscreen/checkpoint.hpp"
#include "glyphscreen/imageops.hpp"
#include "glyphscreen/ops.hpp"
#include "glyphscreen/rng.hpp"

// Small building blocks shared by the two networks.

namespace glyph {

/// He-normal initialized trainable tensor; fan_in is the product of all
/// dimensions but the first.
inline Tensor kaiming_tensor(const Shape& shape, Rng& rng) {
  const std::size_t n = shape_numel(shape);
  const double fan_in = static_cast<double>(n) / shape.at(0);
  const double stddev = std::sqrt(2.0 / fan_in);
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng, 0.0, stddev);
  return Tensor::from(shape, std::move(v), true);
}

struct Linear {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out], may be undefined

  static Linear create(int in, int out, bool with_bias, Rng& rng) {
    Linear l;
    l.weight = kaiming_tensor({out, in}, rng);
    if (with_bias) {
      // Uniform in +-1/sqrt(fan_in), the usual default for dense layers.
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      std::vector<double> b(out);
      for (auto& v : b) v = uniform(rng, -bound, bound);
      l.bias = Tensor::from({out}, std::move(b), true);
    }
    return l;
  }

  Tensor forward(const Tensor& x) const { return linear(x, weight, bias); }
  int in_features() const { return weight.dim(1); }
  int out_features() const { return weight.dim(0); }

  void collect(std::vector<Tensor>& out) const {
    out.push_back(weight);
    if (bias.defined()) out.push_back(bias);
  }
  void save(Checkpoint& ck, const std::string& prefix) const {
    ck.put(prefix + ".weight", weight);
    if (bias.defined()) ck.put(prefix + ".bias", bias);
  }
  void load(const Checkpoint& ck, const std::string& prefix) {
    ck.load_into(prefix + ".weight", weight);
    if (bias.defined()) ck.load_into(prefix + ".bias", bias);
  }
};

inline void collect(const BatchNormParams& bn, std::vector<Tensor>& out) {
  out.push_back(bn.gamma);
  out.push_back(bn.beta);
}

inline void save_bn(Checkpoint& ck, const std::string& prefix, const BatchNormParams& bn) {
  ck.put(prefix + ".gamma", bn.gamma);
  ck.put(prefix + ".beta", bn.beta);
  ck.put(prefix + ".running_mean", {bn.channels()}, bn.running_mean);
  ck.put(prefix + ".running_var", {bn.channels()}, bn.running_var);
}

inline void load_bn(const Checkpoint& ck, const std::string& prefix, BatchNormParams& bn) {
  ck.load_into(prefix + ".gamma", bn.gamma);
  ck.load_into(prefix + ".beta", bn.beta);
  ck.load_into(prefix + ".running_mean", bn.running_mean);
  ck.load_into(prefix + ".running_var", bn.running_var);
}

/// Stacks images into a [N, 1, H, W] batch. Intensities are inverted and
/// scaled to [0, 1] so that strokes carry mass and zero padding matches the
/// light background.
inline Tensor images_to_batch(std::span<const GrayImage> images) {
  if (images.empty()) throw DimensionError("images_to_batch: empty batch");
  const int w = images.front().width();
  const int h = images.front().height();
  std::vector<double> v;
  v.reserve(images.size() * static_cast<std::size_t>(w) * h);
  for (const auto& img : images) {
    if (img.width() != w || img.height() != h) {
      throw DimensionError("images_to_batch: mixed image sizes in one batch");
    }
    for (auto p : img.pixels()) v.push_back(static_cast<double>(kMaxLevel - p) / kMaxLevel);
  }
  return Tensor::from({static_cast<int>(images.size()), 1, h, w}, std::move(v));
}

/// Values of an [N, F] tensor as N separate rows.
inline std::vector<std::vector<double>> rows(const Tensor& t) {
  detail::require_rank(t, 2, "rows", "input");
  std::vector<std::vector<double>> out(t.dim(0));
  const auto f = static_cast<std::size_t>(t.dim(1));
  for (std::size_t r = 0; r < out.size(); ++r) {
    out[r].assign(t.values().begin() + r * f, t.values().begin() + (r + 1) * f);
  }
  return out;
}

/// Unit-norm copy; rejects the zero vector.
inline std::vector<double> normalized(std::vector<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (!(sq > 0.0)) throw NumericError("embedding: zero feature vector");
  const double n = std::sqrt(sq);
  for (auto& x : v) x /= n;
  return v;
}

}  // namespace glyph
