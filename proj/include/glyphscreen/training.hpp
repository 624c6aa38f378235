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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "json.hpp"

#include "glyphscreen/imageops.hpp"
#include "glyphscreen/nn.hpp"
#include "glyphscreen/optim.hpp"
#include "glyphscreen/repvgg.hpp"
#include "glyphscreen/rng.hpp"

// Loop plumbing shared by the self-supervised and supervised trainers.

namespace glyph {

using Json = nlohmann::ordered_json;

/// Receives one JSON object per finished epoch.
using MetricsSink = std::function<void(const Json&)>;

struct TrainConfig {
  StagePlan plan;
  int epochs = 30;
  int batch_size = 32;
  double base_lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  // augment.seed is ignored; each epoch derives its own.
  AugmentConfig augment;

  void validate() const {
    plan.validate();
    augment.validate();
    if (epochs < 1) throw ParameterError("training: epochs must be >= 1");
    if (batch_size < 2) throw ParameterError("training: batch_size must be >= 2 (batch normalization)");
    if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) throw ParameterError("training: base_lr must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("training: momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ParameterError("training: weight_decay must be >= 0");
  }

  SgdState sgd() const {
    SgdState s;
    s.momentum = momentum;
    s.weight_decay = weight_decay;
    s.base_lr = base_lr;
    s.batch_size = batch_size;
    return s;
  }
};

/// Seeded permutation of [0, n) for one epoch.
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "shuffle", static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

/// Consecutive slices of `order`. A trailing slice of one sample is dropped
/// because batch statistics are undefined for it.
inline std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> order, int batch_size) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    if (end - i < 2) break;
    out.emplace_back(order.begin() + i, order.begin() + end);
  }
  return out;
}

inline long steps_per_epoch(std::size_t n, int batch_size) {
  const long full = static_cast<long>(n / batch_size);
  const long rest = static_cast<long>(n % batch_size);
  return full + (rest >= 2 ? 1 : 0);
}

inline AugmentConfig epoch_augment(const TrainConfig& cfg, int epoch) {
  AugmentConfig a = cfg.augment;
  a.seed = derive_seed(cfg.seed, "augment", static_cast<std::uint64_t>(epoch));
  return a;
}

/// Deterministic inference-time preprocessing: equalize when the model was
/// trained on equalized views.
inline std::vector<GrayImage> prepare_for_inference(std::span<const GrayImage> images, bool equalize_input) {
  std::vector<GrayImage> out(images.begin(), images.end());
  if (equalize_input) {
    for (auto& img : out) img = equalize(img);
  }
  return out;
}

/// Unit-norm pooled features of `net`, one row per image, without building
/// a gradient graph.
template <class Net>
std::vector<std::vector<double>> embed_with(Net& net, std::span<const GrayImage> images, bool equalize_input) {
  if (images.empty()) return {};
  NoGradGuard no_grad;
  const auto prepared = prepare_for_inference(images, equalize_input);
  std::vector<std::vector<double>> out;
  constexpr std::size_t kChunk = 64;
  for (std::size_t i = 0; i < prepared.size(); i += kChunk) {
    const auto chunk = std::span<const GrayImage>(prepared).subspan(i, std::min(kChunk, prepared.size() - i));
    for (auto& r : rows(net.features(images_to_batch(chunk)))) out.push_back(normalized(std::move(r)));
  }
  return out;
}

inline std::vector<GrayImage> gather(std::span<const GrayImage> images, std::span<const std::size_t> idx) {
  std::vector<GrayImage> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(images[i]);
  return out;
}

}  // namespace glyph
