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

#include <array>
#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glyphscreen/checkpoint.hpp"
#include "glyphscreen/nn.hpp"
#include "glyphscreen/ops.hpp"
#include "glyphscreen/optim.hpp"
#include "glyphscreen/repvgg.hpp"
#include "glyphscreen/training.hpp"

namespace glyph {

// ---------------------------------------------------------------------------
// Residual backbone

/// conv3x3-BN-ReLU, conv3x3-BN, plus a shortcut (identity, or 1x1 conv + BN
/// when the shape changes), then ReLU.
class ResidualBlock {
 public:
  Tensor conv1, conv2;
  BatchNormParams bn1, bn2;
  std::optional<Tensor> shortcut;
  std::optional<BatchNormParams> shortcut_bn;
  int stride = 1;

  static ResidualBlock create(int in, int out, int stride, Rng& rng) {
    if (in < 1 || out < 1 || stride < 1) throw ParameterError("ResidualBlock: invalid geometry");
    ResidualBlock b;
    b.conv1 = kaiming_tensor({out, in, 3, 3}, rng);
    b.bn1 = BatchNormParams::identity(out);
    b.conv2 = kaiming_tensor({out, out, 3, 3}, rng);
    b.bn2 = BatchNormParams::identity(out);
    if (stride != 1 || in != out) {
      b.shortcut = kaiming_tensor({out, in, 1, 1}, rng);
      b.shortcut_bn = BatchNormParams::identity(out);
    }
    b.stride = stride;
    return b;
  }

  Tensor forward(const Tensor& x) {
    Tensor y = relu(batchnorm(conv2d(x, conv1, Tensor{}, stride, 1), bn1));
    y = batchnorm(conv2d(y, conv2, Tensor{}, 1, 1), bn2);
    const Tensor skip = shortcut ? batchnorm(conv2d(x, *shortcut, Tensor{}, stride, 0), *shortcut_bn) : x;
    return relu(add(y, skip));
  }

  void set_mode(BnMode m) {
    bn1.mode = m;
    bn2.mode = m;
    if (shortcut_bn) shortcut_bn->mode = m;
  }

  void collect(std::vector<Tensor>& out) const {
    out.push_back(conv1);
    glyph::collect(bn1, out);
    out.push_back(conv2);
    glyph::collect(bn2, out);
    if (shortcut) {
      out.push_back(*shortcut);
      glyph::collect(*shortcut_bn, out);
    }
  }

  void save(Checkpoint& ck, const std::string& p) const {
    ck.put(p + ".conv1", conv1);
    save_bn(ck, p + ".bn1", bn1);
    ck.put(p + ".conv2", conv2);
    save_bn(ck, p + ".bn2", bn2);
    if (shortcut) {
      ck.put(p + ".shortcut", *shortcut);
      save_bn(ck, p + ".shortcut_bn", *shortcut_bn);
    }
  }

  void load(const Checkpoint& ck, const std::string& p) {
    ck.load_into(p + ".conv1", conv1);
    load_bn(ck, p + ".bn1", bn1);
    ck.load_into(p + ".conv2", conv2);
    load_bn(ck, p + ".bn2", bn2);
    if (shortcut) {
      ck.load_into(p + ".shortcut", *shortcut);
      load_bn(ck, p + ".shortcut_bn", *shortcut_bn);
    }
  }
};

class ResidualBackbone {
 public:
  StagePlan plan;
  std::vector<ResidualBlock> blocks;

  static ResidualBackbone create(const StagePlan& plan, Rng& rng) {
    plan.validate();
    ResidualBackbone net;
    net.plan = plan;
    int in = plan.in_channels;
    for (std::size_t s = 0; s < plan.widths.size(); ++s) {
      for (int d = 0; d < plan.depths[s]; ++d) {
        net.blocks.push_back(ResidualBlock::create(in, plan.widths[s], d == 0 ? 2 : 1, rng));
        in = plan.widths[s];
      }
    }
    return net;
  }

  Tensor features(const Tensor& x) {
    Tensor y = x;
    for (auto& b : blocks) y = b.forward(y);
    return adaptive_avg_pool(y);
  }

  int feature_dim() const { return plan.feature_dim(); }
  BnMode mode() const { return blocks.front().bn1.mode; }

  void set_mode(BnMode m) {
    for (auto& b : blocks) b.set_mode(m);
  }
  void collect(std::vector<Tensor>& out) const {
    for (const auto& b : blocks) b.collect(out);
  }
  void save(Checkpoint& ck, const std::string& p) const {
    plan.save(ck, p + ".plan");
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].save(ck, p + ".block" + std::to_string(i));
  }
  void load(const Checkpoint& ck, const std::string& p) {
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].load(ck, p + ".block" + std::to_string(i));
  }
};

// ---------------------------------------------------------------------------
// Heads

/// Three equal-width linear layers, each followed by BN; ReLU after the
/// first two only.
struct ProjectionMLP {
  std::array<Linear, 3> fc;
  std::array<BatchNormParams, 3> bn;

  static ProjectionMLP create(int in, int width, Rng& rng) {
    if (in < 1 || width < 1) throw ParameterError("ProjectionMLP: widths must be >= 1");
    ProjectionMLP m;
    for (int i = 0; i < 3; ++i) {
      m.fc[i] = Linear::create(i == 0 ? in : width, width, false, rng);
      m.bn[i] = BatchNormParams::identity(width);
    }
    return m;
  }

  int width() const { return fc[2].out_features(); }

  Tensor forward(const Tensor& x) {
    Tensor y = x;
    for (int i = 0; i < 3; ++i) {
      y = batchnorm(fc[i].forward(y), bn[i]);
      if (i < 2) y = relu(y);
    }
    return y;
  }

  void set_mode(BnMode m) {
    for (auto& b : bn) b.mode = m;
  }
  void collect(std::vector<Tensor>& out) const {
    for (int i = 0; i < 3; ++i) {
      fc[i].collect(out);
      glyph::collect(bn[i], out);
    }
  }
  void save(Checkpoint& ck, const std::string& p) const {
    for (int i = 0; i < 3; ++i) {
      fc[i].save(ck, p + ".fc" + std::to_string(i));
      save_bn(ck, p + ".bn" + std::to_string(i), bn[i]);
    }
  }
  void load(const Checkpoint& ck, const std::string& p) {
    for (int i = 0; i < 3; ++i) {
      fc[i].load(ck, p + ".fc" + std::to_string(i));
      load_bn(ck, p + ".bn" + std::to_string(i), bn[i]);
    }
  }
};

/// Bottleneck: width -> width/4 (BN, ReLU) -> width.
struct PredictionMLP {
  Linear fc1;
  BatchNormParams bn1;
  Linear fc2;
  // Replaces the predictor by the identity map; used to pin p == z.
  bool bypass = false;

  static PredictionMLP create(int width, Rng& rng) {
    if (width < 4) throw ParameterError("PredictionMLP: width must be >= 4");
    PredictionMLP m;
    const int hidden = width / 4;
    m.fc1 = Linear::create(width, hidden, false, rng);
    m.bn1 = BatchNormParams::identity(hidden);
    m.fc2 = Linear::create(hidden, width, true, rng);
    return m;
  }

  Tensor forward(const Tensor& z) {
    if (bypass) return z;
    return fc2.forward(relu(batchnorm(fc1.forward(z), bn1)));
  }

  void set_mode(BnMode m) { bn1.mode = m; }
  void collect(std::vector<Tensor>& out) const {
    fc1.collect(out);
    glyph::collect(bn1, out);
    fc2.collect(out);
  }
  void save(Checkpoint& ck, const std::string& p) const {
    fc1.save(ck, p + ".fc1");
    save_bn(ck, p + ".bn1", bn1);
    fc2.save(ck, p + ".fc2");
  }
  void load(const Checkpoint& ck, const std::string& p) {
    fc1.load(ck, p + ".fc1");
    load_bn(ck, p + ".bn1", bn1);
    fc2.load(ck, p + ".fc2");
  }
};

// ---------------------------------------------------------------------------
// Model

struct SimSiamModel {
  ResidualBackbone backbone;
  ProjectionMLP projector;
  PredictionMLP predictor;
  bool equalize_input = true;

  static SimSiamModel create(const StagePlan& plan, int projection_width, Rng& rng) {
    SimSiamModel m;
    m.backbone = ResidualBackbone::create(plan, rng);
    m.projector = ProjectionMLP::create(plan.feature_dim(), projection_width, rng);
    m.predictor = PredictionMLP::create(projection_width, rng);
    return m;
  }

  void set_mode(BnMode m) {
    backbone.set_mode(m);
    projector.set_mode(m);
    predictor.set_mode(m);
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    backbone.collect(out);
    projector.collect(out);
    predictor.collect(out);
    return out;
  }

  void save(Checkpoint& ck) const {
    ck.put_text("meta.kind", "simsiam");
    ck.put_ints("meta.equalize", {equalize_input ? 1 : 0});
    ck.put_ints("meta.projection_width", {projector.width()});
    backbone.save(ck, "backbone");
    projector.save(ck, "projector");
    predictor.save(ck, "predictor");
  }
};

// ---------------------------------------------------------------------------
// Loss

/// D(p, z) = -cos(p, z), averaged over rows for [N, d] inputs. The caller
/// detaches z.
inline Tensor negative_cosine(const Tensor& p, const Tensor& z) {
  return scale(mean(cosine_similarity(p, z)), -1.0);
}

struct LossOptions {
  bool stop_gradient = true;
  // Detaches p as well; with stop_gradient on, nothing upstream receives a
  // gradient.
  bool detach_predictions = false;
};

struct SimSiamForward {
  Tensor z1, z2, p1, p2, loss;
};

inline SimSiamForward simsiam_forward(SimSiamModel& m, const Tensor& x1, const Tensor& x2,
                                      const LossOptions& opt = {}) {
  if (x1.shape() != x2.shape()) {
    throw DimensionError("simsiam_loss: view batches differ, " + shape_str(x1.shape()) + " vs " +
                         shape_str(x2.shape()));
  }
  SimSiamForward f;
  f.z1 = m.projector.forward(m.backbone.features(x1));
  f.z2 = m.projector.forward(m.backbone.features(x2));
  f.p1 = m.predictor.forward(f.z1);
  f.p2 = m.predictor.forward(f.z2);
  auto target = [&](const Tensor& z) { return opt.stop_gradient ? stop_gradient(z) : z; };
  auto pred = [&](const Tensor& p) { return opt.detach_predictions ? stop_gradient(p) : p; };
  f.loss = add(scale(negative_cosine(pred(f.p1), target(f.z2)), 0.5),
               scale(negative_cosine(pred(f.p2), target(f.z1)), 0.5));
  return f;
}

inline Tensor simsiam_loss(SimSiamModel& m, const Tensor& x1, const Tensor& x2, const LossOptions& opt = {}) {
  return simsiam_forward(m, x1, x2, opt).loss;
}

inline Tensor simsiam_loss(SimSiamModel& m, std::span<const GrayImage> view1, std::span<const GrayImage> view2) {
  if (view1.size() != view2.size()) {
    throw DimensionError("simsiam_loss: view batches hold " + std::to_string(view1.size()) + " and " +
                         std::to_string(view2.size()) + " images");
  }
  return simsiam_loss(m, images_to_batch(view1), images_to_batch(view2));
}

/// Collapse indicator: per-dimension standard deviation of the L2-normalized
/// rows of z, averaged over dimensions. Near 0 means collapse; about
/// 1/sqrt(d) for well-spread outputs.
inline double embedding_std(const Tensor& z) {
  const auto r = rows(z);
  if (r.empty()) return 0.0;
  const std::size_t d = r.front().size();
  std::vector<std::vector<double>> n;
  n.reserve(r.size());
  for (const auto& row : r) n.push_back(normalized(row));
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mu = 0.0;
    for (const auto& row : n) mu += row[j];
    mu /= static_cast<double>(n.size());
    double var = 0.0;
    for (const auto& row : n) var += (row[j] - mu) * (row[j] - mu);
    acc += std::sqrt(var / static_cast<double>(n.size()));
  }
  return acc / static_cast<double>(d);
}

// ---------------------------------------------------------------------------
// Training

struct SimSiamConfig : TrainConfig {
  int projection_width = 128;
};

struct SimSiamEpoch {
  int epoch = 0;
  double mean_loss = 0.0;
  double embed_std = 0.0;
  double lr = 0.0;

  Json to_json() const { return Json{{"epoch", epoch}, {"mean_loss", mean_loss}, {"embed_std", embed_std}, {"lr", lr}}; }
};

struct SimSiamTraining {
  SimSiamModel model;
  std::vector<SimSiamEpoch> metrics;
};

inline SimSiamTraining train_simsiam(std::span<const GrayImage> images, const SimSiamConfig& cfg,
                                     const MetricsSink& sink = {}) {
  cfg.validate();
  if (images.size() < 2) throw DataError("train_simsiam: need at least 2 images, got " + std::to_string(images.size()));
  Rng init = make_rng(cfg.seed, "simsiam.init");
  SimSiamTraining out{SimSiamModel::create(cfg.plan, cfg.projection_width, init), {}};
  SimSiamModel& model = out.model;
  model.equalize_input = cfg.augment.apply_equalization;
  model.set_mode(BnMode::train);

  std::vector<Tensor> params = model.parameters();
  SgdState sgd = cfg.sgd();
  const long per_epoch = steps_per_epoch(images.size(), cfg.batch_size);
  const long total = per_epoch * cfg.epochs;
  long step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const AugmentConfig aug = epoch_augment(cfg, epoch);
    const auto order = epoch_order(images.size(), cfg.seed, epoch);
    SimSiamEpoch m{epoch, 0.0, 0.0, cosine_lr(step, total, sgd)};
    long batches = 0;
    for (const auto& batch : make_batches(order, cfg.batch_size)) {
      std::vector<GrayImage> v1, v2;
      for (auto i : batch) {
        auto [a, b] = augment_pair(images[i], aug, i);
        v1.push_back(std::move(a));
        v2.push_back(std::move(b));
      }
      zero_grad(params);
      const auto f = simsiam_forward(model, images_to_batch(v1), images_to_batch(v2));
      const double loss = f.loss.item();
      if (!std::isfinite(loss)) {
        throw NumericError("train_simsiam: non-finite loss at epoch " + std::to_string(epoch));
      }
      backward(f.loss);
      sgd_step(params, sgd, cosine_lr(step, total, sgd));
      ++step;
      m.mean_loss += loss;
      m.embed_std += embedding_std(f.z1);
      ++batches;
    }
    m.mean_loss /= static_cast<double>(batches);
    m.embed_std /= static_cast<double>(batches);
    out.metrics.push_back(m);
    if (sink) sink(m.to_json());
  }
  model.set_mode(BnMode::eval);
  return out;
}

// ---------------------------------------------------------------------------
// Inference and persistence

/// Unit-norm pooled backbone features (pre-projector) in eval mode, one row
/// per image. The model's BN mode is restored afterwards.
inline std::vector<std::vector<double>> embed_batch(SimSiamModel& model, std::span<const GrayImage> images) {
  if (images.empty()) return {};
  const BnMode before = model.backbone.mode();
  model.backbone.set_mode(BnMode::eval);
  auto out = embed_with(model.backbone, images, model.equalize_input);
  model.backbone.set_mode(before);
  return out;
}

inline std::vector<double> embed(SimSiamModel& model, const GrayImage& img) {
  return embed_batch(model, std::span<const GrayImage>(&img, 1)).front();
}

inline void save_encoder(const SimSiamModel& model, const std::filesystem::path& path) {
  Checkpoint ck;
  model.save(ck);
  ck.save(path);
}

inline SimSiamModel encoder_from_checkpoint(const Checkpoint& ck) {
  require_kind(ck, "simsiam");
  const StagePlan plan = StagePlan::load(ck, "backbone.plan");
  const int width = static_cast<int>(ck.ints("meta.projection_width").at(0));
  Rng scratch(0);
  SimSiamModel model = SimSiamModel::create(plan, width, scratch);
  model.equalize_input = ck.ints("meta.equalize").at(0) != 0;
  Checkpoint expected;
  model.save(expected);
  audit_entries(ck, expected, "simsiam encoder");
  model.backbone.load(ck, "backbone");
  model.projector.load(ck, "projector");
  model.predictor.load(ck, "predictor");
  model.set_mode(BnMode::eval);
  return model;
}

inline SimSiamModel load_encoder(const std::filesystem::path& path) {
  const Checkpoint ck = Checkpoint::load(path);
  try {
    return encoder_from_checkpoint(ck);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace glyph
