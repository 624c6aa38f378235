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
#include <filesystem>
#include <set>
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

struct LabeledDataset {
  std::vector<std::string> ids;
  std::vector<GrayImage> images;
  std::vector<int> labels;
  int num_classes = 0;
  std::string split = "train";

  std::size_t size() const { return images.size(); }

  void validate() const {
    if (ids.size() != images.size() || labels.size() != images.size()) {
      throw DataError("dataset: ids, images and labels differ in length");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i].empty()) throw DataError("dataset: empty id at record " + std::to_string(i));
      if (!seen.insert(ids[i]).second) throw DataError("dataset: duplicate id '" + ids[i] + "'");
      if (labels[i] < 0 || labels[i] >= num_classes) {
        throw DataError("dataset: label " + std::to_string(labels[i]) + " of '" + ids[i] + "' outside [0, " +
                        std::to_string(num_classes) + ")");
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Loss

/// Row-wise softmax of [N, C] values, max-subtracted.
inline std::vector<double> softmax_rows(std::span<const double> logits, int n, int c) {
  std::vector<double> out(logits.begin(), logits.end());
  for (int r = 0; r < n; ++r) {
    double* row = out.data() + static_cast<std::size_t>(r) * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += (row[j] = std::exp(row[j] - mx));
    for (int j = 0; j < c; ++j) row[j] /= z;
  }
  return out;
}

/// Mean over the batch of -log softmax(logits)[label].
inline Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  detail::require_rank(logits, 2, "cross_entropy", "logits");
  const int n = logits.dim(0);
  const int c = logits.dim(1);
  if (static_cast<int>(labels.size()) != n) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                         " rows");
  }
  for (int r = 0; r < n; ++r) {
    if (labels[r] < 0 || labels[r] >= c) {
      throw DataError("cross_entropy: label " + std::to_string(labels[r]) + " in row " + std::to_string(r) +
                      " outside [0, " + std::to_string(c) + ")");
    }
  }
  double total = 0.0;
  for (int r = 0; r < n; ++r) {
    const double* row = logits.values().data() + static_cast<std::size_t>(r) * c;
    const int top = static_cast<int>(std::max_element(row, row + c) - row);
    const double mx = row[top];
    double rest = 0.0;
    for (int j = 0; j < c; ++j) {
      if (j != top) rest += std::exp(row[j] - mx);
    }
    // log1p keeps precision when one logit dominates; log(1 + rest) is exact
    // on uniform rows, where 1 + rest == C.
    const double lse = rest < 0.5 ? std::log1p(rest) : std::log(1.0 + rest);
    total += lse - (row[labels[r]] - mx);
  }
  NodePtr ln = logits.node_ptr();
  std::vector<int> lab(labels.begin(), labels.end());
  return make_result("cross_entropy", {}, {total / n}, {logits}, [=](Node& self) {
    if (!ln->requires_grad) return;
    const auto p = softmax_rows(ln->value, n, c);
    auto d = ln->grad_buffer();
    const double g = self.grad[0] / n;
    for (int r = 0; r < n; ++r) {
      for (int j = 0; j < c; ++j) {
        const std::size_t k = static_cast<std::size_t>(r) * c + j;
        d[k] += g * (p[k] - (j == lab[r] ? 1.0 : 0.0));
      }
    }
  });
}

/// Index of the largest value in each row; ties go to the lowest index.
inline std::vector<int> argmax_rows(const Tensor& t) {
  detail::require_rank(t, 2, "argmax_rows", "input");
  std::vector<int> out(t.dim(0));
  const int c = t.dim(1);
  for (int r = 0; r < t.dim(0); ++r) {
    const double* row = t.values().data() + static_cast<std::size_t>(r) * c;
    out[r] = static_cast<int>(std::max_element(row, row + c) - row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model

struct SupervisedModel {
  RepVGGNet net;
  Linear head;  // feature_dim -> num_classes
  bool equalize_input = true;

  static SupervisedModel create(const StagePlan& plan, int num_classes, Rng& rng) {
    if (num_classes < 2) throw ParameterError("supervised: need at least 2 classes");
    SupervisedModel m;
    m.net = build_net(plan, rng);
    m.head = Linear::create(plan.feature_dim(), num_classes, true, rng);
    return m;
  }

  int num_classes() const { return head.out_features(); }
  Tensor logits(const Tensor& x) { return head.forward(net.features(x)); }
  void set_mode(BnMode m) { net.set_mode(m); }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    net.collect(out);
    head.collect(out);
    return out;
  }

  void save(Checkpoint& ck) const {
    ck.put_text("meta.kind", "supervised");
    ck.put_ints("meta.equalize", {equalize_input ? 1 : 0});
    ck.put_ints("meta.num_classes", {num_classes()});
    net.save(ck, "net");
    head.save(ck, "head");
  }
};

// ---------------------------------------------------------------------------
// Training

struct SupervisedEpoch {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double lr = 0.0;

  Json to_json() const { return Json{{"epoch", epoch}, {"loss", loss}, {"train_acc", train_acc}, {"lr", lr}}; }
};

struct SupervisedTraining {
  SupervisedModel model;
  std::vector<SupervisedEpoch> metrics;
};

/// One augmented view per sample per epoch; accuracy is measured on the
/// augmented training batches as they are seen.
inline SupervisedTraining train_supervised(const LabeledDataset& data, const TrainConfig& cfg,
                                           const MetricsSink& sink = {}) {
  cfg.validate();
  data.validate();
  if (data.num_classes < 2) throw DataError("train_supervised: need at least 2 classes");
  if (data.size() < 2) throw DataError("train_supervised: need at least 2 samples");
  Rng init = make_rng(cfg.seed, "supervised.init");
  SupervisedTraining out{SupervisedModel::create(cfg.plan, data.num_classes, init), {}};
  SupervisedModel& model = out.model;
  model.equalize_input = cfg.augment.apply_equalization;
  model.set_mode(BnMode::train);

  std::vector<Tensor> params = model.parameters();
  SgdState sgd = cfg.sgd();
  const long total = steps_per_epoch(data.size(), cfg.batch_size) * cfg.epochs;
  long step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const AugmentConfig aug = epoch_augment(cfg, epoch);
    const auto order = epoch_order(data.size(), cfg.seed, epoch);
    SupervisedEpoch m{epoch, 0.0, 0.0, cosine_lr(step, total, sgd)};
    long batches = 0, seen = 0, correct = 0;
    for (const auto& batch : make_batches(order, cfg.batch_size)) {
      std::vector<GrayImage> views;
      std::vector<int> labels;
      for (auto i : batch) {
        Rng rng = make_rng(aug.seed, "augment", i);
        views.push_back(augment_view(data.images[i], aug, rng));
        labels.push_back(data.labels[i]);
      }
      zero_grad(params);
      const Tensor logits = model.logits(images_to_batch(views));
      const Tensor loss = cross_entropy(logits, labels);
      if (!std::isfinite(loss.item())) {
        throw NumericError("train_supervised: non-finite loss at epoch " + std::to_string(epoch));
      }
      backward(loss);
      sgd_step(params, sgd, cosine_lr(step, total, sgd));
      ++step;
      const auto pred = argmax_rows(logits);
      for (std::size_t k = 0; k < pred.size(); ++k) correct += pred[k] == labels[k];
      seen += static_cast<long>(pred.size());
      m.loss += loss.item();
      ++batches;
    }
    m.loss /= static_cast<double>(batches);
    m.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
    out.metrics.push_back(m);
    if (sink) sink(m.to_json());
  }
  model.set_mode(BnMode::eval);
  return out;
}

/// Classifier accuracy in eval mode, no augmentation.
inline double accuracy(SupervisedModel& model, std::span<const GrayImage> images, std::span<const int> labels) {
  NoGradGuard no_grad;
  model.set_mode(BnMode::eval);
  const auto prepared = prepare_for_inference(images, model.equalize_input);
  const auto pred = argmax_rows(model.logits(images_to_batch(prepared)));
  long correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Embeddings

/// Single-branch inference network exported from a trained model.
struct FusedEncoder {
  FusedNet net;
  bool equalize_input = true;
};

inline FusedEncoder export_fused(const SupervisedModel& model) {
  return {reparameterize(model.net), model.equalize_input};
}

/// Unit-norm penultimate features through the fused network.
inline std::vector<std::vector<double>> embed_supervised(const FusedEncoder& enc, std::span<const GrayImage> images) {
  return embed_with(enc.net, images, enc.equalize_input);
}

inline std::vector<double> embed_supervised(const FusedEncoder& enc, const GrayImage& img) {
  return embed_supervised(enc, std::span<const GrayImage>(&img, 1)).front();
}

/// Same features through the multi-branch network with eval-mode BN.
inline std::vector<std::vector<double>> embed_train_form(SupervisedModel& model, std::span<const GrayImage> images) {
  model.set_mode(BnMode::eval);
  return embed_with(model.net, images, model.equalize_input);
}

// ---------------------------------------------------------------------------
// Persistence

inline void save_supervised(const SupervisedModel& model, const std::filesystem::path& path) {
  Checkpoint ck;
  model.save(ck);
  ck.save(path);
}

inline SupervisedModel supervised_from_checkpoint(const Checkpoint& ck) {
  require_kind(ck, "supervised");
  const StagePlan plan = StagePlan::load(ck, "net.plan");
  Rng scratch(0);
  SupervisedModel model = SupervisedModel::create(plan, static_cast<int>(ck.ints("meta.num_classes").at(0)), scratch);
  model.equalize_input = ck.ints("meta.equalize").at(0) != 0;
  Checkpoint expected;
  model.save(expected);
  audit_entries(ck, expected, "supervised model");
  model.net.load(ck, "net");
  model.head.load(ck, "head");
  model.set_mode(BnMode::eval);
  return model;
}

inline SupervisedModel load_supervised(const std::filesystem::path& path) {
  const Checkpoint ck = Checkpoint::load(path);
  try {
    return supervised_from_checkpoint(ck);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline Checkpoint fused_checkpoint(const FusedEncoder& enc) {
  Checkpoint ck;
  ck.put_text("meta.kind", "supervised-fused");
  ck.put_text("meta.fused", "true");
  ck.put_ints("meta.equalize", {enc.equalize_input ? 1 : 0});
  enc.net.save(ck, "net");
  return ck;
}

inline void save_fused(const FusedEncoder& enc, const std::filesystem::path& path) { fused_checkpoint(enc).save(path); }

inline FusedEncoder fused_from_checkpoint(const Checkpoint& ck) {
  require_kind(ck, "supervised-fused");
  if (!ck.has("meta.fused") || ck.text("meta.fused") != "true") {
    throw DataError("fused checkpoint lacks meta.fused=true");
  }
  FusedEncoder enc{FusedNet::load(ck, "net"), ck.ints("meta.equalize").at(0) != 0};
  audit_entries(ck, fused_checkpoint(enc), "fused network");
  return enc;
}

inline FusedEncoder load_fused(const std::filesystem::path& path) {
  const Checkpoint ck = Checkpoint::load(path);
  try {
    return fused_from_checkpoint(ck);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace glyph
