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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "glyphscreen/checkpoint.hpp"
#include "glyphscreen/index.hpp"
#include "glyphscreen/simsiam.hpp"
#include "glyphscreen/supervised.hpp"

// Encoders loaded from checkpoints, and the glue between them and stores.

namespace glyph {

struct Encoder {
  std::string source;    // "unsupervised" | "supervised"
  std::string checksum;  // checkpoint_digest of the checkpoint it came from
  int dim = 0;
  std::function<std::vector<std::vector<double>>(std::span<const GrayImage>)> embed;

  std::vector<double> embed_one(const GrayImage& img) const {
    return embed(std::span<const GrayImage>(&img, 1)).front();
  }
};

/// SimSiam checkpoints give the unsupervised channel; supervised checkpoints,
/// train-form or fused, give the supervised channel through the fused net.
inline Encoder encoder_from(const Checkpoint& ck) {
  const std::string kind = ck.has("meta.kind") ? ck.text("meta.kind") : std::string("<none>");
  Encoder e;
  e.checksum = checkpoint_digest(ck);
  if (kind == "simsiam") {
    auto model = std::make_shared<SimSiamModel>(encoder_from_checkpoint(ck));
    e.source = "unsupervised";
    e.dim = model->backbone.plan.feature_dim();
    e.embed = [model](std::span<const GrayImage> imgs) { return embed_batch(*model, imgs); };
  } else if (kind == "supervised" || kind == "supervised-fused") {
    auto enc = std::make_shared<FusedEncoder>(kind == "supervised" ? export_fused(supervised_from_checkpoint(ck))
                                                                   : fused_from_checkpoint(ck));
    e.source = "supervised";
    e.dim = enc->net.feature_dim();
    e.embed = [enc](std::span<const GrayImage> imgs) { return embed_supervised(*enc, imgs); };
  } else {
    throw DataError("checkpoint kind '" + kind + "' is not an encoder");
  }
  return e;
}

inline Encoder load_any_encoder(const std::filesystem::path& path) {
  const Checkpoint ck = Checkpoint::load(path);
  try {
    return encoder_from(ck);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline FeatureStore build_store(std::span<const GrayImage> images, std::span<const std::string> ids,
                                std::span<const std::optional<int>> labels, const Encoder& enc) {
  if (images.size() != ids.size()) throw DataError("store: images and ids differ in length");
  const auto vectors = enc.embed(images);
  return build_store(ids, labels, vectors, enc.dim, enc.source, enc.checksum);
}

/// Rejects a store built by a different encoder than `enc`.
inline void check_store_encoder(const FeatureStore& store, const Encoder& enc) {
  if (store.source != enc.source) {
    throw DataError("store holds '" + store.source + "' embeddings but the checkpoint is a '" + enc.source +
                    "' encoder");
  }
  if (!store.encoder_checksum.empty() && store.encoder_checksum != enc.checksum) {
    throw DataError("store was built by encoder " + store.encoder_checksum + ", checkpoint digest is " +
                    enc.checksum);
  }
}

inline std::vector<FusedHit> fused_query(const GrayImage& img, const FeatureStore& store_u, const Encoder& enc_u,
                                         const FeatureStore& store_s, const Encoder& enc_s, const FusionWeights& w,
                                         int k) {
  check_store_encoder(store_u, enc_u);
  check_store_encoder(store_s, enc_s);
  return fused_query(store_u, enc_u.embed_one(img), store_s, enc_s.embed_one(img), w, k);
}

}  // namespace glyph
