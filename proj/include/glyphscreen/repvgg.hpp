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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glyphscreen/checkpoint.hpp"
#include "glyphscreen/nn.hpp"
#include "glyphscreen/ops.hpp"
#include "glyphscreen/rng.hpp"

// RepVGG blocks and structural re-parameterization.
//
// Training form of one block:
//
//   y = ReLU( BN3(conv3x3(x)) + BN1(conv1x1(x)) + BNid(x) )
//
// where the identity branch only exists for stride 1 and in == out. Once the
// batch norms are frozen (eval mode) every branch is an affine map of x, so
// the three branches collapse into one 3x3 convolution with bias:
//
//   conv+BN:   W' = (gamma / sqrt(var + eps)) * W,  b' = beta - gamma * mean / sqrt(var + eps)
//   1x1:       zero-padded to 3x3 with the weight at the spatial center
//   identity:  a 3x3 kernel holding 1 at the center of its own channel plane
//
// and the fused kernel and bias are the sums over branches.

namespace glyph {

struct ConvBNBranch {
  Tensor kernel;  // [Cout, Cin, k, k], k in {1, 3}, no bias
  BatchNormParams bn;

  static ConvBNBranch create(int in, int out, int k, Rng& rng) {
    return {kaiming_tensor({out, in, k, k}, rng), BatchNormParams::identity(out)};
  }

  int out_channels() const { return kernel.dim(0); }
  int in_channels() const { return kernel.dim(1); }
  int ksize() const { return kernel.dim(2); }

  Tensor forward(const Tensor& x, int stride) {
    return batchnorm(conv2d(x, kernel, Tensor{}, stride, ksize() / 2), bn);
  }
};

/// Kernel and bias of a single (fused) convolution. Not trainable.
struct FusedParams {
  Tensor kernel;
  Tensor bias;
};

namespace detail {

inline void require_eval(const BatchNormParams& bn, const char* what) {
  if (bn.mode != BnMode::eval) {
    throw NumericError(std::string(what) +
                       ": fusion requires batch norm in eval mode (running statistics frozen)");
  }
}

/// Scales each output-channel slice of `kernel` by gamma/sqrt(var+eps) and
/// produces the matching bias.
inline FusedParams fold_bn(const Shape& shape, std::span<const double> kernel, const BatchNormParams& bn) {
  const int cout = shape.at(0);
  if (cout != bn.channels()) {
    throw DimensionError("fuse: kernel has " + std::to_string(cout) + " output channels, batch norm " +
                         std::to_string(bn.channels()));
  }
  const std::size_t per = kernel.size() / static_cast<std::size_t>(cout);
  std::vector<double> k(kernel.begin(), kernel.end());
  std::vector<double> b(cout);
  for (int c = 0; c < cout; ++c) {
    const double s = bn.gamma.values()[c] / std::sqrt(bn.running_var[c] + bn.eps);
    for (std::size_t i = 0; i < per; ++i) k[c * per + i] *= s;
    b[c] = bn.beta.values()[c] - s * bn.running_mean[c];
  }
  return {Tensor::from(shape, std::move(k)), Tensor::from({cout}, std::move(b))};
}

}  // namespace detail

inline FusedParams fuse_conv_bn(const ConvBNBranch& branch) {
  detail::require_eval(branch.bn, "fuse_conv_bn");
  return detail::fold_bn(branch.kernel.shape(), branch.kernel.values(), branch.bn);
}

inline Tensor pad_1x1_to_3x3(const Tensor& kernel) {
  if (kernel.rank() != 4 || kernel.dim(2) != 1 || kernel.dim(3) != 1) {
    throw DimensionError("pad_1x1_to_3x3: expected [Cout,Cin,1,1], got " + shape_str(kernel.shape()));
  }
  const int cout = kernel.dim(0);
  const int cin = kernel.dim(1);
  std::vector<double> out(static_cast<std::size_t>(cout) * cin * 9, 0.0);
  for (int i = 0; i < cout * cin; ++i) out[static_cast<std::size_t>(i) * 9 + 4] = kernel.values()[i];
  return Tensor::from({cout, cin, 3, 3}, std::move(out));
}

inline FusedParams identity_to_fused(const BatchNormParams& bn, int channels) {
  detail::require_eval(bn, "identity_to_fused");
  std::vector<double> k(static_cast<std::size_t>(channels) * channels * 9, 0.0);
  for (int c = 0; c < channels; ++c) k[(static_cast<std::size_t>(c) * channels + c) * 9 + 4] = 1.0;
  return detail::fold_bn({channels, channels, 3, 3}, k, bn);
}

struct FusedConv {
  Tensor kernel;  // [Cout, Cin, 3, 3]
  Tensor bias;    // [Cout]
  int stride = 1;

  Tensor forward(const Tensor& x) const { return relu(conv2d(x, kernel, bias, stride, 1)); }
};

class RepVGGBlock {
 public:
  ConvBNBranch dense;      // 3x3, pad 1
  ConvBNBranch pointwise;  // 1x1, pad 0
  std::optional<BatchNormParams> identity;
  int stride = 1;

  static RepVGGBlock create(int in, int out, int stride, Rng& rng, bool with_identity = true) {
    if (in < 1 || out < 1 || stride < 1) throw ParameterError("RepVGGBlock: invalid geometry");
    RepVGGBlock b;
    b.dense = ConvBNBranch::create(in, out, 3, rng);
    b.pointwise = ConvBNBranch::create(in, out, 1, rng);
    if (with_identity && stride == 1 && in == out) b.identity = BatchNormParams::identity(out);
    b.stride = stride;
    return b;
  }

  int in_channels() const { return dense.in_channels(); }
  int out_channels() const { return dense.out_channels(); }

  Tensor forward(const Tensor& x) {
    if (x.rank() != 4 || x.dim(1) != in_channels()) {
      throw DimensionError("RepVGGBlock: expected " + std::to_string(in_channels()) +
                           " input channels, got " + shape_str(x.shape()));
    }
    Tensor y = add(dense.forward(x, stride), pointwise.forward(x, stride));
    if (identity) y = add(y, batchnorm(x, *identity));
    return relu(y);
  }

  void set_mode(BnMode m) {
    dense.bn.mode = m;
    pointwise.bn.mode = m;
    if (identity) identity->mode = m;
  }

  void collect(std::vector<Tensor>& out) const {
    out.push_back(dense.kernel);
    glyph::collect(dense.bn, out);
    out.push_back(pointwise.kernel);
    glyph::collect(pointwise.bn, out);
    if (identity) glyph::collect(*identity, out);
  }

  void save(Checkpoint& ck, const std::string& p) const {
    ck.put(p + ".dense.kernel", dense.kernel);
    save_bn(ck, p + ".dense.bn", dense.bn);
    ck.put(p + ".pointwise.kernel", pointwise.kernel);
    save_bn(ck, p + ".pointwise.bn", pointwise.bn);
    if (identity) save_bn(ck, p + ".identity.bn", *identity);
  }

  void load(const Checkpoint& ck, const std::string& p) {
    ck.load_into(p + ".dense.kernel", dense.kernel);
    load_bn(ck, p + ".dense.bn", dense.bn);
    ck.load_into(p + ".pointwise.kernel", pointwise.kernel);
    load_bn(ck, p + ".pointwise.bn", pointwise.bn);
    if (identity) load_bn(ck, p + ".identity.bn", *identity);
  }
};

inline FusedConv reparameterize(const RepVGGBlock& b) {
  FusedParams acc = fuse_conv_bn(b.dense);
  const FusedParams point = fuse_conv_bn(b.pointwise);
  const Tensor point3 = pad_1x1_to_3x3(point.kernel);
  auto k = acc.kernel.mutable_values();
  auto bias = acc.bias.mutable_values();
  for (std::size_t i = 0; i < k.size(); ++i) k[i] += point3.values()[i];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += point.bias.values()[i];
  if (b.identity) {
    const FusedParams id = identity_to_fused(*b.identity, b.out_channels());
    for (std::size_t i = 0; i < k.size(); ++i) k[i] += id.kernel.values()[i];
    for (std::size_t i = 0; i < bias.size(); ++i) bias[i] += id.bias.values()[i];
  }
  return {acc.kernel, acc.bias, b.stride};
}

// ---------------------------------------------------------------------------
// Networks

/// Stage layout: stage i has depths[i] blocks of widths[i] output channels;
/// the first block of every stage has stride 2.
struct StagePlan {
  std::vector<int> widths{16, 32, 64, 128};
  std::vector<int> depths{1, 2, 2, 1};
  int in_channels = 1;

  void validate() const {
    if (widths.empty() || widths.size() != depths.size()) {
      throw ParameterError("stage plan: widths and depths must be non-empty and equally long");
    }
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (widths[i] < 1 || depths[i] < 1) {
        throw ParameterError("stage plan: stage " + std::to_string(i) + " has zero width or depth");
      }
    }
    if (in_channels < 1) throw ParameterError("stage plan: in_channels must be >= 1");
  }

  int feature_dim() const { return widths.back(); }

  void save(Checkpoint& ck, const std::string& p) const {
    ck.put_ints(p + ".widths", {widths.begin(), widths.end()});
    ck.put_ints(p + ".depths", {depths.begin(), depths.end()});
    ck.put_ints(p + ".in_channels", {in_channels});
  }

  static StagePlan load(const Checkpoint& ck, const std::string& p) {
    StagePlan plan;
    const auto& w = ck.ints(p + ".widths");
    const auto& d = ck.ints(p + ".depths");
    plan.widths.assign(w.begin(), w.end());
    plan.depths.assign(d.begin(), d.end());
    plan.in_channels = static_cast<int>(ck.ints(p + ".in_channels").at(0));
    plan.validate();
    return plan;
  }
};

class RepVGGNet {
 public:
  StagePlan plan;
  std::vector<RepVGGBlock> blocks;  // all stages, in execution order

  /// [N, in, H, W] -> pooled [N, feature_dim].
  Tensor features(const Tensor& x) {
    Tensor y = x;
    for (auto& b : blocks) y = b.forward(y);
    return adaptive_avg_pool(y);
  }

  int feature_dim() const { return plan.feature_dim(); }

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

inline RepVGGNet build_net(const StagePlan& plan, Rng& rng) {
  plan.validate();
  RepVGGNet net;
  net.plan = plan;
  int in = plan.in_channels;
  for (std::size_t s = 0; s < plan.widths.size(); ++s) {
    for (int d = 0; d < plan.depths[s]; ++d) {
      net.blocks.push_back(RepVGGBlock::create(in, plan.widths[s], d == 0 ? 2 : 1, rng));
      in = plan.widths[s];
    }
  }
  return net;
}

/// Inference form: one 3x3 conv + ReLU per block, then global average pool.
class FusedNet {
 public:
  StagePlan plan;
  std::vector<FusedConv> convs;

  Tensor features(const Tensor& x) const {
    Tensor y = x;
    for (const auto& c : convs) y = c.forward(y);
    return adaptive_avg_pool(y);
  }

  int feature_dim() const { return plan.feature_dim(); }

  void save(Checkpoint& ck, const std::string& p) const {
    plan.save(ck, p + ".plan");
    for (std::size_t i = 0; i < convs.size(); ++i) {
      const std::string q = p + ".fused" + std::to_string(i);
      ck.put(q + ".kernel", convs[i].kernel);
      ck.put(q + ".bias", convs[i].bias);
      ck.put_ints(q + ".stride", {convs[i].stride});
    }
  }

  static FusedNet load(const Checkpoint& ck, const std::string& p) {
    FusedNet net;
    net.plan = StagePlan::load(ck, p + ".plan");
    for (std::size_t i = 0;; ++i) {
      const std::string q = p + ".fused" + std::to_string(i);
      if (!ck.has(q + ".kernel")) break;
      const auto& ke = ck.entry(q + ".kernel");
      Shape shape(ke.dims.begin(), ke.dims.end());
      FusedConv c{Tensor::from(shape, ke.f64), Tensor::zeros({static_cast<int>(ke.dims.at(0))}),
                  static_cast<int>(ck.ints(q + ".stride").at(0))};
      ck.load_into(q + ".bias", c.bias);
      net.convs.push_back(std::move(c));
    }
    int expected = 0;
    for (int d : net.plan.depths) expected += d;
    if (static_cast<int>(net.convs.size()) != expected) {
      throw DataError("fused net: found " + std::to_string(net.convs.size()) + " convs, plan needs " +
                      std::to_string(expected));
    }
    return net;
  }
};

inline FusedNet reparameterize(const RepVGGNet& net) {
  FusedNet f;
  f.plan = net.plan;
  for (const auto& b : net.blocks) f.convs.push_back(reparameterize(b));
  return f;
}

}  // namespace glyph
