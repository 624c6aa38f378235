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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "glyphscreen/tensor.hpp"

// Differentiable layer primitives. Every function here records its backward
// rule through make_result(); parents that do not require gradients are
// skipped during the reverse sweep. Layouts are row-major NCHW for feature
// maps, [N, F] for feature vectors, [Cout, Cin, kh, kw] for kernels.

namespace glyph {

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

struct ConvGeometry {
  int n, cin, h, w;
  int cout, kh, kw;
  int stride, pad;
  int ho, wo;

  int k() const { return cin * kh * kw; }
  int p() const { return ho * wo; }
};

// cols[(c*kh + i)*kw + j, oy*wo + ox] = x[c, oy*stride + i - pad, ox*stride + j - pad]
inline void im2col(const double* x, const ConvGeometry& g, double* cols) {
  for (int c = 0; c < g.cin; ++c) {
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        double* row = cols + static_cast<std::size_t>((c * g.kh + i) * g.kw + j) * g.p();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + i - g.pad;
          double* out = row + oy * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(out, out + g.wo, 0.0);
            continue;
          }
          const double* src = x + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride + j - g.pad;
            out[ox] = (ix < 0 || ix >= g.w) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

inline void col2im_add(const double* cols, const ConvGeometry& g, double* dx) {
  for (int c = 0; c < g.cin; ++c) {
    for (int i = 0; i < g.kh; ++i) {
      for (int j = 0; j < g.kw; ++j) {
        const double* row = cols + static_cast<std::size_t>((c * g.kh + i) * g.kw + j) * g.p();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride + i - g.pad;
          if (iy < 0 || iy >= g.h) continue;
          double* dst = dx + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          const double* src = row + oy * g.wo;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * g.stride + j - g.pad;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// 2-D cross-correlation (no kernel flip). `bias` may be an undefined Tensor.
inline Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad) {
  detail::require_rank(x, 4, "conv2d", "input");
  detail::require_rank(weight, 4, "conv2d", "weight");
  if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
  if (pad < 0) throw DimensionError("conv2d: padding must be >= 0");
  detail::ConvGeometry g{x.dim(0), x.dim(1), x.dim(2),      x.dim(3), weight.dim(0), weight.dim(2),
                         weight.dim(3), stride, pad, 0, 0};
  if (weight.dim(1) != g.cin) {
    throw DimensionError("conv2d: axis 1 (input channels) mismatch: input has " +
                         std::to_string(g.cin) + ", weight expects " + std::to_string(weight.dim(1)));
  }
  if (g.h + 2 * pad < g.kh) {
    throw DimensionError("conv2d: axis 2 (height) " + std::to_string(g.h) + " with pad " +
                         std::to_string(pad) + " is smaller than kernel " + std::to_string(g.kh));
  }
  if (g.w + 2 * pad < g.kw) {
    throw DimensionError("conv2d: axis 3 (width) " + std::to_string(g.w) + " with pad " +
                         std::to_string(pad) + " is smaller than kernel " + std::to_string(g.kw));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.cout)) {
    throw DimensionError("conv2d: axis 0 (output channels) of bias " + shape_str(bias.shape()) +
                         " does not match weight " + std::to_string(g.cout));
  }
  g.ho = (g.h + 2 * pad - g.kh) / stride + 1;
  g.wo = (g.w + 2 * pad - g.kw) / stride + 1;

  const std::size_t in_plane = static_cast<std::size_t>(g.cin) * g.h * g.w;
  const std::size_t out_plane = static_cast<std::size_t>(g.cout) * g.p();
  const std::size_t col_size = static_cast<std::size_t>(g.k()) * g.p();
  const bool keep_cols = grad_enabled() && weight.requires_grad();

  std::vector<double> out(static_cast<std::size_t>(g.n) * out_plane);
  std::vector<double> cols(keep_cols ? col_size * g.n : col_size);
  detail::ConstMatMap wmat(weight.values().data(), g.cout, g.k());
  for (int n = 0; n < g.n; ++n) {
    double* c = cols.data() + (keep_cols ? col_size * n : 0);
    detail::im2col(x.values().data() + in_plane * n, g, c);
    detail::MatMap omat(out.data() + out_plane * n, g.cout, g.p());
    omat.noalias() = wmat * detail::ConstMatMap(c, g.k(), g.p());
    if (bias.defined()) {
      for (int oc = 0; oc < g.cout; ++oc) omat.row(oc).array() += bias.values()[oc];
    }
  }

  NodePtr xn = x.node_ptr();
  NodePtr wn = weight.node_ptr();
  NodePtr bn = bias.defined() ? bias.node_ptr() : nullptr;
  return make_result(
      "conv2d", {g.n, g.cout, g.ho, g.wo}, std::move(out), {x, weight, bias},
      [g, xn, wn, bn, keep_cols, cols = std::move(cols), in_plane, out_plane,
       col_size](Node& self) {
        detail::ConstMatMap wmat(wn->value.data(), g.cout, g.k());
        std::vector<double> scratch(col_size);
        std::vector<double> dcols(col_size);
        for (int n = 0; n < g.n; ++n) {
          detail::ConstMatMap dy(self.grad.data() + out_plane * n, g.cout, g.p());
          if (wn->requires_grad) {
            const double* c = keep_cols ? cols.data() + col_size * n : nullptr;
            if (!c) {
              detail::im2col(xn->value.data() + in_plane * n, g, scratch.data());
              c = scratch.data();
            }
            detail::MatMap dw(wn->grad_buffer().data(), g.cout, g.k());
            dw.noalias() += dy * detail::ConstMatMap(c, g.k(), g.p()).transpose();
          }
          if (bn && bn->requires_grad) {
            auto db = bn->grad_buffer();
            for (int oc = 0; oc < g.cout; ++oc) db[oc] += dy.row(oc).sum();
          }
          if (xn->requires_grad) {
            detail::MatMap dc(dcols.data(), g.k(), g.p());
            dc.noalias() = wmat.transpose() * dy;
            detail::col2im_add(dcols.data(), g, xn->grad_buffer().data() + in_plane * n);
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Batch normalization

enum class BnMode { train, eval };

/// Per-channel affine normalization state. gamma/beta are trainable; the
/// running statistics are buffers updated by train-mode forward passes.
struct BatchNormParams {
  Tensor gamma;
  Tensor beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double eps = 1e-5;
  double momentum_stat = 0.1;
  BnMode mode = BnMode::train;

  static BatchNormParams identity(int channels) {
    BatchNormParams p;
    p.gamma = Tensor::full({channels}, 1.0, true);
    p.beta = Tensor::zeros({channels}, true);
    p.running_mean.assign(channels, 0.0);
    p.running_var.assign(channels, 1.0);
    return p;
  }

  int channels() const { return static_cast<int>(running_mean.size()); }

  void validate() const {
    const auto c = static_cast<std::size_t>(channels());
    if (gamma.numel() != c || beta.numel() != c || running_var.size() != c) {
      throw DimensionError("batchnorm: parameter sizes disagree with channel count " +
                           std::to_string(c));
    }
    if (!(eps > 0.0)) throw ParameterError("batchnorm: eps must be positive");
    for (double v : running_var) {
      if (!(v >= 0.0)) throw ParameterError("batchnorm: running variance must be >= 0");
    }
  }
};

/// Accepts [N, C] or [N, C, H, W]. Train mode normalizes with biased batch
/// statistics and folds the unbiased variance into the running estimate.
inline Tensor batchnorm(const Tensor& x, BatchNormParams& p) {
  if (x.rank() != 2 && x.rank() != 4) {
    throw DimensionError("batchnorm: input must be [N,C] or [N,C,H,W], got " + shape_str(x.shape()));
  }
  const int n = x.dim(0);
  const int c = x.dim(1);
  if (c != p.channels()) {
    throw DimensionError("batchnorm: axis 1 has " + std::to_string(c) + " channels, params have " +
                         std::to_string(p.channels()));
  }
  const int hw = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
  const double m = static_cast<double>(n) * hw;
  const auto xv = x.values();
  auto at = [c, hw](int s, int ch) { return static_cast<std::size_t>(s * c + ch) * hw; };

  std::vector<double> mean(c), invstd(c);
  if (p.mode == BnMode::train) {
    for (int ch = 0; ch < c; ++ch) {
      double sum = 0.0;
      for (int s = 0; s < n; ++s)
        for (int i = 0; i < hw; ++i) sum += xv[at(s, ch) + i];
      const double mu = sum / m;
      double sq = 0.0;
      for (int s = 0; s < n; ++s)
        for (int i = 0; i < hw; ++i) {
          const double d = xv[at(s, ch) + i] - mu;
          sq += d * d;
        }
      const double var = sq / m;
      mean[ch] = mu;
      invstd[ch] = 1.0 / std::sqrt(var + p.eps);
      const double unbiased = m > 1 ? sq / (m - 1) : var;
      p.running_mean[ch] = (1 - p.momentum_stat) * p.running_mean[ch] + p.momentum_stat * mu;
      p.running_var[ch] = (1 - p.momentum_stat) * p.running_var[ch] + p.momentum_stat * unbiased;
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      mean[ch] = p.running_mean[ch];
      invstd[ch] = 1.0 / std::sqrt(p.running_var[ch] + p.eps);
    }
  }

  std::vector<double> xhat(xv.size());
  std::vector<double> out(xv.size());
  const auto g = p.gamma.values();
  const auto b = p.beta.values();
  for (int s = 0; s < n; ++s)
    for (int ch = 0; ch < c; ++ch)
      for (int i = 0; i < hw; ++i) {
        const auto k = at(s, ch) + i;
        xhat[k] = (xv[k] - mean[ch]) * invstd[ch];
        out[k] = g[ch] * xhat[k] + b[ch];
      }

  const bool train = p.mode == BnMode::train;
  NodePtr xn = x.node_ptr();
  NodePtr gn = p.gamma.node_ptr();
  NodePtr bn = p.beta.node_ptr();
  return make_result(
      train ? "batchnorm_train" : "batchnorm_eval", x.shape(), std::move(out), {x, p.gamma, p.beta},
      [=, xhat = std::move(xhat), invstd = std::move(invstd)](Node& self) {
        const auto& dy = self.grad;
        const auto& gv = gn->value;
        std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
        for (int s = 0; s < n; ++s)
          for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < hw; ++i) {
              const auto k = at(s, ch) + i;
              sum_dy[ch] += dy[k];
              sum_dy_xhat[ch] += dy[k] * xhat[k];
            }
        if (gn->requires_grad) {
          auto dg = gn->grad_buffer();
          for (int ch = 0; ch < c; ++ch) dg[ch] += sum_dy_xhat[ch];
        }
        if (bn->requires_grad) {
          auto db = bn->grad_buffer();
          for (int ch = 0; ch < c; ++ch) db[ch] += sum_dy[ch];
        }
        if (!xn->requires_grad) return;
        auto dx = xn->grad_buffer();
        for (int s = 0; s < n; ++s)
          for (int ch = 0; ch < c; ++ch) {
            const double scale = gv[ch] * invstd[ch];
            for (int i = 0; i < hw; ++i) {
              const auto k = at(s, ch) + i;
              if (train) {
                dx[k] += scale * (dy[k] - sum_dy[ch] / m - xhat[k] * sum_dy_xhat[ch] / m);
              } else {
                dx[k] += scale * dy[k];
              }
            }
          }
      });
}

// ---------------------------------------------------------------------------
// Pointwise and reductions

inline Tensor relu(const Tensor& x) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  NodePtr xn = x.node_ptr();
  return make_result("relu", x.shape(), std::move(out), {x}, [xn](Node& self) {
    auto dx = xn->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (xn->value[i] > 0.0) dx[i] += self.grad[i];
    }
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  NodePtr an = a.node_ptr();
  NodePtr bn = b.node_ptr();
  return make_result("add", a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
    for (Node* t : {an.get(), bn.get()}) {
      if (!t->requires_grad) continue;
      auto d = t->grad_buffer();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  NodePtr an = a.node_ptr();
  NodePtr bn = b.node_ptr();
  return make_result("mul", a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
    if (an->requires_grad) {
      auto d = an->grad_buffer();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      auto d = bn->grad_buffer();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * an->value[i];
    }
  });
}

inline Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (auto& v : out) v *= factor;
  NodePtr xn = x.node_ptr();
  return make_result("scale", x.shape(), std::move(out), {x}, [xn, factor](Node& self) {
    auto d = xn->grad_buffer();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * self.grad[i];
  });
}

inline Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  NodePtr xn = x.node_ptr();
  return make_result("sum", {}, {s}, {x}, [xn](Node& self) {
    auto d = xn->grad_buffer();
    for (auto& v : d) v += self.grad[0];
  });
}

inline Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

/// Values identical to x; contributes nothing to x's ancestors on backward.
inline Tensor stop_gradient(const Tensor& x) {
  auto n = std::make_shared<Node>();
  n->seq = detail::next_seq();
  n->op = "stop_gradient";
  n->shape = x.shape();
  n->value.assign(x.values().begin(), x.values().end());
  n->parents.push_back(x.node_ptr());
  return Tensor(std::move(n));
}

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  NodePtr xn = x.node_ptr();
  return make_result("reshape", std::move(shape), {x.values().begin(), x.values().end()}, {x},
                     [xn](Node& self) {
                       auto d = xn->grad_buffer();
                       for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
                     });
}

/// [N, C, H, W] -> [N, C], mean over the spatial plane.
inline Tensor adaptive_avg_pool(const Tensor& x) {
  detail::require_rank(x, 4, "adaptive_avg_pool", "input");
  const int nc = x.dim(0) * x.dim(1);
  const int hw = x.dim(2) * x.dim(3);
  std::vector<double> out(nc);
  for (int i = 0; i < nc; ++i) {
    double s = 0.0;
    for (int k = 0; k < hw; ++k) s += x.values()[static_cast<std::size_t>(i) * hw + k];
    out[i] = s / hw;
  }
  NodePtr xn = x.node_ptr();
  return make_result("adaptive_avg_pool", {x.dim(0), x.dim(1)}, std::move(out), {x},
                     [xn, nc, hw](Node& self) {
                       auto d = xn->grad_buffer();
                       for (int i = 0; i < nc; ++i) {
                         const double g = self.grad[i] / hw;
                         for (int k = 0; k < hw; ++k) d[static_cast<std::size_t>(i) * hw + k] += g;
                       }
                     });
}

/// y = x W^T + b with x [N, in], W [out, in], b [out] (b may be undefined).
inline Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  detail::require_rank(x, 2, "linear", "input");
  detail::require_rank(weight, 2, "linear", "weight");
  const int n = x.dim(0);
  const int in = x.dim(1);
  const int outw = weight.dim(0);
  if (weight.dim(1) != in) {
    throw DimensionError("linear: axis 1 of input has " + std::to_string(in) +
                         " features, weight expects " + std::to_string(weight.dim(1)));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != outw)) {
    throw DimensionError("linear: bias shape " + shape_str(bias.shape()) + " does not match " +
                         std::to_string(outw) + " outputs");
  }
  std::vector<double> out(static_cast<std::size_t>(n) * outw);
  detail::MatMap y(out.data(), n, outw);
  y.noalias() = detail::ConstMatMap(x.values().data(), n, in) *
                detail::ConstMatMap(weight.values().data(), outw, in).transpose();
  if (bias.defined()) {
    for (int r = 0; r < n; ++r)
      for (int o = 0; o < outw; ++o) y(r, o) += bias.values()[o];
  }
  NodePtr xn = x.node_ptr();
  NodePtr wn = weight.node_ptr();
  NodePtr bn = bias.defined() ? bias.node_ptr() : nullptr;
  return make_result("linear", {n, outw}, std::move(out), {x, weight, bias},
                     [=](Node& self) {
                       detail::ConstMatMap dy(self.grad.data(), n, outw);
                       if (wn->requires_grad) {
                         detail::MatMap dw(wn->grad_buffer().data(), outw, in);
                         dw.noalias() += dy.transpose() * detail::ConstMatMap(xn->value.data(), n, in);
                       }
                       if (bn && bn->requires_grad) {
                         auto db = bn->grad_buffer();
                         for (int r = 0; r < n; ++r)
                           for (int o = 0; o < outw; ++o) db[o] += dy(r, o);
                       }
                       if (xn->requires_grad) {
                         detail::MatMap dx(xn->grad_buffer().data(), n, in);
                         dx.noalias() += dy * detail::ConstMatMap(wn->value.data(), outw, in);
                       }
                     });
}

// ---------------------------------------------------------------------------
// Vector geometry

namespace detail {

inline std::pair<int, int> rows_of(const Tensor& x, const char* op) {
  if (x.rank() == 1) return {1, x.dim(0)};
  if (x.rank() == 2) return {x.dim(0), x.dim(1)};
  throw DimensionError(std::string(op) + ": expected [d] or [N,d], got " + shape_str(x.shape()));
}

}  // namespace detail

/// Row-wise x / |x| for [d] or [N, d]. Zero rows are rejected.
inline Tensor l2_normalize(const Tensor& x) {
  const auto [rows, d] = detail::rows_of(x, "l2_normalize");
  std::vector<double> out(x.numel());
  std::vector<double> norms(rows);
  for (int r = 0; r < rows; ++r) {
    const double* v = x.values().data() + static_cast<std::size_t>(r) * d;
    double sq = 0.0;
    for (int i = 0; i < d; ++i) sq += v[i] * v[i];
    if (!(sq > 0.0)) throw NumericError("l2_normalize: zero vector in row " + std::to_string(r));
    norms[r] = std::sqrt(sq);
    for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(r) * d + i] = v[i] / norms[r];
  }
  NodePtr xn = x.node_ptr();
  return make_result("l2_normalize", x.shape(), std::move(out), {x},
                     [xn, rows, d, norms = std::move(norms)](Node& self) {
                       auto dx = xn->grad_buffer();
                       for (int r = 0; r < rows; ++r) {
                         const std::size_t o = static_cast<std::size_t>(r) * d;
                         double dot = 0.0;
                         for (int i = 0; i < d; ++i) dot += self.value[o + i] * self.grad[o + i];
                         for (int i = 0; i < d; ++i) {
                           dx[o + i] += (self.grad[o + i] - self.value[o + i] * dot) / norms[r];
                         }
                       }
                     });
}

/// Row-wise cosine a.b / sqrt((a.a)(b.b)) for [d] (-> scalar) or [N, d]
/// (-> [N]). The value is clamped to [-1, 1]; with a == b it is exactly 1.
inline Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "cosine_similarity");
  const auto [rows, d] = detail::rows_of(a, "cosine_similarity");
  std::vector<double> out(rows), aa(rows), bb(rows), ab(rows);
  for (int r = 0; r < rows; ++r) {
    const double* u = a.values().data() + static_cast<std::size_t>(r) * d;
    const double* v = b.values().data() + static_cast<std::size_t>(r) * d;
    double suu = 0.0, svv = 0.0, suv = 0.0;
    for (int i = 0; i < d; ++i) {
      suu += u[i] * u[i];
      svv += v[i] * v[i];
      suv += u[i] * v[i];
    }
    if (!(suu > 0.0) || !(svv > 0.0)) {
      throw NumericError("cosine_similarity: undefined for a zero vector (row " +
                         std::to_string(r) + ")");
    }
    aa[r] = suu;
    bb[r] = svv;
    ab[r] = suv;
    out[r] = std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
  }
  Shape shape = a.rank() == 1 ? Shape{} : Shape{rows};
  NodePtr an = a.node_ptr();
  NodePtr bn = b.node_ptr();
  return make_result(
      "cosine_similarity", std::move(shape), std::move(out), {a, b},
      [=, aa = std::move(aa), bb = std::move(bb), ab = std::move(ab)](Node& self) {
        for (int r = 0; r < rows; ++r) {
          const std::size_t o = static_cast<std::size_t>(r) * d;
          const double na = std::sqrt(aa[r]);
          const double nb = std::sqrt(bb[r]);
          const double c = ab[r] / (na * nb);
          const double g = self.grad[r];
          // d cos / d a = b / (|a||b|) - cos * a / |a|^2, symmetric for b.
          if (an->requires_grad) {
            auto da = an->grad_buffer();
            for (int i = 0; i < d; ++i)
              da[o + i] += g * (bn->value[o + i] / (na * nb) - c * an->value[o + i] / aa[r]);
          }
          if (bn->requires_grad) {
            auto db = bn->grad_buffer();
            for (int i = 0; i < d; ++i)
              db[o + i] += g * (an->value[o + i] / (na * nb) - c * bn->value[o + i] / bb[r]);
          }
        }
      });
}

}  // namespace glyph
