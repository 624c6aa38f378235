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
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "glyphscreen/error.hpp"
#include "glyphscreen/rng.hpp"

namespace glyph {

inline constexpr int kLevels = 256;
inline constexpr std::uint8_t kMaxLevel = kLevels - 1;

/// Half-away-from-zero rounding, the single rounding rule used by every
/// intensity mapping in this header.
inline double round_half_away(double v) { return std::round(v); }

inline std::uint8_t to_level(double v) {
  const double r = round_half_away(v);
  if (!(r > 0.0)) return 0;
  if (r >= kMaxLevel) return kMaxLevel;
  return static_cast<std::uint8_t>(r);
}

/// 8-bit grayscale raster stored row-major. Dimensions are fixed at
/// construction; there are no mutating operations apart from pixel access.
class GrayImage {
 public:
  GrayImage(int width, int height, std::uint8_t fill = kMaxLevel)
      : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  GrayImage(int width, int height, std::vector<std::uint8_t> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height) {
      throw DataError("GrayImage: data length " + std::to_string(data_.size()) + " != " +
                      std::to_string(width) + "x" + std::to_string(height));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  static constexpr int levels() { return kLevels; }
  std::size_t size() const { return data_.size(); }

  std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const std::uint8_t> pixels() const { return data_; }
  std::span<std::uint8_t> pixels() { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  static void check_dims(int w, int h) {
    if (w < 1 || h < 1) {
      throw DataError("GrayImage: dimensions must be positive, got " + std::to_string(w) + "x" +
                      std::to_string(h));
    }
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

// ---------------------------------------------------------------------------
// PGM (P5, maxval 255)

namespace detail {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) fail(std::string("pgm: ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) fail(std::string("pgm: expected ") + what, start);
    return v;
  }

  [[noreturn]] static void fail(const std::string& msg, std::size_t at) {
    throw DataError(msg + " at byte offset " + std::to_string(at));
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Decodes a binary PGM. Only magic "P5" with maxval 255 is accepted.
inline GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  detail::PgmHeaderReader r(bytes);
  if (bytes.size() < 2) r.fail("pgm: truncated header", bytes.size());
  if (bytes[0] != 'P' || bytes[1] != '5') r.fail("pgm: unsupported magic", 0);
  r.pos_ = 2;
  const long w = r.read_uint("width");
  const long h = r.read_uint("height");
  const std::size_t maxval_at = (r.skip_space_and_comments(), r.offset());
  const long maxval = r.read_uint("maxval");
  if (maxval != 255) r.fail("pgm: maxval must be 255, got " + std::to_string(maxval), maxval_at);
  if (w < 1 || h < 1) r.fail("pgm: dimensions must be positive", maxval_at);
  if (r.pos_ >= bytes.size()) r.fail("pgm: truncated header", r.pos_);
  ++r.pos_;  // exactly one whitespace byte before the raster
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t have = bytes.size() - r.pos_;
  if (have < need) {
    r.fail("pgm: truncated pixel payload (" + std::to_string(have) + " of " +
               std::to_string(need) + " bytes)",
           bytes.size());
  }
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos_),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(r.pos_ + need));
  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return load_pgm(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_pgm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// Intensity statistics and mappings

using Histogram = std::array<std::uint64_t, kLevels>;

inline Histogram histogram(const GrayImage& img) {
  Histogram h{};
  for (auto v : img.pixels()) ++h[v];
  return h;
}

/// Applies a 256-entry lookup table to every pixel.
inline GrayImage apply_lut(const GrayImage& img, const std::array<std::uint8_t, kLevels>& lut) {
  GrayImage out = img;
  for (auto& v : out.pixels()) v = lut[v];
  return out;
}

/// Level mapping of histogram equalization:
///   s_k = round((L-1) * sum_{j<=k} n_j / (M*N))
/// evaluated in integer arithmetic so the rounding is exact.
inline std::array<std::uint8_t, kLevels> equalization_lut(const Histogram& h) {
  std::uint64_t total = 0;
  for (auto n : h) total += n;
  std::array<std::uint8_t, kLevels> lut{};
  std::uint64_t cdf = 0;
  for (int k = 0; k < kLevels; ++k) {
    cdf += h[k];
    // round(255 * cdf / total) with halves rounded up (all terms are >= 0).
    lut[k] = static_cast<std::uint8_t>((2 * kMaxLevel * cdf + total) / (2 * total));
  }
  return lut;
}

inline GrayImage equalize(const GrayImage& img) { return apply_lut(img, equalization_lut(histogram(img))); }

/// Power-law curve A * v^gamma on a normalized intensity v in [0, 1],
/// clamped to [0, 1].
inline double gamma_curve(double v, double gain, double gamma) {
  if (!(gain > 0.0) || !std::isfinite(gain)) {
    throw ParameterError("gamma_transform: gain A must be positive, got " + std::to_string(gain));
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ParameterError("gamma_transform: gamma must be positive, got " + std::to_string(gamma));
  }
  return std::clamp(gain * std::pow(v, gamma), 0.0, 1.0);
}

inline GrayImage gamma_transform(const GrayImage& img, double gain, double gamma) {
  std::array<std::uint8_t, kLevels> lut{};
  for (int k = 0; k < kLevels; ++k) {
    lut[k] = to_level(gamma_curve(static_cast<double>(k) / kMaxLevel, gain, gamma) * kMaxLevel);
  }
  return apply_lut(img, lut);
}

// ---------------------------------------------------------------------------
// Rotation
//
// Convention: a positive angle rotates the picture counter-clockwise as it
// appears on screen (row 0 at the top). Rotation is about the pixel-grid
// center ((W-1)/2, (H-1)/2). Output pixels are produced by inverse mapping
// with bilinear interpolation; each interpolation tap that falls outside the
// source reads `fill`. Multiples of 90 degrees that keep the frame shape
// (any multiple of 180, or 90/270 on square images) take an exact index
// permutation instead.

namespace detail {

inline GrayImage rotate_quarter_turns(const GrayImage& img, int quarters) {
  const int w = img.width();
  const int h = img.height();
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int sx = x;
      int sy = y;
      switch (quarters) {
        case 1:  // counter-clockwise: out(x, y) = in(w-1-y, x)
          sx = w - 1 - y;
          sy = x;
          break;
        case 2:
          sx = w - 1 - x;
          sy = h - 1 - y;
          break;
        case 3:
          sx = y;
          sy = h - 1 - x;
          break;
        default:
          break;
      }
      out.at(x, y) = img.at(sx, sy);
    }
  }
  return out;
}

}  // namespace detail

inline GrayImage rotate(const GrayImage& img, double angle_deg, std::uint8_t fill = kMaxLevel) {
  if (!std::isfinite(angle_deg)) throw ParameterError("rotate: angle must be finite");
  double a = std::fmod(angle_deg, 360.0);
  if (a < 0.0) a += 360.0;
  const bool square = img.width() == img.height();
  if (a == 0.0) return img;
  if (a == 180.0) return detail::rotate_quarter_turns(img, 2);
  if (square && a == 90.0) return detail::rotate_quarter_turns(img, 1);
  if (square && a == 270.0) return detail::rotate_quarter_turns(img, 3);

  const double theta = a * (std::numbers::pi / 180.0);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const int w = img.width();
  const int h = img.height();
  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  auto tap = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= w || y >= h) return fill;
    return img.at(x, y);
  };
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double ox = x - cx;
      const double oy = y - cy;
      const double sx = cx + ox * c - oy * s;
      const double sy = cy + ox * s + oy * c;
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      const double tx = sx - fx;
      const double ty = sy - fy;
      const double v = (1 - ty) * ((1 - tx) * tap(x0, y0) + tx * tap(x0 + 1, y0)) +
                       ty * ((1 - tx) * tap(x0, y0 + 1) + tx * tap(x0 + 1, y0 + 1));
      out.at(x, y) = to_level(v);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Augmentation

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct AugmentConfig {
  Range rotation_range_deg{-15.0, 15.0};
  Range gamma_range{0.7, 1.5};
  double gamma_gain = 1.0;
  bool apply_equalization = true;
  std::uint64_t seed = 0;

  void validate() const {
    const auto& r = rotation_range_deg;
    if (!(r.lo <= r.hi) || r.lo < -180.0 || r.hi > 180.0) {
      throw ParameterError("augment: rotation range must lie within [-180, 180] with lo <= hi");
    }
    if (!(gamma_range.lo > 0.0) || !(gamma_range.lo <= gamma_range.hi) ||
        !std::isfinite(gamma_range.hi)) {
      throw ParameterError("augment: gamma range must be positive with lo <= hi");
    }
    if (!(gamma_gain > 0.0) || !std::isfinite(gamma_gain)) {
      throw ParameterError("augment: gamma gain must be positive");
    }
  }
};

/// One augmented view: rotate -> (equalize) -> gamma, with parameters drawn
/// from `rng`.
inline GrayImage augment_view(const GrayImage& img, const AugmentConfig& cfg, Rng& rng) {
  const double angle = uniform(rng, cfg.rotation_range_deg.lo, cfg.rotation_range_deg.hi);
  const double gamma = uniform(rng, cfg.gamma_range.lo, cfg.gamma_range.hi);
  GrayImage v = rotate(img, angle);
  if (cfg.apply_equalization) v = equalize(v);
  return gamma_transform(v, cfg.gamma_gain, gamma);
}

/// Two independently augmented views of `img`. The random stream is derived
/// from (cfg.seed, image_index) only, so the result is a pure function of its
/// arguments.
inline std::pair<GrayImage, GrayImage> augment_pair(const GrayImage& img, const AugmentConfig& cfg,
                                                    std::uint64_t image_index = 0) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, "augment", image_index);
  GrayImage first = augment_view(img, cfg, rng);
  GrayImage second = augment_view(img, cfg, rng);
  return {std::move(first), std::move(second)};
}

}  // namespace glyph
