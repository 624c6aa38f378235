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

#include <cstdint>
#include <random>
#include <string_view>

namespace glyph {

// Seed splitting. Every random stream in the project is derived from one
// root seed plus a component name (and optionally an index), so that adding
// a new consumer never perturbs the draws of an existing one:
//
//   derive_seed(root, "simsiam.init")      -> weight init stream
//   derive_seed(root, "augment", image_id) -> per-image augmentation stream
//
// The name is hashed with 64-bit FNV-1a and the result is pushed through the
// splitmix64 finalizer together with the root and index.

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view component,
                                           std::uint64_t index = 0) {
  return splitmix64(splitmix64(root ^ fnv1a64(component)) + index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::string_view component, std::uint64_t index = 0) {
  return Rng(derive_seed(root, component, index));
}

// Degenerate ranges (lo == hi) are allowed and return lo without consuming
// a different number of draws than the general case.
inline double uniform(Rng& rng, double lo, double hi) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return lo + (hi - lo) * u;
}

inline double normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  return std::normal_distribution<double>(mean, stddev)(rng);
}

}  // namespace glyph
