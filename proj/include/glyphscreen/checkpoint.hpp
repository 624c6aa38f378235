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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glyphscreen/error.hpp"
#include "glyphscreen/imageops.hpp"
#include "glyphscreen/rng.hpp"
#include "glyphscreen/tensor.hpp"

namespace glyph {

// Checkpoint container layout (all integers little-endian):
//
//   magic      8 bytes  "GLYPHCKP"
//   version    u32      kCheckpointVersion
//   count      u32      number of entries
//   entry*:
//     name_len u32, name bytes (UTF-8)
//     dtype    u8       0 = f64, 1 = i64, 2 = text (u8)
//     rank     u32
//     dims     u64 * rank
//     payload  product(dims) elements, little-endian
//
// Entries keep insertion order so identical models encode to identical bytes.

inline constexpr char kCheckpointMagic[8] = {'G', 'L', 'Y', 'P', 'H', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { f64 = 0, i64 = 1, text = 2 };

struct CheckpointEntry {
  std::string name;
  DType dtype = DType::f64;
  std::vector<std::uint64_t> dims;
  std::vector<double> f64;
  std::vector<std::int64_t> i64;
  std::string text;
};

class Checkpoint {
 public:
  void put(std::string name, const Shape& shape, std::span<const double> values) {
    CheckpointEntry e{std::move(name), DType::f64, {}, {values.begin(), values.end()}, {}, {}};
    for (int d : shape) e.dims.push_back(static_cast<std::uint64_t>(d));
    if (e.dims.empty()) e.dims.push_back(values.size());
    add(std::move(e));
  }
  void put(std::string name, const Tensor& t) { put(std::move(name), t.shape(), t.values()); }
  void put_ints(std::string name, std::vector<std::int64_t> values) {
    CheckpointEntry e{std::move(name), DType::i64, {values.size()}, {}, std::move(values), {}};
    add(std::move(e));
  }
  void put_text(std::string name, std::string value) {
    CheckpointEntry e{std::move(name), DType::text, {value.size()}, {}, {}, std::move(value)};
    add(std::move(e));
  }

  bool has(std::string_view name) const { return find(name) != nullptr; }

  const CheckpointEntry& entry(std::string_view name) const {
    const auto* e = find(name);
    if (!e) throw DataError("checkpoint: missing entry '" + std::string(name) + "'");
    return *e;
  }

  /// Copies an f64 entry into `t`, which must already have the stored shape.
  void load_into(std::string_view name, Tensor& t) const {
    const auto& e = entry(name);
    if (e.dtype != DType::f64 || e.f64.size() != t.numel()) {
      throw DataError("checkpoint: entry '" + std::string(name) + "' does not fit tensor " +
                      shape_str(t.shape()));
    }
    std::copy(e.f64.begin(), e.f64.end(), t.mutable_values().begin());
  }
  void load_into(std::string_view name, std::vector<double>& v) const {
    const auto& e = entry(name);
    if (e.dtype != DType::f64 || e.f64.size() != v.size()) {
      throw DataError("checkpoint: entry '" + std::string(name) + "' has wrong size");
    }
    v = e.f64;
  }
  const std::vector<std::int64_t>& ints(std::string_view name) const {
    const auto& e = entry(name);
    if (e.dtype != DType::i64) throw DataError("checkpoint: entry '" + std::string(name) + "' is not i64");
    return e.i64;
  }
  const std::string& text(std::string_view name) const {
    const auto& e = entry(name);
    if (e.dtype != DType::text) throw DataError("checkpoint: entry '" + std::string(name) + "' is not text");
    return e.text;
  }

  std::span<const CheckpointEntry> entries() const { return entries_; }

  std::vector<std::uint8_t> encode() const {
    std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
      put_u32(out, static_cast<std::uint32_t>(e.name.size()));
      out.insert(out.end(), e.name.begin(), e.name.end());
      out.push_back(static_cast<std::uint8_t>(e.dtype));
      put_u32(out, static_cast<std::uint32_t>(e.dims.size()));
      for (auto d : e.dims) put_u64(out, d);
      switch (e.dtype) {
        case DType::f64:
          for (double v : e.f64) put_u64(out, std::bit_cast<std::uint64_t>(v));
          break;
        case DType::i64:
          for (auto v : e.i64) put_u64(out, static_cast<std::uint64_t>(v));
          break;
        case DType::text:
          out.insert(out.end(), e.text.begin(), e.text.end());
          break;
      }
    }
    return out;
  }

  static Checkpoint decode(std::span<const std::uint8_t> bytes) {
    Reader r{bytes};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
      throw DataError("checkpoint: bad magic");
    }
    r.pos = 8;
    const auto version = r.u32();
    if (version != kCheckpointVersion) {
      throw DataError("checkpoint: unsupported format version " + std::to_string(version) +
                      " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const auto count = r.u32();
    Checkpoint ck;
    for (std::uint32_t i = 0; i < count; ++i) {
      CheckpointEntry e;
      const auto len = r.u32();
      e.name = r.str(len);
      const auto tag = r.u8();
      if (tag > 2) throw DataError("checkpoint: unknown dtype tag " + std::to_string(tag));
      e.dtype = static_cast<DType>(tag);
      const auto rank = r.u32();
      if (rank > 8) throw DataError("checkpoint: rank " + std::to_string(rank) + " too large");
      std::uint64_t n = 1;
      for (std::uint32_t k = 0; k < rank; ++k) {
        e.dims.push_back(r.u64());
        n *= e.dims.back();
      }
      const std::uint64_t width = e.dtype == DType::text ? 1 : 8;
      if (n > (bytes.size() - r.pos) / width) throw DataError("checkpoint: truncated entry '" + e.name + "'");
      switch (e.dtype) {
        case DType::f64:
          e.f64.resize(n);
          for (auto& v : e.f64) v = std::bit_cast<double>(r.u64());
          break;
        case DType::i64:
          e.i64.resize(n);
          for (auto& v : e.i64) v = static_cast<std::int64_t>(r.u64());
          break;
        case DType::text:
          e.text = r.str(n);
          break;
      }
      ck.add(std::move(e));
    }
    if (r.pos != bytes.size()) throw DataError("checkpoint: trailing bytes after last entry");
    return ck;
  }

  void save(const std::filesystem::path& path) const {
    const auto bytes = encode();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }

  static Checkpoint load(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
      return decode(bytes);
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }

 private:
  struct Reader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
      if (bytes.size() - pos < n) {
        throw DataError("checkpoint: truncated at byte offset " + std::to_string(pos));
      }
    }
    std::uint8_t u8() {
      need(1);
      return bytes[pos++];
    }
    std::uint32_t u32() {
      need(4);
      std::uint32_t v = 0;
      for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
      return v;
    }
    std::uint64_t u64() {
      need(8);
      std::uint64_t v = 0;
      for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
      return v;
    }
    std::string str(std::uint64_t n) {
      need(n);
      std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
      pos += n;
      return s;
    }
  };

  static void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  static void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  const CheckpointEntry* find(std::string_view name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

  void add(CheckpointEntry e) {
    if (has(e.name)) throw DataError("checkpoint: duplicate entry '" + e.name + "'");
    entries_.push_back(std::move(e));
  }

  std::vector<CheckpointEntry> entries_;
};

/// Rejects a checkpoint whose meta.kind entry is absent or different.
inline void require_kind(const Checkpoint& ck, std::string_view kind) {
  const std::string found = ck.has("meta.kind") ? ck.text("meta.kind") : std::string("<none>");
  if (found != kind) {
    throw DataError("checkpoint kind is '" + found + "', expected '" + std::string(kind) + "'");
  }
}

/// Rejects a checkpoint whose entry names differ from `expected`, listing
/// what is missing and what is unexpected.
inline void audit_entries(const Checkpoint& ck, const Checkpoint& expected, std::string_view what) {
  std::string missing, extra;
  for (const auto& e : expected.entries()) {
    if (!ck.has(e.name)) missing += " " + e.name;
  }
  for (const auto& e : ck.entries()) {
    if (!expected.has(e.name)) extra += " " + e.name;
  }
  if (missing.empty() && extra.empty()) return;
  std::string msg = std::string(what) + ": checkpoint entry names do not match";
  if (!missing.empty()) msg += "; missing:" + missing;
  if (!extra.empty()) msg += "; unexpected:" + extra;
  throw DataError(msg);
}

/// 16-hex-digit FNV-1a digest of a checkpoint's encoded bytes; used to tie
/// feature stores to the encoder that produced them.
inline std::string checkpoint_digest(const Checkpoint& ck) {
  const auto bytes = ck.encode();
  const std::string_view view(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const auto h = fnv1a64(view);
  static constexpr char hex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 0; i < 16; ++i) s[15 - i] = hex[(h >> (4 * i)) & 0xf];
  return s;
}

}  // namespace glyph
