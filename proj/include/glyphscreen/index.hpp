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
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "glyphscreen/error.hpp"

// Embedding stores, exhaustive cosine retrieval and two-channel fusion.

namespace glyph {

inline constexpr double kStoreNormTolerance = 1e-9;
inline constexpr double kQueryNormTolerance = 1e-6;

struct EmbeddingRecord {
  std::string id;
  std::optional<int> label;
  std::vector<double> vector;
};

inline bool valid_source(std::string_view s) { return s == "unsupervised" || s == "supervised"; }

struct FeatureStore {
  int dim = 0;
  std::string source;
  std::string encoder_checksum;  // may be empty
  std::vector<EmbeddingRecord> records;

  std::size_t size() const { return records.size(); }

  std::set<std::string> id_set() const {
    std::set<std::string> out;
    for (const auto& r : records) out.insert(r.id);
    return out;
  }

  const EmbeddingRecord* find(std::string_view id) const {
    for (const auto& r : records) {
      if (r.id == id) return &r;
    }
    return nullptr;
  }
};

struct FusionWeights {
  double w_unsup = 0.5;
  double w_sup = 0.5;

  static FusionWeights from_unsup(double w) { return {w, 1.0 - w}; }

  void validate() const {
    if (!(w_unsup >= 0.0) || !(w_sup >= 0.0) || std::abs(w_unsup + w_sup - 1.0) > 1e-12) {
      throw ParameterError("fusion weights must be non-negative and sum to 1, got (" + std::to_string(w_unsup) +
                           ", " + std::to_string(w_sup) + ")");
    }
  }
};

struct Hit {
  std::string id;
  double score = 0.0;
};

struct FusedHit {
  std::string id;
  double score = 0.0;
  double s_unsup = 0.0;
  double s_sup = 0.0;
};

namespace detail {

inline double norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Cosine of two unit vectors, clamped against rounding past +-1.
inline double unit_cosine(std::span<const double> a, std::span<const double> b) {
  return std::clamp(dot(a, b), -1.0, 1.0);
}

template <class T>
void rank(std::vector<T>& hits) {
  std::sort(hits.begin(), hits.end(), [](const T& a, const T& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
}

inline void check_id(const std::string& id, std::string_view where) {
  if (id.empty()) throw DataError(std::string(where) + ": empty id");
  if (id.find_first_of("\t\n\r") != std::string::npos) {
    throw DataError(std::string(where) + ": id '" + id + "' contains a tab or newline");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Building and querying

/// One record per input row, unit-normalized, in input order.
inline FeatureStore build_store(std::span<const std::string> ids, std::span<const std::optional<int>> labels,
                                std::span<const std::vector<double>> vectors, int dim, const std::string& source,
                                const std::string& encoder_checksum = "") {
  if (!valid_source(source)) throw DataError("store: unknown source tag '" + source + "'");
  if (dim < 1) throw DimensionError("store: dimension must be >= 1");
  if (ids.size() != vectors.size() || (!labels.empty() && labels.size() != ids.size())) {
    throw DataError("store: ids, labels and vectors differ in length");
  }
  FeatureStore s{dim, source, encoder_checksum, {}};
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    detail::check_id(ids[i], "store");
    if (!seen.insert(ids[i]).second) throw DataError("store: duplicate id '" + ids[i] + "'");
    if (static_cast<int>(vectors[i].size()) != dim) {
      throw DimensionError("store: vector for '" + ids[i] + "' has dimension " + std::to_string(vectors[i].size()) +
                           ", store dimension is " + std::to_string(dim));
    }
    const double n = detail::norm(vectors[i]);
    if (!(n > 0.0) || !std::isfinite(n)) throw NumericError("store: vector for '" + ids[i] + "' has no direction");
    EmbeddingRecord r{ids[i], labels.empty() ? std::nullopt : labels[i], vectors[i]};
    for (auto& v : r.vector) v /= n;
    s.records.push_back(std::move(r));
  }
  return s;
}

inline void check_query(const FeatureStore& store, std::span<const double> q) {
  if (static_cast<int>(q.size()) != store.dim) {
    throw DimensionError("query: vector has dimension " + std::to_string(q.size()) + ", store dimension is " +
                         std::to_string(store.dim));
  }
  const double n = detail::norm(q);
  if (!(std::abs(n - 1.0) <= kQueryNormTolerance)) {
    throw DataError("query: vector norm " + std::to_string(n) + " is not 1 within 1e-6");
  }
}

/// Top-k records by cosine, descending, ties by ascending id.
inline std::vector<Hit> query(const FeatureStore& store, std::span<const double> q, int k) {
  if (k < 1) throw ParameterError("query: k must be >= 1");
  check_query(store, q);
  std::vector<Hit> hits;
  hits.reserve(store.size());
  for (const auto& r : store.records) hits.push_back({r.id, detail::unit_cosine(r.vector, q)});
  detail::rank(hits);
  if (hits.size() > static_cast<std::size_t>(k)) hits.resize(k);
  return hits;
}

inline double fuse_scores(double s_unsup, double s_sup, const FusionWeights& w) {
  w.validate();
  if (!(s_unsup >= -1.0 && s_unsup <= 1.0) || !(s_sup >= -1.0 && s_sup <= 1.0)) {
    throw ParameterError("fuse_scores: scores must lie in [-1, 1], got (" + std::to_string(s_unsup) + ", " +
                         std::to_string(s_sup) + ")");
  }
  return w.w_unsup * s_unsup + w.w_sup * s_sup;
}

/// Ids present in exactly one of the two stores.
inline std::vector<std::string> id_symmetric_difference(const FeatureStore& a, const FeatureStore& b) {
  const auto x = a.id_set(), y = b.id_set();
  std::vector<std::string> out;
  std::set_symmetric_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
  return out;
}

/// Fuses the per-id cosines of an unsupervised and a supervised store and
/// ranks the candidates; component scores are kept for auditing.
inline std::vector<FusedHit> fused_query(const FeatureStore& store_u, std::span<const double> q_u,
                                         const FeatureStore& store_s, std::span<const double> q_s,
                                         const FusionWeights& w, int k) {
  if (k < 1) throw ParameterError("fused_query: k must be >= 1");
  w.validate();
  if (store_u.source != "unsupervised" || store_s.source != "supervised") {
    throw DataError("fused_query: expected an unsupervised and a supervised store, got '" + store_u.source +
                    "' and '" + store_s.source + "'");
  }
  const auto diff = id_symmetric_difference(store_u, store_s);
  if (!diff.empty()) {
    std::string msg = "fused_query: stores index different ids; symmetric difference:";
    for (const auto& id : diff) msg += " " + id;
    throw DataError(msg);
  }
  check_query(store_u, q_u);
  check_query(store_s, q_s);
  std::unordered_map<std::string, const EmbeddingRecord*> sup;
  for (const auto& r : store_s.records) sup.emplace(r.id, &r);
  std::vector<FusedHit> hits;
  hits.reserve(store_u.size());
  for (const auto& r : store_u.records) {
    const double su = detail::unit_cosine(r.vector, q_u);
    const double ss = detail::unit_cosine(sup.at(r.id)->vector, q_s);
    hits.push_back({r.id, fuse_scores(su, ss, w), su, ss});
  }
  detail::rank(hits);
  if (hits.size() > static_cast<std::size_t>(k)) hits.resize(k);
  return hits;
}

// ---------------------------------------------------------------------------
// Persistence
//
//   GLYPHSTORE v1 dim=<d> source=<tag>[ encoder=<16 hex>]
//   <id>\t<label or ->\t<v1>,<v2>,...,<vd>

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string encode_store(const FeatureStore& s) {
  std::string out = "GLYPHSTORE v1 dim=" + std::to_string(s.dim) + " source=" + s.source;
  if (!s.encoder_checksum.empty()) out += " encoder=" + s.encoder_checksum;
  out += '\n';
  for (const auto& r : s.records) {
    out += r.id;
    out += '\t';
    out += r.label ? std::to_string(*r.label) : std::string("-");
    out += '\t';
    for (std::size_t i = 0; i < r.vector.size(); ++i) {
      if (i) out += ',';
      out += format_double(r.vector[i]);
    }
    out += '\n';
  }
  return out;
}

inline FeatureStore decode_store(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("store: empty file");
  FeatureStore s;
  {
    std::istringstream h(line);
    std::string magic, version, tok;
    h >> magic >> version;
    if (magic != "GLYPHSTORE" || version != "v1") throw DataError("store line 1: expected 'GLYPHSTORE v1'");
    bool have_dim = false, have_source = false;
    while (h >> tok) {
      const auto eq = tok.find('=');
      const std::string key = tok.substr(0, eq), val = eq == std::string::npos ? "" : tok.substr(eq + 1);
      if (key == "dim") {
        const auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), s.dim);
        if (ec != std::errc() || p != val.data() + val.size() || s.dim < 1) {
          throw DataError("store line 1: bad dim '" + val + "'");
        }
        have_dim = true;
      } else if (key == "source") {
        if (!valid_source(val)) throw DataError("store line 1: unknown source '" + val + "'");
        s.source = val;
        have_source = true;
      } else if (key == "encoder") {
        s.encoder_checksum = val;
      } else {
        throw DataError("store line 1: unknown header field '" + tok + "'");
      }
    }
    if (!have_dim || !have_source) throw DataError("store line 1: header needs dim= and source=");
  }
  std::set<std::string> seen;
  for (int lineno = 2; std::getline(in, line); ++lineno) {
    const std::string where = "store line " + std::to_string(lineno);
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw DataError(where + ": expected id<TAB>label<TAB>values");
    EmbeddingRecord r;
    r.id = line.substr(0, t1);
    detail::check_id(r.id, where);
    if (!seen.insert(r.id).second) throw DataError(where + ": duplicate id '" + r.id + "'");
    const std::string label = line.substr(t1 + 1, t2 - t1 - 1);
    if (label != "-") {
      int v = 0;
      const auto [p, ec] = std::from_chars(label.data(), label.data() + label.size(), v);
      if (ec != std::errc() || p != label.data() + label.size() || v < 0) {
        throw DataError(where + ": bad label '" + label + "'");
      }
      r.label = v;
    }
    const char* p = line.data() + t2 + 1;
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      const auto [q, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw DataError(where + ": bad value at column " + std::to_string(p - line.data() + 1));
      r.vector.push_back(v);
      p = q;
      if (p < end) {
        if (*p != ',') throw DataError(where + ": expected ',' at column " + std::to_string(p - line.data() + 1));
        ++p;
      }
    }
    if (static_cast<int>(r.vector.size()) != s.dim) {
      throw DimensionError(where + ": " + std::to_string(r.vector.size()) + " values, header declares dim=" +
                           std::to_string(s.dim));
    }
    const double n = detail::norm(r.vector);
    if (!(std::abs(n - 1.0) <= kStoreNormTolerance)) {
      throw DataError(where + ": vector norm " + format_double(n) + " is not 1 within 1e-9");
    }
    s.records.push_back(std::move(r));
  }
  return s;
}

inline void save_store(const FeatureStore& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto text = encode_store(s);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

inline FeatureStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_store(buf.str());
  } catch (const DimensionError& e) {
    throw DimensionError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace glyph
