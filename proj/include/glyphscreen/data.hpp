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
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "glyphscreen/error.hpp"
#include "glyphscreen/imageops.hpp"
#include "glyphscreen/rng.hpp"

// Dataset manifests, the synthetic glyph generator, key = value configs and
// retrieval metrics.

namespace glyph {

namespace fs = std::filesystem;

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto t = line.find('\t', start);
    out.push_back(line.substr(start, t == std::string::npos ? std::string::npos : t - start));
    if (t == std::string::npos) break;
    start = t + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

struct ManifestRecord {
  std::string path;  // relative to the manifest's directory
  std::string id;
  std::string label;
};

struct Manifest {
  fs::path root;
  std::vector<ManifestRecord> records;
  std::vector<std::string> classes;  // ascending; position is the class index

  std::size_t size() const { return records.size(); }
  int num_classes() const { return static_cast<int>(classes.size()); }

  int class_index(const std::string& label) const {
    const auto it = std::lower_bound(classes.begin(), classes.end(), label);
    if (it == classes.end() || *it != label) throw DataError("manifest: unknown label '" + label + "'");
    return static_cast<int>(it - classes.begin());
  }

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(class_index(r.label));
    return out;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& r : records) out.push_back(r.id);
    return out;
  }

  fs::path resolve(const ManifestRecord& r) const {
    const fs::path p(r.path);
    return p.is_absolute() ? p : root / p;
  }

  std::vector<GrayImage> load_images() const {
    std::vector<GrayImage> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(read_pgm(resolve(r)));
    return out;
  }

  std::string encode() const {
    std::string out;
    for (const auto& r : records) out += r.path + "\t" + r.id + "\t" + r.label + "\n";
    return out;
  }

  /// Records at `idx`, in that order, with the class list recomputed.
  Manifest subset(const std::vector<std::size_t>& idx) const {
    Manifest m{root, {}, {}};
    for (auto i : idx) m.records.push_back(records.at(i));
    m.reindex();
    return m;
  }

  void reindex() {
    std::set<std::string> labels;
    for (const auto& r : records) labels.insert(r.label);
    classes.assign(labels.begin(), labels.end());
  }
};

/// Parses `path\tid\tlabel` lines. Blank lines and lines starting with '#'
/// are skipped. When `check_paths` is set every image must exist under root.
inline Manifest parse_manifest(const std::string& text, const fs::path& root, bool check_paths = true) {
  Manifest m{root, {}, {}};
  std::map<std::string, int> first_line;
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = "manifest line " + std::to_string(lineno);
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw DataError(where + ": expected 3 tab-separated fields (path, id, label), got " +
                      std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      if (f.empty()) throw DataError(where + ": empty field");
    }
    ManifestRecord r{fields[0], fields[1], fields[2]};
    const auto [it, fresh] = first_line.emplace(r.id, lineno);
    if (!fresh) {
      throw DataError(where + ": duplicate id '" + r.id + "' (first on line " + std::to_string(it->second) + ")");
    }
    if (check_paths && !fs::is_regular_file(m.resolve(r))) {
      throw DataError(where + ": image not found: " + m.resolve(r).string());
    }
    m.records.push_back(std::move(r));
  }
  if (m.records.empty()) throw DataError("empty manifest");
  m.reindex();
  return m;
}

inline Manifest load_manifest(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw DataError("manifest not found: " + path.string());
  try {
    return parse_manifest(read_text_file(path), path.parent_path());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// Per-class held-out split. Each class contributes round(fraction * n_c)
/// queries, capped so at least one gallery sample remains.
struct Split {
  std::vector<std::size_t> gallery;
  std::vector<std::size_t> queries;
};

inline Split split_holdout(const std::vector<int>& labels, double query_fraction, std::uint64_t seed) {
  if (!(query_fraction >= 0.0 && query_fraction < 1.0)) throw ParameterError("split: query_fraction must be in [0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Split s;
  for (auto& [c, members] : by_class) {
    Rng rng = make_rng(seed, "split", static_cast<std::uint64_t>(c));
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = members.size();
    const auto q = std::min<std::size_t>(static_cast<std::size_t>(std::lround(query_fraction * n)), n - 1);
    s.queries.insert(s.queries.end(), members.begin(), members.begin() + q);
    s.gallery.insert(s.gallery.end(), members.begin() + q, members.end());
  }
  std::sort(s.gallery.begin(), s.gallery.end());
  std::sort(s.queries.begin(), s.queries.end());
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic glyphs

struct SynthSpec {
  int classes = 8;
  int samples_per_class = 40;
  int size = 32;
  int strokes_min = 2;
  int strokes_max = 4;
  double jitter = 1.5;       // per-vertex displacement, pixels (std. dev.)
  double stroke_width = 2.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (classes < 2) throw ParameterError("synth: classes must be >= 2");
    if (samples_per_class < 1) throw ParameterError("synth: samples_per_class must be >= 1");
    if (size < 8) throw ParameterError("synth: size must be >= 8");
    if (strokes_min < 1 || strokes_max < strokes_min) throw ParameterError("synth: bad stroke count range");
    if (!(jitter >= 0.0)) throw ParameterError("synth: jitter must be >= 0");
    if (!(stroke_width > 0.0)) throw ParameterError("synth: stroke_width must be > 0");
  }
};

struct Point {
  double x = 0.0, y = 0.0;
};
using Polyline = std::vector<Point>;

inline std::vector<Polyline> synth_prototype(const SynthSpec& spec, int cls) {
  Rng rng = make_rng(spec.seed, "synth.prototype", static_cast<std::uint64_t>(cls));
  const double lo = 0.15 * spec.size, hi = 0.85 * spec.size;
  const int strokes = spec.strokes_min + static_cast<int>(rng() % (spec.strokes_max - spec.strokes_min + 1));
  std::vector<Polyline> out(strokes);
  for (auto& s : out) {
    const int points = 2 + static_cast<int>(rng() % 2);
    for (int i = 0; i < points; ++i) s.push_back({uniform(rng, lo, hi), uniform(rng, lo, hi)});
  }
  return out;
}

inline double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

/// Dark strokes on a white ground with a one-pixel linear edge ramp.
inline GrayImage rasterize(const std::vector<Polyline>& strokes, int size, double width, std::uint8_t ink = 16) {
  GrayImage img(size, size, kMaxLevel);
  const double half = width / 2.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const Point p{x + 0.5, y + 0.5};
      double d = INFINITY;
      for (const auto& s : strokes) {
        for (std::size_t i = 0; i + 1 < s.size(); ++i) d = std::min(d, segment_distance(p, s[i], s[i + 1]));
      }
      const double cover = std::clamp(half + 0.5 - d, 0.0, 1.0);
      img.at(x, y) = to_level(kMaxLevel - cover * (kMaxLevel - ink));
    }
  }
  return img;
}

inline GrayImage synth_sample(const SynthSpec& spec, int cls, int sample) {
  auto strokes = synth_prototype(spec, cls);
  Rng rng = make_rng(spec.seed, "synth.sample",
                     static_cast<std::uint64_t>(cls) * static_cast<std::uint64_t>(spec.samples_per_class) + sample);
  for (auto& s : strokes) {
    for (auto& p : s) {
      p.x = std::clamp(p.x + normal(rng, 0.0, spec.jitter), 1.0, spec.size - 1.0);
      p.y = std::clamp(p.y + normal(rng, 0.0, spec.jitter), 1.0, spec.size - 1.0);
    }
  }
  return rasterize(strokes, spec.size, spec.stroke_width);
}

inline std::string synth_class_name(int c) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "k%03d", c);
  return buf;
}

inline std::string synth_id(int c, int s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "k%03d_%04d", c, s);
  return buf;
}

/// Writes images/<id>.pgm and manifest.tsv under `out_dir`.
inline Manifest gen_synthetic(const SynthSpec& spec, const fs::path& out_dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec) throw DataError("cannot create " + (out_dir / "images").string() + ": " + ec.message());
  Manifest m{out_dir, {}, {}};
  for (int c = 0; c < spec.classes; ++c) {
    for (int s = 0; s < spec.samples_per_class; ++s) {
      const std::string id = synth_id(c, s);
      ManifestRecord r{"images/" + id + ".pgm", id, synth_class_name(c)};
      write_pgm(synth_sample(spec, c, s), m.resolve(r));
      m.records.push_back(std::move(r));
    }
  }
  m.reindex();
  write_text_file(out_dir / "manifest.tsv", m.encode());
  return m;
}

// ---------------------------------------------------------------------------
// key = value configuration

class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "config") {
    Config c;
    std::istringstream in(text);
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string body = trim(line);
      if (body.empty()) continue;
      const std::string where = origin + " line " + std::to_string(lineno);
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value'");
      std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
      if (key.empty()) throw UsageError(where + ": empty key");
      if (!c.values_.emplace(key, value).second) throw UsageError(where + ": duplicate key '" + key + "'");
      c.order_.push_back(key);
    }
    return c;
  }

  static Config load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const { return values_.at(key); }
  const std::vector<std::string>& keys() const { return order_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

// ---------------------------------------------------------------------------
// Retrieval metrics

struct RetrievalMetrics {
  std::vector<int> ks;
  std::vector<double> top_k;  // parallel to ks
  double mrr = 0.0;
  std::size_t queries = 0;
};

/// Ranked candidate ids for query number i, best first.
using Ranker = std::function<std::vector<std::string>(std::size_t)>;

/// Top-k same-class hit rate and mean reciprocal rank of the first
/// same-class hit. The query's own id is removed from its ranking.
inline RetrievalMetrics eval_retrieval(const std::vector<std::string>& query_ids,
                                       const std::map<std::string, int>& labels, std::vector<int> ks,
                                       const Ranker& rank) {
  if (ks.empty()) throw ParameterError("eval: at least one k is required");
  for (int k : ks) {
    if (k < 1) throw ParameterError("eval: k must be >= 1");
  }
  RetrievalMetrics m;
  m.ks = ks;
  m.top_k.assign(ks.size(), 0.0);
  m.queries = query_ids.size();
  if (query_ids.empty()) return m;
  for (std::size_t qi = 0; qi < query_ids.size(); ++qi) {
    const auto q = labels.find(query_ids[qi]);
    if (q == labels.end()) throw DataError("eval: query id '" + query_ids[qi] + "' has no label");
    std::size_t pos = 0, first_hit = 0;
    for (const auto& id : rank(qi)) {
      if (id == query_ids[qi]) continue;
      ++pos;
      const auto c = labels.find(id);
      if (c == labels.end()) throw DataError("eval: candidate id '" + id + "' has no label");
      if (c->second == q->second) {
        first_hit = pos;
        break;
      }
    }
    if (first_hit == 0) continue;
    m.mrr += 1.0 / static_cast<double>(first_hit);
    for (std::size_t j = 0; j < ks.size(); ++j) {
      if (first_hit <= static_cast<std::size_t>(ks[j])) m.top_k[j] += 1.0;
    }
  }
  const double n = static_cast<double>(query_ids.size());
  m.mrr /= n;
  for (auto& v : m.top_k) v /= n;
  return m;
}

}  // namespace glyph
