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

// glyphscreen: command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric or training
// error. A `--config` file of `key = value` lines supplies defaults for any
// long option of the chosen subcommand (or a global option); keys use
// underscores or dashes interchangeably. Flags on the command line win.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "glyphscreen/data.hpp"
#include "glyphscreen/index.hpp"
#include "glyphscreen/pipeline.hpp"
#include "glyphscreen/simsiam.hpp"
#include "glyphscreen/supervised.hpp"

namespace {

using namespace glyph;
namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string out = ".";
};

struct AugmentOpts {
  double rotation_min = -15.0, rotation_max = 15.0;
  double gamma_min = 0.7, gamma_max = 1.5, gamma_gain = 1.0;
  bool equalize = true;

  AugmentConfig get() const {
    AugmentConfig a;
    a.rotation_range_deg = {rotation_min, rotation_max};
    a.gamma_range = {gamma_min, gamma_max};
    a.gamma_gain = gamma_gain;
    a.apply_equalization = equalize;
    return a;
  }
};

struct TrainOpts {
  std::string manifest;
  int epochs = 30;
  int batch_size = 32;
  double base_lr = 0.05, momentum = 0.9, weight_decay = 1e-4;
  std::vector<int> widths{16, 32, 64, 128}, depths{1, 2, 2, 1};
  int projection_width = 128;
  double query_fraction = 0.0;
  AugmentOpts augment;

  TrainConfig get(std::uint64_t seed) const {
    TrainConfig c;
    c.plan.widths = widths;
    c.plan.depths = depths;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.base_lr = base_lr;
    c.momentum = momentum;
    c.weight_decay = weight_decay;
    c.seed = seed;
    c.augment = augment.get();
    return c;
  }
};

struct Opts {
  Globals g;
  SynthSpec synth;
  AugmentOpts pre_aug;
  std::string manifest, image, checkpoint, store, dump_views;
  std::string store_unsup, store_sup, ckpt_unsup, ckpt_sup;
  double rotate = 0.0, gamma = 1.0, gamma_gain = 1.0;
  bool equalize = true, components = false;
  TrainOpts train;
  int k = 5, views = 0, count = 8, size = 32;
  std::vector<int> ks{1, 5};
  double w_unsup = 0.5, query_fraction = 0.0;
};

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError(flag + " is required");
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError("cannot create " + p.string() + ": " + ec.message());
}

class JsonLines {
 public:
  explicit JsonLines(const fs::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw DataError("cannot write " + path.string());
  }
  void operator()(const Json& j) {
    const std::string line = j.dump();
    out_ << line << '\n';
    out_.flush();
    std::cerr << line << '\n';
  }

 private:
  std::ofstream out_;
  fs::path path_;
};

std::string csv(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

/// Manifest records used for training and indexing: everything outside the
/// held-out query split.
Manifest gallery_of(const Manifest& m, double query_fraction, std::uint64_t seed) {
  return m.subset(split_holdout(m.labels(), query_fraction, seed).gallery);
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_gen_synth(const Opts& o) {
  auto spec = o.synth;
  spec.seed = o.g.seed;
  const auto m = gen_synthetic(spec, o.g.out);
  std::printf("%zu images, %d classes -> %s\n", m.size(), m.num_classes(), (fs::path(o.g.out) / "manifest.tsv").c_str());
  return 0;
}

int cmd_preprocess(const Opts& o) {
  require(o.manifest, "--manifest");
  const auto m = load_manifest(o.manifest);
  const fs::path out = o.g.out;
  ensure_dir(out / "images");
  Manifest written{out, {}, {}};
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& r = m.records[i];
    GrayImage img = rotate(read_pgm(m.resolve(r)), o.rotate);
    if (o.equalize) img = equalize(img);
    img = gamma_transform(img, o.gamma_gain, o.gamma);
    ManifestRecord w{"images/" + r.id + ".pgm", r.id, r.label};
    write_pgm(img, written.resolve(w));
    written.records.push_back(std::move(w));
  }
  write_text_file(out / "manifest.tsv", written.encode());
  if (!o.dump_views.empty()) {
    const fs::path dir = o.dump_views;
    ensure_dir(dir);
    auto aug = o.pre_aug.get();
    aug.seed = derive_seed(o.g.seed, "augment", 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto [a, b] = augment_pair(read_pgm(m.resolve(m.records[i])), aug, i);
      write_pgm(a, dir / (m.records[i].id + "_v1.pgm"));
      write_pgm(b, dir / (m.records[i].id + "_v2.pgm"));
    }
  }
  std::printf("%zu images -> %s\n", m.size(), (out / "manifest.tsv").c_str());
  return 0;
}

int cmd_train_simsiam(const Opts& o) {
  require(o.train.manifest, "--manifest");
  const auto m = gallery_of(load_manifest(o.train.manifest), o.train.query_fraction, o.g.seed);
  SimSiamConfig cfg;
  static_cast<TrainConfig&>(cfg) = o.train.get(o.g.seed);
  cfg.projection_width = o.train.projection_width;
  const fs::path out = o.g.out;
  ensure_dir(out);
  JsonLines metrics(out / "simsiam_metrics.jsonl");
  const auto images = m.load_images();
  auto result = train_simsiam(images, cfg, std::ref(metrics));
  save_encoder(result.model, out / "simsiam.ckpt");
  return 0;
}

int cmd_train_sup(const Opts& o) {
  require(o.train.manifest, "--manifest");
  const auto full = load_manifest(o.train.manifest);
  const auto m = gallery_of(full, o.train.query_fraction, o.g.seed);
  LabeledDataset data;
  data.ids = m.ids();
  data.images = m.load_images();
  for (const auto& r : m.records) data.labels.push_back(full.class_index(r.label));
  data.num_classes = full.num_classes();
  const fs::path out = o.g.out;
  ensure_dir(out);
  JsonLines metrics(out / "supervised_metrics.jsonl");
  auto result = train_supervised(data, o.train.get(o.g.seed), std::ref(metrics));
  save_supervised(result.model, out / "supervised.ckpt");
  return 0;
}

int cmd_export_fused(const Opts& o) {
  require(o.checkpoint, "--checkpoint");
  const auto model = load_supervised(o.checkpoint);
  ensure_dir(o.g.out);
  const fs::path path = fs::path(o.g.out) / "fused.ckpt";
  save_fused(export_fused(model), path);
  std::printf("%s\n", path.c_str());
  return 0;
}

int cmd_embed(const Opts& o) {
  require(o.checkpoint, "--checkpoint");
  if (o.image.empty() == o.manifest.empty()) throw UsageError("give exactly one of --image or --manifest");
  const auto enc = load_any_encoder(o.checkpoint);
  if (!o.image.empty()) {
    std::printf("%s\t%s\n", o.image.c_str(), csv(enc.embed_one(read_pgm(o.image))).c_str());
    return 0;
  }
  const auto m = load_manifest(o.manifest);
  const auto vecs = enc.embed(m.load_images());
  for (std::size_t i = 0; i < m.size(); ++i) std::printf("%s\t%s\n", m.records[i].id.c_str(), csv(vecs[i]).c_str());
  return 0;
}

int cmd_build_store(const Opts& o) {
  require(o.checkpoint, "--checkpoint");
  require(o.manifest, "--manifest");
  const auto full = load_manifest(o.manifest);
  const auto m = gallery_of(full, o.query_fraction, o.g.seed);
  const auto enc = load_any_encoder(o.checkpoint);
  std::vector<std::optional<int>> labels;
  for (const auto& r : m.records) labels.emplace_back(full.class_index(r.label));
  const auto ids = m.ids();
  const auto store = build_store(m.load_images(), ids, labels, enc);
  const fs::path path = o.store.empty() ? fs::path(o.g.out) / (enc.source + ".gst") : fs::path(o.store);
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  save_store(store, path);
  std::printf("%zu records, dim %d, %s -> %s\n", store.size(), store.dim, store.source.c_str(), path.c_str());
  return 0;
}

int cmd_query(const Opts& o) {
  require(o.store, "--store");
  require(o.image, "--image");
  require(o.checkpoint, "--checkpoint");
  const auto store = load_store(o.store);
  const auto enc = load_any_encoder(o.checkpoint);
  check_store_encoder(store, enc);
  const auto hits = query(store, enc.embed_one(read_pgm(o.image)), o.k);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    std::printf("%zu\t%s\t%s\n", i + 1, hits[i].id.c_str(), format_double(hits[i].score).c_str());
  }
  return 0;
}

struct FusedSetup {
  FeatureStore store_u, store_s;
  Encoder enc_u, enc_s;
};

FusedSetup load_fused_setup(const Opts& o) {
  require(o.store_unsup, "--store-unsup");
  require(o.store_sup, "--store-sup");
  require(o.ckpt_unsup, "--ckpt-unsup");
  require(o.ckpt_sup, "--ckpt-sup");
  FusedSetup f{load_store(o.store_unsup), load_store(o.store_sup), load_any_encoder(o.ckpt_unsup),
               load_any_encoder(o.ckpt_sup)};
  check_store_encoder(f.store_u, f.enc_u);
  check_store_encoder(f.store_s, f.enc_s);
  return f;
}

int cmd_fused_query(const Opts& o) {
  require(o.image, "--image");
  const auto f = load_fused_setup(o);
  const auto img = read_pgm(o.image);
  const auto hits = fused_query(img, f.store_u, f.enc_u, f.store_s, f.enc_s, FusionWeights::from_unsup(o.w_unsup), o.k);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    std::printf("%zu\t%s\t%s", i + 1, hits[i].id.c_str(), format_double(hits[i].score).c_str());
    if (o.components) {
      std::printf("\t%s\t%s", format_double(hits[i].s_unsup).c_str(), format_double(hits[i].s_sup).c_str());
    }
    std::printf("\n");
  }
  return 0;
}

std::map<std::string, int> store_labels(const FeatureStore& s, std::map<std::string, int> into) {
  for (const auto& r : s.records) {
    if (r.label) into[r.id] = *r.label;
  }
  return into;
}

int cmd_eval(const Opts& o) {
  require(o.manifest, "--manifest");
  const auto full = load_manifest(o.manifest);
  const auto split = split_holdout(full.labels(), o.query_fraction, o.g.seed);
  const auto queries = o.query_fraction > 0.0 ? full.subset(split.queries) : full;
  std::map<std::string, int> labels;
  for (const auto& r : queries.records) labels[r.id] = full.class_index(r.label);
  const auto images = queries.load_images();
  const auto qids = queries.ids();

  const bool have_u = !o.store_unsup.empty() || !o.ckpt_unsup.empty();
  const bool have_s = !o.store_sup.empty() || !o.ckpt_sup.empty();
  Json report;
  RetrievalMetrics metrics;
  if (have_u && have_s) {
    const auto f = load_fused_setup(o);
    const auto w = FusionWeights::from_unsup(o.w_unsup);
    const auto qu = f.enc_u.embed(images), qs = f.enc_s.embed(images);
    labels = store_labels(f.store_u, labels);
    const int n = static_cast<int>(f.store_u.size());
    metrics = eval_retrieval(qids, labels, o.ks, [&](std::size_t i) {
      std::vector<std::string> ids;
      for (const auto& h : fused_query(f.store_u, qu[i], f.store_s, qs[i], w, n)) ids.push_back(h.id);
      return ids;
    });
    report["mode"] = "fused";
    report["w_unsup"] = w.w_unsup;
    report["w_sup"] = w.w_sup;
  } else if (have_u || have_s) {
    const std::string store_path = have_u ? o.store_unsup : o.store_sup;
    const std::string ckpt_path = have_u ? o.ckpt_unsup : o.ckpt_sup;
    require(store_path, have_u ? "--store-unsup" : "--store-sup");
    require(ckpt_path, have_u ? "--ckpt-unsup" : "--ckpt-sup");
    const auto store = load_store(store_path);
    const auto enc = load_any_encoder(ckpt_path);
    check_store_encoder(store, enc);
    const auto q = enc.embed(images);
    labels = store_labels(store, labels);
    const int n = static_cast<int>(store.size());
    metrics = eval_retrieval(qids, labels, o.ks, [&](std::size_t i) {
      std::vector<std::string> ids;
      for (const auto& h : query(store, q[i], n)) ids.push_back(h.id);
      return ids;
    });
    report["mode"] = store.source;
  } else {
    throw UsageError("eval needs --store-unsup/--ckpt-unsup, --store-sup/--ckpt-sup, or both");
  }
  report["queries"] = metrics.queries;
  Json top = Json::object();
  for (std::size_t j = 0; j < metrics.ks.size(); ++j) top[std::to_string(metrics.ks[j])] = metrics.top_k[j];
  report["top_k"] = top;
  report["mrr"] = metrics.mrr;
  std::printf("%s\n", report.dump().c_str());
  return 0;
}

int cmd_reparam_check(const Opts& o) {
  require(o.checkpoint, "--checkpoint");
  auto model = load_supervised(o.checkpoint);
  const auto fused = export_fused(model);
  Rng rng = make_rng(o.g.seed, "reparam-check");
  std::vector<GrayImage> imgs;
  for (int i = 0; i < o.count; ++i) {
    GrayImage img(o.size, o.size, 0);
    for (int y = 0; y < o.size; ++y) {
      for (int x = 0; x < o.size; ++x) img.at(x, y) = static_cast<std::uint8_t>(rng() % kLevels);
    }
    imgs.push_back(std::move(img));
  }
  NoGradGuard no_grad;
  model.set_mode(BnMode::eval);
  const auto batch = images_to_batch(imgs);
  const auto a = model.net.features(batch);
  const auto b = fused.net.features(batch);
  double dev = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) dev = std::max(dev, std::abs(a.values()[i] - b.values()[i]));
  std::printf("max_abs_deviation\t%s\n", format_double(dev).c_str());
  return dev < 1e-6 ? 0 : 3;
}

// ---------------------------------------------------------------------------
// Wiring

void add_augment_options(CLI::App* s, AugmentOpts& a) {
  s->add_option("--rotation-min", a.rotation_min, "lower rotation bound, degrees");
  s->add_option("--rotation-max", a.rotation_max, "upper rotation bound, degrees");
  s->add_option("--gamma-min", a.gamma_min, "lower gamma bound");
  s->add_option("--gamma-max", a.gamma_max, "upper gamma bound");
  s->add_option("--gamma-gain", a.gamma_gain, "gain A of the gamma transform");
  s->add_option("--equalize", a.equalize, "equalize views (true/false)");
}

void add_train_options(CLI::App* s, TrainOpts& t, bool projection) {
  s->add_option("--manifest", t.manifest, "dataset manifest (path<TAB>id<TAB>label)");
  s->add_option("--epochs", t.epochs)->check(CLI::PositiveNumber);
  s->add_option("--batch-size", t.batch_size);
  s->add_option("--base-lr", t.base_lr, "base rate; effective rate is base * batch / 256");
  s->add_option("--momentum", t.momentum);
  s->add_option("--weight-decay", t.weight_decay);
  s->add_option("--widths", t.widths, "stage widths")->delimiter(',');
  s->add_option("--depths", t.depths, "stage depths")->delimiter(',');
  s->add_option("--query-fraction", t.query_fraction, "per-class fraction held out for evaluation");
  if (projection) s->add_option("--projection-width", t.projection_width);
  add_augment_options(s, t.augment);
}

void add_fused_inputs(CLI::App* s, Opts& o) {
  s->add_option("--store-unsup", o.store_unsup, "store built from the SimSiam encoder");
  s->add_option("--store-sup", o.store_sup, "store built from the supervised encoder");
  s->add_option("--ckpt-unsup", o.ckpt_unsup, "SimSiam checkpoint");
  s->add_option("--ckpt-sup", o.ckpt_sup, "supervised checkpoint (train-form or fused)");
  s->add_option("--w-unsup", o.w_unsup, "weight of the unsupervised score; the other gets 1 - w")
      ->check(CLI::Range(0.0, 1.0));
}

struct Cli {
  CLI::App app{"Similar-glyph screening: preprocessing, training, export and retrieval."};
  Opts o;
  std::map<std::string, std::function<int(const Opts&)>> handlers;

  Cli() {
    app.set_version_flag("--version", "glyphscreen 0.1.0");
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", o.g.seed, "root seed for every random stream");
    app.add_option("--config", o.g.config, "key = value defaults for options");
    app.add_option("--out", o.g.out, "output directory");

    auto* s = app.add_subcommand("gen-synth", "write a synthetic glyph dataset and manifest to --out");
    s->add_option("--classes", o.synth.classes);
    s->add_option("--samples-per-class", o.synth.samples_per_class);
    s->add_option("--size", o.synth.size, "image side in pixels");
    s->add_option("--strokes-min", o.synth.strokes_min);
    s->add_option("--strokes-max", o.synth.strokes_max);
    s->add_option("--jitter", o.synth.jitter, "vertex jitter std. dev., pixels");
    s->add_option("--stroke-width", o.synth.stroke_width);
    handlers["gen-synth"] = cmd_gen_synth;

    s = app.add_subcommand("preprocess", "rotate, equalize and gamma-transform every manifest image");
    s->add_option("--manifest", o.manifest);
    s->add_option("--rotate", o.rotate, "degrees, counter-clockwise");
    s->add_option("--equalize", o.equalize);
    s->add_option("--gamma", o.gamma)->check(CLI::PositiveNumber);
    s->add_option("--gamma-gain", o.gamma_gain)->check(CLI::PositiveNumber);
    s->add_option("--dump-views", o.dump_views, "also write two augmented views per image here");
    s->add_option("--rotation-min", o.pre_aug.rotation_min);
    s->add_option("--rotation-max", o.pre_aug.rotation_max);
    s->add_option("--gamma-min", o.pre_aug.gamma_min);
    s->add_option("--gamma-max", o.pre_aug.gamma_max);
    handlers["preprocess"] = cmd_preprocess;

    s = app.add_subcommand("train-simsiam", "SimSiam pre-training; writes simsiam.ckpt and metrics");
    add_train_options(s, o.train, true);
    handlers["train-simsiam"] = cmd_train_simsiam;

    s = app.add_subcommand("train-sup", "supervised RepVGG training; writes supervised.ckpt and metrics");
    add_train_options(s, o.train, false);
    handlers["train-sup"] = cmd_train_sup;

    s = app.add_subcommand("export-fused", "re-parameterize a supervised checkpoint into fused.ckpt");
    s->add_option("--checkpoint", o.checkpoint);
    handlers["export-fused"] = cmd_export_fused;

    s = app.add_subcommand("embed", "print unit-norm embeddings");
    s->add_option("--checkpoint", o.checkpoint);
    s->add_option("--image", o.image);
    s->add_option("--manifest", o.manifest);
    handlers["embed"] = cmd_embed;

    s = app.add_subcommand("build-store", "embed the gallery into a .gst store");
    s->add_option("--checkpoint", o.checkpoint);
    s->add_option("--manifest", o.manifest);
    s->add_option("--store", o.store, "output path (default <out>/<source>.gst)");
    s->add_option("--query-fraction", o.query_fraction, "per-class fraction left out of the store");
    handlers["build-store"] = cmd_build_store;

    s = app.add_subcommand("query", "top-k cosine retrieval: rank<TAB>id<TAB>score");
    s->add_option("--store", o.store);
    s->add_option("--image", o.image);
    s->add_option("--checkpoint", o.checkpoint, "encoder that built the store");
    s->add_option("--k", o.k)->check(CLI::PositiveNumber);
    handlers["query"] = cmd_query;

    s = app.add_subcommand("fused-query", "weighted fusion of unsupervised and supervised cosine scores");
    add_fused_inputs(s, o);
    s->add_option("--image", o.image);
    s->add_option("--k", o.k)->check(CLI::PositiveNumber);
    s->add_flag("--components", o.components, "append the two component scores to each line");
    handlers["fused-query"] = cmd_fused_query;

    s = app.add_subcommand("eval", "top-k accuracy and MRR over held-out queries");
    add_fused_inputs(s, o);
    s->add_option("--manifest", o.manifest);
    s->add_option("--ks", o.ks, "comma-separated k values")->delimiter(',');
    s->add_option("--query-fraction", o.query_fraction, "per-class query fraction; 0 queries every record");
    handlers["eval"] = cmd_eval;

    s = app.add_subcommand("reparam-check", "compare train-form and fused features; exit 0 iff < 1e-6");
    s->add_option("--checkpoint", o.checkpoint, "supervised train-form checkpoint");
    s->add_option("--count", o.count, "random probe images")->check(CLI::PositiveNumber);
    s->add_option("--size", o.size, "probe image side")->check(CLI::PositiveNumber);
    handlers["reparam-check"] = cmd_reparam_check;
  }

  static std::string normalize_key(std::string k) {
    std::replace(k.begin(), k.end(), '_', '-');
    return k;
  }

  static CLI::Option* find_option(CLI::App* a, const std::string& name) {
    for (auto* opt : a->get_options()) {
      for (const auto& l : opt->get_lnames()) {
        if (l == name) return opt;
      }
    }
    return nullptr;
  }

  /// Command-line arguments extended with config values for options the
  /// command line left unset.
  std::vector<std::string> with_config(std::vector<std::string> args) {
    if (o.g.config.empty()) return args;
    const auto cfg = Config::load(o.g.config);
    auto* sub = app.get_subcommands().front();
    for (const auto& key : cfg.keys()) {
      const std::string name = normalize_key(key);
      if (name == "config") throw UsageError(o.g.config + ": 'config' cannot be set from a config file");
      CLI::Option* opt = find_option(sub, name);
      if (!opt) opt = find_option(&app, name);
      if (!opt) {
        bool known = false;
        for (auto* other : app.get_subcommands({})) known = known || find_option(other, name);
        if (!known) throw UsageError(o.g.config + ": unknown key '" + key + "'");
        continue;
      }
      if (opt->count() > 0) continue;
      args.push_back("--" + name);
      args.push_back(cfg.get(key));
    }
    return args;
  }

  int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
      parse(args);
      const auto merged = with_config(args);
      if (merged.size() != args.size()) {
        app.clear();
        o = Opts{};
        parse(merged);
      }
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      std::cerr << "error: " << e.what() << "\n\n" << app.help();
      return 1;
    }
    return handlers.at(app.get_subcommands().front()->get_name())(o);
  }

  void parse(std::vector<std::string> args) {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  }
};

}  // namespace

int main(int argc, char** argv) {
  try {
    Cli cli;
    return cli.run(argc, argv);
  } catch (const glyph::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const glyph::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const glyph::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
