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

// Acceptance run: one PASS/FAIL line per criterion on stdout, timings and
// a summary on stderr. Exit status is 0 only when every criterion passes.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>

#include "glyphscreen/data.hpp"
#include "glyphscreen/index.hpp"
#include "glyphscreen/optim.hpp"
#include "glyphscreen/pipeline.hpp"
#include "glyphscreen/repvgg.hpp"
#include "glyphscreen/simsiam.hpp"
#include "glyphscreen/supervised.hpp"
#include "test_util.hpp"

namespace {

using namespace glyph;
using testing::max_abs_diff;
using testing::random_bn;
using testing::random_tensor;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

RepVGGBlock random_block(Rng& rng, int in, int out, int stride, bool with_identity) {
  auto b = RepVGGBlock::create(in, out, stride, rng, with_identity);
  b.dense.bn = random_bn(rng, out, BnMode::eval);
  b.pointwise.bn = random_bn(rng, out, BnMode::eval);
  if (b.identity) b.identity = random_bn(rng, out, BnMode::eval);
  return b;
}

// 1 -------------------------------------------------------------------------
Outcome reparameterization_equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(101);
  double block_max = 0.0;
  int with_id = 0;
  for (int t = 0; t < 100; ++t) {
    const int stride = 1 + static_cast<int>(rng() % 2);
    const int in = 1 + static_cast<int>(rng() % 16);
    const bool square = rng() % 2 == 0;
    const int out = square ? in : 1 + static_cast<int>(rng() % 16);
    const bool identity = rng() % 2 == 0;
    auto b = random_block(rng, in, out, stride, identity);
    with_id += b.identity.has_value();
    const int hw = 3 + static_cast<int>(rng() % 6);
    const auto x = random_tensor(rng, {2, in, hw, hw});
    const auto fused = reparameterize(b);
    block_max = std::max(block_max, max_abs_diff(b.forward(x).values(), fused.forward(x).values()));
  }
  auto net = build_net(StagePlan{}, rng);
  for (auto& b : net.blocks) {
    b.dense.bn = random_bn(rng, b.out_channels(), BnMode::eval);
    b.pointwise.bn = random_bn(rng, b.out_channels(), BnMode::eval);
    if (b.identity) b.identity = random_bn(rng, b.out_channels(), BnMode::eval);
  }
  const auto x = random_tensor(rng, {4, 1, 32, 32});
  const double net_max = max_abs_diff(net.features(x).values(), reparameterize(net).features(x).values());
  const double secs = seconds_since(t0);
  o.require(block_max < 1e-8, "block deviation " + fmt(block_max) + " >= 1e-8");
  o.require(net_max < 1e-6, "net deviation " + fmt(net_max) + " >= 1e-6");
  o.require(with_id > 0 && with_id < 100, "identity branch coverage");
  o.require(secs < 60.0, "runtime " + fmt(secs) + " s >= 60 s");
  o.note("100 blocks (" + std::to_string(with_id) + " with identity) max " + fmt(block_max) + " < 1e-8, net max " +
         fmt(net_max) + " < 1e-6, " + fmt(secs) + " s");
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome conv_bn_fusion() {
  Outcome o;
  Rng rng(202);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int in = 1 + static_cast<int>(rng() % 8), out = 1 + static_cast<int>(rng() % 8);
    const int k = rng() % 2 ? 3 : 1, stride = 1 + static_cast<int>(rng() % 2), pad = k / 2;
    ConvBNBranch br{random_tensor(rng, {out, in, k, k}), random_bn(rng, out, BnMode::eval)};
    const auto x = random_tensor(rng, {2, in, 5, 5});
    // Reference: naive convolution followed by the scalar BN formula.
    auto ref = testing::conv2d_oracle(x, br.kernel, {}, stride, pad);
    const int ho = (5 + 2 * pad - k) / stride + 1;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const int c = static_cast<int>(i / (ho * ho)) % out;
      const auto& p = br.bn;
      ref[i] = p.gamma.values()[c] * (ref[i] - p.running_mean[c]) / std::sqrt(p.running_var[c] + p.eps) +
               p.beta.values()[c];
    }
    const auto f = fuse_conv_bn(br);
    worst = std::max(worst, max_abs_diff(conv2d(x, f.kernel, f.bias, stride, pad).values(), ref));
  }
  o.require(worst < 1e-10, "deviation " + fmt(worst) + " >= 1e-10");
  o.note("100 branches max " + fmt(worst) + " < 1e-10");
  return o;
}

// 3 -------------------------------------------------------------------------
Outcome autodiff_soundness() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  std::string worst_where;
  auto record = [&](const testing::GradCheckResult& r, const std::string& where) {
    checked += r.checked;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_where = where;
    }
  };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(3000 + seed);
    const std::string s = " seed " + std::to_string(seed);
    for (int stride : {1, 2}) {
      auto x = random_tensor(rng, {2, 2, 4, 4}, true);
      auto w = random_tensor(rng, {3, 2, 3, 3}, true);
      auto b = random_tensor(rng, {3}, true);
      const auto probe = random_tensor(rng, {2, 3, 4 / stride, 4 / stride});
      record(testing::grad_check({x, w, b}, [&] { return sum(mul(conv2d(x, w, b, stride, 1), probe)); }),
             "conv2d" + s);
    }
    for (auto mode : {BnMode::train, BnMode::eval}) {
      auto p = random_bn(rng, 3, mode);
      auto x = random_tensor(rng, {4, 3, 2, 2}, true);
      const auto probe = random_tensor(rng, {4, 3, 2, 2});
      record(testing::grad_check({x, p.gamma, p.beta}, [&] { return sum(mul(batchnorm(x, p), probe)); }),
             "batchnorm" + s);
    }
    {
      auto x = random_tensor(rng, {2, 3, 3, 3}, true);
      auto w = random_tensor(rng, {4, 3}, true);
      auto b = random_tensor(rng, {4}, true);
      auto skip = random_tensor(rng, {2, 4}, true);
      const auto probe = random_tensor(rng, {2, 4});
      record(testing::grad_check({x, w, b, skip},
                                 [&] { return sum(mul(relu(add(linear(adaptive_avg_pool(x), w, b), skip)), probe)); }),
             "linear/pool/relu/add" + s);
    }
    {
      auto a = random_tensor(rng, {3, 4}, true);
      auto b = random_tensor(rng, {3, 4}, true);
      const auto probe = random_tensor(rng, {3, 4});
      record(testing::grad_check({a, b}, [&] {
               return add(sum(mul(l2_normalize(a), probe)), mean(cosine_similarity(a, b)));
             }),
             "l2_normalize/cosine" + s);
      auto x = random_tensor(rng, {2, 6}, true);
      const auto probe2 = random_tensor(rng, {3, 4});
      record(testing::grad_check({x}, [&] { return sum(mul(scale(reshape(x, {3, 4}), -1.5), probe2)); }),
             "reshape/scale/mul/sum" + s);
    }
    {
      Rng init(4000 + seed);
      auto m = SimSiamModel::create(StagePlan{{4, 8}, {1, 1}, 1}, 8, init);
      const auto x1 = random_tensor(rng, {3, 1, 6, 6});
      const auto x2 = random_tensor(rng, {3, 1, 6, 6});
      const testing::FrozenTargetLoss frozen(m, x1, x2);
      record(testing::grad_check(m.parameters(), frozen), "simsiam loss" + s);
    }
  }
  const double secs = seconds_since(t0);
  o.require(worst < 1e-4, "max relative error " + fmt(worst) + " at " + worst_where);
  o.require(secs < 120.0, "runtime " + fmt(secs) + " s >= 120 s");
  o.note("20 seeds, " + std::to_string(checked) + " coordinates, max rel err " + fmt(worst) + " < 1e-4, " +
         fmt(secs) + " s");
  return o;
}

// 4 -------------------------------------------------------------------------
Outcome equalization_exactness() {
  Outcome o;
  Rng rng(404);
  int mismatched = 0, cases = 0;
  auto check = [&](const GrayImage& img) {
    ++cases;
    const auto got = equalize(img), want = testing::equalize_oracle(img);
    mismatched += !std::equal(got.pixels().begin(), got.pixels().end(), want.pixels().begin());
  };
  for (int t = 0; t < 50; ++t) {
    const int w = 1 + static_cast<int>(rng() % 40), h = 1 + static_cast<int>(rng() % 40);
    check(testing::random_image(rng, w, h));
  }
  const GrayImage constant(6, 5, 77);
  check(constant);
  const GrayImage two_level(2, 2, std::vector<std::uint8_t>{0, 0, 255, 255});
  check(two_level);
  const auto c = equalize(constant);
  o.require(std::all_of(c.pixels().begin(), c.pixels().end(), [](auto v) { return v == 255; }),
            "constant image not mapped to 255");
  const auto t = equalize(two_level);
  o.require(t.at(0, 0) == 128 && t.at(0, 1) == 255, "two-level image not mapped 0->128, 255->255");
  o.require(mismatched == 0, std::to_string(mismatched) + " images differ from the CDF oracle");
  o.note(std::to_string(cases) + " images pixel-exact against the CDF oracle");
  return o;
}

// 5 -------------------------------------------------------------------------
Outcome gamma_transform_contracts() {
  Outcome o;
  Rng rng(505);
  std::vector<GrayImage> images;
  for (int t = 0; t < 50; ++t) images.push_back(testing::random_image(rng, 16, 16));
  std::vector<std::uint8_t> ramp(256);
  std::iota(ramp.begin(), ramp.end(), 0);
  images.emplace_back(16, 16, ramp);
  int identity_fail = 0, order_fail = 0, brighten = 0;
  for (const auto& img : images) {
    const auto same = gamma_transform(img, 1.0, 1.0);
    identity_fail += !std::equal(same.pixels().begin(), same.pixels().end(), img.pixels().begin());
    for (double g : {0.4, 1.0, 2.0, 3.7}) {
      const auto out = gamma_transform(img, 1.0, g);
      const auto& in = img.pixels();
      const auto& op = out.pixels();
      for (std::size_t i = 0; i < in.size(); ++i) {
        for (std::size_t j = 0; j < in.size(); j += 7) {
          if (in[i] <= in[j] && op[i] > op[j]) ++order_fail;
        }
      }
    }
    const auto dark = gamma_transform(img, 1.0, 2.0);
    double m_in = 0.0, m_out = 0.0;
    for (auto v : img.pixels()) m_in += v / 255.0;
    for (auto v : dark.pixels()) m_out += v / 255.0;
    brighten += m_out > m_in;
  }
  o.require(identity_fail == 0, "identity changed " + std::to_string(identity_fail) + " images");
  o.require(order_fail == 0, std::to_string(order_fail) + " ordering violations");
  o.require(brighten == 0, "gamma 2 brightened " + std::to_string(brighten) + " images");
  o.note(std::to_string(images.size()) + " images: identity exact, ordering kept, gamma 2 never brightens");
  return o;
}

// 6 -------------------------------------------------------------------------
Outcome simsiam_loss_contracts() {
  Outcome o;
  const StagePlan plan{{4, 8}, {1, 1}, 1};
  int out_of_range = 0;
  double asym = 0.0;
  for (int e = 0; e < 1000; ++e) {
    Rng rng(6000 + e / 10);
    Rng data(7000 + e);
    auto m = SimSiamModel::create(plan, 8, rng);
    const int n = 2 + e % 4;
    const auto x1 = random_tensor(data, {n, 1, 8, 8}, false, 1.0 + e % 3);
    const auto x2 = random_tensor(data, {n, 1, 8, 8});
    const double l = simsiam_loss(m, x1, x2).item();
    out_of_range += !(l >= -1.0 && l <= 1.0);
    if (e % 10 == 0) asym = std::max(asym, std::abs(l - simsiam_loss(m, x2, x1).item()));
  }
  // Null path: with the predictions detached too, only stop-gradient paths remain.
  Rng rng(6601);
  auto m = SimSiamModel::create(plan, 8, rng);
  const auto x1 = random_tensor(rng, {4, 1, 8, 8}), x2 = random_tensor(rng, {4, 1, 8, 8});
  backward(simsiam_loss(m, x1, x2, {true, true}));
  double null_mass = 0.0;
  for (const auto& p : m.parameters()) {
    if (p.has_grad()) {
      for (double g : p.grad()) null_mass += std::abs(g);
    }
  }
  auto id = SimSiamModel::create(plan, 8, rng);
  id.predictor.bypass = true;
  const double forced = simsiam_loss(id, x1, x1).item();
  o.require(out_of_range == 0, std::to_string(out_of_range) + " losses outside [-1, 1]");
  o.require(asym < 1e-12, "view-swap asymmetry " + fmt(asym));
  o.require(null_mass == 0.0, "null-path gradient mass " + fmt(null_mass));
  o.require(forced == -1.0, "p = z loss " + fmt(forced));
  o.note("1000 losses in [-1, 1], swap asymmetry " + fmt(asym) + " < 1e-12, null-path gradient exactly 0, p = z gives " +
         fmt(forced));
  return o;
}

// 7 -------------------------------------------------------------------------
Outcome sgd_and_schedule() {
  Outcome o;
  for (int batch : {32, 64, 256}) {
    SgdState s;
    s.batch_size = batch;
    const long T = 1000;
    const double lr0 = 0.05 * batch / 256.0;
    o.require(cosine_lr(0, T, s) == lr0, "lr(0) for B=" + std::to_string(batch));
    o.require(cosine_lr(T, T, s) == 0.0, "lr(T) for B=" + std::to_string(batch));
    o.require(cosine_lr(T / 2, T, s) == lr0 / 2.0, "lr(T/2) for B=" + std::to_string(batch));
  }
  SgdState s;
  s.weight_decay = 0.0;
  const double lr = 0.1;
  Tensor w = Tensor::from({3}, {1.0, -2.0, 0.5}, true);
  const std::vector<double> g{0.3, -0.7, 1.1};
  std::vector<Tensor> params{w};
  std::vector<double> before(w.values().begin(), w.values().end()), mid;
  double worst = 0.0;
  for (int step = 0; step < 2; ++step) {
    w.zero_grad();
    backward(sum(mul(w, Tensor::from({3}, g))));
    mid.assign(w.values().begin(), w.values().end());
    sgd_step(params, s, lr);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    worst = std::max(worst, std::abs((mid[i] - w.values()[i]) - lr * 1.9 * g[i]));
    worst = std::max(worst, std::abs((before[i] - mid[i]) - lr * g[i]));
  }
  o.require(worst < 1e-15, "momentum recursion deviation " + fmt(worst));
  o.note("schedule endpoints exact for B in {32, 64, 256}; second update = lr*1.9*g within " + fmt(worst));
  return o;
}

// 8 -------------------------------------------------------------------------
std::vector<double> unit_random(Rng& rng, int d, int quantize) {
  std::vector<double> v(d);
  for (auto& x : v) x = quantize ? std::round(normal(rng) * quantize) : normal(rng);
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) v[0] = 1.0;
  double sq = 0.0;
  for (double x : v) sq += x * x;
  for (auto& x : v) x /= std::sqrt(sq);
  return v;
}

FeatureStore random_store(Rng& rng, int n, int d, const std::string& source, int quantize) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vecs;
  for (int i = 0; i < n; ++i) {
    ids.push_back("id" + std::to_string((i * 37) % n) + "_" + std::to_string(i));
    vecs.push_back(unit_random(rng, d, quantize));
  }
  return build_store(ids, {}, vecs, d, source);
}

/// Scores every record and sorts the whole list, highest first, then by id.
std::vector<std::pair<double, std::string>> full_sort_oracle(const FeatureStore& s, const std::vector<double>& q) {
  std::vector<std::pair<double, std::string>> all;
  for (const auto& r : s.records) {
    double dot = 0.0;
    for (int i = 0; i < s.dim; ++i) dot += r.vector[i] * q[i];
    all.emplace_back(std::clamp(dot, -1.0, 1.0), r.id);
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  return all;
}

Outcome retrieval_oracle() {
  Outcome o;
  Rng rng(808);
  int mismatches = 0, queries = 0, ties = 0;
  for (int n : {1, 17, 120, 500}) {
    for (int quantize : {0, 1}) {
      const auto store = random_store(rng, n, 8, "unsupervised", quantize);
      for (int t = 0; t < 50; ++t) {
        const auto q = unit_random(rng, 8, 0);
        const int k = 1 + static_cast<int>(rng() % (n + 5));
        const auto got = query(store, q, k);
        const auto want = full_sort_oracle(store, q);
        ++queries;
        for (std::size_t i = 1; i < want.size(); ++i) ties += want[i].first == want[i - 1].first;
        bool same = got.size() == std::min<std::size_t>(k, want.size());
        for (std::size_t i = 0; same && i < got.size(); ++i) {
          same = got[i].id == want[i].second && got[i].score == want[i].first;
        }
        mismatches += !same;
      }
    }
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " of " + std::to_string(queries) + " queries differ");
  o.note(std::to_string(queries) + " queries on stores up to 500 records identical to the full-sort oracle (" +
         std::to_string(ties) + " tied neighbours)");
  return o;
}

// 9 -------------------------------------------------------------------------
std::string hit_lines(const std::vector<Hit>& hits) {
  std::string s;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    s += std::to_string(i + 1) + "\t" + hits[i].id + "\t" + format_double(hits[i].score) + "\n";
  }
  return s;
}

std::string hit_lines(const std::vector<FusedHit>& hits) {
  std::vector<Hit> plain;
  for (const auto& h : hits) plain.push_back({h.id, h.score});
  return hit_lines(plain);
}

Outcome fusion() {
  Outcome o;
  o.require(fuse_scores(0.8, 0.6, FusionWeights{0.5, 0.5}) == 0.7, "fuse(0.8, 0.6) != 0.7");
  Rng rng(909);
  int reduction_fail = 0;
  for (int t = 0; t < 20; ++t) {
    auto u = random_store(rng, 60, 8, "unsupervised", t % 2);
    auto s = random_store(rng, 60, 5, "supervised", 0);
    for (std::size_t i = 0; i < s.size(); ++i) s.records[i].id = u.records[u.size() - 1 - i].id;
    const auto qu = unit_random(rng, 8, 0), qs = unit_random(rng, 5, 0);
    reduction_fail += hit_lines(fused_query(u, qu, s, qs, FusionWeights{1.0, 0.0}, 60)) != hit_lines(query(u, qu, 60));
  }
  int monotone_fail = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto w = FusionWeights::from_unsup(uniform(rng, 0.0, 1.0));
    const double a = uniform(rng, -1.0, 1.0), b = uniform(rng, -1.0, 1.0);
    const double a2 = uniform(rng, a, 1.0), b2 = uniform(rng, b, 1.0);
    const double f = fuse_scores(a, b, w);
    monotone_fail += !(f <= fuse_scores(a2, b, w) && f <= fuse_scores(a, b2, w) && f <= fuse_scores(a2, b2, w));
  }
  o.require(reduction_fail == 0, std::to_string(reduction_fail) + " w=(1,0) rankings differ");
  o.require(monotone_fail == 0, std::to_string(monotone_fail) + " monotonicity violations");
  o.note("fuse(0.8, 0.6) = 0.7 exactly; w=(1,0) identical line-for-line on 20 stores; 10^4-point sweep monotone");
  return o;
}

// 10 ------------------------------------------------------------------------
Outcome end_to_end_learning() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto dir = testing::scratch_dir("acceptance_e2e");
  SynthSpec spec;  // 8 classes x 40 samples, 32x32
  spec.seed = 1;
  const auto m = gen_synthetic(spec, dir);
  const auto split = split_holdout(m.labels(), 0.25, spec.seed);
  const auto gallery = m.subset(split.gallery), queries = m.subset(split.queries);
  const auto g_images = gallery.load_images(), q_images = queries.load_images();

  SimSiamConfig scfg;
  scfg.epochs = 50;
  scfg.seed = 1;
  auto sim = train_simsiam(g_images, scfg);

  LabeledDataset data;
  data.ids = gallery.ids();
  data.images = g_images;
  for (const auto& r : gallery.records) data.labels.push_back(m.class_index(r.label));
  data.num_classes = m.num_classes();
  TrainConfig tcfg;
  tcfg.epochs = 50;
  tcfg.seed = 1;
  auto sup = train_supervised(data, tcfg);
  const auto fused = export_fused(sup.model);

  std::vector<std::optional<int>> labels(data.labels.begin(), data.labels.end());
  const auto store_u = build_store(data.ids, labels, embed_batch(sim.model, g_images), 128, "unsupervised");
  const auto store_s = build_store(data.ids, labels, embed_supervised(fused, g_images), 128, "supervised");
  const auto qu = embed_batch(sim.model, q_images), qs = embed_supervised(fused, q_images);

  std::map<std::string, int> label_of;
  for (const auto& r : m.records) label_of[r.id] = m.class_index(r.label);
  const auto qids = queries.ids();
  const int n = static_cast<int>(store_u.size());
  auto ranked = [](const auto& hits) {
    std::vector<std::string> ids;
    for (const auto& h : hits) ids.push_back(h.id);
    return ids;
  };
  const auto fused_m = eval_retrieval(qids, label_of, {1, 5}, [&](std::size_t i) {
    return ranked(fused_query(store_u, qu[i], store_s, qs[i], FusionWeights{}, n));
  });
  const auto unsup_m = eval_retrieval(qids, label_of, {5}, [&](std::size_t i) { return ranked(query(store_u, qu[i], n)); });
  const auto sup_m = eval_retrieval(qids, label_of, {5}, [&](std::size_t i) { return ranked(query(store_s, qs[i], n)); });

  const double first = sim.metrics.front().mean_loss, last = sim.metrics.back().mean_loss;
  const double top5 = fused_m.top_k[1], bar = 3.0 / 8.0;
  const double secs = seconds_since(t0);
  o.require(top5 > bar, "fused top-5 " + fmt(top5) + " <= " + fmt(bar));
  o.require(last < first, "SimSiam loss did not fall: " + fmt(first) + " -> " + fmt(last));
  o.require(secs < 900.0, "runtime " + fmt(secs) + " s >= 900 s");
  o.note(std::to_string(qids.size()) + " held-out queries: fused top-5 " + fmt(top5) + " > " + fmt(bar) +
         " (top-1 " + fmt(fused_m.top_k[0]) + ", SimSiam-only " + fmt(unsup_m.top_k[0]) + ", supervised-only " +
         fmt(sup_m.top_k[0]) + "); SimSiam loss " + fmt(first) + " -> " + fmt(last) + "; 50+50 epochs in " +
         fmt(secs) + " s");
  return o;
}

// 11 ------------------------------------------------------------------------
int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Runs every pipeline command inside `dir`; stdout of each goes to a file.
bool run_pipeline(const fs::path& dir) {
  write_text_file(dir / "run.cfg",
                  "epochs = 3\nbatch_size = 8\nwidths = 8,16\ndepths = 1,1\nprojection_width = 16\n"
                  "query_fraction = 0.25\nseed = 11\n");
  const std::string cli = "'" GLYPHSCREEN_CLI "' --config run.cfg ";
  const std::string img = " --image data/images/k002_0001.pgm";
  const std::vector<std::pair<std::string, std::string>> steps{
      {"gen", "--out data gen-synth --classes 4 --samples-per-class 8"},
      {"pre", "--out pre preprocess --manifest data/manifest.tsv --gamma 1.3 --dump-views views"},
      {"ssl", "--out run train-simsiam --manifest data/manifest.tsv"},
      {"sup", "--out run train-sup --manifest data/manifest.tsv"},
      {"exp", "--out run export-fused --checkpoint run/supervised.ckpt"},
      {"su", "--out run build-store --manifest data/manifest.tsv --checkpoint run/simsiam.ckpt"},
      {"ss", "--out run build-store --manifest data/manifest.tsv --checkpoint run/fused.ckpt"},
      {"emb", "embed --checkpoint run/fused.ckpt --manifest data/manifest.tsv"},
      {"q", "query --store run/unsupervised.gst --checkpoint run/simsiam.ckpt --k 5" + img},
      {"fq", "fused-query --store-unsup run/unsupervised.gst --store-sup run/supervised.gst "
             "--ckpt-unsup run/simsiam.ckpt --ckpt-sup run/fused.ckpt --k 5 --components" + img},
      {"ev", "eval --manifest data/manifest.tsv --store-unsup run/unsupervised.gst --store-sup run/supervised.gst "
             "--ckpt-unsup run/simsiam.ckpt --ckpt-sup run/fused.ckpt"},
      {"rc", "reparam-check --checkpoint run/supervised.ckpt"},
  };
  for (const auto& [name, args] : steps) {
    const int code = shell("cd '" + dir.string() + "' && " + cli + args + " >stdout_" + name + ".txt 2>/dev/null");
    if (code != 0) {
      std::cerr << "determinism run: '" << args << "' exited " << code << "\n";
      return false;
    }
  }
  return true;
}

std::map<std::string, std::vector<std::uint8_t>> snapshot(const fs::path& dir) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file_bytes(e.path());
  }
  return out;
}

Outcome determinism() {
  Outcome o;
  const auto a = testing::scratch_dir("acceptance_det_a"), b = testing::scratch_dir("acceptance_det_b");
  const bool ran = run_pipeline(a) && run_pipeline(b);
  o.require(ran, "a pipeline command failed");
  if (!ran) return o;
  const auto sa = snapshot(a), sb = snapshot(b);
  int differ = 0, checkpoints = 0, stores = 0, metrics = 0;
  for (const auto& [name, bytes] : sa) {
    const auto it = sb.find(name);
    if (it == sb.end() || it->second != bytes) {
      ++differ;
      std::cerr << "determinism: " << name << " differs\n";
    }
    checkpoints += name.ends_with(".ckpt");
    stores += name.ends_with(".gst");
    metrics += name.ends_with(".jsonl");
  }
  o.require(sa.size() == sb.size(), "file sets differ");
  o.require(differ == 0, std::to_string(differ) + " files differ");
  o.require(checkpoints == 3 && stores == 2 && metrics == 2, "expected artifacts missing");
  o.note(std::to_string(sa.size()) + " files (" + std::to_string(checkpoints) + " checkpoints, " +
         std::to_string(stores) + " stores, " + std::to_string(metrics) +
         " metrics streams, command outputs) byte-identical across two runs of 12 commands");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"re-parameterization equivalence", reparameterization_equivalence},
      {"conv+BN fusion", conv_bn_fusion},
      {"autodiff soundness", autodiff_soundness},
      {"histogram equalization exactness", equalization_exactness},
      {"gamma transform", gamma_transform_contracts},
      {"SimSiam loss contracts", simsiam_loss_contracts},
      {"SGD and schedule", sgd_and_schedule},
      {"retrieval oracle", retrieval_oracle},
      {"fusion", fusion},
      {"end-to-end learning signal", end_to_end_learning},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    std::cerr << "criterion " << i + 1 << " took " << fmt(seconds_since(t0)) << " s\n";
  }
  std::cerr << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
