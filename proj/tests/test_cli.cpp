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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "glyphscreen/data.hpp"
#include "glyphscreen/index.hpp"
#include "test_util.hpp"

namespace glyph {
namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

/// Runs the CLI with `args` from `cwd`, capturing both streams.
Run cli(const fs::path& cwd, const std::string& args) {
  const fs::path out = cwd / ".stdout", err = cwd / ".stderr";
  const std::string cmd = "cd '" + cwd.string() + "' && '" GLYPHSCREEN_CLI "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text_file(out);
  r.err = read_text_file(err);
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

constexpr const char* kTinyConfig =
    "epochs = 1\nbatch_size = 4\nwidths = 4,8\ndepths = 1,1\nprojection_width = 8\nquery_fraction = 0.25\n";

/// gen-synth -> both trainings -> export -> two stores, in `dir`.
void tiny_pipeline(const fs::path& dir) {
  write_text_file(dir / "tiny.cfg", kTinyConfig);
  ASSERT_EQ(cli(dir, "--seed 5 --out data gen-synth --classes 3 --samples-per-class 4 --size 16").code, 0);
  ASSERT_EQ(cli(dir, "--seed 5 --config tiny.cfg --out run train-simsiam --manifest data/manifest.tsv").code, 0);
  ASSERT_EQ(cli(dir, "--seed 5 --config tiny.cfg --out run train-sup --manifest data/manifest.tsv").code, 0);
  ASSERT_EQ(cli(dir, "--out run export-fused --checkpoint run/supervised.ckpt").code, 0);
  for (const char* ck : {"run/simsiam.ckpt", "run/fused.ckpt"}) {
    ASSERT_EQ(cli(dir, std::string("--seed 5 --config tiny.cfg --out run build-store --manifest data/manifest.tsv "
                                   "--checkpoint ") + ck)
                  .code,
              0);
  }
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const auto dir = testing::scratch_dir("cli_unknown");
  const auto r = cli(dir, "frobnicate");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Subcommands:"), std::string::npos) << r.err;
  EXPECT_EQ(cli(dir, "").code, 1);
  EXPECT_EQ(cli(dir, "--help").code, 0);
}

TEST(Cli, MissingRequiredFlagNamesIt) {
  const auto dir = testing::scratch_dir("cli_missing");
  const auto r = cli(dir, "query --image x.pgm --checkpoint m.ckpt");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--store"), std::string::npos) << r.err;
  const auto t = cli(dir, "train-sup");
  EXPECT_EQ(t.code, 1);
  EXPECT_NE(t.err.find("--manifest"), std::string::npos) << t.err;
}

TEST(Cli, ExitCodesByErrorKind) {
  const auto dir = testing::scratch_dir("cli_codes");
  const auto data = cli(dir, "train-simsiam --manifest nope.tsv");
  EXPECT_EQ(data.code, 2);
  EXPECT_NE(data.err.find("nope.tsv"), std::string::npos) << data.err;
  EXPECT_EQ(cli(dir, "--out d gen-synth --classes 1").code, 3);
  EXPECT_EQ(cli(dir, "query --store a.gst --image b.pgm --checkpoint c.ckpt --k 0").code, 1);
  write_text_file(dir / "bad.cfg", "no_such_option = 1\n");
  const auto cfg = cli(dir, "--config bad.cfg --out d gen-synth");
  EXPECT_EQ(cfg.code, 1);
  EXPECT_NE(cfg.err.find("no_such_option"), std::string::npos) << cfg.err;
}

TEST(Cli, ConfigSuppliesDefaultsAndFlagsWin) {
  const auto dir = testing::scratch_dir("cli_config");
  write_text_file(dir / "c.cfg", "# synthetic set\nclasses = 2\nsamples_per_class = 3\nsize = 12\nseed = 4\n");
  ASSERT_EQ(cli(dir, "--config c.cfg --out a gen-synth").code, 0);
  EXPECT_EQ(load_manifest(dir / "a/manifest.tsv").size(), 6u);
  EXPECT_EQ(read_pgm(dir / "a/images/k000_0000.pgm").width(), 12);
  ASSERT_EQ(cli(dir, "--config c.cfg --out b gen-synth --samples-per-class 5").code, 0);
  EXPECT_EQ(load_manifest(dir / "b/manifest.tsv").size(), 10u);
  // The seed came from the config too.
  ASSERT_EQ(cli(dir, "--seed 4 --out c gen-synth --classes 2 --samples-per-class 3 --size 12").code, 0);
  EXPECT_EQ(read_file_bytes(dir / "a/images/k001_0002.pgm"), read_file_bytes(dir / "c/images/k001_0002.pgm"));
}

TEST(Cli, PipelineOutputsAndContracts) {
  const auto dir = testing::scratch_dir("cli_pipeline");
  tiny_pipeline(dir);
  if (HasFatalFailure()) return;

  const std::string img = "--image data/images/k001_0001.pgm";
  const auto q = cli(dir, "query --store run/unsupervised.gst --checkpoint run/simsiam.ckpt --k 5 " + img);
  ASSERT_EQ(q.code, 0) << q.err;
  const auto ql = lines(q.out);
  ASSERT_EQ(ql.size(), 5u);
  for (std::size_t i = 0; i < ql.size(); ++i) {
    const auto f = split_tabs(ql[i]);
    ASSERT_EQ(f.size(), 3u) << ql[i];
    EXPECT_EQ(f[0], std::to_string(i + 1));
    const double score = std::stod(f[2]);
    EXPECT_GE(score, -1.0);
    EXPECT_LE(score, 1.0);
  }

  const std::string fused = "fused-query --store-unsup run/unsupervised.gst --store-sup run/supervised.gst "
                            "--ckpt-unsup run/simsiam.ckpt --ckpt-sup run/fused.ckpt --k 5 " + img;
  const auto f1 = cli(dir, fused + " --w-unsup 1.0");
  ASSERT_EQ(f1.code, 0) << f1.err;
  EXPECT_EQ(f1.out, q.out);
  const auto fc = cli(dir, fused + " --components");
  ASSERT_EQ(fc.code, 0) << fc.err;
  for (const auto& l : lines(fc.out)) {
    const auto f = split_tabs(l);
    ASSERT_EQ(f.size(), 5u);
    EXPECT_NEAR(std::stod(f[2]), 0.5 * std::stod(f[3]) + 0.5 * std::stod(f[4]), 1e-15);
  }

  const auto rc = cli(dir, "reparam-check --checkpoint run/supervised.ckpt");
  EXPECT_EQ(rc.code, 0) << rc.err;
  const auto rf = split_tabs(lines(rc.out).at(0));
  ASSERT_EQ(rf.size(), 2u);
  EXPECT_EQ(rf[0], "max_abs_deviation");
  EXPECT_LT(std::stod(rf[1]), 1e-6);
  EXPECT_EQ(cli(dir, "reparam-check --checkpoint run/fused.ckpt").code, 2);

  const auto ev = cli(dir, "--seed 5 --config tiny.cfg eval --manifest data/manifest.tsv "
                           "--store-unsup run/unsupervised.gst --store-sup run/supervised.gst "
                           "--ckpt-unsup run/simsiam.ckpt --ckpt-sup run/fused.ckpt --ks 1,3");
  ASSERT_EQ(ev.code, 0) << ev.err;
  const auto j = Json::parse(ev.out);
  EXPECT_EQ(j["mode"], "fused");
  EXPECT_EQ(j["queries"], 3);
  EXPECT_TRUE(j["top_k"].contains("3"));

  const auto em = cli(dir, "embed --checkpoint run/simsiam.ckpt " + img);
  ASSERT_EQ(em.code, 0) << em.err;
  std::vector<double> v;
  std::istringstream vs(split_tabs(lines(em.out).at(0)).at(1));
  for (std::string tok; std::getline(vs, tok, ',');) v.push_back(std::stod(tok));
  double sq = 0.0;
  for (double x : v) sq += x * x;
  EXPECT_NEAR(sq, 1.0, 1e-12);

  const auto wrong = cli(dir, "query --store run/unsupervised.gst --checkpoint run/fused.ckpt " + img);
  EXPECT_EQ(wrong.code, 2);
  const auto store = load_store(dir / "run/unsupervised.gst");
  EXPECT_EQ(store.size(), 9u);  // 3 of 12 held out

  const auto pp = cli(dir, "--seed 5 --out pre preprocess --manifest data/manifest.tsv --dump-views views");
  ASSERT_EQ(pp.code, 0) << pp.err;
  EXPECT_EQ(load_manifest(dir / "pre/manifest.tsv").size(), 12u);
  EXPECT_TRUE(fs::exists(dir / "views/k002_0003_v2.pgm"));
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto a = testing::scratch_dir("cli_rerun_a"), b = testing::scratch_dir("cli_rerun_b");
  tiny_pipeline(a);
  tiny_pipeline(b);
  if (HasFatalFailure()) return;
  for (const char* f : {"data/manifest.tsv", "data/images/k002_0003.pgm", "run/simsiam.ckpt", "run/supervised.ckpt",
                        "run/fused.ckpt", "run/simsiam_metrics.jsonl", "run/supervised_metrics.jsonl",
                        "run/unsupervised.gst", "run/supervised.gst"}) {
    EXPECT_EQ(read_file_bytes(a / f), read_file_bytes(b / f)) << f;
  }
}

}  // namespace
}  // namespace glyph
