/* Copyright 2026 The Linerec Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>

#include "linerec/arch.hpp"
#include "linerec/datapipe.hpp"
#include "test_util.hpp"

using namespace linerec;
using linerec_test::TempDir;

namespace {

Charset abc_charset() { return Charset::from_characters({"a", "b", "c"}); }

ImageU8 gradient_image(int h, int w) {
  ImageU8 img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(y, x) = static_cast<uint8_t>((x * 7 + y * 13) % 256);
    }
  }
  return img;
}

PreparedSample prepared_of_width(int width, const std::string& id = "s") {
  PreparedSample s;
  s.image = Tensor({1, 32, width});
  for (int64_t i = 0; i < s.image.numel(); ++i) {
    s.image.data()[i] = static_cast<float>(i % 17) / 17.0f;
  }
  s.labels = {1};
  s.id = id;
  s.width = width;
  return s;
}

}  // namespace

TEST_CASE("charset encode/decode round trip and digest stability") {
  const Charset cs = abc_charset();
  CHECK(cs.size() == 3);
  CHECK(cs.num_classes() == 4);
  const auto classes = cs.encode("cab");
  REQUIRE(classes.has_value());
  CHECK(*classes == std::vector<int>{3, 1, 2});
  CHECK(cs.decode(*classes) == "cab");
  for (int cls = 1; cls <= 3; ++cls) {
    CHECK(cs.encode_char(cs.lookup(cls)) == cls);
  }
  CHECK(cs.digest() == abc_charset().digest());
  CHECK(cs.digest() != Charset::from_characters({"a", "b", "d"}).digest());

  std::string bad;
  CHECK_FALSE(cs.encode("abx", &bad).has_value());
  CHECK(bad == "x");

  CHECK_THROWS_WITH_AS(Charset::from_characters({"a", "a"}),
                       doctest::Contains("duplicate"), std::invalid_argument);
  CHECK_THROWS(Charset::from_characters({"ab"}));
  CHECK_THROWS(Charset::from_characters({}));
}

TEST_CASE("charset file round trip including multi-byte characters") {
  TempDir dir("charset");
  const Charset cs = Charset::from_characters({"a", "\xc3\xa9", "\xe4\xb8\xad"});
  cs.save(dir.path() / "charset.txt");
  const Charset loaded = Charset::load(dir.path() / "charset.txt");
  CHECK(loaded.size() == 3);
  CHECK(loaded.digest() == cs.digest());
  CHECK(loaded.lookup(3) == "\xe4\xb8\xad");
}

TEST_CASE("preprocess preserves the aspect ratio") {
  const Tensor a = preprocess(gradient_image(256, 1024), 128);
  CHECK(a.shape() == std::vector<int>{1, 128, 512});

  const Tensor b = preprocess(gradient_image(128, 300), 128);
  CHECK(b.shape() == std::vector<int>{1, 128, 300});

  // Already at target height: values are only normalized.
  const ImageU8 img = gradient_image(128, 40);
  const Tensor c = preprocess(img, 128);
  for (int y = 0; y < 128; y += 17) {
    for (int x = 0; x < 40; x += 7) {
      const float expected = (img.at(y, x) / 255.0f - 0.5f) / 0.5f;
      CHECK(c.at(0, y, x) == doctest::Approx(expected).epsilon(1e-5));
    }
  }

  ImageU8 white(64, 50, 255);
  const Tensor d = preprocess(white, 128);
  for (int64_t i = 0; i < d.numel(); ++i) CHECK(d.data()[i] == doctest::Approx(1.0f));

  CHECK_THROWS(preprocess(ImageU8{}, 128));
  CHECK_THROWS(preprocess(gradient_image(32, 32), 100));

  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const int h = 1 + rng.uniform_int(300);
    const int w = 1 + rng.uniform_int(2000);
    const Tensor t = preprocess(gradient_image(h, w), 64);
    const double ratio_err = std::abs(static_cast<double>(t.dim(2)) / 64.0 -
                                      static_cast<double>(w) / h);
    CHECK(ratio_err <= 1.0 / 64.0 + 1e-12);
  }
}

TEST_CASE("make_batch pads to a multiple of 16 by repeating the last column") {
  std::vector<PreparedSample> samples{prepared_of_width(200, "a"),
                                      prepared_of_width(130, "b")};
  const Batch batch = make_batch(samples);
  CHECK(batch.images.shape() == std::vector<int>{2, 1, 32, 208});
  CHECK(batch.seq_lens == std::vector<int>{13, 9});
  CHECK(batch.widths == std::vector<int>{200, 130});

  // Padded region of each sample replicates its own last real column.
  for (int b = 0; b < 2; ++b) {
    const int w = batch.widths[static_cast<size_t>(b)];
    for (int y = 0; y < 32; ++y) {
      const float edge = batch.images.at(b, 0, y, w - 1);
      for (int x = w; x < 208; ++x) {
        CHECK(batch.images.at(b, 0, y, x) == edge);
      }
    }
  }

  const Batch single = make_batch(std::vector<PreparedSample>{prepared_of_width(160)});
  CHECK(single.images.dim(3) == 160);  // already a multiple of 16: no padding

  CHECK_THROWS(make_batch(std::vector<PreparedSample>{}));
}

TEST_CASE("load_dataset validates rows and itemizes rejects") {
  TempDir dir("dataset");
  const Charset cs = abc_charset();
  save_pgm(dir.path() / "l0.pgm", gradient_image(24, 60));
  save_pgm(dir.path() / "l1.pgm", gradient_image(24, 80));
  save_pgm(dir.path() / "l2.pgm", gradient_image(24, 100));
  {
    std::ofstream m(dir.path() / "manifest.tsv");
    m << "l0.pgm\tabc\n";
    m << "l1.pgm\tcba\n";
    m << "l2.pgm\taXc\n";          // out-of-charset character
    m << "missing.pgm\tab\n";      // unreadable image
    m << "no-tab-line\n";          // malformed
    m << "l2.pgm\tcc\n";
  }
  LoadReport report;
  const auto samples = load_dataset(dir.path() / "manifest.tsv", cs, &report);
  CHECK(samples.size() == 3);
  CHECK(report.loaded == 3);
  REQUIRE(report.rejects.size() == 3);
  CHECK(report.rejects[0].line_number == 3);
  CHECK(report.rejects[0].detail.find("'X'") != std::string::npos);
  CHECK(report.rejects[1].line_number == 4);
  CHECK(report.rejects[2].line_number == 5);

  {
    std::ofstream m(dir.path() / "empty.tsv");
  }
  CHECK_THROWS_WITH_AS(load_dataset(dir.path() / "empty.tsv", cs, nullptr),
                       doctest::Contains("empty"), std::runtime_error);
  CHECK_THROWS(load_dataset(dir.path() / "nonexistent.tsv", cs, nullptr));
}

TEST_CASE("pgm and png files round-trip through load_image") {
  TempDir dir("images");
  const ImageU8 img = gradient_image(33, 47);
  save_pgm(dir.path() / "x.pgm", img);
  const ImageU8 pgm = load_image(dir.path() / "x.pgm");
  CHECK(pgm.height == 33);
  CHECK(pgm.width == 47);
  CHECK(pgm.pixels == img.pixels);

  save_png(dir.path() / "x.png", img);
  const ImageU8 png = load_image(dir.path() / "x.png");
  CHECK(png.height == 33);
  CHECK(png.pixels == img.pixels);

  {
    std::ofstream bad(dir.path() / "x.bin", std::ios::binary);
    bad << "garbage";
  }
  CHECK_THROWS(load_image(dir.path() / "x.bin"));
}

TEST_CASE("eval logits of a sample do not depend on the batch around it") {
  // Width padding replicates each sample's own last column, and Eval-mode
  // forward extends past the receptive halo, so per-sample logits over its
  // valid steps must match between a singleton batch and a wide mixed batch.
  Rng rng(77);
  std::vector<PreparedSample> samples;
  for (int i = 0; i < 5; ++i) {
    PreparedSample s = prepared_of_width(40 + 37 * i, "m" + std::to_string(i));
    for (int64_t j = 0; j < s.image.numel(); ++j) {
      s.image.data()[j] = static_cast<float>(rng.uniform(-1.0, 1.0));
    }
    samples.push_back(std::move(s));
  }

  ArchConfig config;
  config.family = ArchFamily::kResidualVariant;
  config.block_digits = {1, 1, 1, 1};
  config.stage_channels = {4, 4, 8, 8};
  config.input_height = 32;
  config.vocab_size = 5;
  Rng init(3);
  Network net = build_network<float>(config, init);
  Rng unused(0);

  const Batch mixed = make_batch(samples);
  const Tensor mixed_logits = net.forward(mixed.images, Mode::kEval, unused);
  const int C = mixed_logits.dim(2);
  double worst = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const Batch alone = make_batch(std::span(&samples[i], 1));
    const Tensor alone_logits = net.forward(alone.images, Mode::kEval, unused);
    for (int t = 0; t < alone.seq_lens[0]; ++t) {
      for (int c = 0; c < C; ++c) {
        const double a = alone_logits.at(t, 0, c);
        const double m = mixed_logits.at(t, static_cast<int>(i), c);
        worst = std::max(worst, std::abs(a - m) / std::max({std::abs(a), std::abs(m), 1.0}));
      }
    }
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("bucket_by_width groups sorted widths and shuffles deterministically") {
  std::vector<PreparedSample> samples{
      prepared_of_width(100, "w100"), prepared_of_width(500, "w500"),
      prepared_of_width(110, "w110"), prepared_of_width(480, "w480")};

  Rng rng(5);
  const auto groups = bucket_by_width(samples, 2, rng);
  REQUIRE(groups.size() == 2);
  // Each group holds adjacent widths regardless of shuffle order.
  for (const auto& g : groups) {
    std::vector<int> widths;
    for (int idx : g) widths.push_back(samples[static_cast<size_t>(idx)].width);
    const bool low = widths == std::vector<int>{100, 110};
    const bool high = widths == std::vector<int>{480, 500};
    CHECK((low || high));
  }

  Rng rng_a(7), rng_b(7);
  CHECK(bucket_by_width(samples, 2, rng_a) == bucket_by_width(samples, 2, rng_b));

  Rng rng_c(8);
  const auto singles = bucket_by_width(samples, 1, rng_c);
  CHECK(singles.size() == 4);
  for (const auto& g : singles) CHECK(g.size() == 1);

  Rng rng_d(9);
  CHECK_THROWS(bucket_by_width(samples, 0, rng_d));
}
