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

#ifndef LINEREC_SYNTHESIS_HPP_
#define LINEREC_SYNTHESIS_HPP_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "linerec/charset.hpp"
#include "linerec/datapipe.hpp"
#include "linerec/image.hpp"
#include "linerec/rng.hpp"

namespace linerec {

struct CharBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

// A line image whose character regions are reusable paste targets. Boxes are
// kept ordered left to right; the background has the original ink cleared.
struct Template {
  int line_height = 0;
  int line_width = 0;
  std::vector<CharBox> boxes;
  ImageU8 background;

  void validate() const;
};

// Isolated glyph images per class (1-based; class 0 is the blank and has no
// glyphs).
class GlyphStore {
 public:
  explicit GlyphStore(int num_classes) : per_class_(static_cast<size_t>(num_classes)) {}

  int num_classes() const { return static_cast<int>(per_class_.size()); }
  void add(int cls, ImageU8 glyph);
  const std::vector<ImageU8>& glyphs(int cls) const;
  void validate() const;  // every class has at least one glyph

 private:
  std::vector<std::vector<ImageU8>> per_class_;
};

// Fills each template box with a uniformly random glyph of a uniformly random
// class (no corpus statistics), scaled to fit the box at preserved aspect
// ratio, centered, composited by darkest pixel. The transcription is the
// drawn classes in box order.
LineSample synthesize_line(const Template& tmpl, const GlyphStore& store,
                           const Charset& charset, Rng& rng);

// Per-class stroke patterns (3-6 random line/arc segments) with per-sample
// affine and stroke-width jitter. jitter = 0 makes all samples of a class
// identical.
GlyphStore procedural_glyphs(int num_classes, int samples_per_class,
                             int glyph_size, Rng& rng, double jitter = 1.0);

// Blank-canvas templates for the procedural pipeline: box_count in
// [min_boxes, max_boxes], box sizes jittered around the given nominals.
struct TemplateLayout {
  int line_height = 64;
  int min_boxes = 3;
  int max_boxes = 8;
  int box_width = 30;
  int box_height = 46;
};

std::vector<Template> make_blank_templates(int count, const TemplateLayout& layout,
                                           Rng& rng);

// Clears the ink inside each annotated box to the background intensity and
// returns the boxes sorted left to right.
std::vector<Template> extract_templates(
    std::span<const std::pair<ImageU8, std::vector<CharBox>>> annotated);

struct CorpusReport {
  int count = 0;
  uint64_t seed = 0;
  std::map<int, int64_t> class_histogram;
  std::filesystem::path manifest;
};

enum class ImageFormat { kPgm, kPng };

// Emits `count` synthesized samples (cycling templates in order, fresh
// randomness per sample via split streams), writes the images and a manifest
// in the datapipe format, and returns the generation report.
CorpusReport generate_corpus(std::span<const Template> templates,
                             const GlyphStore& store, const Charset& charset,
                             int count, const std::filesystem::path& out_dir,
                             const std::string& manifest_name, Rng& rng,
                             ImageFormat format = ImageFormat::kPgm);

// Template sidecar JSON ({"height":..,"width":..,"boxes":[{x,y,w,h},..]})
// kept next to each template image.
std::vector<CharBox> load_template_boxes(const std::filesystem::path& json_path,
                                         int* height = nullptr, int* width = nullptr);
void save_template_boxes(const std::filesystem::path& json_path, const Template& tmpl);

// Deterministic charset for procedural data: latin letters and digits first,
// then CJK code points for larger class counts.
Charset synthetic_charset(int num_classes);

}  // namespace linerec

#endif  // LINEREC_SYNTHESIS_HPP_
