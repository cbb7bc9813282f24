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

#include "linerec/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace linerec {

namespace {

// Glyph geometry lives in the unit square; strokes are line or arc segments
// with a relative thickness, rasterized from a distance field.
struct Segment {
  bool is_arc = false;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;   // line endpoints
  double cx = 0, cy = 0, radius = 0;       // arc
  double angle0 = 0, angle_span = 0;
  double thickness = 0.1;
};

double dist_to_line(double px, double py, const Segment& s) {
  const double dx = s.x1 - s.x0;
  const double dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double qx = s.x0 + t * dx - px;
  const double qy = s.y0 + t * dy - py;
  return std::sqrt(qx * qx + qy * qy);
}

double dist_to_arc(double px, double py, const Segment& s) {
  const double vx = px - s.cx;
  const double vy = py - s.cy;
  double angle = std::atan2(vy, vx) - s.angle0;
  angle -= std::floor(angle / (2.0 * M_PI)) * 2.0 * M_PI;  // into [0, 2pi)
  if (angle <= s.angle_span) {
    return std::abs(std::sqrt(vx * vx + vy * vy) - s.radius);
  }
  double best = 1e9;
  for (const double a : {s.angle0, s.angle0 + s.angle_span}) {
    const double ex = s.cx + s.radius * std::cos(a);
    const double ey = s.cy + s.radius * std::sin(a);
    best = std::min(best, std::hypot(px - ex, py - ey));
  }
  return best;
}

std::vector<Segment> make_class_pattern(Rng& rng) {
  const int n = 3 + rng.uniform_int(4);  // 3..6 segments
  std::vector<Segment> segments;
  segments.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Segment s;
    s.thickness = rng.uniform(0.09, 0.16);
    if (rng.uniform() < 0.5) {
      s.x0 = rng.uniform(0.12, 0.88);
      s.y0 = rng.uniform(0.12, 0.88);
      s.x1 = rng.uniform(0.12, 0.88);
      s.y1 = rng.uniform(0.12, 0.88);
    } else {
      s.is_arc = true;
      s.cx = rng.uniform(0.25, 0.75);
      s.cy = rng.uniform(0.25, 0.75);
      s.radius = rng.uniform(0.15, 0.32);
      s.angle0 = rng.uniform(0.0, 2.0 * M_PI);
      s.angle_span = rng.uniform(0.5 * M_PI, 1.7 * M_PI);
    }
    segments.push_back(s);
  }
  return segments;
}

std::vector<Segment> jitter_pattern(const std::vector<Segment>& pattern,
                                    double jitter, Rng& rng) {
  const double rot = rng.uniform(-0.07, 0.07) * jitter;
  const double scale = 1.0 + rng.uniform(-0.10, 0.10) * jitter;
  const double tx = rng.uniform(-0.04, 0.04) * jitter;
  const double ty = rng.uniform(-0.04, 0.04) * jitter;
  const double thick = 1.0 + rng.uniform(-0.15, 0.15) * jitter;
  const double cr = std::cos(rot), sr = std::sin(rot);
  auto map_point = [&](double& x, double& y) {
    const double dx = x - 0.5, dy = y - 0.5;
    x = 0.5 + scale * (cr * dx - sr * dy) + tx;
    y = 0.5 + scale * (sr * dx + cr * dy) + ty;
  };
  std::vector<Segment> out = pattern;
  for (Segment& s : out) {
    s.thickness *= thick;
    if (s.is_arc) {
      map_point(s.cx, s.cy);
      s.radius *= scale;
      s.angle0 += rot;
    } else {
      map_point(s.x0, s.y0);
      map_point(s.x1, s.y1);
    }
  }
  return out;
}

ImageU8 render_glyph(const std::vector<Segment>& segments, int size) {
  ImageU8 img(size, size, 255);
  const double aa = 0.75 / size;  // one-ish pixel of edge smoothing
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = (x + 0.5) / size;
      const double py = (y + 0.5) / size;
      double d = 1e9;
      double t = 0.1;
      for (const Segment& s : segments) {
        const double sd = s.is_arc ? dist_to_arc(px, py, s) : dist_to_line(px, py, s);
        if (sd - s.thickness * 0.5 < d - t * 0.5) {
          d = sd;
          t = s.thickness;
        }
      }
      const double edge = d - t * 0.5;
      double v;
      if (edge <= -aa) {
        v = 0.0;
      } else if (edge >= aa) {
        v = 255.0;
      } else {
        v = 255.0 * (edge + aa) / (2.0 * aa);
      }
      img.at(y, x) = static_cast<uint8_t>(std::lround(v));
    }
  }
  return img;
}

}  // namespace

void Template::validate() const {
  if (line_height < 1 || line_width < 1) {
    throw std::invalid_argument("template has a degenerate canvas");
  }
  int prev_x = -1;
  for (const CharBox& box : boxes) {
    if (box.w < 1 || box.h < 1) {
      throw std::invalid_argument("template has a degenerate character box");
    }
    if (box.x < 0 || box.y < 0 || box.x + box.w > line_width ||
        box.y + box.h > line_height) {
      throw std::invalid_argument("template box outside the canvas");
    }
    if (box.x < prev_x) {
      throw std::invalid_argument("template boxes are not ordered by x");
    }
    prev_x = box.x;
  }
  if (background.height != line_height || background.width != line_width) {
    throw std::invalid_argument("template background does not match the canvas size");
  }
}

void GlyphStore::add(int cls, ImageU8 glyph) {
  if (cls < 1 || cls > num_classes()) {
    throw std::out_of_range("glyph class " + std::to_string(cls) + " out of range");
  }
  per_class_[static_cast<size_t>(cls - 1)].push_back(std::move(glyph));
}

const std::vector<ImageU8>& GlyphStore::glyphs(int cls) const {
  if (cls < 1 || cls > num_classes()) {
    throw std::out_of_range("glyph class " + std::to_string(cls) + " out of range");
  }
  return per_class_[static_cast<size_t>(cls - 1)];
}

void GlyphStore::validate() const {
  if (per_class_.empty()) {
    throw std::invalid_argument("glyph store has no classes");
  }
  for (size_t i = 0; i < per_class_.size(); ++i) {
    if (per_class_[i].empty()) {
      throw std::invalid_argument("glyph store class " + std::to_string(i + 1) +
                                  " has no glyphs");
    }
  }
}

LineSample synthesize_line(const Template& tmpl, const GlyphStore& store,
                           const Charset& charset, Rng& rng) {
  tmpl.validate();
  store.validate();
  if (store.num_classes() > charset.size()) {
    throw std::invalid_argument("glyph store has more classes than the charset");
  }
  LineSample sample;
  sample.image = tmpl.background;

  for (const CharBox& box : tmpl.boxes) {
    const int cls = 1 + rng.uniform_int(store.num_classes());
    const auto& glyphs = store.glyphs(cls);
    const ImageU8& glyph = glyphs[static_cast<size_t>(rng.uniform_int(
        static_cast<int>(glyphs.size())))];

    // Fit inside the box at preserved aspect ratio, centered.
    const double scale = std::min(static_cast<double>(box.w) / glyph.width,
                                  static_cast<double>(box.h) / glyph.height);
    const int gw = std::max(1, std::min(box.w, static_cast<int>(std::lround(glyph.width * scale))));
    const int gh = std::max(1, std::min(box.h, static_cast<int>(std::lround(glyph.height * scale))));
    const ImageU8 scaled = resize_bilinear(glyph, gh, gw);
    const int x0 = box.x + (box.w - gw) / 2;
    const int y0 = box.y + (box.h - gh) / 2;
    for (int y = 0; y < gh; ++y) {
      for (int x = 0; x < gw; ++x) {
        uint8_t& dst = sample.image.at(y0 + y, x0 + x);
        dst = std::min(dst, scaled.at(y, x));  // darkest-pixel blend
      }
    }
    sample.transcription += charset.lookup(cls);
  }
  return sample;
}

GlyphStore procedural_glyphs(int num_classes, int samples_per_class,
                             int glyph_size, Rng& rng, double jitter) {
  if (num_classes < 2) {
    throw std::invalid_argument("procedural_glyphs: need at least 2 classes");
  }
  if (samples_per_class < 1 || glyph_size < 8) {
    throw std::invalid_argument("procedural_glyphs: bad sample count or glyph size");
  }
  const Rng root = rng.split(rng.next());
  GlyphStore store(num_classes);
  for (int cls = 1; cls <= num_classes; ++cls) {
    Rng class_rng = root.split(static_cast<uint64_t>(cls));
    const std::vector<Segment> pattern = make_class_pattern(class_rng);
    for (int s = 0; s < samples_per_class; ++s) {
      Rng sample_rng = class_rng.split(static_cast<uint64_t>(s) + 1);
      store.add(cls, render_glyph(jitter_pattern(pattern, jitter, sample_rng), glyph_size));
    }
  }
  return store;
}

std::vector<Template> make_blank_templates(int count, const TemplateLayout& layout,
                                           Rng& rng) {
  if (count < 1) throw std::invalid_argument("make_blank_templates: count must be >= 1");
  if (layout.min_boxes < 1 || layout.max_boxes < layout.min_boxes) {
    throw std::invalid_argument("make_blank_templates: bad box count range");
  }
  std::vector<Template> templates;
  templates.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    Template t;
    t.line_height = layout.line_height;
    const int boxes = layout.min_boxes +
                      rng.uniform_int(layout.max_boxes - layout.min_boxes + 1);
    int x = 4 + rng.uniform_int(5);
    for (int b = 0; b < boxes; ++b) {
      CharBox box;
      box.w = std::max(4, static_cast<int>(std::lround(layout.box_width * rng.uniform(0.85, 1.15))));
      box.h = std::max(4, std::min(layout.line_height - 2,
                                   static_cast<int>(std::lround(layout.box_height *
                                                                rng.uniform(0.9, 1.1)))));
      const int slack = layout.line_height - box.h;
      box.y = slack / 2 + (slack > 2 ? rng.uniform_int(3) - 1 : 0);
      box.y = std::clamp(box.y, 0, layout.line_height - box.h);
      box.x = x;
      t.boxes.push_back(box);
      x += box.w + 2 + rng.uniform_int(4);
    }
    t.line_width = x + 4 + rng.uniform_int(6);
    t.background = ImageU8(t.line_height, t.line_width, 255);
    t.validate();
    templates.push_back(std::move(t));
  }
  return templates;
}

std::vector<Template> extract_templates(
    std::span<const std::pair<ImageU8, std::vector<CharBox>>> annotated) {
  std::vector<Template> templates;
  templates.reserve(annotated.size());
  for (const auto& [image, boxes] : annotated) {
    if (boxes.empty()) {
      throw std::invalid_argument("extract_templates: sample without box annotations");
    }
    Template t;
    t.line_height = image.height;
    t.line_width = image.width;
    t.background = image;
    t.boxes = boxes;
    std::stable_sort(t.boxes.begin(), t.boxes.end(),
                     [](const CharBox& a, const CharBox& b) { return a.x < b.x; });
    // Lightest pixel stands in for the background intensity.
    const uint8_t bg = *std::max_element(image.pixels.begin(), image.pixels.end());
    t.validate();
    for (const CharBox& box : t.boxes) {
      for (int y = box.y; y < box.y + box.h; ++y) {
        for (int x = box.x; x < box.x + box.w; ++x) {
          t.background.at(y, x) = bg;
        }
      }
    }
    templates.push_back(std::move(t));
  }
  return templates;
}

CorpusReport generate_corpus(std::span<const Template> templates,
                             const GlyphStore& store, const Charset& charset,
                             int count, const std::filesystem::path& out_dir,
                             const std::string& manifest_name, Rng& rng,
                             ImageFormat format) {
  if (count < 1) throw std::invalid_argument("generate_corpus: count must be >= 1");
  if (templates.empty()) throw std::invalid_argument("generate_corpus: no templates");
  store.validate();

  std::filesystem::create_directories(out_dir / "images");
  const Rng root = rng.split(rng.next());
  const char* ext = format == ImageFormat::kPgm ? ".pgm" : ".png";

  std::vector<std::string> transcriptions(static_cast<size_t>(count));
  std::vector<std::string> rel_paths(static_cast<size_t>(count));
  std::string first_error;

  // Per-sample derived streams make generation order-independent; the
  // manifest is emitted in index order afterwards.
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < count; ++k) {
    try {
      Rng sample_rng = root.split(static_cast<uint64_t>(k) + 1);
      const Template& tmpl = templates[static_cast<size_t>(k) % templates.size()];
      const LineSample sample = synthesize_line(tmpl, store, charset, sample_rng);
      char name[32];
      std::snprintf(name, sizeof name, "line_%06d%s", k, ext);
      const std::filesystem::path rel = std::filesystem::path("images") / name;
      if (format == ImageFormat::kPgm) {
        save_pgm(out_dir / rel, sample.image);
      } else {
        save_png(out_dir / rel, sample.image);
      }
      rel_paths[static_cast<size_t>(k)] = rel.generic_string();
      transcriptions[static_cast<size_t>(k)] = sample.transcription;
    } catch (const std::exception& e) {
#pragma omp critical
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!first_error.empty()) {
    throw std::runtime_error("generate_corpus: " + first_error);
  }

  CorpusReport report;
  report.count = count;
  const std::filesystem::path manifest_path = out_dir / manifest_name;
  std::ofstream manifest(manifest_path, std::ios::binary);
  if (!manifest) {
    throw std::runtime_error("cannot write manifest " + manifest_path.string());
  }
  for (int k = 0; k < count; ++k) {
    manifest << rel_paths[static_cast<size_t>(k)] << "\t"
             << transcriptions[static_cast<size_t>(k)] << "\n";
    const auto classes = charset.encode(transcriptions[static_cast<size_t>(k)]);
    for (int cls : *classes) ++report.class_histogram[cls];
  }
  report.manifest = manifest_path;
  return report;
}

std::vector<CharBox> load_template_boxes(const std::filesystem::path& json_path,
                                         int* height, int* width) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("cannot open template sidecar " + json_path.string());
  nlohmann::json j;
  in >> j;
  if (height != nullptr) *height = j.at("height").get<int>();
  if (width != nullptr) *width = j.at("width").get<int>();
  std::vector<CharBox> boxes;
  for (const auto& jb : j.at("boxes")) {
    boxes.push_back({jb.at("x").get<int>(), jb.at("y").get<int>(),
                     jb.at("w").get<int>(), jb.at("h").get<int>()});
  }
  return boxes;
}

Charset synthetic_charset(int num_classes) {
  static const std::string kPool =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
  std::vector<std::string> characters;
  characters.reserve(static_cast<size_t>(num_classes));
  for (int i = 0; i < num_classes; ++i) {
    if (i < static_cast<int>(kPool.size())) {
      characters.emplace_back(1, kPool[static_cast<size_t>(i)]);
    } else {
      // UTF-8 encoding of U+4E00 + offset.
      const int cp = 0x4e00 + (i - static_cast<int>(kPool.size()));
      std::string ch;
      ch += static_cast<char>(0xe0 | (cp >> 12));
      ch += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
      ch += static_cast<char>(0x80 | (cp & 0x3f));
      characters.push_back(ch);
    }
  }
  return Charset::from_characters(std::move(characters));
}

void save_template_boxes(const std::filesystem::path& json_path, const Template& tmpl) {
  nlohmann::ordered_json j;
  j["height"] = tmpl.line_height;
  j["width"] = tmpl.line_width;
  j["boxes"] = nlohmann::ordered_json::array();
  for (const CharBox& box : tmpl.boxes) {
    j["boxes"].push_back({{"x", box.x}, {"y", box.y}, {"w", box.w}, {"h", box.h}});
  }
  std::ofstream out(json_path);
  if (!out) throw std::runtime_error("cannot write template sidecar " + json_path.string());
  out << j.dump(2) << "\n";
}

}  // namespace linerec
