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

#include "linerec/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace linerec {

Tensor preprocess(const ImageU8& image, int target_height,
                  const NormalizeParams& norm) {
  if (image.height <= 0 || image.width <= 0) {
    throw std::invalid_argument("preprocess: zero-area image");
  }
  if (target_height <= 0 || target_height % 16 != 0) {
    throw std::invalid_argument("preprocess: target height must be a positive "
                                "multiple of 16");
  }
  const int out_width = std::max(
      1, static_cast<int>(std::lround(static_cast<double>(image.width) *
                                      target_height / image.height)));
  const std::vector<float> resized = resize_bilinear_f(image, target_height, out_width);
  Tensor out({1, target_height, out_width});
  float* dst = out.data();
  const float inv = 1.0f / 255.0f;
  for (size_t i = 0; i < resized.size(); ++i) {
    dst[i] = (resized[i] * inv - norm.mean) / norm.stddev;
  }
  return out;
}

PreparedSample prepare_sample(const LineSample& sample, const Charset& charset,
                              int target_height, const NormalizeParams& norm) {
  std::string bad;
  const auto labels = charset.encode(sample.transcription, &bad);
  if (!labels.has_value()) {
    throw std::invalid_argument("sample " + sample.id +
                                ": character '" + bad + "' not in charset");
  }
  PreparedSample prepared;
  prepared.image = preprocess(sample.image, target_height, norm);
  prepared.labels = *labels;
  prepared.id = sample.id;
  prepared.width = prepared.image.dim(2);
  return prepared;
}

Batch make_batch(std::span<const PreparedSample> samples) {
  if (samples.empty()) {
    throw std::invalid_argument("make_batch: empty sample list");
  }
  const int height = samples[0].image.dim(1);
  int max_width = 0;
  for (const auto& s : samples) {
    if (s.image.dim(1) != height) {
      throw std::invalid_argument("make_batch: mixed sample heights");
    }
    max_width = std::max(max_width, s.width);
  }
  const int w_pad = round_up16(max_width);
  const int b_count = static_cast<int>(samples.size());

  Batch batch;
  batch.images = Tensor({b_count, 1, height, w_pad});
  for (int b = 0; b < b_count; ++b) {
    const PreparedSample& s = samples[static_cast<size_t>(b)];
    const int w = s.width;
    const float* src = s.image.data();
    float* dst = batch.images.data() + static_cast<int64_t>(b) * height * w_pad;
    for (int y = 0; y < height; ++y) {
      const float* srow = src + static_cast<int64_t>(y) * w;
      float* drow = dst + static_cast<int64_t>(y) * w_pad;
      std::copy(srow, srow + w, drow);
      // Pad region repeats the sample's own last real column.
      const float edge = srow[w - 1];
      std::fill(drow + w, drow + w_pad, edge);
    }
    batch.seq_lens.push_back(seq_len_for_width(w));
    batch.labels.push_back(s.labels);
    batch.widths.push_back(w);
    batch.ids.push_back(s.id);
  }
  return batch;
}

std::vector<LineSample> load_dataset(const std::filesystem::path& manifest_path,
                                     const Charset& charset, LoadReport* report) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open manifest " + manifest_path.string());
  }
  const std::filesystem::path base = manifest_path.parent_path();

  std::vector<LineSample> samples;
  LoadReport local;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      local.rejects.push_back({line_number, "malformed line (no tab separator)"});
      continue;
    }
    LineSample sample;
    const std::string rel_path = line.substr(0, tab);
    sample.transcription = line.substr(tab + 1);
    sample.id = rel_path;
    std::string bad;
    if (!charset.encode(sample.transcription, &bad).has_value()) {
      local.rejects.push_back({line_number, "character '" + bad + "' not in charset"});
      continue;
    }
    try {
      sample.image = load_image(base / rel_path);
    } catch (const std::exception& e) {
      local.rejects.push_back({line_number, e.what()});
      continue;
    }
    samples.push_back(std::move(sample));
  }
  local.loaded = samples.size();
  if (line_number == 0) {
    throw std::runtime_error("manifest " + manifest_path.string() + " is empty");
  }
  if (samples.empty()) {
    throw std::runtime_error("manifest " + manifest_path.string() +
                             " yielded no usable samples (" +
                             std::to_string(local.rejects.size()) + " rejected)");
  }
  if (report != nullptr) *report = std::move(local);
  return samples;
}

std::vector<std::vector<int>> bucket_by_width(std::span<const PreparedSample> samples,
                                              int batch_size, Rng& rng,
                                              bool shuffle) {
  if (batch_size < 1) {
    throw std::invalid_argument("bucket_by_width: batch_size must be >= 1");
  }
  std::vector<int> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return samples[static_cast<size_t>(a)].width < samples[static_cast<size_t>(b)].width;
  });

  std::vector<std::vector<int>> groups;
  for (size_t i = 0; i < order.size(); i += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(order.size(), i + static_cast<size_t>(batch_size));
    groups.emplace_back(order.begin() + static_cast<int64_t>(i),
                        order.begin() + static_cast<int64_t>(end));
  }
  if (shuffle) {
    // Fisher-Yates over batch order; the epoch stays randomized while widths
    // inside each batch stay close.
    for (size_t i = groups.size(); i > 1; --i) {
      std::swap(groups[i - 1], groups[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);
    }
  }
  return groups;
}

}  // namespace linerec
