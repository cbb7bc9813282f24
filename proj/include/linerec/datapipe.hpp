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

#ifndef LINEREC_DATAPIPE_HPP_
#define LINEREC_DATAPIPE_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "linerec/charset.hpp"
#include "linerec/image.hpp"
#include "linerec/rng.hpp"
#include "linerec/tensor.hpp"

namespace linerec {

struct LineSample {
  ImageU8 image;
  std::string transcription;  // UTF-8
  std::string id;
};

// A text line after fixed-height resize and normalization, ready to batch.
struct PreparedSample {
  Tensor image;  // 1 x H x width
  std::vector<int> labels;
  std::string id;
  int width = 0;
};

struct Batch {
  Tensor images;  // B x 1 x H x W_pad, W_pad a multiple of 16
  std::vector<int> seq_lens;  // ceil(width/16) per sample
  std::vector<std::vector<int>> labels;
  std::vector<int> widths;
  std::vector<std::string> ids;
};

struct NormalizeParams {
  float mean = 0.5f;
  float stddev = 0.5f;
};

// Bilinear resize to target_height at preserved aspect ratio (width becomes
// round(w*target_height/h)), then scale to [0,1] and normalize (x-mean)/std.
Tensor preprocess(const ImageU8& image, int target_height,
                  const NormalizeParams& norm = {});

PreparedSample prepare_sample(const LineSample& sample, const Charset& charset,
                              int target_height, const NormalizeParams& norm = {});

// Pads every sample to the max width rounded up to a multiple of 16 by
// replicating its own last real (already normalized) column.
Batch make_batch(std::span<const PreparedSample> samples);

struct LoadReport {
  struct Reject {
    int line_number = 0;
    std::string detail;
  };
  size_t loaded = 0;
  std::vector<Reject> rejects;
};

// Manifest format: UTF-8 text, one "<relative image path>\t<transcription>"
// per line; image paths resolve against the manifest's directory. Rows with
// out-of-charset characters or unreadable images are rejected and itemized in
// the report; an empty or unreadable manifest is an error.
std::vector<LineSample> load_dataset(const std::filesystem::path& manifest_path,
                                     const Charset& charset,
                                     LoadReport* report = nullptr);

// Width-sorted batching: stable sort by (width, index), chunk into
// consecutive groups of batch_size, then shuffle the group order with the
// given stream. Returns index groups into the input order.
std::vector<std::vector<int>> bucket_by_width(std::span<const PreparedSample> samples,
                                              int batch_size, Rng& rng,
                                              bool shuffle = true);

inline int round_up16(int v) { return (v + 15) / 16 * 16; }
inline int seq_len_for_width(int width) { return (width + 15) / 16; }

}  // namespace linerec

#endif  // LINEREC_DATAPIPE_HPP_
