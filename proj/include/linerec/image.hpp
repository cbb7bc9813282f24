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

#ifndef LINEREC_IMAGE_HPP_
#define LINEREC_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

namespace linerec {

// 8-bit grayscale pixel grid, row-major, dark ink on a light background.
struct ImageU8 {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> pixels;

  ImageU8() = default;
  ImageU8(int h, int w, uint8_t fill = 0)
      : height(h), width(w), pixels(static_cast<size_t>(h) * static_cast<size_t>(w), fill) {}

  uint8_t& at(int y, int x) { return pixels[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int y, int x) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

// Dispatches on magic bytes: binary/ascii PGM (P5/P2) or 8-bit grayscale PNG.
ImageU8 load_image(const std::filesystem::path& path);

void save_pgm(const std::filesystem::path& path, const ImageU8& image);
void save_png(const std::filesystem::path& path, const ImageU8& image);

// Bilinear resampling with half-pixel-center alignment.
ImageU8 resize_bilinear(const ImageU8& image, int out_height, int out_width);

// Same resampling but into float intensities (0..255 scale) to avoid an
// 8-bit quantization between resize and normalization.
std::vector<float> resize_bilinear_f(const ImageU8& image, int out_height,
                                     int out_width);

}  // namespace linerec

#endif  // LINEREC_IMAGE_HPP_
