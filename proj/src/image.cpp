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

#include "linerec/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#ifdef LINEREC_HAS_PNG
#include <png.h>
#endif

namespace linerec {

namespace {

int read_pgm_token(std::istream& in) {
  // Skips whitespace and '#' comments per the netpbm grammar.
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  if (!in || value < 0) throw std::runtime_error("malformed PGM header");
  return value;
}

ImageU8 load_pgm(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image " + path.string());
  char magic[2];
  in.read(magic, 2);
  const int width = read_pgm_token(in);
  const int height = read_pgm_token(in);
  const int maxval = read_pgm_token(in);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
    throw std::runtime_error("unsupported PGM dimensions/maxval in " + path.string());
  }
  ImageU8 img(height, width);
  if (binary) {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw std::runtime_error("truncated PGM data in " + path.string());
  } else {
    for (auto& px : img.pixels) {
      int v;
      in >> v;
      if (!in || v < 0 || v > maxval) {
        throw std::runtime_error("malformed PGM data in " + path.string());
      }
      px = static_cast<uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (auto& px : img.pixels) {
      px = static_cast<uint8_t>(px * 255 / maxval);
    }
  }
  return img;
}

#ifdef LINEREC_HAS_PNG

ImageU8 load_png_file(const std::filesystem::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (fp == nullptr) throw std::runtime_error("cannot open image " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (info == nullptr) {
    if (png) png_destroy_read_struct(&png, nullptr, nullptr);
    std::fclose(fp);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("libpng failed to decode " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);

  ImageU8 img(static_cast<int>(png_get_image_height(png, info)),
              static_cast<int>(png_get_image_width(png, info)));
  std::vector<png_bytep> rows(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<size_t>(y)] = img.pixels.data() + static_cast<size_t>(y) * img.width;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

#endif  // LINEREC_HAS_PNG

}  // namespace

ImageU8 load_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open image " + path.string());
  unsigned char magic[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(magic), 2);
  probe.close();
  if (magic[0] == 'P' && magic[1] == '5') return load_pgm(path, true);
  if (magic[0] == 'P' && magic[1] == '2') return load_pgm(path, false);
  if (magic[0] == 0x89 && magic[1] == 'P') {
#ifdef LINEREC_HAS_PNG
    return load_png_file(path);
#else
    throw std::runtime_error("built without PNG support; cannot read " + path.string());
#endif
  }
  throw std::runtime_error("unrecognized image format: " + path.string());
}

void save_pgm(const std::filesystem::path& path, const ImageU8& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image " + path.string());
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

void save_png(const std::filesystem::path& path, const ImageU8& image) {
#ifdef LINEREC_HAS_PNG
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (fp == nullptr) throw std::runtime_error("cannot write image " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (info == nullptr) {
    if (png) png_destroy_write_struct(&png, nullptr);
    std::fclose(fp);
    throw std::runtime_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("libpng failed to encode " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() +
                                             static_cast<size_t>(y) * image.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
#else
  (void)image;
  throw std::runtime_error("built without PNG support; cannot write " + path.string());
#endif
}

std::vector<float> resize_bilinear_f(const ImageU8& image, int out_height,
                                     int out_width) {
  if (image.height <= 0 || image.width <= 0) {
    throw std::invalid_argument("resize of a zero-area image");
  }
  if (out_height <= 0 || out_width <= 0) {
    throw std::invalid_argument("resize to a zero-area image");
  }
  std::vector<float> out(static_cast<size_t>(out_height) * out_width);
  const double sy = static_cast<double>(image.height) / out_height;
  const double sx = static_cast<double>(image.width) / out_width;
  for (int y = 0; y < out_height; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(image.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(image.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      const double top = image.at(y0, x0) * (1.0 - wx) + image.at(y0, x1) * wx;
      const double bottom = image.at(y1, x0) * (1.0 - wx) + image.at(y1, x1) * wx;
      out[static_cast<size_t>(y) * out_width + x] =
          static_cast<float>(top * (1.0 - wy) + bottom * wy);
    }
  }
  return out;
}

ImageU8 resize_bilinear(const ImageU8& image, int out_height, int out_width) {
  const std::vector<float> values = resize_bilinear_f(image, out_height, out_width);
  ImageU8 out(out_height, out_width);
  for (size_t i = 0; i < values.size(); ++i) {
    out.pixels[i] = static_cast<uint8_t>(std::clamp(std::lround(values[i]), 0L, 255L));
  }
  return out;
}

}  // namespace linerec
