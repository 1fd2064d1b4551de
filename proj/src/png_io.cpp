// Copyright 2026 The LCSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "lcsc/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "lcsc/error.hpp"

namespace lcsc {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  return f;
}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<unsigned char> bytes;  // rows, 16-bit samples in host order
};

// Rows are read into a buffer that is sized before setjmp so that a longjmp
// out of libpng never skips a destructor in this frame.
bool decode_png(std::FILE* file, bool expand_to_rgb, DecodedPng& out) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, file);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_bit_depth(png, info) == 16) png_set_swap(png);
  if (expand_to_rgb) {
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
  }
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out.bytes.resize(row_bytes * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[y] = out.bytes.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_png(std::FILE* file, int width, int height, int bit_depth, int color_type,
                std::vector<png_bytep>& rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

LabelImage read_label_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  DecodedPng png;
  if (!decode_png(f.get(), false, png)) throw Error(ErrorCode::kParseError, "invalid PNG " + path.string());
  if (png.channels != 1) {
    throw Error(ErrorCode::kParseError, "label image must be single-channel: " + path.string());
  }
  LabelImage labels(png.width, png.height);
  if (png.bit_depth == 16) {
    const auto* src = reinterpret_cast<const std::uint16_t*>(png.bytes.data());
    std::copy(src, src + labels.size(), labels.data.begin());
  } else {
    std::copy(png.bytes.begin(), png.bytes.begin() + static_cast<std::ptrdiff_t>(labels.size()),
              labels.data.begin());
  }
  return labels;
}

void write_label_png(const std::filesystem::path& path, const LabelImage& labels) {
  FilePtr f = open_file(path, "wb");
  std::vector<std::uint16_t> buffer = labels.data;
  std::vector<png_bytep> rows(static_cast<std::size_t>(labels.height));
  for (int y = 0; y < labels.height; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(buffer.data() + static_cast<std::size_t>(y) * labels.width);
  }
  if (!encode_png(f.get(), labels.width, labels.height, 16, PNG_COLOR_TYPE_GRAY, rows)) {
    throw Error(ErrorCode::kIoFailure, "failed to write " + path.string());
  }
}

RgbImage read_rgb_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  DecodedPng png;
  if (!decode_png(f.get(), true, png) || png.channels != 3) {
    throw Error(ErrorCode::kParseError, "invalid PNG " + path.string());
  }
  RgbImage image(png.width, png.height);
  if (png.bit_depth == 16) {
    const auto* src = reinterpret_cast<const std::uint16_t*>(png.bytes.data());
    for (std::size_t i = 0; i < image.data.size(); ++i) image.data[i] = static_cast<float>(src[i] / 65535.0);
  } else {
    for (std::size_t i = 0; i < image.data.size(); ++i) image.data[i] = static_cast<float>(png.bytes[i] / 255.0);
  }
  return image;
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
  FilePtr f = open_file(path, "wb");
  std::vector<unsigned char> buffer(image.data.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const double v = std::clamp(static_cast<double>(image.data[i]), 0.0, 1.0);
    buffer[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * image.width * 3;
  if (!encode_png(f.get(), image.width, image.height, 8, PNG_COLOR_TYPE_RGB, rows)) {
    throw Error(ErrorCode::kIoFailure, "failed to write " + path.string());
  }
}

}  // namespace lcsc
