// Copyright 2026 The RAWtoBit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rawtobit/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include <json.hpp>

namespace rtb {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

std::string meta_path_for(const std::string& raw_path) {
  std::string base = raw_path;
  const std::string ext = ".raw16";
  if (base.size() >= ext.size() &&
      base.compare(base.size() - ext.size(), ext.size(), ext) == 0)
    base.resize(base.size() - ext.size());
  return base + ".meta.json";
}

}  // namespace

Tensor read_png(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) fail(ErrorCode::kIoError, "cannot open: " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kFormatError, "png read error: " + path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // little-endian in memory
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<uint8_t> data(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 i = 0; i < h; ++i) rows[i] = data.data() + i * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3)
    fail(ErrorCode::kFormatError, "png must be gray or rgb: " + path);
  Tensor img(Shape{channels, int(h), int(w)});
  const double scale = out_depth == 16 ? 65535.0 : 255.0;
  for (png_uint_32 i = 0; i < h; ++i)
    for (png_uint_32 j = 0; j < w; ++j)
      for (int c = 0; c < channels; ++c) {
        double v;
        if (out_depth == 16) {
          const uint16_t* row = reinterpret_cast<const uint16_t*>(rows[i]);
          v = double(row[j * png_uint_32(channels) + png_uint_32(c)]);
        } else {
          v = double(rows[i][j * png_uint_32(channels) + png_uint_32(c)]);
        }
        img[((int64_t(c) * h) + i) * w + j] = v / scale;
      }
  return img;
}

void write_png(const std::string& path, const Tensor& img, int bit_depth) {
  if (img.ndim() != 3 || (img.dim(0) != 1 && img.dim(0) != 3))
    fail(ErrorCode::kInvalidShape, "write_png expects [1|3,H,W]");
  if (bit_depth != 8 && bit_depth != 16)
    fail(ErrorCode::kInvalidArgument, "png bit depth must be 8 or 16");
  const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) fail(ErrorCode::kIoError, "cannot open for writing: " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::kIoError, "png write error: " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, png_uint_32(W), png_uint_32(H), bit_depth,
               C == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);

  const double scale = bit_depth == 16 ? 65535.0 : 255.0;
  const size_t rowbytes = size_t(W) * size_t(C) * size_t(bit_depth / 8);
  std::vector<uint8_t> row(rowbytes);
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j)
      for (int c = 0; c < C; ++c) {
        double v = img[((int64_t(c) * H) + i) * W + j];
        v = std::min(1.0, std::max(0.0, v));
        const uint32_t q = uint32_t(std::lround(v * scale));
        if (bit_depth == 16)
          reinterpret_cast<uint16_t*>(row.data())[j * C + c] = uint16_t(q);
        else
          row[size_t(j * C + c)] = uint8_t(q);
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RawFile read_raw16(const std::string& path) {
  std::ifstream meta_f(meta_path_for(path));
  if (!meta_f) fail(ErrorCode::kIoError, "missing sidecar: " + meta_path_for(path));
  nlohmann::json j;
  try {
    meta_f >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::kInvalidMetadata, "bad metadata json: " + std::string(e.what()));
  }
  RawFile rf;
  rf.meta.width = j.at("width").get<int>();
  rf.meta.height = j.at("height").get<int>();
  rf.meta.black_level = j.value("black_level", 0);
  rf.meta.white_level = j.value("white_level", 65535);
  rf.meta.bayer_pattern = j.value("bayer_pattern", std::string("RGGB"));
  rf.meta.source_id = j.value("source_id", std::string());
  if (rf.meta.width <= 0 || rf.meta.height <= 0)
    fail(ErrorCode::kInvalidMetadata, "non-positive raw dims in metadata");

  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIoError, "cannot open: " + path);
  const int64_t n = int64_t(rf.meta.width) * rf.meta.height;
  std::vector<uint8_t> bytes(size_t(n) * 2);
  f.read(reinterpret_cast<char*>(bytes.data()), long(bytes.size()));
  if (!f) fail(ErrorCode::kFormatError, "raw16 shorter than metadata dims: " + path);
  rf.mosaic = Tensor(Shape{rf.meta.height, rf.meta.width});
  for (int64_t i = 0; i < n; ++i)
    rf.mosaic[i] = double(uint16_t(bytes[size_t(2 * i)]) |
                          (uint16_t(bytes[size_t(2 * i + 1)]) << 8));
  return rf;
}

void write_raw16(const std::string& path, const Tensor& mosaic_counts,
                 const RawFileMeta& meta) {
  if (mosaic_counts.ndim() != 2)
    fail(ErrorCode::kInvalidShape, "write_raw16 expects [H,W]");
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIoError, "cannot open for writing: " + path);
  const int64_t n = mosaic_counts.numel();
  std::vector<uint8_t> bytes(size_t(n) * 2);
  for (int64_t i = 0; i < n; ++i) {
    double v = std::min(65535.0, std::max(0.0, std::nearbyint(mosaic_counts[i])));
    const uint16_t q = uint16_t(v);
    bytes[size_t(2 * i)] = uint8_t(q);
    bytes[size_t(2 * i + 1)] = uint8_t(q >> 8);
  }
  f.write(reinterpret_cast<const char*>(bytes.data()), long(bytes.size()));
  if (!f) fail(ErrorCode::kIoError, "write failed: " + path);

  nlohmann::json j{{"width", meta.width},
                   {"height", meta.height},
                   {"black_level", meta.black_level},
                   {"white_level", meta.white_level},
                   {"bayer_pattern", meta.bayer_pattern},
                   {"source_id", meta.source_id}};
  std::ofstream mf(meta_path_for(path));
  if (!mf) fail(ErrorCode::kIoError, "cannot write sidecar for: " + path);
  mf << j.dump(2) << "\n";
}

}  // namespace rtb
