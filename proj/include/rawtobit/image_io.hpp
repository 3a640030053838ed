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

#ifndef RAWTOBIT_IMAGE_IO_HPP_
#define RAWTOBIT_IMAGE_IO_HPP_

#include <string>

#include "rawtobit/tensor.hpp"

namespace rtb {

// PNG in/out; values map linearly between [0,1] and the integer range.
Tensor read_png(const std::string& path);  // [C,H,W], C in {1,3}
void write_png(const std::string& path, const Tensor& img, int bit_depth = 8);

// Single-channel 16-bit mosaic `<id>.raw16` (little-endian u16, row-major)
// with a `<id>.meta.json` sidecar.
struct RawFileMeta {
  int width = 0, height = 0;
  int black_level = 0, white_level = 65535;
  std::string bayer_pattern = "RGGB";
  std::string source_id;
};

struct RawFile {
  Tensor mosaic;  // [H,W], raw integer counts stored as double
  RawFileMeta meta;
};

// path points at the .raw16 file; the sidecar lives next to it.
RawFile read_raw16(const std::string& path);
void write_raw16(const std::string& path, const Tensor& mosaic_counts,
                 const RawFileMeta& meta);

}  // namespace rtb

#endif  // RAWTOBIT_IMAGE_IO_HPP_
