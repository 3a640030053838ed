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

#ifndef RAWTOBIT_DATA_HPP_
#define RAWTOBIT_DATA_HPP_

#include <string>
#include <vector>

#include "rawtobit/tensor.hpp"

namespace rtb {

struct RawImage {
  Tensor data;  // [4, h, w] in [0,1], RGGB-packed
  int black_level = 0;
  int white_level = 65535;
  std::string bayer_pattern = "RGGB";
  std::string source_id;
};

struct SrgbImage {
  Tensor data;  // [3, H, W] in [0,1]
  std::string source_id;
};

// D4 augmentation tags: low two bits = quarter-turns, bit 2 = h-flip first.
enum class Augmentation : int {
  kIdentity = 0,
  kRot90 = 1,
  kRot180 = 2,
  kRot270 = 3,
  kHFlip = 4,
  kHFlipRot90 = 5,
  kHFlipRot180 = 6,
  kHFlipRot270 = 7,
};

struct PatchPair {
  Tensor raw_patch;   // [4, p, p]
  Tensor srgb_patch;  // [3, 2p, 2p]
  Augmentation augmentation_tag = Augmentation::kIdentity;
};

// Bayer packing: channel c of the output takes mosaic position
// (2i + c/2, 2j + c%2), i.e. channels (R, G1, G2, B) for an RGGB mosaic.
Tensor pack_rggb(const Tensor& mosaic, const std::string& pattern = "RGGB");
Tensor unpack_rggb(const Tensor& packed);

// clamp((counts - black) / (white - black), 0, 1)
Tensor normalize_raw(const Tensor& mosaic_counts, double black_level,
                     double white_level);

// Applies an augmentation to a [H,W] plane (used per channel / per mosaic).
Tensor augment_plane(const Tensor& plane, Augmentation aug);
// Packed RAW route: unpack -> transform the mosaic -> repack.
Tensor augment_packed(const Tensor& packed, Augmentation aug);

PatchPair extract_patch_pair(const RawImage& raw, const SrgbImage& srgb, Rng& rng,
                             int raw_patch = 128);

struct DatasetSplit {
  std::vector<std::string> train_ids, val_ids, test_ids;
  uint64_t seed = 0;
};

// round-half-up 15% test, then 5% val, remainder train; deterministic
// shuffle of the sorted id list under the seed.
DatasetSplit make_split(std::vector<std::string> ids, uint64_t seed);

void write_split_file(const std::string& path, const DatasetSplit& split);
DatasetSplit read_split_file(const std::string& path);

// --- pair storage -------------------------------------------------------------

struct PairRecord {
  RawImage raw;
  SrgbImage srgb;
};

std::vector<std::string> list_pair_ids(const std::string& dir);
PairRecord load_pair(const std::string& dir, const std::string& id);

// --- synthetic data -----------------------------------------------------------

// Fixed analytic development used by the synthetic generator (and as a test
// oracle): bilinear demosaic, fixed color matrix, gamma 1/2.2.
Tensor toy_isp(const Tensor& mosaic01);

// Smooth random scenes sensor-sampled to RGGB mosaics plus their toy-ISP
// rendering; lets every test run with zero external data.
std::vector<PairRecord> synthetic_pairs(int count, int mosaic_h, int mosaic_w,
                                        uint64_t seed);
void generate_synthetic_dir(const std::string& dir, int count, int mosaic_h,
                            int mosaic_w, uint64_t seed);

// Uniform patch stream over a pair list. Worker streams draw from rngs
// forked per (seed, worker); sampling is reproducible for worker_count 1.
class PatchSampler {
 public:
  PatchSampler(std::vector<PairRecord> pairs, uint64_t seed, int worker_count = 1);
  PatchPair next(int raw_patch);
  int64_t pair_count() const { return int64_t(pairs_.size()); }

 private:
  std::vector<PairRecord> pairs_;
  std::vector<Rng> workers_;
  size_t next_worker_ = 0;
};

}  // namespace rtb

#endif  // RAWTOBIT_DATA_HPP_
