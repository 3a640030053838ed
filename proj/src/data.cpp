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

#include "rawtobit/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "rawtobit/image_io.hpp"

namespace rtb {

namespace fs = std::filesystem;

Tensor pack_rggb(const Tensor& mosaic_in, const std::string& pattern) {
  if (pattern != "RGGB")
    fail(ErrorCode::kUnsupportedPattern, "unsupported bayer pattern: " + pattern);
  Tensor mosaic = mosaic_in;
  if (mosaic.ndim() == 3 && mosaic.dim(0) == 1)
    mosaic = mosaic.reshaped(Shape{mosaic.dim(1), mosaic.dim(2)});
  if (mosaic.ndim() != 2)
    fail(ErrorCode::kInvalidShape, "pack_rggb expects [H,W] or [1,H,W]");
  const int H = mosaic.dim(0), W = mosaic.dim(1);
  if (H % 2 != 0 || W % 2 != 0)
    fail(ErrorCode::kInvalidShape, "mosaic dims must be even for packing");
  Tensor out(Shape{4, H / 2, W / 2});
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < H / 2; ++i)
      for (int j = 0; j < W / 2; ++j)
        out[(int64_t(c) * (H / 2) + i) * (W / 2) + j] =
            mosaic[int64_t(2 * i + c / 2) * W + (2 * j + c % 2)];
  return out;
}

Tensor unpack_rggb(const Tensor& packed) {
  if (packed.ndim() != 3 || packed.dim(0) != 4)
    fail(ErrorCode::kInvalidShape, "unpack_rggb expects [4,h,w]");
  const int h = packed.dim(1), w = packed.dim(2);
  Tensor out(Shape{2 * h, 2 * w});
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        out[int64_t(2 * i + c / 2) * (2 * w) + (2 * j + c % 2)] =
            packed[(int64_t(c) * h + i) * w + j];
  return out;
}

Tensor normalize_raw(const Tensor& counts, double black_level, double white_level) {
  if (white_level <= black_level)
    fail(ErrorCode::kInvalidMetadata, "white_level must exceed black_level");
  const double span = white_level - black_level;
  Tensor out(counts.shape());
  for (int64_t i = 0; i < counts.numel(); ++i) {
    double v = (counts[i] - black_level) / span;
    out[i] = std::min(1.0, std::max(0.0, v));
  }
  return out;
}

Tensor augment_plane(const Tensor& plane, Augmentation aug) {
  if (plane.ndim() != 2) fail(ErrorCode::kInvalidShape, "augment_plane: [H,W] only");
  const int a = int(aug);
  Tensor cur = plane;
  if (a & 4) {  // horizontal flip
    const int H = cur.dim(0), W = cur.dim(1);
    Tensor next(Shape{H, W});
    for (int i = 0; i < H; ++i)
      for (int j = 0; j < W; ++j)
        next[int64_t(i) * W + j] = cur[int64_t(i) * W + (W - 1 - j)];
    cur = next;
  }
  for (int r = 0; r < (a & 3); ++r) {  // quarter turns
    const int H = cur.dim(0), W = cur.dim(1);
    Tensor next(Shape{W, H});  // rotate 90 degrees clockwise
    for (int i = 0; i < W; ++i)
      for (int j = 0; j < H; ++j)
        next[int64_t(i) * H + j] = cur[int64_t(H - 1 - j) * W + i];
    cur = next;
  }
  return cur;
}

Tensor augment_packed(const Tensor& packed, Augmentation aug) {
  return pack_rggb(augment_plane(unpack_rggb(packed), aug));
}

PatchPair extract_patch_pair(const RawImage& raw, const SrgbImage& srgb, Rng& rng,
                             int raw_patch) {
  const int h = raw.data.dim(1), w = raw.data.dim(2);
  if (h < raw_patch || w < raw_patch)
    fail(ErrorCode::kPatchTooLarge,
         "raw image " + shape_str(raw.data.shape()) + " smaller than patch " +
             std::to_string(raw_patch));
  if (srgb.data.dim(1) != 2 * h || srgb.data.dim(2) != 2 * w)
    fail(ErrorCode::kInvalidShape, "raw/sRGB pair dims inconsistent");
  const int i0 = int(rng.below(uint64_t(h - raw_patch + 1)));
  const int j0 = int(rng.below(uint64_t(w - raw_patch + 1)));
  const Augmentation aug = Augmentation(rng.below(8));

  Tensor raw_crop(Shape{4, raw_patch, raw_patch});
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < raw_patch; ++i)
      for (int j = 0; j < raw_patch; ++j)
        raw_crop[(int64_t(c) * raw_patch + i) * raw_patch + j] =
            raw.data[(int64_t(c) * h + (i0 + i)) * w + (j0 + j)];

  const int sp = 2 * raw_patch;
  Tensor srgb_crop(Shape{3, sp, sp});
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < sp; ++i)
      for (int j = 0; j < sp; ++j)
        srgb_crop[(int64_t(c) * sp + i) * sp + j] =
            srgb.data[(int64_t(c) * srgb.data.dim(1) + (2 * i0 + i)) *
                          srgb.data.dim(2) +
                      (2 * j0 + j)];

  PatchPair pp;
  pp.augmentation_tag = aug;
  pp.raw_patch = augment_packed(raw_crop, aug);
  Tensor srgb_aug(Shape{3, sp, sp});
  for (int c = 0; c < 3; ++c) {
    Tensor plane(Shape{sp, sp});
    std::copy(srgb_crop.data() + int64_t(c) * sp * sp,
              srgb_crop.data() + int64_t(c + 1) * sp * sp, plane.data());
    Tensor tp = augment_plane(plane, aug);
    std::copy(tp.data(), tp.data() + sp * sp, srgb_aug.data() + int64_t(c) * sp * sp);
  }
  pp.srgb_patch = srgb_aug;
  return pp;
}

DatasetSplit make_split(std::vector<std::string> ids, uint64_t seed) {
  if (ids.empty()) fail(ErrorCode::kInvalidArgument, "make_split: no ids");
  std::sort(ids.begin(), ids.end());
  Rng rng(seed ^ 0x51BD17ull);
  for (size_t i = ids.size() - 1; i > 0; --i)
    std::swap(ids[i], ids[rng.below(i + 1)]);
  const int64_t n = int64_t(ids.size());
  const int64_t n_test = int64_t(std::floor(0.15 * double(n) + 0.5));
  const int64_t n_val = int64_t(std::floor(0.05 * double(n) + 0.5));
  DatasetSplit s;
  s.seed = seed;
  s.test_ids.assign(ids.begin(), ids.begin() + n_test);
  s.val_ids.assign(ids.begin() + n_test, ids.begin() + n_test + n_val);
  s.train_ids.assign(ids.begin() + n_test + n_val, ids.end());
  return s;
}

void write_split_file(const std::string& path, const DatasetSplit& split) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::kIoError, "cannot write split file: " + path);
  f << "[train]\n";
  for (const auto& id : split.train_ids) f << id << "\n";
  f << "[val]\n";
  for (const auto& id : split.val_ids) f << id << "\n";
  f << "[test]\n";
  for (const auto& id : split.test_ids) f << id << "\n";
}

DatasetSplit read_split_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::kIoError, "cannot open split file: " + path);
  DatasetSplit s;
  std::vector<std::string>* cur = nullptr;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "[train]") cur = &s.train_ids;
    else if (line == "[val]") cur = &s.val_ids;
    else if (line == "[test]") cur = &s.test_ids;
    else if (cur) cur->push_back(line);
    else fail(ErrorCode::kFormatError, "split file line outside a section");
  }
  return s;
}

std::vector<std::string> list_pair_ids(const std::string& dir) {
  std::vector<std::string> ids;
  if (!fs::is_directory(dir)) fail(ErrorCode::kIoError, "not a directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    const std::string ext = ".raw16";
    if (name.size() > ext.size() &&
        name.compare(name.size() - ext.size(), ext.size(), ext) == 0)
      ids.push_back(name.substr(0, name.size() - ext.size()));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

PairRecord load_pair(const std::string& dir, const std::string& id) {
  const std::string raw_path = dir + "/" + id + ".raw16";
  RawFile rf = read_raw16(raw_path);
  if (rf.meta.bayer_pattern != "RGGB")
    fail(ErrorCode::kUnsupportedPattern,
         "unsupported bayer pattern: " + rf.meta.bayer_pattern);
  if (rf.meta.height < 64 || rf.meta.width < 64 || rf.meta.height % 2 != 0 ||
      rf.meta.width % 2 != 0)
    fail(ErrorCode::kInvalidShape, "raw dims must be even and >= 64: " + id);
  PairRecord p;
  p.raw.data = pack_rggb(
      normalize_raw(rf.mosaic, rf.meta.black_level, rf.meta.white_level));
  p.raw.black_level = rf.meta.black_level;
  p.raw.white_level = rf.meta.white_level;
  p.raw.source_id = id;
  p.srgb.data = read_png(dir + "/" + id + ".srgb.png");
  p.srgb.source_id = id;
  if (p.srgb.data.dim(0) != 3 || p.srgb.data.dim(1) != rf.meta.height ||
      p.srgb.data.dim(2) != rf.meta.width)
    fail(ErrorCode::kInvalidShape, "sRGB dims must match the mosaic dims: " + id);
  return p;
}

namespace {

double bilerp(const Tensor& grid, int c, double y, double x, int gh, int gw) {
  const int y0 = std::min(gh - 2, int(y)), x0 = std::min(gw - 2, int(x));
  const double fy = y - y0, fx = x - x0;
  auto g = [&](int i, int j) {
    return grid[(int64_t(c) * gh + i) * gw + j];
  };
  return g(y0, x0) * (1 - fy) * (1 - fx) + g(y0 + 1, x0) * fy * (1 - fx) +
         g(y0, x0 + 1) * (1 - fy) * fx + g(y0 + 1, x0 + 1) * fy * fx;
}

int bayer_channel(int i, int j) {  // 0=R 1=G 2=B color index of RGGB site
  const int r = i & 1, c = j & 1;
  if (r == 0 && c == 0) return 0;
  if (r == 1 && c == 1) return 2;
  return 1;
}

// Fixed, mildly saturating color matrix (rows sum to 1).
constexpr double kToyColorMatrix[3][3] = {
    {1.6, -0.4, -0.2}, {-0.3, 1.6, -0.3}, {-0.2, -0.4, 1.6}};

}  // namespace

Tensor toy_isp(const Tensor& mosaic01) {
  if (mosaic01.ndim() != 2) fail(ErrorCode::kInvalidShape, "toy_isp expects [H,W]");
  const int H = mosaic01.dim(0), W = mosaic01.dim(1);
  auto at = [&](int i, int j) {
    i = std::min(H - 1, std::max(0, i));
    j = std::min(W - 1, std::max(0, j));
    return mosaic01[int64_t(i) * W + j];
  };
  Tensor rgb(Shape{3, H, W});
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) {
      const int ch = bayer_channel(i, j);
      double r, g, b;
      if (ch == 0) {
        r = at(i, j);
        g = 0.25 * (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1));
        b = 0.25 * (at(i - 1, j - 1) + at(i - 1, j + 1) + at(i + 1, j - 1) +
                    at(i + 1, j + 1));
      } else if (ch == 2) {
        b = at(i, j);
        g = 0.25 * (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1));
        r = 0.25 * (at(i - 1, j - 1) + at(i - 1, j + 1) + at(i + 1, j - 1) +
                    at(i + 1, j + 1));
      } else {
        g = at(i, j);
        // Green sites: red neighbors sit on the row with R, blue on the other.
        if (i % 2 == 0) {  // row holds R G R G -> horizontal red, vertical blue
          r = 0.5 * (at(i, j - 1) + at(i, j + 1));
          b = 0.5 * (at(i - 1, j) + at(i + 1, j));
        } else {
          r = 0.5 * (at(i - 1, j) + at(i + 1, j));
          b = 0.5 * (at(i, j - 1) + at(i, j + 1));
        }
      }
      double vin[3] = {r, g, b};
      for (int c = 0; c < 3; ++c) {
        double acc = 0;
        for (int s = 0; s < 3; ++s) acc += kToyColorMatrix[c][s] * vin[s];
        acc = std::min(1.0, std::max(0.0, acc));
        rgb[(int64_t(c) * H + i) * W + j] = std::pow(acc, 1.0 / 2.2);
      }
    }
  return rgb;
}

namespace {

PairRecord make_synthetic_pair(int mosaic_h, int mosaic_w, Rng& rng,
                               const std::string& id) {
  constexpr int kBlack = 512, kWhite = 16383;
  const int gh = std::max(2, mosaic_h / 16), gw = std::max(2, mosaic_w / 16);
  Tensor grid = Tensor::rand_uniform(Shape{3, gh, gw}, rng, 0.06, 0.94);
  Tensor mosaic01(Shape{mosaic_h, mosaic_w});
  for (int i = 0; i < mosaic_h; ++i)
    for (int j = 0; j < mosaic_w; ++j) {
      const double gy = double(i) / double(mosaic_h) * (gh - 1);
      const double gx = double(j) / double(mosaic_w) * (gw - 1);
      mosaic01[int64_t(i) * mosaic_w + j] =
          bilerp(grid, bayer_channel(i, j), gy, gx, gh, gw);
    }
  // Quantize through the sensor levels so files and tensors agree exactly.
  Tensor counts(Shape{mosaic_h, mosaic_w});
  for (int64_t i = 0; i < counts.numel(); ++i)
    counts[i] = std::nearbyint(kBlack + mosaic01[i] * (kWhite - kBlack));
  Tensor norm = normalize_raw(counts, kBlack, kWhite);

  PairRecord p;
  p.raw.data = pack_rggb(norm);
  p.raw.black_level = kBlack;
  p.raw.white_level = kWhite;
  p.raw.source_id = id;
  p.srgb.data = toy_isp(norm);
  p.srgb.source_id = id;
  return p;
}

}  // namespace

std::vector<PairRecord> synthetic_pairs(int count, int mosaic_h, int mosaic_w,
                                        uint64_t seed) {
  if (mosaic_h % 2 || mosaic_w % 2)
    fail(ErrorCode::kInvalidShape, "synthetic mosaic dims must be even");
  std::vector<PairRecord> out;
  Rng rng(seed ^ 0x5EEDull);
  for (int i = 0; i < count; ++i)
    out.push_back(make_synthetic_pair(mosaic_h, mosaic_w, rng,
                                      "synth" + std::to_string(i)));
  return out;
}

void generate_synthetic_dir(const std::string& dir, int count, int mosaic_h,
                            int mosaic_w, uint64_t seed) {
  fs::create_directories(dir);
  auto pairs = synthetic_pairs(count, mosaic_h, mosaic_w, seed);
  for (const auto& p : pairs) {
    // Rebuild the integer mosaic the pair was derived from.
    Tensor counts(Shape{mosaic_h, mosaic_w});
    Tensor mosaic = unpack_rggb(p.raw.data);
    for (int64_t i = 0; i < counts.numel(); ++i)
      counts[i] = std::nearbyint(p.raw.black_level +
                                 mosaic[i] * (p.raw.white_level - p.raw.black_level));
    RawFileMeta meta;
    meta.width = mosaic_w;
    meta.height = mosaic_h;
    meta.black_level = p.raw.black_level;
    meta.white_level = p.raw.white_level;
    meta.source_id = p.raw.source_id;
    write_raw16(dir + "/" + p.raw.source_id + ".raw16", counts, meta);
    write_png(dir + "/" + p.raw.source_id + ".srgb.png", p.srgb.data, 16);
  }
}

PatchSampler::PatchSampler(std::vector<PairRecord> pairs, uint64_t seed,
                           int worker_count)
    : pairs_(std::move(pairs)) {
  if (pairs_.empty()) fail(ErrorCode::kInvalidArgument, "empty pair list");
  Rng base(seed);
  for (int w = 0; w < std::max(1, worker_count); ++w)
    workers_.push_back(base.fork(uint64_t(w)));
}

PatchPair PatchSampler::next(int raw_patch) {
  Rng& rng = workers_[next_worker_];
  next_worker_ = (next_worker_ + 1) % workers_.size();
  const size_t idx = size_t(rng.below(pairs_.size()));
  return extract_patch_pair(pairs_[idx].raw, pairs_[idx].srgb, rng, raw_patch);
}

}  // namespace rtb
