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

#include <doctest.h>

#include <filesystem>
#include <set>

#include "rawtobit/data.hpp"
#include "rawtobit/image_io.hpp"

using namespace rtb;

TEST_SUITE_BEGIN("data_pipeline");

TEST_CASE("pack_rggb 2x2 definition") {
  Tensor mosaic = Tensor::from({2, 2}, {0.1, 0.2, 0.3, 0.4});  // [[r,g1],[g2,b]]
  Tensor packed = pack_rggb(mosaic);
  CHECK(packed.shape() == Shape{4, 1, 1});
  CHECK(packed[0] == doctest::Approx(0.1));
  CHECK(packed[1] == doctest::Approx(0.2));
  CHECK(packed[2] == doctest::Approx(0.3));
  CHECK(packed[3] == doctest::Approx(0.4));
}

TEST_CASE("pack_rggb constant mosaic stays constant") {
  Tensor mosaic(Shape{4, 6}, 0.7);
  Tensor packed = pack_rggb(mosaic);
  for (int64_t i = 0; i < packed.numel(); ++i)
    CHECK(packed[i] == doctest::Approx(0.7));
}

TEST_CASE("pack_rggb random 6x8 against an index-loop oracle") {
  Rng rng(5);
  Tensor mosaic = Tensor::rand_uniform({6, 8}, rng, 0.0, 1.0);
  Tensor packed = pack_rggb(mosaic);
  CHECK(packed.shape() == Shape{4, 3, 4});
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(packed[(int64_t(c) * 3 + i) * 4 + j] ==
              doctest::Approx(mosaic[int64_t(2 * i + c / 2) * 8 + 2 * j + c % 2]));
}

TEST_CASE("pack errors") {
  Tensor odd(Shape{3, 4}, 0.0);
  CHECK_THROWS_AS(pack_rggb(odd), Error);
  Tensor ok(Shape{4, 4}, 0.0);
  CHECK_THROWS_AS(pack_rggb(ok, "BGGR"), Error);
}

TEST_CASE("pack then unpack is the identity (property)") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const int h = 2 * int(1 + rng.below(8)), w = 2 * int(1 + rng.below(8));
    Tensor mosaic = Tensor::rand_uniform({h, w}, rng, 0.0, 1.0);
    Tensor round = unpack_rggb(pack_rggb(mosaic));
    CHECK(t_max_abs_diff(mosaic, round) == 0.0);
  }
}

TEST_CASE("normalize_raw endpoints and midpoint") {
  Tensor v = Tensor::from({3}, {512.0, 16383.0, 8447.0});
  Tensor n = normalize_raw(v, 512, 16383);
  CHECK(n[0] == doctest::Approx(0.0));
  CHECK(n[1] == doctest::Approx(1.0));
  CHECK(n[2] == doctest::Approx((8447.0 - 512.0) / 15871.0).epsilon(1e-12));
  CHECK(n[2] == doctest::Approx(0.499968).epsilon(1e-5));
  CHECK_THROWS_AS(normalize_raw(v, 100, 100), Error);
}

namespace {
PairRecord tiny_pair(int mosaic, uint64_t seed) {
  return synthetic_pairs(1, mosaic, mosaic, seed)[0];
}
}  // namespace

TEST_CASE("extract_patch_pair: single valid position and determinism") {
  PairRecord p = tiny_pair(128, 3);  // raw 4x64x64
  {
    Rng rng(9);
    PatchPair pp = extract_patch_pair(p.raw, p.srgb, rng, 64);
    CHECK(pp.raw_patch.shape() == Shape{4, 64, 64});
    CHECK(pp.srgb_patch.shape() == Shape{3, 128, 128});
    // only one crop position exists; content must be the (augmented) image
    Tensor expect = augment_packed(p.raw.data, pp.augmentation_tag);
    CHECK(t_max_abs_diff(expect, pp.raw_patch) == 0.0);
  }
  {
    Rng a(42), b(42);
    PatchPair p1 = extract_patch_pair(p.raw, p.srgb, a, 32);
    PatchPair p2 = extract_patch_pair(p.raw, p.srgb, b, 32);
    CHECK(t_max_abs_diff(p1.raw_patch, p2.raw_patch) == 0.0);
    CHECK(t_max_abs_diff(p1.srgb_patch, p2.srgb_patch) == 0.0);
    CHECK(p1.augmentation_tag == p2.augmentation_tag);
  }
  Rng rng(1);
  RawImage small;
  small.data = Tensor(Shape{4, 16, 16});
  SrgbImage ssmall;
  ssmall.data = Tensor(Shape{3, 32, 32});
  CHECK_THROWS_AS(extract_patch_pair(small, ssmall, rng, 64), Error);
}

TEST_CASE("h-flip of packed RAW permutes channels (R,G1,G2,B)->(G1,R,B,G2)") {
  Rng rng(7);
  Tensor mosaic = Tensor::rand_uniform({8, 8}, rng, 0.0, 1.0);
  Tensor packed = pack_rggb(mosaic);
  Tensor flipped = augment_packed(packed, Augmentation::kHFlip);
  // oracle: unpack -> flip mosaic -> repack
  Tensor m = unpack_rggb(packed);
  Tensor mf(Shape{8, 8});
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) mf[i * 8 + j] = m[i * 8 + (7 - j)];
  Tensor oracle = pack_rggb(mf);
  CHECK(t_max_abs_diff(oracle, flipped) == 0.0);
  // channel permutation with columns reversed
  const int hw = 4 * 4;
  const int perm[4] = {1, 0, 3, 2};  // destination channel takes this source
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(flipped[(c * 4 + i) * 4 + j] ==
              doctest::Approx(packed[(perm[c] * 4 + i) * 4 + (3 - j)]));
  (void)hw;
}

TEST_CASE("augmented pairs stay pixel aligned (positive correlation)") {
  PairRecord p = tiny_pair(128, 11);
  Rng rng(13);
  for (int t = 0; t < 8; ++t) {
    PatchPair pp = extract_patch_pair(p.raw, p.srgb, rng, 32);
    // nearest-neighbour 2x upsample of the green-ish mean of the raw patch
    const int ph = 32, sp = 64;
    double mean_raw = 0, mean_srgb = 0;
    for (int i = 0; i < sp; ++i)
      for (int j = 0; j < sp; ++j) {
        mean_raw += pp.raw_patch[(1 * ph + i / 2) * ph + j / 2];
        mean_srgb += pp.srgb_patch[(1 * sp + i) * sp + j];
      }
    mean_raw /= sp * sp;
    mean_srgb /= sp * sp;
    double cov = 0;
    for (int i = 0; i < sp; ++i)
      for (int j = 0; j < sp; ++j)
        cov += (pp.raw_patch[(1 * ph + i / 2) * ph + j / 2] - mean_raw) *
               (pp.srgb_patch[(1 * sp + i) * sp + j] - mean_srgb);
    CHECK(cov > 0.0);
  }
}

TEST_CASE("make_split pinned counts") {
  auto ids = [](int n) {
    std::vector<std::string> v;
    for (int i = 0; i < n; ++i) v.push_back("img" + std::to_string(i));
    return v;
  };
  DatasetSplit s487 = make_split(ids(487), 20260809);
  CHECK(s487.test_ids.size() == 73);
  CHECK(s487.val_ids.size() == 24);
  CHECK(s487.train_ids.size() == 390);
  DatasetSplit s20 = make_split(ids(20), 1);
  CHECK(s20.test_ids.size() == 3);
  CHECK(s20.val_ids.size() == 1);
  CHECK(s20.train_ids.size() == 16);
  DatasetSplit s1 = make_split(ids(1), 1);
  CHECK(s1.test_ids.size() == 0);
  CHECK(s1.val_ids.size() == 0);
  CHECK(s1.train_ids.size() == 1);
}

TEST_CASE("make_split is a pure function of (ids, seed) and partitions") {
  std::vector<std::string> ids;
  for (int i = 0; i < 37; ++i) ids.push_back("f" + std::to_string(i * 7 % 100));
  DatasetSplit a = make_split(ids, 99);
  std::reverse(ids.begin(), ids.end());  // input order must not matter
  DatasetSplit b = make_split(ids, 99);
  CHECK(a.train_ids == b.train_ids);
  CHECK(a.val_ids == b.val_ids);
  CHECK(a.test_ids == b.test_ids);
  DatasetSplit c = make_split(ids, 100);
  CHECK(a.test_ids != c.test_ids);  // different seed shuffles differently

  std::set<std::string> all(a.train_ids.begin(), a.train_ids.end());
  all.insert(a.val_ids.begin(), a.val_ids.end());
  all.insert(a.test_ids.begin(), a.test_ids.end());
  CHECK(all.size() == ids.size());
  CHECK(a.train_ids.size() + a.val_ids.size() + a.test_ids.size() == ids.size());
}

TEST_CASE("split file round trip") {
  DatasetSplit s;
  s.train_ids = {"a", "b"};
  s.val_ids = {"c"};
  s.test_ids = {"d", "e"};
  const std::string path = "/tmp/rtb_split_test.txt";
  write_split_file(path, s);
  DatasetSplit r = read_split_file(path);
  CHECK(r.train_ids == s.train_ids);
  CHECK(r.val_ids == s.val_ids);
  CHECK(r.test_ids == s.test_ids);
}

TEST_CASE("pair files round trip through disk") {
  const std::string dir = "/tmp/rtb_pairdir_test";
  std::filesystem::remove_all(dir);
  generate_synthetic_dir(dir, 2, 64, 64, 77);
  auto ids = list_pair_ids(dir);
  CHECK(ids.size() == 2);
  PairRecord loaded = load_pair(dir, ids[0]);
  auto mem = synthetic_pairs(2, 64, 64, 77);
  // same id ordering: synth0, synth1
  CHECK(t_max_abs_diff(loaded.raw.data, mem[0].raw.data) < 1e-12);
  // sRGB goes through 16-bit png quantization
  CHECK(t_max_abs_diff(loaded.srgb.data, mem[0].srgb.data) < 1.0 / 65535.0);
}

TEST_CASE("worker streams are independent and deterministic") {
  auto pairs = synthetic_pairs(3, 64, 64, 5);
  PatchSampler s1(pairs, 123, 1), s2(pairs, 123, 1);
  for (int i = 0; i < 5; ++i) {
    PatchPair a = s1.next(16), b = s2.next(16);
    CHECK(t_max_abs_diff(a.raw_patch, b.raw_patch) == 0.0);
  }
  PatchSampler multi(pairs, 123, 3);
  CHECK_NOTHROW(multi.next(16));
}

TEST_SUITE_END();
