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

#ifndef RAWTOBIT_RANGE_CODER_HPP_
#define RAWTOBIT_RANGE_CODER_HPP_

#include <cstdint>
#include <vector>

#include "rawtobit/errors.hpp"

namespace rtb {

// Byte-oriented range coder with a 64-bit range register and carry handling
// through a cached-byte chain. Frequencies live on a 2^16 grid. The first
// output byte is always zero; the decoder preloads and discards it. Flush
// emits kRcFlushBytes, so an empty stream is exactly that many bytes.

constexpr int kRcProbBits = 16;
constexpr uint32_t kRcProbScale = 1u << kRcProbBits;
constexpr int kRcFlushBytes = 9;

class RangeEncoder {
 public:
  // Narrows to [cum, cum+freq) of the 2^16 grid. freq >= 1.
  void encode(uint32_t cum, uint32_t freq) {
    const uint64_t r = range_ >> kRcProbBits;
    low_ += (unsigned __int128)r * cum;
    range_ = r * freq;
    while (range_ < kTop) {
      shift_low();
      range_ <<= 8;
    }
  }

  std::vector<uint8_t> finish() {
    for (int i = 0; i < kRcFlushBytes; ++i) shift_low();
    return std::move(buf_);
  }

  size_t size_so_far() const { return buf_.size(); }

 private:
  static constexpr uint64_t kTop = 1ull << 56;

  void shift_low() {
    const uint64_t lo64 = (uint64_t)low_;
    const uint32_t carry = (uint32_t)(low_ >> 64);
    if (carry != 0 || lo64 < 0xFF00000000000000ull) {
      uint8_t byte = cache_;
      do {
        buf_.push_back(uint8_t(byte + carry));
        byte = 0xFF;
      } while (--cache_size_);
      cache_ = uint8_t(lo64 >> 56);
    }
    ++cache_size_;
    low_ = (unsigned __int128)(lo64 << 8);
  }

  unsigned __int128 low_ = 0;
  uint64_t range_ = ~0ull;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  std::vector<uint8_t> buf_;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* data, size_t size) : data_(data), size_(size) {
    for (int i = 0; i < kRcFlushBytes; ++i) code_ = (code_ << 8) | read_byte();
  }

  // Scaled position of the pending symbol on the 2^16 grid.
  uint32_t target() {
    r_ = range_ >> kRcProbBits;
    uint64_t t = code_ / r_;
    return t > kRcProbScale - 1 ? kRcProbScale - 1 : uint32_t(t);
  }

  // Must be called with the (cum, freq) of the symbol found at target().
  void update(uint32_t cum, uint32_t freq) {
    code_ -= r_ * cum;
    range_ = r_ * freq;
    while (range_ < kTop) {
      code_ = (code_ << 8) | read_byte();
      range_ <<= 8;
    }
  }

  size_t consumed() const { return pos_; }

 private:
  static constexpr uint64_t kTop = 1ull << 56;

  uint8_t read_byte() {
    if (pos_ >= size_)
      fail(ErrorCode::kDecodeError,
           "range decoder ran past end of payload at byte offset " +
               std::to_string(pos_));
    return data_[pos_++];
  }

  uint64_t range_ = ~0ull;
  uint64_t code_ = 0;
  uint64_t r_ = 0;
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

}  // namespace rtb

#endif  // RAWTOBIT_RANGE_CODER_HPP_
