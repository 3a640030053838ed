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

#ifndef RAWTOBIT_BITCODEC_HPP_
#define RAWTOBIT_BITCODEC_HPP_

#include <cstdint>
#include <vector>

#include "rawtobit/entropy.hpp"
#include "rawtobit/range_coder.hpp"

namespace rtb {

// Default symbol support of coded latents; values outside are clamped into
// the edge bins and repaired through a raw side list in the payload.
constexpr int kSupportMin = -127;
constexpr int kSupportMax = 128;

// Quantized cumulative distribution on the 2^16 grid.
// cdf has nsym()+1 entries, cdf[0] = 0, cdf[nsym()] = 2^16, strictly
// increasing, so every symbol keeps at least one grid unit of mass.
struct CdfTable {
  int s_min = kSupportMin;
  std::vector<uint32_t> cdf;

  int nsym() const { return int(cdf.size()) - 1; }
  uint32_t freq(int idx) const { return cdf[size_t(idx) + 1] - cdf[size_t(idx)]; }
};

// Rounds a monotone edge CDF (values in [0,1], one per bin edge) onto the
// grid, pinning the endpoints and restoring strict monotonicity.
CdfTable quantize_edge_cdf(const std::vector<double>& edge_cdf, int s_min);

CdfTable gaussian_cdf_table(double mu, double sigma, int s_min = kSupportMin,
                            int s_max = kSupportMax);

// Per-channel tables for the factorized prior.
std::vector<CdfTable> factorized_cdf_tables(const FactorizedPrior& fp,
                                            int s_min = kSupportMin,
                                            int s_max = kSupportMax);

void encode_symbol(RangeEncoder& enc, const CdfTable& table, int value);
int decode_symbol(RangeDecoder& dec, const CdfTable& table);

// Draws a value from the table's own distribution (for fuzz tests).
int sample_symbol(const CdfTable& table, Rng& rng);

// --- Coded tensor payloads -------------------------------------------------
//
// payload := u32 n_overflow, n_overflow * (u32 flat_index, i32 value),
//            u32 rc_len, rc bytes
// Out-of-support values are range-coded clamped and repaired from the list.

// Hyper-latent: per-channel static tables from the factorized prior.
std::vector<uint8_t> encode_hyper_payload(const Tensor& z_hat,
                                          const FactorizedPrior& fp);
Tensor decode_hyper_payload(const std::vector<uint8_t>& payload, const Shape& shape,
                            const FactorizedPrior& fp);

// Main latent: serial raster-order coding. Encode and decode share the same
// per-position arithmetic so the Gaussian parameters match bit-exactly.
std::vector<uint8_t> encode_latent_payload(const Tensor& y_hat,
                                           const Tensor& hyper_feat,
                                           const EntropyUnit& eu);
Tensor decode_latent_payload(const std::vector<uint8_t>& payload, const Shape& shape,
                             const Tensor& hyper_feat, const EntropyUnit& eu);

// --- Container --------------------------------------------------------------

enum class ModelKind : uint8_t {
  kRbn = 0,
  kUnified = 1,
  kCompTeacher = 2,
  kCascaded = 3,
};

struct StreamHeader {
  ModelKind model_kind = ModelKind::kRbn;
  uint8_t quality_index = 255;
  uint16_t latent_channels = 0;  // K
  uint32_t height = 0;           // sRGB-resolution dims of the source
  uint32_t width = 0;
  uint32_t hyper_len = 0;
};

constexpr size_t kStreamHeaderBytes = 20;

struct Bitstream {
  StreamHeader header;
  std::vector<uint8_t> hyper_payload;
  std::vector<uint8_t> latent_payload;

  size_t total_bytes() const {
    return kStreamHeaderBytes + hyper_payload.size() + latent_payload.size();
  }
};

std::vector<uint8_t> serialize_bitstream(const Bitstream& bs);
Bitstream deserialize_bitstream(const std::vector<uint8_t>& bytes);

void write_bitstream_file(const std::string& path, const Bitstream& bs);
Bitstream read_bitstream_file(const std::string& path);

}  // namespace rtb

#endif  // RAWTOBIT_BITCODEC_HPP_
