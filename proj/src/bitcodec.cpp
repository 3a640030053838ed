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

#include "rawtobit/bitcodec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace rtb {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865476;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(uint8_t(v));
  out.push_back(uint8_t(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
}
void put_i32(std::vector<uint8_t>& out, int32_t v) { put_u32(out, uint32_t(v)); }

struct ByteReader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size())
      fail(ErrorCode::kDecodeError,
           "truncated stream at byte offset " + std::to_string(pos));
  }
  uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = uint16_t(buf[pos]) | uint16_t(buf[pos + 1]) << 8;
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  int32_t i32() { return int32_t(u32()); }
  std::vector<uint8_t> bytes(size_t n) {
    need(n);
    std::vector<uint8_t> v(buf.begin() + long(pos), buf.begin() + long(pos + n));
    pos += n;
    return v;
  }
};

}  // namespace

CdfTable quantize_edge_cdf(const std::vector<double>& edge_cdf, int s_min) {
  const int n = int(edge_cdf.size()) - 1;
  if (n < 1 || n > int(kRcProbScale))
    fail(ErrorCode::kInvalidSpec, "cdf table needs 1..65536 symbols");
  CdfTable t;
  t.s_min = s_min;
  t.cdf.resize(size_t(n) + 1);
  for (int i = 0; i <= n; ++i) {
    double v = std::min(1.0, std::max(0.0, edge_cdf[size_t(i)]));
    t.cdf[size_t(i)] = uint32_t(std::llround(v * double(kRcProbScale)));
  }
  t.cdf[0] = 0;
  t.cdf[size_t(n)] = kRcProbScale;
  for (int i = 1; i <= n; ++i)
    t.cdf[size_t(i)] = std::max(t.cdf[size_t(i)], t.cdf[size_t(i) - 1] + 1);
  for (int i = n - 1; i >= 1; --i)
    t.cdf[size_t(i)] = std::min(t.cdf[size_t(i)], t.cdf[size_t(i) + 1] - 1);
  return t;
}

CdfTable gaussian_cdf_table(double mu, double sigma, int s_min, int s_max) {
  const int n = s_max - s_min + 1;
  std::vector<double> edges(size_t(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const double e = double(s_min) - 0.5 + double(i);
    edges[size_t(i)] = 0.5 * (1.0 + std::erf((e - mu) / sigma * kInvSqrt2));
  }
  return quantize_edge_cdf(edges, s_min);
}

std::vector<CdfTable> factorized_cdf_tables(const FactorizedPrior& fp, int s_min,
                                            int s_max) {
  const int n = s_max - s_min + 1;
  std::vector<double> xs(size_t(n) + 1);
  for (int i = 0; i <= n; ++i) xs[size_t(i)] = double(s_min) - 0.5 + double(i);
  std::vector<CdfTable> tables;
  tables.reserve(size_t(fp.channels));
  for (int c = 0; c < fp.channels; ++c)
    tables.push_back(quantize_edge_cdf(fp.channel_cdf_values(c, xs), s_min));
  return tables;
}

void encode_symbol(RangeEncoder& enc, const CdfTable& table, int value) {
  const int idx = value - table.s_min;
  if (idx < 0 || idx >= table.nsym())
    fail(ErrorCode::kInvalidArgument, "symbol outside table support");
  enc.encode(table.cdf[size_t(idx)], table.freq(idx));
}

int decode_symbol(RangeDecoder& dec, const CdfTable& table) {
  const uint32_t t = dec.target();
  // Last entry with cdf[idx] <= t.
  auto it = std::upper_bound(table.cdf.begin(), table.cdf.end(), t);
  const int idx = int(it - table.cdf.begin()) - 1;
  dec.update(table.cdf[size_t(idx)], table.freq(idx));
  return table.s_min + idx;
}

int sample_symbol(const CdfTable& table, Rng& rng) {
  const uint32_t t = uint32_t(rng.below(kRcProbScale));
  auto it = std::upper_bound(table.cdf.begin(), table.cdf.end(), t);
  return table.s_min + int(it - table.cdf.begin()) - 1;
}

namespace {

int clamp_support(int v) {
  return std::min(kSupportMax, std::max(kSupportMin, v));
}

struct OverflowList {
  std::vector<std::pair<uint32_t, int32_t>> entries;

  void serialize(std::vector<uint8_t>& out) const {
    put_u32(out, uint32_t(entries.size()));
    for (auto& [idx, v] : entries) {
      put_u32(out, idx);
      put_i32(out, v);
    }
  }
  static OverflowList parse(ByteReader& r) {
    OverflowList o;
    const uint32_t n = r.u32();
    o.entries.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
      uint32_t idx = r.u32();
      int32_t v = r.i32();
      o.entries.push_back({idx, v});
    }
    return o;
  }
};

int64_t symbol_of(double v) {
  double r = std::nearbyint(v);
  // Keep raw repairs within i32.
  return int64_t(std::min(2.0e9, std::max(-2.0e9, r)));
}

}  // namespace

std::vector<uint8_t> encode_hyper_payload(const Tensor& z_hat,
                                          const FactorizedPrior& fp) {
  if (z_hat.ndim() != 4 || z_hat.dim(0) != 1)
    fail(ErrorCode::kInvalidShape, "hyper payload expects a [1,C,h,w] tensor");
  const int C = z_hat.dim(1);
  const int64_t hw = int64_t(z_hat.dim(2)) * z_hat.dim(3);
  auto tables = factorized_cdf_tables(fp);
  OverflowList overflow;
  RangeEncoder enc;
  for (int c = 0; c < C; ++c)
    for (int64_t p = 0; p < hw; ++p) {
      const int64_t flat = int64_t(c) * hw + p;
      const int64_t v = symbol_of(z_hat[flat]);
      const int coded = clamp_support(int(v));
      if (int64_t(coded) != v) overflow.entries.push_back({uint32_t(flat), int32_t(v)});
      encode_symbol(enc, tables[size_t(c)], coded);
    }
  std::vector<uint8_t> payload;
  overflow.serialize(payload);
  std::vector<uint8_t> rc = enc.finish();
  put_u32(payload, uint32_t(rc.size()));
  payload.insert(payload.end(), rc.begin(), rc.end());
  return payload;
}

Tensor decode_hyper_payload(const std::vector<uint8_t>& payload, const Shape& shape,
                            const FactorizedPrior& fp) {
  ByteReader r{payload};
  OverflowList overflow = OverflowList::parse(r);
  const uint32_t rc_len = r.u32();
  std::vector<uint8_t> rc = r.bytes(rc_len);
  Tensor z(shape);
  const int C = shape[1];
  const int64_t hw = int64_t(shape[2]) * shape[3];
  auto tables = factorized_cdf_tables(fp);
  RangeDecoder dec(rc.data(), rc.size());
  for (int c = 0; c < C; ++c)
    for (int64_t p = 0; p < hw; ++p)
      z[int64_t(c) * hw + p] = double(decode_symbol(dec, tables[size_t(c)]));
  for (auto& [idx, v] : overflow.entries) {
    if (int64_t(idx) >= z.numel())
      fail(ErrorCode::kDecodeError, "overflow repair index out of range");
    z[int64_t(idx)] = double(v);
  }
  return z;
}

namespace {

// Shared per-position entropy-parameter arithmetic for the serial latent
// coder. Both sides must run the exact same float operations in the same
// order, otherwise the decoder's CDF tables diverge from the encoder's.
class SerialParams {
 public:
  SerialParams(const EntropyUnit& eu, const Tensor& hyper_feat)
      : C(eu.C), hyper(hyper_feat) {
    const MaskedConv2d& mc = *eu.ctx->conv;
    wm = t_mul(mc.weight.value(), mc.mask());
    b_ctx = mc.bias.value();
    w1 = eu.ep->c1->weight.value();
    b1 = eu.ep->c1->bias.value();
    w2 = eu.ep->c2->weight.value();
    b2 = eu.ep->c2->bias.value();
    k = wm.dim(2);
    half = k / 2;
    in4.resize(size_t(4 * C));
    h1.resize(size_t(3 * C));
    mu.resize(size_t(C));
    sigma.resize(size_t(C));
  }

  // y: [1,C,h,w] with raster positions before (i,j) already final.
  void compute(const Tensor& y, int i, int j) {
    const int h = y.dim(2), w = y.dim(3);
    const double* hp = hyper.data();
    const int64_t hw = int64_t(h) * w;
    for (int oc = 0; oc < 2 * C; ++oc)
      in4[size_t(2 * C + oc)] = 0.0;  // context accumulators
    for (int ci = 0; ci < C; ++ci) {
      const double* yc = y.data() + int64_t(ci) * hw;
      for (int di = 0; di <= half; ++di) {
        const int ii = i + di - half;
        if (ii < 0 || ii >= h) continue;
        const int dj_max = di < half ? k : half;  // type-A mask cut
        for (int dj = 0; dj < dj_max; ++dj) {
          const int jj = j + dj - half;
          if (jj < 0 || jj >= w) continue;
          const double yv = yc[int64_t(ii) * w + jj];
          if (yv == 0.0) continue;
          const double* wcol = wm.data() + (int64_t(ci) * k + di) * k + dj;
          const int64_t ocstride = int64_t(C) * k * k;
          for (int oc = 0; oc < 2 * C; ++oc)
            in4[size_t(2 * C + oc)] += wcol[oc * ocstride] * yv;
        }
      }
    }
    for (int oc = 0; oc < 2 * C; ++oc) {
      in4[size_t(2 * C + oc)] += b_ctx[oc];
      in4[size_t(oc)] = hp[int64_t(oc) * hw + int64_t(i) * w + j];
    }
    for (int t = 0; t < 3 * C; ++t) {
      double acc = b1[t];
      const double* row = w1.data() + int64_t(t) * 4 * C;
      for (int s = 0; s < 4 * C; ++s) acc += row[s] * in4[size_t(s)];
      h1[size_t(t)] = acc > 0 ? acc : 0.0;
    }
    for (int u = 0; u < 2 * C; ++u) {
      double acc = b2[u];
      const double* row = w2.data() + int64_t(u) * 3 * C;
      for (int t = 0; t < 3 * C; ++t) acc += row[t] * h1[size_t(t)];
      if (u < C)
        mu[size_t(u)] = acc;
      else
        sigma[size_t(u - C)] = std::max(acc, kSigmaMin);
    }
  }

  const int C;
  std::vector<double> mu, sigma;

 private:
  Tensor wm, b_ctx, w1, b1, w2, b2;
  const Tensor& hyper;
  int k = 5, half = 2;
  std::vector<double> in4, h1;
};

}  // namespace

std::vector<uint8_t> encode_latent_payload(const Tensor& y_hat,
                                           const Tensor& hyper_feat,
                                           const EntropyUnit& eu) {
  if (y_hat.ndim() != 4 || y_hat.dim(0) != 1)
    fail(ErrorCode::kInvalidShape, "latent payload expects a [1,C,h,w] tensor");
  const int C = y_hat.dim(1), h = y_hat.dim(2), w = y_hat.dim(3);
  const int64_t hw = int64_t(h) * w;
  SerialParams sp(eu, hyper_feat);
  OverflowList overflow;
  RangeEncoder enc;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      sp.compute(y_hat, i, j);
      for (int c = 0; c < C; ++c) {
        const int64_t flat = int64_t(c) * hw + int64_t(i) * w + j;
        const int64_t v = symbol_of(y_hat[flat]);
        const int coded = clamp_support(int(v));
        if (int64_t(coded) != v)
          overflow.entries.push_back({uint32_t(flat), int32_t(v)});
        CdfTable table = gaussian_cdf_table(sp.mu[size_t(c)], sp.sigma[size_t(c)]);
        encode_symbol(enc, table, coded);
      }
    }
  std::vector<uint8_t> payload;
  overflow.serialize(payload);
  std::vector<uint8_t> rc = enc.finish();
  put_u32(payload, uint32_t(rc.size()));
  payload.insert(payload.end(), rc.begin(), rc.end());
  return payload;
}

Tensor decode_latent_payload(const std::vector<uint8_t>& payload, const Shape& shape,
                             const Tensor& hyper_feat, const EntropyUnit& eu) {
  ByteReader r{payload};
  OverflowList overflow = OverflowList::parse(r);
  std::map<uint32_t, int32_t> repairs(overflow.entries.begin(),
                                      overflow.entries.end());
  const uint32_t rc_len = r.u32();
  std::vector<uint8_t> rc = r.bytes(rc_len);
  Tensor y(shape);
  const int C = shape[1], h = shape[2], w = shape[3];
  const int64_t hw = int64_t(h) * w;
  SerialParams sp(eu, hyper_feat);
  RangeDecoder dec(rc.data(), rc.size());
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      sp.compute(y, i, j);
      for (int c = 0; c < C; ++c) {
        const int64_t flat = int64_t(c) * hw + int64_t(i) * w + j;
        CdfTable table = gaussian_cdf_table(sp.mu[size_t(c)], sp.sigma[size_t(c)]);
        const int v = decode_symbol(dec, table);
        // Repairs must land before this value feeds later contexts.
        auto it = repairs.find(uint32_t(flat));
        y[flat] = it != repairs.end() ? double(it->second) : double(v);
      }
    }
  return y;
}

std::vector<uint8_t> serialize_bitstream(const Bitstream& bs) {
  std::vector<uint8_t> out;
  out.reserve(bs.total_bytes());
  out.push_back('R');
  out.push_back('B');
  out.push_back('0');
  out.push_back('1');
  out.push_back(uint8_t(bs.header.model_kind));
  out.push_back(bs.header.quality_index);
  put_u16(out, bs.header.latent_channels);
  put_u32(out, bs.header.height);
  put_u32(out, bs.header.width);
  put_u32(out, uint32_t(bs.hyper_payload.size()));
  out.insert(out.end(), bs.hyper_payload.begin(), bs.hyper_payload.end());
  out.insert(out.end(), bs.latent_payload.begin(), bs.latent_payload.end());
  return out;
}

Bitstream deserialize_bitstream(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < kStreamHeaderBytes)
    fail(ErrorCode::kDecodeError, "truncated stream: no full header");
  if (bytes[0] != 'R' || bytes[1] != 'B' || bytes[2] != '0' || bytes[3] != '1')
    fail(ErrorCode::kFormatError, "bad magic, not an RB01 stream");
  ByteReader r{bytes};
  r.pos = 4;
  Bitstream bs;
  const uint8_t kind = r.u8();
  if (kind > 3) fail(ErrorCode::kFormatError, "unknown model kind in header");
  bs.header.model_kind = ModelKind(kind);
  bs.header.quality_index = r.u8();
  bs.header.latent_channels = r.u16();
  bs.header.height = r.u32();
  bs.header.width = r.u32();
  bs.header.hyper_len = r.u32();
  bs.hyper_payload = r.bytes(bs.header.hyper_len);
  bs.latent_payload = r.bytes(bytes.size() - r.pos);
  return bs;
}

void write_bitstream_file(const std::string& path, const Bitstream& bs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIoError, "cannot open for writing: " + path);
  auto bytes = serialize_bitstream(bs);
  f.write(reinterpret_cast<const char*>(bytes.data()), long(bytes.size()));
  if (!f) fail(ErrorCode::kIoError, "write failed: " + path);
}

Bitstream read_bitstream_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIoError, "cannot open: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return deserialize_bitstream(bytes);
}

}  // namespace rtb
