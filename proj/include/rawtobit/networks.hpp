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

#ifndef RAWTOBIT_NETWORKS_HPP_
#define RAWTOBIT_NETWORKS_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rawtobit/bitcodec.hpp"
#include "rawtobit/checkpoint.hpp"
#include "rawtobit/entropy.hpp"

namespace rtb {

// Architecture hyperparameters. Defaults are the full-scale settings; tests
// and smoke runs shrink them through the config file.
struct ArchConfig {
  int enc_channels = 256;      // width of the k3 encoder path
  int latent_channels = 192;   // RBN / ISP-teacher latent width
  int dec_channels = 256;      // width of the RCAG decoder path
  int rcag_blocks = 2;
  int rcab_reduction = 16;
  int teacher_latent = 192;    // K of the compression teacher
  int unified_channels = 192;  // N of the k5 codec path
  int unified_latent = 192;    // M (latent) of the k5 codec path
  int isp_stem_channels = 64;
  std::string isp_teacher_input = "srgb";  // "srgb" | "raw"
  int cascade_channels = 64;   // cascaded ISP stage width

  nlohmann::json to_json() const;
  static ArchConfig from_json(const nlohmann::json& j);
};

// Reflect-pads the trailing two dims up to (target_h, target_w).
Tensor reflect_pad_hw(const Tensor& x, int target_h, int target_w);
int pad_up(int v, int multiple);

// Divisibility the codecs require of their direct input dims.
constexpr int kSpatialMultiple = 16;

// --- RBN: RAW in, bitstream out, sRGB reconstruction ------------------------

class RbnModel : public Module {
 public:
  RbnModel(const ArchConfig& a, Rng& rng);

  // raw: [N,4,h,w] with h,w divisible by 16 (throws PadRequired otherwise).
  // sites, when non-null, receives the four strided-conv outputs.
  Var encode(const Var& raw, std::vector<Var>* sites = nullptr) const;
  // y_coded: [N,C_lat,h/16,w/16]; sites receives the five transposed-conv
  // outputs. The decoder sees nothing but the latent.
  Var decode(const Var& y_coded, std::vector<Var>* sites = nullptr) const;

  ArchConfig arch;
  std::vector<std::unique_ptr<Conv2d>> enc_convs;
  std::vector<std::unique_ptr<Gdn>> enc_gdns;
  std::unique_ptr<Conv2d> enc_out;
  std::vector<std::unique_ptr<ConvTranspose2d>> dec_tconvs;
  std::vector<std::unique_ptr<Rcag>> dec_rcags;
  std::unique_ptr<Conv2d> dec_out;
  std::unique_ptr<EntropyUnit> eu;
};

// --- Compression teacher: RAW autoencoder under rate constraint -------------

class CompressionTeacher : public Module {
 public:
  CompressionTeacher(const ArchConfig& a, Rng& rng);

  Var encode(const Var& raw, std::vector<Var>* sites = nullptr) const;
  Var decode(const Var& y_coded) const;

  ArchConfig arch;
  std::vector<std::unique_ptr<Conv2d>> enc_convs;
  std::vector<std::unique_ptr<Gdn>> enc_gdns;
  std::unique_ptr<Conv2d> enc_out;  // -> K channels
  std::unique_ptr<Conv2d> dec_in;
  std::vector<std::unique_ptr<Gdn>> dec_igdns;
  std::vector<std::unique_ptr<ConvTranspose2d>> dec_tconvs;
  std::unique_ptr<EntropyUnit> eu;
};

// --- ISP teacher: sRGB autoencoder, decoder shaped like RBN's ---------------

class IspTeacher : public Module {
 public:
  IspTeacher(const ArchConfig& a, Rng& rng);

  // input: sRGB [N,3,H,W] in srgb mode, packed RAW [N,4,H/2,W/2] in raw mode.
  Var encode(const Var& input) const;
  Var decode(const Var& latent, std::vector<Var>* sites = nullptr) const;

  ArchConfig arch;
  bool srgb_input;
  std::unique_ptr<Conv2d> stem;
  std::unique_ptr<Gdn> stem_gdn;
  std::vector<std::unique_ptr<Conv2d>> enc_convs;
  std::vector<std::unique_ptr<Gdn>> enc_gdns;
  std::unique_ptr<Conv2d> enc_out;
  std::vector<std::unique_ptr<ConvTranspose2d>> dec_tconvs;
  std::vector<std::unique_ptr<Rcag>> dec_rcags;
  std::unique_ptr<Conv2d> dec_out;
};

// --- Generic k5 context+hyperprior codec ------------------------------------
//
// Four stride-2 encoder stages; decoder mirrors with IGDN. With
// extra_up_stage the decoder gains one more IGDN + transposed conv, which is
// the unified RAW->sRGB variant; without it this is the plain sRGB codec
// used as the cascaded compression stage.

class HyperCodec : public Module {
 public:
  HyperCodec(int in_channels, int out_channels, int n, int m, bool extra_up_stage,
             Rng& rng);

  Var encode(const Var& x) const;
  Var decode(const Var& y_coded) const;

  int in_channels, out_channels, n, m;
  bool extra_up_stage;
  std::vector<std::unique_ptr<Conv2d>> enc_convs;
  std::vector<std::unique_ptr<Gdn>> enc_gdns;
  std::vector<std::unique_ptr<ConvTranspose2d>> dec_tconvs;
  std::vector<std::unique_ptr<Gdn>> dec_igdns;
  std::unique_ptr<EntropyUnit> eu;
};

// --- Cascaded baseline -------------------------------------------------------

// Compact RAW->sRGB network: conv stem, two RCAGs, pixel-shuffle x2 head.
class IspStage : public Module {
 public:
  IspStage(const ArchConfig& a, Rng& rng);
  Var forward(const Var& raw) const;

  std::unique_ptr<Conv2d> stem;
  std::unique_ptr<Rcag> g1, g2;
  std::unique_ptr<Conv2d> head;  // -> 12 channels, shuffled to 3 @ 2x
};

class CascadedModel : public Module {
 public:
  CascadedModel(const ArchConfig& a, Rng& rng);

  Var isp_forward(const Var& raw) const { return isp->forward(raw); }

  std::unique_ptr<IspStage> isp;
  std::unique_ptr<HyperCodec> comp;  // 3-channel codec
};

// --- System wrapper -----------------------------------------------------------

enum class SystemKind { kRbn, kUnified, kCompTeacher, kIspTeacher, kCascaded };

SystemKind system_kind_from_string(const std::string& s);
std::string system_kind_to_string(SystemKind k);
ModelKind stream_kind(SystemKind k);

struct SystemConfig {
  SystemKind kind = SystemKind::kUnified;
  double lambda = 0.013;
  int quality_index = 255;
  uint64_t seed = 1;
  int64_t trained_iters = 0;
  ArchConfig arch;

  nlohmann::json to_json() const;
  static SystemConfig from_json(const nlohmann::json& j);
};

struct EncodeResult {
  Bitstream stream;
  double estimated_bits = 0;  // model rate estimate over both payloads
  Tensor y_hat, z_hat;
};

// Owns one trainable system plus its config; handles the file pipelines.
class System {
 public:
  explicit System(const SystemConfig& cfg);
  static std::unique_ptr<System> load_file(const std::string& path);
  void save_file(const std::string& path) const;

  const SystemConfig& config() const { return cfg_; }
  SystemConfig& config_mut() { return cfg_; }
  Module& module() const { return *module_; }

  RbnModel* rbn() const { return rbn_.get(); }
  HyperCodec* unified() const { return unified_.get(); }
  CompressionTeacher* comp_teacher() const { return comp_teacher_.get(); }
  IspTeacher* isp_teacher() const { return isp_teacher_.get(); }
  CascadedModel* cascaded() const { return cascaded_.get(); }

  // File pipelines (inference, no grad). input: [4,h,w] normalized RAW for
  // every kind except ISP teacher (which is not a codec).
  EncodeResult encode_image(const Tensor& raw_chw) const;
  // Returns sRGB [3,H,W] in [0,1] (RAW [4,H/2,W/2] for the comp teacher).
  Tensor decode_stream(const Bitstream& bs) const;

 private:
  EncodeResult encode_with(const EntropyUnit& eu, const Var& y_cont,
                           ModelKind kind, int H, int W) const;

  SystemConfig cfg_;
  Module* module_ = nullptr;
  std::unique_ptr<RbnModel> rbn_;
  std::unique_ptr<HyperCodec> unified_;
  std::unique_ptr<CompressionTeacher> comp_teacher_;
  std::unique_ptr<IspTeacher> isp_teacher_;
  std::unique_ptr<CascadedModel> cascaded_;
};

}  // namespace rtb

#endif  // RAWTOBIT_NETWORKS_HPP_
