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

#include "rawtobit/networks.hpp"

#include <cmath>

namespace rtb {

using nlohmann::json;

json ArchConfig::to_json() const {
  return json{{"enc_channels", enc_channels},
              {"latent_channels", latent_channels},
              {"dec_channels", dec_channels},
              {"rcag_blocks", rcag_blocks},
              {"rcab_reduction", rcab_reduction},
              {"teacher_latent", teacher_latent},
              {"unified_channels", unified_channels},
              {"unified_latent", unified_latent},
              {"isp_stem_channels", isp_stem_channels},
              {"isp_teacher_input", isp_teacher_input},
              {"cascade_channels", cascade_channels}};
}

ArchConfig ArchConfig::from_json(const json& j) {
  ArchConfig a;
  a.enc_channels = j.value("enc_channels", a.enc_channels);
  a.latent_channels = j.value("latent_channels", a.latent_channels);
  a.dec_channels = j.value("dec_channels", a.dec_channels);
  a.rcag_blocks = j.value("rcag_blocks", a.rcag_blocks);
  a.rcab_reduction = j.value("rcab_reduction", a.rcab_reduction);
  a.teacher_latent = j.value("teacher_latent", a.teacher_latent);
  a.unified_channels = j.value("unified_channels", a.unified_channels);
  a.unified_latent = j.value("unified_latent", a.unified_latent);
  a.isp_stem_channels = j.value("isp_stem_channels", a.isp_stem_channels);
  a.isp_teacher_input = j.value("isp_teacher_input", a.isp_teacher_input);
  a.cascade_channels = j.value("cascade_channels", a.cascade_channels);
  return a;
}

int pad_up(int v, int multiple) {
  return (v + multiple - 1) / multiple * multiple;
}

Tensor reflect_pad_hw(const Tensor& x, int target_h, int target_w) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (target_h < H || target_w < W)
    fail(ErrorCode::kInvalidShape, "reflect_pad_hw cannot shrink");
  if (target_h >= 2 * H || target_w >= 2 * W)
    fail(ErrorCode::kInvalidShape, "reflect padding exceeds input size");
  if (target_h == H && target_w == W) return x;
  Tensor out(Shape{N, C, target_h, target_w});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int i = 0; i < target_h; ++i) {
        const int si = i < H ? i : 2 * H - 2 - i;
        for (int j = 0; j < target_w; ++j) {
          const int sj = j < W ? j : 2 * W - 2 - j;
          out.at4(n, c, i, j) = x.at4(n, c, si, sj);
        }
      }
  return out;
}

namespace {

void require_divisible(const Var& x, int multiple) {
  if (x.shape()[2] % multiple != 0 || x.shape()[3] % multiple != 0)
    fail(ErrorCode::kPadRequired,
         "input dims " + shape_str(x.shape()) + " not divisible by " +
             std::to_string(multiple) + "; reflect-pad first");
}

}  // namespace

// --- RbnModel ----------------------------------------------------------------

RbnModel::RbnModel(const ArchConfig& a, Rng& rng) : arch(a) {
  int cin = 4;
  for (int s = 0; s < 4; ++s) {
    enc_convs.push_back(
        std::make_unique<Conv2d>(cin, a.enc_channels, 3, 2, 1, rng));
    enc_gdns.push_back(std::make_unique<Gdn>(a.enc_channels, false));
    register_module("enc.conv" + std::to_string(s), enc_convs.back().get());
    register_module("enc.gdn" + std::to_string(s), enc_gdns.back().get());
    cin = a.enc_channels;
  }
  enc_out = std::make_unique<Conv2d>(a.enc_channels, a.latent_channels, 3, 1, 1, rng);
  register_module("enc.out", enc_out.get());

  cin = a.latent_channels;
  for (int s = 0; s < 5; ++s) {
    dec_tconvs.push_back(
        std::make_unique<ConvTranspose2d>(cin, a.dec_channels, 3, 2, 1, 1, rng));
    dec_rcags.push_back(
        std::make_unique<Rcag>(a.dec_channels, a.rcag_blocks, a.rcab_reduction, rng));
    register_module("dec.tconv" + std::to_string(s), dec_tconvs.back().get());
    register_module("dec.rcag" + std::to_string(s), dec_rcags.back().get());
    cin = a.dec_channels;
  }
  dec_out = std::make_unique<Conv2d>(a.dec_channels, 3, 3, 1, 1, rng);
  register_module("dec.out", dec_out.get());

  eu = std::make_unique<EntropyUnit>(a.latent_channels, rng);
  register_module("eu", eu.get());
}

Var RbnModel::encode(const Var& raw, std::vector<Var>* sites) const {
  require_divisible(raw, kSpatialMultiple);
  Var x = raw;
  for (size_t s = 0; s < enc_convs.size(); ++s) {
    Var pre = enc_convs[s]->forward(x);
    if (sites) sites->push_back(pre);
    x = enc_gdns[s]->forward(pre);
  }
  return enc_out->forward(x);
}

Var RbnModel::decode(const Var& y_coded, std::vector<Var>* sites) const {
  Var x = y_coded;
  for (size_t s = 0; s < dec_tconvs.size(); ++s) {
    Var pre = dec_tconvs[s]->forward(x);
    if (sites) sites->push_back(pre);
    x = dec_rcags[s]->forward(pre);
  }
  return dec_out->forward(x);
}

// --- CompressionTeacher --------------------------------------------------------

CompressionTeacher::CompressionTeacher(const ArchConfig& a, Rng& rng) : arch(a) {
  int cin = 4;
  for (int s = 0; s < 4; ++s) {
    enc_convs.push_back(
        std::make_unique<Conv2d>(cin, a.enc_channels, 3, 2, 1, rng));
    enc_gdns.push_back(std::make_unique<Gdn>(a.enc_channels, false));
    register_module("enc.conv" + std::to_string(s), enc_convs.back().get());
    register_module("enc.gdn" + std::to_string(s), enc_gdns.back().get());
    cin = a.enc_channels;
  }
  enc_out = std::make_unique<Conv2d>(a.enc_channels, a.teacher_latent, 3, 1, 1, rng);
  register_module("enc.out", enc_out.get());

  dec_in = std::make_unique<Conv2d>(a.teacher_latent, a.enc_channels, 3, 1, 1, rng);
  register_module("dec.in", dec_in.get());
  for (int s = 0; s < 4; ++s) {
    const int cout = s < 3 ? a.enc_channels : 4;
    dec_igdns.push_back(std::make_unique<Gdn>(a.enc_channels, true));
    dec_tconvs.push_back(
        std::make_unique<ConvTranspose2d>(a.enc_channels, cout, 3, 2, 1, 1, rng));
    register_module("dec.igdn" + std::to_string(s), dec_igdns.back().get());
    register_module("dec.tconv" + std::to_string(s), dec_tconvs.back().get());
  }

  eu = std::make_unique<EntropyUnit>(a.teacher_latent, rng);
  register_module("eu", eu.get());
}

Var CompressionTeacher::encode(const Var& raw, std::vector<Var>* sites) const {
  require_divisible(raw, kSpatialMultiple);
  Var x = raw;
  for (size_t s = 0; s < enc_convs.size(); ++s) {
    Var pre = enc_convs[s]->forward(x);
    if (sites) sites->push_back(pre);
    x = enc_gdns[s]->forward(pre);
  }
  return enc_out->forward(x);
}

Var CompressionTeacher::decode(const Var& y_coded) const {
  Var x = dec_in->forward(y_coded);
  for (size_t s = 0; s < dec_tconvs.size(); ++s)
    x = dec_tconvs[s]->forward(dec_igdns[s]->forward(x));
  return x;
}

// --- IspTeacher ----------------------------------------------------------------

IspTeacher::IspTeacher(const ArchConfig& a, Rng& rng)
    : arch(a), srgb_input(a.isp_teacher_input != "raw") {
  int cin;
  if (srgb_input) {
    stem = std::make_unique<Conv2d>(3, a.isp_stem_channels, 3, 2, 1, rng);
    stem_gdn = std::make_unique<Gdn>(a.isp_stem_channels, false);
    register_module("enc.stem", stem.get());
    register_module("enc.stem_gdn", stem_gdn.get());
    cin = a.isp_stem_channels;
  } else {
    cin = 4;
  }
  for (int s = 0; s < 4; ++s) {
    enc_convs.push_back(
        std::make_unique<Conv2d>(cin, a.enc_channels, 3, 2, 1, rng));
    enc_gdns.push_back(std::make_unique<Gdn>(a.enc_channels, false));
    register_module("enc.conv" + std::to_string(s), enc_convs.back().get());
    register_module("enc.gdn" + std::to_string(s), enc_gdns.back().get());
    cin = a.enc_channels;
  }
  enc_out = std::make_unique<Conv2d>(a.enc_channels, a.latent_channels, 3, 1, 1, rng);
  register_module("enc.out", enc_out.get());

  cin = a.latent_channels;
  for (int s = 0; s < 5; ++s) {
    dec_tconvs.push_back(
        std::make_unique<ConvTranspose2d>(cin, a.dec_channels, 3, 2, 1, 1, rng));
    dec_rcags.push_back(
        std::make_unique<Rcag>(a.dec_channels, a.rcag_blocks, a.rcab_reduction, rng));
    register_module("dec.tconv" + std::to_string(s), dec_tconvs.back().get());
    register_module("dec.rcag" + std::to_string(s), dec_rcags.back().get());
    cin = a.dec_channels;
  }
  dec_out = std::make_unique<Conv2d>(a.dec_channels, 3, 3, 1, 1, rng);
  register_module("dec.out", dec_out.get());
}

Var IspTeacher::encode(const Var& input) const {
  Var x = input;
  if (srgb_input) {
    require_divisible(x, 2 * kSpatialMultiple);
    x = stem_gdn->forward(stem->forward(x));
  } else {
    require_divisible(x, kSpatialMultiple);
  }
  for (size_t s = 0; s < enc_convs.size(); ++s)
    x = enc_gdns[s]->forward(enc_convs[s]->forward(x));
  return enc_out->forward(x);
}

Var IspTeacher::decode(const Var& latent, std::vector<Var>* sites) const {
  Var x = latent;
  for (size_t s = 0; s < dec_tconvs.size(); ++s) {
    Var pre = dec_tconvs[s]->forward(x);
    if (sites) sites->push_back(pre);
    x = dec_rcags[s]->forward(pre);
  }
  return dec_out->forward(x);
}

// --- HyperCodec ------------------------------------------------------------------

HyperCodec::HyperCodec(int in_channels_, int out_channels_, int n_, int m_,
                       bool extra_up_stage_, Rng& rng)
    : in_channels(in_channels_),
      out_channels(out_channels_),
      n(n_),
      m(m_),
      extra_up_stage(extra_up_stage_) {
  int cin = in_channels;
  for (int s = 0; s < 4; ++s) {
    const int cout = s < 3 ? n : m;
    enc_convs.push_back(std::make_unique<Conv2d>(cin, cout, 5, 2, 2, rng));
    register_module("enc.conv" + std::to_string(s), enc_convs.back().get());
    if (s < 3) {
      enc_gdns.push_back(std::make_unique<Gdn>(n, false));
      register_module("enc.gdn" + std::to_string(s), enc_gdns.back().get());
    }
    cin = cout;
  }
  const int up_gdn_stages = extra_up_stage ? 4 : 3;
  cin = m;
  for (int s = 0; s < up_gdn_stages; ++s) {
    dec_tconvs.push_back(
        std::make_unique<ConvTranspose2d>(cin, n, 5, 2, 2, 1, rng));
    dec_igdns.push_back(std::make_unique<Gdn>(n, true));
    register_module("dec.tconv" + std::to_string(s), dec_tconvs.back().get());
    register_module("dec.igdn" + std::to_string(s), dec_igdns.back().get());
    cin = n;
  }
  dec_tconvs.push_back(
      std::make_unique<ConvTranspose2d>(cin, out_channels, 5, 2, 2, 1, rng));
  register_module("dec.tconv" + std::to_string(up_gdn_stages),
                  dec_tconvs.back().get());

  eu = std::make_unique<EntropyUnit>(m, rng);
  register_module("eu", eu.get());
}

Var HyperCodec::encode(const Var& x) const {
  require_divisible(x, kSpatialMultiple);
  Var h = x;
  for (size_t s = 0; s < enc_convs.size(); ++s) {
    h = enc_convs[s]->forward(h);
    if (s < enc_gdns.size()) h = enc_gdns[s]->forward(h);
  }
  return h;
}

Var HyperCodec::decode(const Var& y_coded) const {
  Var h = y_coded;
  for (size_t s = 0; s < dec_igdns.size(); ++s)
    h = dec_igdns[s]->forward(dec_tconvs[s]->forward(h));
  return dec_tconvs.back()->forward(h);
}

// --- Cascaded -----------------------------------------------------------------------

IspStage::IspStage(const ArchConfig& a, Rng& rng) {
  stem = std::make_unique<Conv2d>(4, a.cascade_channels, 3, 1, 1, rng);
  g1 = std::make_unique<Rcag>(a.cascade_channels, a.rcag_blocks, a.rcab_reduction, rng);
  g2 = std::make_unique<Rcag>(a.cascade_channels, a.rcag_blocks, a.rcab_reduction, rng);
  head = std::make_unique<Conv2d>(a.cascade_channels, 12, 3, 1, 1, rng);
  register_module("stem", stem.get());
  register_module("g1", g1.get());
  register_module("g2", g2.get());
  register_module("head", head.get());
}

Var IspStage::forward(const Var& raw) const {
  Var x = stem->forward(raw);
  x = g2->forward(g1->forward(x));
  return ops::pixel_shuffle2(head->forward(x));
}

CascadedModel::CascadedModel(const ArchConfig& a, Rng& rng) {
  isp = std::make_unique<IspStage>(a, rng);
  comp = std::make_unique<HyperCodec>(3, 3, a.unified_channels, a.unified_latent,
                                      false, rng);
  register_module("isp", isp.get());
  register_module("comp", comp.get());
}

// --- System -----------------------------------------------------------------------

SystemKind system_kind_from_string(const std::string& s) {
  if (s == "rbn") return SystemKind::kRbn;
  if (s == "unified") return SystemKind::kUnified;
  if (s == "teacher-comp" || s == "teacher_comp") return SystemKind::kCompTeacher;
  if (s == "teacher-isp" || s == "teacher_isp") return SystemKind::kIspTeacher;
  if (s == "cascaded") return SystemKind::kCascaded;
  fail(ErrorCode::kInvalidArgument, "unknown system: " + s);
}

std::string system_kind_to_string(SystemKind k) {
  switch (k) {
    case SystemKind::kRbn: return "rbn";
    case SystemKind::kUnified: return "unified";
    case SystemKind::kCompTeacher: return "teacher-comp";
    case SystemKind::kIspTeacher: return "teacher-isp";
    case SystemKind::kCascaded: return "cascaded";
  }
  return "?";
}

ModelKind stream_kind(SystemKind k) {
  switch (k) {
    case SystemKind::kRbn: return ModelKind::kRbn;
    case SystemKind::kUnified: return ModelKind::kUnified;
    case SystemKind::kCompTeacher: return ModelKind::kCompTeacher;
    case SystemKind::kCascaded: return ModelKind::kCascaded;
    case SystemKind::kIspTeacher:
      fail(ErrorCode::kInvalidArgument, "ISP teacher does not produce streams");
  }
  fail(ErrorCode::kInternal, "unreachable");
}

json SystemConfig::to_json() const {
  return json{{"system", system_kind_to_string(kind)},
              {"lambda", lambda},
              {"quality_index", quality_index},
              {"seed", seed},
              {"trained_iters", trained_iters},
              {"arch", arch.to_json()}};
}

SystemConfig SystemConfig::from_json(const json& j) {
  SystemConfig c;
  c.kind = system_kind_from_string(j.at("system").get<std::string>());
  c.lambda = j.value("lambda", c.lambda);
  c.quality_index = j.value("quality_index", c.quality_index);
  c.seed = j.value("seed", c.seed);
  c.trained_iters = j.value("trained_iters", c.trained_iters);
  if (j.contains("arch")) c.arch = ArchConfig::from_json(j.at("arch"));
  return c;
}

System::System(const SystemConfig& cfg) : cfg_(cfg) {
  Rng rng(cfg.seed ^ 0xA11CE5ull);
  switch (cfg.kind) {
    case SystemKind::kRbn:
      rbn_ = std::make_unique<RbnModel>(cfg.arch, rng);
      module_ = rbn_.get();
      break;
    case SystemKind::kUnified:
      unified_ = std::make_unique<HyperCodec>(4, 3, cfg.arch.unified_channels,
                                              cfg.arch.unified_latent, true, rng);
      module_ = unified_.get();
      break;
    case SystemKind::kCompTeacher:
      comp_teacher_ = std::make_unique<CompressionTeacher>(cfg.arch, rng);
      module_ = comp_teacher_.get();
      break;
    case SystemKind::kIspTeacher:
      isp_teacher_ = std::make_unique<IspTeacher>(cfg.arch, rng);
      module_ = isp_teacher_.get();
      break;
    case SystemKind::kCascaded:
      cascaded_ = std::make_unique<CascadedModel>(cfg.arch, rng);
      module_ = cascaded_.get();
      break;
  }
}

std::unique_ptr<System> System::load_file(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  SystemConfig cfg = SystemConfig::from_json(ckpt.config.at("system_config"));
  auto sys = std::make_unique<System>(cfg);
  auto stored = ckpt.tensor_map();
  for (auto& [name, var] : sys->module().named_parameters()) {
    auto it = stored.find(name);
    if (it == stored.end())
      fail(ErrorCode::kFormatError, "checkpoint missing tensor: " + name);
    if (!same_shape(it->second.shape(), var.value().shape()))
      fail(ErrorCode::kFormatError, "checkpoint tensor shape mismatch: " + name);
    Var v = var;
    v.value_mut() = it->second.clone();
  }
  return sys;
}

void System::save_file(const std::string& path) const {
  Checkpoint ckpt;
  ckpt.config = json{{"system_config", cfg_.to_json()}, {"format", "rawtobit"}};
  for (auto& [name, var] : module().named_parameters())
    ckpt.tensors.push_back({name, var.value()});
  save_checkpoint(path, ckpt);
}

EncodeResult System::encode_with(const EntropyUnit& eu, const Var& y_cont,
                                 ModelKind kind, int H, int W) const {
  NoGradGuard ng;
  EncodeResult res;
  Tensor y_hat = quantize_round(y_cont.value());
  Var z = eu.ha->forward(y_cont);
  Tensor z_hat = quantize_round(z.value());
  const int yh = y_cont.shape()[2], yw = y_cont.shape()[3];
  Var hyper_feat = eu.hs->forward(Var(z_hat), yh, yw);

  res.stream.header.model_kind = kind;
  res.stream.header.quality_index = uint8_t(cfg_.quality_index & 0xFF);
  res.stream.header.latent_channels = uint16_t(y_cont.shape()[1]);
  res.stream.header.height = uint32_t(H);
  res.stream.header.width = uint32_t(W);
  res.stream.hyper_payload = encode_hyper_payload(z_hat, *eu.fp);
  res.stream.header.hyper_len = uint32_t(res.stream.hyper_payload.size());
  res.stream.latent_payload = encode_latent_payload(y_hat, hyper_feat.value(), eu);

  // Batch-path rate estimate over the same rounded symbols.
  Var ctx_feat = eu.ctx->forward(Var(y_hat));
  auto params = eu.ep->forward(hyper_feat, ctx_feat);
  res.estimated_bits =
      gaussian_bits_value(y_hat, params.mu.value(), params.sigma.value()) +
      eu.fp->bits_value(z_hat);
  res.y_hat = y_hat;
  res.z_hat = z_hat;
  return res;
}

EncodeResult System::encode_image(const Tensor& raw_chw) const {
  NoGradGuard ng;
  if (raw_chw.ndim() != 3 || raw_chw.dim(0) != 4)
    fail(ErrorCode::kInvalidShape, "encode expects a [4,h,w] packed RAW");
  const int h = raw_chw.dim(1), w = raw_chw.dim(2);
  const int H = 2 * h, W = 2 * w;
  Tensor raw4 = raw_chw.reshaped(Shape{1, 4, h, w});

  switch (cfg_.kind) {
    case SystemKind::kRbn: {
      Tensor padded = reflect_pad_hw(raw4, pad_up(h, kSpatialMultiple),
                                     pad_up(w, kSpatialMultiple));
      Var y = rbn_->encode(Var(padded));
      return encode_with(*rbn_->eu, y, ModelKind::kRbn, H, W);
    }
    case SystemKind::kUnified: {
      Tensor padded = reflect_pad_hw(raw4, pad_up(h, kSpatialMultiple),
                                     pad_up(w, kSpatialMultiple));
      Var y = unified_->encode(Var(padded));
      return encode_with(*unified_->eu, y, ModelKind::kUnified, H, W);
    }
    case SystemKind::kCompTeacher: {
      Tensor padded = reflect_pad_hw(raw4, pad_up(h, kSpatialMultiple),
                                     pad_up(w, kSpatialMultiple));
      Var y = comp_teacher_->encode(Var(padded));
      return encode_with(*comp_teacher_->eu, y, ModelKind::kCompTeacher, H, W);
    }
    case SystemKind::kCascaded: {
      Var srgb = cascaded_->isp_forward(Var(raw4));
      Tensor padded = reflect_pad_hw(srgb.value(), pad_up(H, kSpatialMultiple),
                                     pad_up(W, kSpatialMultiple));
      Var y = cascaded_->comp->encode(Var(padded));
      return encode_with(*cascaded_->comp->eu, y, ModelKind::kCascaded, H, W);
    }
    case SystemKind::kIspTeacher:
      fail(ErrorCode::kInvalidArgument, "ISP teacher is not a codec");
  }
  fail(ErrorCode::kInternal, "unreachable");
}

Tensor System::decode_stream(const Bitstream& bs) const {
  NoGradGuard ng;
  if (bs.header.model_kind != stream_kind(cfg_.kind))
    fail(ErrorCode::kModelMismatch,
         "stream was produced by a different system kind");
  const EntropyUnit* eu = nullptr;
  switch (cfg_.kind) {
    case SystemKind::kRbn: eu = rbn_->eu.get(); break;
    case SystemKind::kUnified: eu = unified_->eu.get(); break;
    case SystemKind::kCompTeacher: eu = comp_teacher_->eu.get(); break;
    case SystemKind::kCascaded: eu = cascaded_->comp->eu.get(); break;
    case SystemKind::kIspTeacher:
      fail(ErrorCode::kInvalidArgument, "ISP teacher is not a codec");
  }
  if (int(bs.header.latent_channels) != eu->C)
    fail(ErrorCode::kModelMismatch,
         "stream latent width K=" + std::to_string(bs.header.latent_channels) +
             " but checkpoint has K=" + std::to_string(eu->C));
  if (bs.header.quality_index != uint8_t(cfg_.quality_index & 0xFF))
    fail(ErrorCode::kModelMismatch, "stream/checkpoint quality index mismatch");

  const int H = int(bs.header.height), W = int(bs.header.width);
  int in_h, in_w;  // dims of the tensor the latent encoder saw
  if (cfg_.kind == SystemKind::kCascaded) {
    in_h = pad_up(H, kSpatialMultiple);
    in_w = pad_up(W, kSpatialMultiple);
  } else {
    in_h = pad_up(H / 2, kSpatialMultiple);
    in_w = pad_up(W / 2, kSpatialMultiple);
  }
  const int yh = in_h / 16, yw = in_w / 16;
  const Shape yshape{1, eu->C, yh, yw};
  const Shape zshape{1, eu->C, hyper_dim(yh), hyper_dim(yw)};

  Tensor z_hat = decode_hyper_payload(bs.hyper_payload, zshape, *eu->fp);
  Var hyper_feat = eu->hs->forward(Var(z_hat), yh, yw);
  Tensor y_hat = decode_latent_payload(bs.latent_payload, yshape,
                                       hyper_feat.value(), *eu);

  Var out;
  switch (cfg_.kind) {
    case SystemKind::kRbn: out = rbn_->decode(Var(y_hat)); break;
    case SystemKind::kUnified: out = unified_->decode(Var(y_hat)); break;
    case SystemKind::kCompTeacher: out = comp_teacher_->decode(Var(y_hat)); break;
    case SystemKind::kCascaded: out = cascaded_->comp->decode(Var(y_hat)); break;
    default: fail(ErrorCode::kInternal, "unreachable");
  }
  const int out_h = cfg_.kind == SystemKind::kCompTeacher ? H / 2 : H;
  const int out_w = cfg_.kind == SystemKind::kCompTeacher ? W / 2 : W;
  Tensor img = ops::crop_hw(out, out_h, out_w).value();
  img = t_clamp(img, 0.0, 1.0);
  return img.reshaped(Shape{img.shape()[1], out_h, out_w});
}

}  // namespace rtb
