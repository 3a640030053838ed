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

#include "rawtobit.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>

#include "rawtobit/data.hpp"
#include "rawtobit/evaluation.hpp"
#include "rawtobit/image_io.hpp"
#include "rawtobit/networks.hpp"
#include "rawtobit/training.hpp"

using nlohmann::json;

struct rtb_model_t {
  std::unique_ptr<rtb::System> sys;
};

namespace {

thread_local std::string g_last_error;

int status_of(rtb::ErrorCode code) {
  using EC = rtb::ErrorCode;
  switch (code) {
    case EC::kInvalidArgument: return RTB_ERR_INVALID_ARGUMENT;
    case EC::kInvalidShape: return RTB_ERR_INVALID_SHAPE;
    case EC::kUnsupportedPattern: return RTB_ERR_UNSUPPORTED_PATTERN;
    case EC::kInvalidMetadata: return RTB_ERR_INVALID_METADATA;
    case EC::kPatchTooLarge: return RTB_ERR_PATCH_TOO_LARGE;
    case EC::kInvalidSpec: return RTB_ERR_INVALID_SPEC;
    case EC::kFormatError: return RTB_ERR_FORMAT;
    case EC::kDecodeError: return RTB_ERR_DECODE;
    case EC::kModelMismatch: return RTB_ERR_MODEL_MISMATCH;
    case EC::kMissingK: return RTB_ERR_MISSING_K;
    case EC::kPadRequired: return RTB_ERR_PAD_REQUIRED;
    case EC::kNanAbort: return RTB_ERR_NAN_ABORT;
    case EC::kIoError: return RTB_ERR_IO;
    case EC::kInternal: return RTB_ERR_INTERNAL;
  }
  return RTB_ERR_INTERNAL;
}

template <typename F>
int guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return RTB_OK;
  } catch (const rtb::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RTB_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return RTB_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void require(bool cond, const char* what) {
  if (!cond) rtb::fail(rtb::ErrorCode::kInvalidArgument, what);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<rtb::PairRecord> pairs_from_eval_config(const json& cfg) {
  if (cfg.contains("synthetic_count") && cfg["synthetic_count"].get<int>() > 0) {
    return rtb::synthetic_pairs(cfg["synthetic_count"].get<int>(),
                                cfg.value("synthetic_size", 128),
                                cfg.value("synthetic_size", 128),
                                cfg.value("data_seed", uint64_t(7)));
  }
  const std::string dir = cfg.value("data_dir", std::string());
  require(!dir.empty(), "eval config needs data_dir or synthetic_count");
  std::vector<std::string> ids;
  if (cfg.contains("split_file"))
    ids = rtb::read_split_file(cfg["split_file"].get<std::string>()).test_ids;
  else
    ids = rtb::list_pair_ids(dir);
  std::vector<rtb::PairRecord> pairs;
  for (const auto& id : ids) pairs.push_back(rtb::load_pair(dir, id));
  return pairs;
}

}  // namespace

extern "C" {

const char* rtb_version(void) { return "rawtobit 1.0.0"; }

const char* rtb_status_name(int status) {
  switch (status) {
    case RTB_OK: return "ok";
    case RTB_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case RTB_ERR_INVALID_SHAPE: return "invalid-shape";
    case RTB_ERR_UNSUPPORTED_PATTERN: return "unsupported-pattern";
    case RTB_ERR_INVALID_METADATA: return "invalid-metadata";
    case RTB_ERR_PATCH_TOO_LARGE: return "patch-too-large";
    case RTB_ERR_INVALID_SPEC: return "invalid-spec";
    case RTB_ERR_FORMAT: return "format-error";
    case RTB_ERR_DECODE: return "decode-error";
    case RTB_ERR_MODEL_MISMATCH: return "model-mismatch";
    case RTB_ERR_MISSING_K: return "missing-k";
    case RTB_ERR_PAD_REQUIRED: return "pad-required";
    case RTB_ERR_NAN_ABORT: return "nan-abort";
    case RTB_ERR_IO: return "io-error";
    case RTB_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* rtb_last_error(void) { return g_last_error.c_str(); }

void rtb_string_free(char* s) { delete[] s; }

int rtb_model_load(const char* checkpoint_path, rtb_model_t** out_model) {
  return guarded([&] {
    require(checkpoint_path && out_model, "null argument");
    auto model = std::make_unique<rtb_model_t>();
    model->sys = rtb::System::load_file(checkpoint_path);
    *out_model = model.release();
  });
}

void rtb_model_free(rtb_model_t* model) { delete model; }

int rtb_model_info(const rtb_model_t* model, rtb_model_info_t* out_info) {
  return guarded([&] {
    require(model && out_info, "null argument");
    const auto& cfg = model->sys->config();
    std::snprintf(out_info->system, sizeof out_info->system, "%s",
                  rtb::system_kind_to_string(cfg.kind).c_str());
    out_info->lambda = cfg.lambda;
    out_info->quality_index = cfg.quality_index;
    out_info->trained_iters = cfg.trained_iters;
    switch (cfg.kind) {
      case rtb::SystemKind::kRbn:
      case rtb::SystemKind::kIspTeacher:
        out_info->latent_channels = cfg.arch.latent_channels;
        break;
      case rtb::SystemKind::kCompTeacher:
        out_info->latent_channels = cfg.arch.teacher_latent;
        break;
      default:
        out_info->latent_channels = cfg.arch.unified_latent;
    }
  });
}

int rtb_encode_file(const rtb_model_t* model, const char* raw16_path,
                    const char* out_stream_path, rtb_encode_report_t* report) {
  return guarded([&] {
    require(model && raw16_path && out_stream_path, "null argument");
    rtb::RawFile rf = rtb::read_raw16(raw16_path);
    if (rf.meta.bayer_pattern != "RGGB")
      rtb::fail(rtb::ErrorCode::kUnsupportedPattern,
                "unsupported bayer pattern: " + rf.meta.bayer_pattern);
    rtb::Tensor packed = rtb::pack_rggb(rtb::normalize_raw(
        rf.mosaic, rf.meta.black_level, rf.meta.white_level));
    rtb::EncodeResult enc = model->sys->encode_image(packed);
    rtb::write_bitstream_file(out_stream_path, enc.stream);
    if (report) {
      const auto bytes = rtb::serialize_bitstream(enc.stream);
      report->stream_bytes = bytes.size();
      report->actual_bits = 8.0 * double(bytes.size());
      report->estimated_bits = enc.estimated_bits;
      report->height = enc.stream.header.height;
      report->width = enc.stream.header.width;
      report->bpp = rtb::bpp_of(bytes.size(), int(enc.stream.header.height),
                                int(enc.stream.header.width));
    }
  });
}

int rtb_decode_file(const rtb_model_t* model, const char* stream_path,
                    const char* out_path, int png_bit_depth,
                    const char* ground_truth_png, rtb_decode_report_t* report) {
  return guarded([&] {
    require(model && stream_path && out_path, "null argument");
    rtb::Bitstream bs = rtb::read_bitstream_file(stream_path);
    rtb::Tensor img = model->sys->decode_stream(bs);
    const bool is_raw = model->sys->config().kind == rtb::SystemKind::kCompTeacher;
    if (is_raw) {
      require(ends_with(out_path, ".raw16"),
              "teacher-comp streams decode to RAW; use a .raw16 out path");
      rtb::Tensor mosaic = rtb::unpack_rggb(img);
      rtb::RawFileMeta meta;
      meta.width = mosaic.dim(1);
      meta.height = mosaic.dim(0);
      meta.black_level = 0;
      meta.white_level = 65535;
      meta.source_id = "decoded";
      rtb::Tensor counts = rtb::t_scale(mosaic, 65535.0);
      rtb::write_raw16(out_path, counts, meta);
    } else {
      rtb::write_png(out_path, img, png_bit_depth == 16 ? 16 : 8);
    }
    if (report) {
      std::error_code ec;
      const auto sz = std::filesystem::file_size(stream_path, ec);
      report->height = bs.header.height;
      report->width = bs.header.width;
      report->bpp = rtb::bpp_of(size_t(sz), int(bs.header.height),
                                int(bs.header.width));
      report->psnr_db = std::numeric_limits<double>::quiet_NaN();
      if (ground_truth_png && !is_raw) {
        rtb::Tensor gt = rtb::read_png(ground_truth_png);
        report->psnr_db = rtb::psnr_db(rtb::t_clamp(gt, 0.0, 1.0), img);
      }
    }
  });
}

int rtb_stream_bpp(const char* stream_path, double* out_bpp) {
  return guarded([&] {
    require(stream_path && out_bpp, "null argument");
    rtb::Bitstream bs = rtb::read_bitstream_file(stream_path);
    std::error_code ec;
    const auto sz = std::filesystem::file_size(stream_path, ec);
    *out_bpp =
        rtb::bpp_of(size_t(sz), int(bs.header.height), int(bs.header.width));
  });
}

int rtb_generate_synthetic(const char* out_dir, int count, int mosaic_height,
                           int mosaic_width, uint64_t seed) {
  return guarded([&] {
    require(out_dir && count > 0, "need out_dir and positive count");
    rtb::generate_synthetic_dir(out_dir, count, mosaic_height, mosaic_width, seed);
  });
}

int rtb_check_pairs(const char* dir, char** out_report_json) {
  return guarded([&] {
    require(dir && out_report_json, "null argument");
    auto ids = rtb::list_pair_ids(dir);
    json bad = json::array();
    int ok = 0;
    for (const auto& id : ids) {
      try {
        (void)rtb::load_pair(dir, id);
        ++ok;
      } catch (const std::exception& e) {
        bad.push_back({{"id", id}, {"error", e.what()}});
      }
    }
    json report{{"dir", dir}, {"pairs", ids.size()}, {"valid", ok}, {"invalid", bad}};
    *out_report_json = dup_string(report.dump(2));
  });
}

int rtb_make_split(const char* data_dir, uint64_t seed,
                   const char* out_split_path, char** out_counts_json) {
  return guarded([&] {
    require(data_dir && out_split_path, "null argument");
    auto ids = rtb::list_pair_ids(data_dir);
    rtb::DatasetSplit split = rtb::make_split(ids, seed);
    rtb::write_split_file(out_split_path, split);
    if (out_counts_json) {
      json j{{"train", split.train_ids.size()},
             {"val", split.val_ids.size()},
             {"test", split.test_ids.size()},
             {"seed", seed}};
      *out_counts_json = dup_string(j.dump());
    }
  });
}

int rtb_train_preset(const char* system, double lambda, double scale,
                     char** out_config_json) {
  return guarded([&] {
    require(system && out_config_json, "null argument");
    rtb::TrainConfig cfg = rtb::train_schedule_preset(
        rtb::system_kind_from_string(system), lambda, scale);
    *out_config_json = dup_string(cfg.to_json().dump());
  });
}

int rtb_train(const char* config_json, char** out_summary_json) {
  return guarded([&] {
    require(config_json, "null argument");
    rtb::TrainConfig cfg = rtb::TrainConfig::from_json(json::parse(config_json));
    rtb::TrainResult res = rtb::train(cfg);
    if (out_summary_json) {
      json j{{"checkpoint", res.checkpoint_path},
             {"loss_csv", res.loss_csv_path},
             {"kd_csv", res.kd_csv_path},
             {"iters", res.iters},
             {"first10_avg_total", res.first10_avg_total},
             {"last10_avg_total", res.last10_avg_total},
             {"final_total", res.final_total}};
      *out_summary_json = dup_string(j.dump());
    }
  });
}

int rtb_eval_rd(const char* eval_config_json, char** out_summary_json) {
  return guarded([&] {
    require(eval_config_json, "null argument");
    const json cfg = json::parse(eval_config_json);
    require(cfg.contains("checkpoints"), "eval config needs checkpoints");
    const auto paths = cfg["checkpoints"].get<std::vector<std::string>>();
    const std::string out_dir = cfg.value("out_dir", std::string("."));
    auto pairs = pairs_from_eval_config(cfg);
    rtb::RdSweepResult res = rtb::rd_sweep(paths, pairs, out_dir);
    if (out_summary_json) {
      json pts = json::array();
      for (const auto& p : res.points)
        pts.push_back({{"system", p.system},
                       {"lambda", p.lambda},
                       {"bpp", p.bpp},
                       {"psnr_db", p.psnr},
                       {"n_images", p.image_count}});
      json j{{"csv", res.csv_path},
             {"svg", res.svg_path},
             {"points", pts},
             {"warnings", res.warnings}};
      if (std::isfinite(res.cascaded_ceiling_psnr))
        j["cascaded_ceiling_psnr"] = res.cascaded_ceiling_psnr;
      *out_summary_json = dup_string(j.dump());
    }
  });
}

int rtb_psnr(const char* png_a, const char* png_b, double* out_psnr_db) {
  return guarded([&] {
    require(png_a && png_b && out_psnr_db, "null argument");
    *out_psnr_db = rtb::psnr_db(rtb::read_png(png_a), rtb::read_png(png_b));
  });
}

int rtb_error_map(const char* gt_png, const char* recon_png, const char* out_png) {
  return guarded([&] {
    require(gt_png && recon_png && out_png, "null argument");
    rtb::Tensor map =
        rtb::error_map(rtb::read_png(gt_png), rtb::read_png(recon_png));
    rtb::write_png(out_png, map, 8);
  });
}

int rtb_plot_csv(const char* svg_path, const char* csv_series_json,
                 const char* x_col, const char* y_col, const char* title) {
  return guarded([&] {
    require(svg_path && csv_series_json && x_col && y_col, "null argument");
    const json series = json::parse(csv_series_json);
    std::vector<std::pair<std::string, std::string>> csvs;
    for (const auto& e : series)
      csvs.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
    rtb::plot_csv_svg(svg_path, csvs, x_col, y_col, title ? title : "");
  });
}

}  // extern "C"
