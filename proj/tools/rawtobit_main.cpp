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

// Operator CLI. Everything goes through the C API in rawtobit.h; this
// translation unit never touches the C++ core directly.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rawtobit.h"

using nlohmann::json;

namespace {

int fail_status(int status) {
  std::cerr << "error (" << rtb_status_name(status) << "): " << rtb_last_error()
            << "\n";
  return status == RTB_OK ? 1 : status;
}

struct ModelHandle {
  rtb_model_t* m = nullptr;
  ~ModelHandle() { rtb_model_free(m); }
};

struct CString {
  char* s = nullptr;
  ~CString() { rtb_string_free(s); }
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string default_data_dir() {
  const char* env = std::getenv("RAWTOBIT_DATA_DIR");
  return env ? env : "";
}

// Shared flags for the training-style commands (train / ablate).
struct TrainCli {
  std::string system = "unified";
  double lambda = 0.013;
  double scale = 1.0;
  int64_t iters = -1;
  int64_t decay_iter = -1;
  int64_t iters_per_epoch = -1;
  int batch = -1;
  int patch = -1;
  int K = -1;
  double lr = -1, lr_final = -1;
  uint64_t seed = 1;
  uint64_t data_seed = 7;
  std::string data_dir = default_data_dir();
  std::string split_file;
  int synthetic = 0;
  int synthetic_size = 128;
  std::string out_dir = "out";
  std::string config_file;
  std::string teacher_comp, teacher_isp;
  std::string cascade_mode;
  std::string comp_stage;
  bool no_kd = false, abs_attention = false, enc_only = false, dec_only = false;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--system", system,
                    "rbn|unified|cascaded|teacher-comp|teacher-isp");
    cmd->add_option("--lambda", lambda, "rate-distortion trade-off weight");
    cmd->add_option("--scale", scale,
                    "multiplies the preset iteration budgets (desk-scale runs)");
    cmd->add_option("--iters", iters, "override total iterations");
    cmd->add_option("--decay-iter", decay_iter, "override the lr decay iteration");
    cmd->add_option("--iters-per-epoch", iters_per_epoch,
                    "override the epoch length used by the KD decay");
    cmd->add_option("--batch", batch, "batch size");
    cmd->add_option("--patch", patch, "RAW patch size (sRGB patch is 2x)");
    cmd->add_option("--K", K, "latent width override");
    cmd->add_option("--lr", lr, "initial learning rate");
    cmd->add_option("--lr-final", lr_final, "post-decay learning rate");
    cmd->add_option("--seed", seed, "model init / noise seed");
    cmd->add_option("--data-seed", data_seed, "patch sampling seed");
    cmd->add_option("--data-dir", data_dir, "pair directory (RAWTOBIT_DATA_DIR)");
    cmd->add_option("--split", split_file, "split file; trains on [train]");
    cmd->add_option("--synthetic", synthetic, "train on N in-memory synthetic pairs");
    cmd->add_option("--synthetic-size", synthetic_size, "synthetic mosaic size");
    cmd->add_option("--out-dir", out_dir, "output directory");
    cmd->add_option("--config", config_file, "JSON config merged over the preset");
    cmd->add_option("--teacher-comp", teacher_comp, "compression teacher checkpoint");
    cmd->add_option("--teacher-isp", teacher_isp, "ISP teacher checkpoint");
    cmd->add_option("--cascade-mode", cascade_mode, "isp|comp|joint");
    cmd->add_option("--comp-stage", comp_stage,
                    "trained comp-stage checkpoint for joint fine-tuning");
    cmd->add_flag("--no-kd", no_kd, "disable distillation");
    cmd->add_flag("--abs-attention", abs_attention,
                  "absolute-value attention maps (ablation)");
    cmd->add_flag("--enc-only", enc_only, "encoder-side KD only");
    cmd->add_flag("--dec-only", dec_only, "decoder-side KD only");
  }

  // Precedence: CLI flag > config file > preset.
  json build_config(CLI::App* cmd) const {
    CString preset;
    int rc = rtb_train_preset(system.c_str(), lambda, scale, &preset.s);
    if (rc != RTB_OK) {
      // Unknown lambda: fall back to the nearest structure and require K.
      if (K <= 0) throw std::runtime_error(rtb_last_error());
      CString base;
      rc = rtb_train_preset(system.c_str(), 0.013, scale, &base.s);
      if (rc != RTB_OK) throw std::runtime_error(rtb_last_error());
      json cfg = json::parse(base.s);
      cfg["system_config"]["lambda"] = lambda;
      cfg["system_config"]["quality_index"] = 255;
      return apply_overrides(cmd, cfg);
    }
    return apply_overrides(cmd, json::parse(preset.s));
  }

  json apply_overrides(CLI::App* cmd, json cfg) const {
    if (!config_file.empty()) {
      std::ifstream f(config_file);
      if (!f) throw std::runtime_error("cannot open config: " + config_file);
      json file_cfg;
      f >> file_cfg;
      cfg.merge_patch(file_cfg);
    }
    auto set_if = [&](const char* flag, auto value, json& slot) {
      if (cmd->count(flag)) slot = value;
    };
    set_if("--lambda", lambda, cfg["system_config"]["lambda"]);
    set_if("--iters", iters, cfg["total_iters"]);
    set_if("--decay-iter", decay_iter, cfg["lr_decay_iter"]);
    set_if("--batch", batch, cfg["batch_size"]);
    set_if("--patch", patch, cfg["raw_patch"]);
    set_if("--lr", lr, cfg["lr_initial"]);
    set_if("--lr-final", lr_final, cfg["lr_final"]);
    set_if("--seed", seed, cfg["system_config"]["seed"]);
    set_if("--data-seed", data_seed, cfg["data_seed"]);
    set_if("--data-dir", data_dir, cfg["data_dir"]);
    set_if("--split", split_file, cfg["split_file"]);
    set_if("--synthetic", synthetic, cfg["synthetic_count"]);
    set_if("--synthetic-size", synthetic_size, cfg["synthetic_size"]);
    set_if("--out-dir", out_dir, cfg["out_dir"]);
    set_if("--teacher-comp", teacher_comp, cfg["teacher_comp_path"]);
    set_if("--teacher-isp", teacher_isp, cfg["teacher_isp_path"]);
    set_if("--cascade-mode", cascade_mode, cfg["cascade_mode"]);
    set_if("--comp-stage", comp_stage, cfg["comp_stage_path"]);
    set_if("--iters-per-epoch", iters_per_epoch,
           cfg["kd"]["iters_per_epoch_override"]);
    if (cmd->count("--K")) {
      cfg["system_config"]["arch"]["teacher_latent"] = K;
      cfg["system_config"]["arch"]["unified_latent"] = K;
    }
    if (no_kd) cfg["kd"]["enabled"] = false;
    if (abs_attention) cfg["kd"]["abs_mode"] = true;
    if (enc_only) cfg["kd"]["decoder"]["enabled"] = false;
    if (dec_only) cfg["kd"]["encoder"]["enabled"] = false;
    if (system == "rbn" && !no_kd && teacher_comp.empty() &&
        !cfg.contains("teacher_comp_path"))
      cfg["kd"]["enabled"] = false;  // plain RBN without teachers
    return cfg;
  }
};

int run_train_config(const json& cfg) {
  const double total = cfg.value("total_iters", int64_t(0));
  if (total >= 500000)
    std::cerr << "warning: full-scale schedule (" << total
              << " iterations); this is a multi-day CPU run. Use --scale for "
                 "desk-scale training.\n";
  CString summary;
  const std::string cfg_str = cfg.dump();
  int rc = rtb_train(cfg_str.c_str(), &summary.s);
  if (rc != RTB_OK) return fail_status(rc);
  std::cout << summary.s << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rawtobit: end-to-end RAW-to-bitstream camera pipeline"};
  app.require_subcommand(1);

  // ---- prepare-data ----
  auto* prep = app.add_subcommand("prepare-data",
                                  "generate synthetic pairs or validate a pair dir");
  std::string prep_out = default_data_dir();
  int prep_n = 0, prep_w = 256, prep_h = 256;
  uint64_t prep_seed = 7;
  std::string prep_check;
  prep->add_option("--synthetic", prep_n, "number of synthetic pairs to write");
  prep->add_option("--out-dir", prep_out, "target directory");
  prep->add_option("--width", prep_w, "mosaic width");
  prep->add_option("--height", prep_h, "mosaic height");
  prep->add_option("--seed", prep_seed, "generator seed");
  prep->add_option("--check", prep_check, "validate pairs in this directory");
  prep->callback([&] {
    if (!prep_check.empty()) {
      CString rep;
      int rc = rtb_check_pairs(prep_check.c_str(), &rep.s);
      if (rc != RTB_OK) exit(fail_status(rc));
      std::cout << rep.s << "\n";
      json j = json::parse(rep.s);
      if (!j["invalid"].empty()) exit(1);
      return;
    }
    if (prep_n <= 0) {
      std::cerr << "error: pass --synthetic N or --check DIR\n";
      exit(RTB_ERR_INVALID_ARGUMENT);
    }
    int rc = rtb_generate_synthetic(prep_out.c_str(), prep_n, prep_h, prep_w,
                                    prep_seed);
    if (rc != RTB_OK) exit(fail_status(rc));
    std::cout << "wrote " << prep_n << " pairs to " << prep_out << "\n";
  });

  // ---- make-split ----
  auto* mksplit = app.add_subcommand("make-split", "deterministic 80:5:15 split");
  std::string ms_dir = default_data_dir(), ms_out = "split.txt";
  uint64_t ms_seed = 1;
  mksplit->add_option("--data-dir", ms_dir, "pair directory")->required();
  mksplit->add_option("--seed", ms_seed, "shuffle seed");
  mksplit->add_option("--out", ms_out, "split file path");
  mksplit->callback([&] {
    CString counts;
    int rc = rtb_make_split(ms_dir.c_str(), ms_seed, ms_out.c_str(), &counts.s);
    if (rc != RTB_OK) exit(fail_status(rc));
    std::cout << counts.s << "\n";
  });

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train one system");
  TrainCli tc;
  tc.add_options(train_cmd);
  train_cmd->callback([&] {
    json cfg;
    try {
      cfg = tc.build_config(train_cmd);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      exit(RTB_ERR_INVALID_ARGUMENT);
    }
    exit(run_train_config(cfg));
  });

  // ---- ablate ----
  auto* ablate = app.add_subcommand(
      "ablate", "train an RBN distillation variant and emit its report");
  TrainCli ac;
  ac.system = "rbn";
  std::string variant;
  ablate->add_option("--variant", variant, "no-kd|enc-only|dec-only|abs-attention")
      ->required();
  ac.add_options(ablate);
  ablate->callback([&] {
    json cfg;
    try {
      cfg = ac.build_config(ablate);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      exit(RTB_ERR_INVALID_ARGUMENT);
    }
    if (variant == "no-kd") {
      cfg["kd"]["enabled"] = false;
    } else if (variant == "enc-only") {
      cfg["kd"]["decoder"]["enabled"] = false;
    } else if (variant == "dec-only") {
      cfg["kd"]["encoder"]["enabled"] = false;
    } else if (variant == "abs-attention") {
      cfg["kd"]["abs_mode"] = true;
    } else {
      std::cerr << "error: unknown variant " << variant << "\n";
      exit(RTB_ERR_INVALID_ARGUMENT);
    }
    CString summary;
    const double total = cfg.value("total_iters", int64_t(0));
    if (total >= 500000)
      std::cerr << "warning: full-scale schedule; consider --scale.\n";
    const std::string cfg_str = cfg.dump();
    int rc = rtb_train(cfg_str.c_str(), &summary.s);
    if (rc != RTB_OK) exit(fail_status(rc));
    json s = json::parse(summary.s);
    const std::string out_dir = cfg.value("out_dir", std::string("out"));
    json report{{"variant", variant}, {"train_summary", s}};
    const std::string kd_csv = s.value("kd_csv", std::string());
    if (!kd_csv.empty()) {
      const std::string enc_svg = out_dir + "/attention_enc.svg";
      const std::string dec_svg = out_dir + "/attention_dec.svg";
      json series = json::array({json::array({kd_csv, "rbn (" + variant + ")"})});
      const std::string series_str = series.dump();
      if (rtb_plot_csv(enc_svg.c_str(), series_str.c_str(), "iter",
                       "L_AT_enc_raw", "Encoder attention loss") == RTB_OK)
        report["attention_enc_svg"] = enc_svg;
      if (rtb_plot_csv(dec_svg.c_str(), series_str.c_str(), "iter",
                       "L_AT_dec_raw", "Decoder attention loss") == RTB_OK)
        report["attention_dec_svg"] = dec_svg;
    }
    std::ofstream rf(out_dir + "/ablate_report.json");
    rf << report.dump(2) << "\n";
    std::cout << report.dump(2) << "\n";
  });

  // ---- encode ----
  auto* enc = app.add_subcommand("encode", "RAW pair file -> .rbb bitstream");
  std::string e_ckpt, e_in, e_out;
  bool e_report = false;
  enc->add_option("--checkpoint", e_ckpt, "model checkpoint")->required();
  enc->add_option("--input", e_in, "<id>.raw16 (with .meta.json sidecar)")
      ->required();
  enc->add_option("--out", e_out, "output .rbb path")->required();
  enc->add_flag("--report", e_report, "print bpp and size accounting");
  enc->callback([&] {
    ModelHandle m;
    int rc = rtb_model_load(e_ckpt.c_str(), &m.m);
    if (rc != RTB_OK) exit(fail_status(rc));
    rtb_encode_report_t rep{};
    rc = rtb_encode_file(m.m, e_in.c_str(), e_out.c_str(), &rep);
    if (rc != RTB_OK) exit(fail_status(rc));
    if (e_report) {
      json j{{"bpp", rep.bpp},
             {"stream_bytes", rep.stream_bytes},
             {"estimated_bits", rep.estimated_bits},
             {"actual_bits", rep.actual_bits},
             {"height", rep.height},
             {"width", rep.width}};
      std::cout << j.dump(2) << "\n";
    }
  });

  // ---- decode ----
  auto* dec = app.add_subcommand("decode", ".rbb bitstream -> image");
  std::string d_ckpt, d_in, d_out, d_gt;
  int d_depth = 8;
  bool d_report = false;
  dec->add_option("--checkpoint", d_ckpt, "model checkpoint")->required();
  dec->add_option("--input", d_in, "input .rbb path")->required();
  dec->add_option("--out", d_out, "output image (.png; .raw16 for teacher-comp)")
      ->required();
  dec->add_option("--bit-depth", d_depth, "png bit depth (8 or 16)");
  dec->add_option("--gt", d_gt, "ground-truth png for --report PSNR");
  dec->add_flag("--report", d_report, "print bpp (and PSNR with --gt)");
  dec->callback([&] {
    ModelHandle m;
    int rc = rtb_model_load(d_ckpt.c_str(), &m.m);
    if (rc != RTB_OK) exit(fail_status(rc));
    rtb_decode_report_t rep{};
    rc = rtb_decode_file(m.m, d_in.c_str(), d_out.c_str(), d_depth,
                         d_gt.empty() ? nullptr : d_gt.c_str(), &rep);
    if (rc != RTB_OK) exit(fail_status(rc));
    if (d_report) {
      json j{{"bpp", rep.bpp}, {"height", rep.height}, {"width", rep.width}};
      if (!std::isnan(rep.psnr_db)) j["psnr_db"] = rep.psnr_db;
      std::cout << j.dump(2) << "\n";
    }
  });

  // ---- eval-rd ----
  auto* ev = app.add_subcommand("eval-rd", "rate-distortion sweep over checkpoints");
  std::string ev_ckpts, ev_dir = default_data_dir(), ev_split, ev_out = "out";
  int ev_synth = 0, ev_synth_size = 256;
  uint64_t ev_seed = 7;
  ev->add_option("--checkpoints", ev_ckpts, "comma-separated checkpoint list")
      ->required();
  ev->add_option("--data-dir", ev_dir, "pair directory");
  ev->add_option("--split", ev_split, "split file; evaluates the [test] section");
  ev->add_option("--synthetic", ev_synth, "evaluate on N synthetic pairs instead");
  ev->add_option("--synthetic-size", ev_synth_size, "synthetic mosaic size");
  ev->add_option("--data-seed", ev_seed, "synthetic seed");
  ev->add_option("--out-dir", ev_out, "output directory (rd.csv, rd.svg)");
  ev->callback([&] {
    json cfg{{"checkpoints", split_commas(ev_ckpts)}, {"out_dir", ev_out}};
    if (ev_synth > 0) {
      cfg["synthetic_count"] = ev_synth;
      cfg["synthetic_size"] = ev_synth_size;
      cfg["data_seed"] = ev_seed;
    } else {
      cfg["data_dir"] = ev_dir;
      if (!ev_split.empty()) cfg["split_file"] = ev_split;
    }
    CString summary;
    const std::string cfg_str = cfg.dump();
    int rc = rtb_eval_rd(cfg_str.c_str(), &summary.s);
    if (rc != RTB_OK) exit(fail_status(rc));
    std::cout << summary.s << "\n";
  });

  // ---- plot ----
  auto* plot = app.add_subcommand("plot", "render CSV columns to an SVG");
  std::string p_csv, p_labels, p_x = "iter", p_y = "L_total", p_out = "plot.svg";
  std::string p_title = "";
  plot->add_option("--csv", p_csv, "comma-separated CSV paths")->required();
  plot->add_option("--labels", p_labels, "comma-separated labels (default: paths)");
  plot->add_option("--x", p_x, "x column");
  plot->add_option("--y", p_y, "y column");
  plot->add_option("--title", p_title, "plot title");
  plot->add_option("--out", p_out, "output SVG path");
  plot->callback([&] {
    auto paths = split_commas(p_csv);
    auto labels = split_commas(p_labels);
    json series = json::array();
    for (size_t i = 0; i < paths.size(); ++i)
      series.push_back(
          json::array({paths[i], i < labels.size() ? labels[i] : paths[i]}));
    const std::string series_str = series.dump();
    int rc = rtb_plot_csv(p_out.c_str(), series_str.c_str(), p_x.c_str(),
                          p_y.c_str(), p_title.c_str());
    if (rc != RTB_OK) exit(fail_status(rc));
    std::cout << "wrote " << p_out << "\n";
  });

  // ---- psnr / error-map helpers ----
  auto* ps = app.add_subcommand("psnr", "PSNR between two PNGs");
  std::string ps_a, ps_b;
  ps->add_option("a", ps_a)->required();
  ps->add_option("b", ps_b)->required();
  ps->callback([&] {
    double v = 0;
    int rc = rtb_psnr(ps_a.c_str(), ps_b.c_str(), &v);
    if (rc != RTB_OK) exit(fail_status(rc));
    printf("%.9f\n", v);
  });

  auto* em = app.add_subcommand("error-map", "per-pixel error visualization");
  std::string em_gt, em_recon, em_out = "error_map.png";
  em->add_option("--gt", em_gt)->required();
  em->add_option("--recon", em_recon)->required();
  em->add_option("--out", em_out);
  em->callback([&] {
    int rc = rtb_error_map(em_gt.c_str(), em_recon.c_str(), em_out.c_str());
    if (rc != RTB_OK) exit(fail_status(rc));
    std::cout << "wrote " << em_out << "\n";
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
