/*
 * Copyright 2026 The RAWtoBit Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface of the rawtobit shared library. All entry points return an
 * rtb_status code; RTB_OK is zero. On failure rtb_last_error() holds a
 * thread-local message describing what went wrong. Handles are opaque and
 * freed through their matching _free call. Strings returned through char**
 * out-parameters are heap-allocated; release them with rtb_string_free.
 */

#ifndef RAWTOBIT_H_
#define RAWTOBIT_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rtb_status {
  RTB_OK = 0,
  RTB_ERR_INVALID_ARGUMENT = 1,
  RTB_ERR_INVALID_SHAPE = 2,
  RTB_ERR_UNSUPPORTED_PATTERN = 3,
  RTB_ERR_INVALID_METADATA = 4,
  RTB_ERR_PATCH_TOO_LARGE = 5,
  RTB_ERR_INVALID_SPEC = 6,
  RTB_ERR_FORMAT = 7,
  RTB_ERR_DECODE = 8,
  RTB_ERR_MODEL_MISMATCH = 9,
  RTB_ERR_MISSING_K = 10,
  RTB_ERR_PAD_REQUIRED = 11,
  RTB_ERR_NAN_ABORT = 12,
  RTB_ERR_IO = 13,
  RTB_ERR_INTERNAL = 14,
} rtb_status;

const char* rtb_version(void);
const char* rtb_status_name(int status);
/* Message of the most recent failure on this thread ("" if none). */
const char* rtb_last_error(void);
void rtb_string_free(char* s);

/* ---- models ---------------------------------------------------------- */

typedef struct rtb_model_t rtb_model_t;

int rtb_model_load(const char* checkpoint_path, rtb_model_t** out_model);
void rtb_model_free(rtb_model_t* model);

typedef struct rtb_model_info_t {
  char system[16];
  double lambda;
  int quality_index;
  int latent_channels;
  int64_t trained_iters;
} rtb_model_info_t;

int rtb_model_info(const rtb_model_t* model, rtb_model_info_t* out_info);

/* ---- encode / decode -------------------------------------------------- */

typedef struct rtb_encode_report_t {
  double bpp;            /* over total stream bytes at sRGB resolution */
  double estimated_bits; /* entropy-model estimate over both payloads  */
  double actual_bits;    /* 8 * stream bytes                            */
  uint64_t stream_bytes;
  uint32_t height, width; /* sRGB-resolution dims in the header */
} rtb_encode_report_t;

/* raw16_path names `<id>.raw16`; the `<id>.meta.json` sidecar must sit
 * next to it. Writes the `.rbb` container to out_stream_path. */
int rtb_encode_file(const rtb_model_t* model, const char* raw16_path,
                    const char* out_stream_path, rtb_encode_report_t* report);

typedef struct rtb_decode_report_t {
  double bpp;
  double psnr_db; /* vs ground truth when given, else NaN */
  uint32_t height, width;
} rtb_decode_report_t;

/* Decodes to PNG (bit depth 8 or 16). A teacher-comp stream decodes to a
 * normalized RAW mosaic instead; pass an out path ending in .raw16.
 * ground_truth_png may be NULL. */
int rtb_decode_file(const rtb_model_t* model, const char* stream_path,
                    const char* out_path, int png_bit_depth,
                    const char* ground_truth_png, rtb_decode_report_t* report);

int rtb_stream_bpp(const char* stream_path, double* out_bpp);

/* ---- data preparation -------------------------------------------------- */

int rtb_generate_synthetic(const char* out_dir, int count, int mosaic_height,
                           int mosaic_width, uint64_t seed);
/* Validates every pair in dir; returns a JSON report. */
int rtb_check_pairs(const char* dir, char** out_report_json);
int rtb_make_split(const char* data_dir, uint64_t seed,
                   const char* out_split_path, char** out_counts_json);

/* ---- training / evaluation --------------------------------------------- */

/* Full-scale schedule for one system/lambda as a training-config JSON;
 * scale multiplies the iteration budgets. */
int rtb_train_preset(const char* system, double lambda, double scale,
                     char** out_config_json);
/* Runs training from a config JSON (see rtb_train_preset for the shape). */
int rtb_train(const char* config_json, char** out_summary_json);

/* eval config JSON: {"checkpoints":[...], "out_dir":..., and either
 * "data_dir" (+ optional "split_file", test section) or
 * "synthetic_count"/"synthetic_size"/"data_seed"} */
int rtb_eval_rd(const char* eval_config_json, char** out_summary_json);

int rtb_psnr(const char* png_a, const char* png_b, double* out_psnr_db);
int rtb_error_map(const char* gt_png, const char* recon_png, const char* out_png);

/* csv_series_json: [["path.csv","label"], ...] */
int rtb_plot_csv(const char* svg_path, const char* csv_series_json,
                 const char* x_col, const char* y_col, const char* title);

#ifdef __cplusplus
}
#endif

#endif /* RAWTOBIT_H_ */
