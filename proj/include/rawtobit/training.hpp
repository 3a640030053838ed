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

#ifndef RAWTOBIT_TRAINING_HPP_
#define RAWTOBIT_TRAINING_HPP_

#include <string>
#include <vector>

#include "rawtobit/data.hpp"
#include "rawtobit/distillation.hpp"
#include "rawtobit/networks.hpp"

namespace rtb {

struct RdLossBreakdown {
  double rate = 0;        // L_R, bits per sRGB pixel
  double distortion = 0;  // L_D, 255^2-scaled MSE
  double attention = 0;   // L_AT
  double lambda = 0;
  double total = 0;       // L_R + lambda * L_D + L_AT
};

struct RdLossVars {
  Var total;
  RdLossBreakdown values;
};

// Assembles the training objective. l_at may be an undefined Var when
// distillation is off; rate_bits likewise for distortion-only systems.
RdLossVars rd_loss(const Var& decoded, const Var& ground_truth, const Var& rate_bits,
                   int64_t num_pixels, double lambda, const Var& l_at);

struct TrainConfig {
  SystemConfig system;
  int batch_size = 8;
  int64_t total_iters = 0;
  int64_t lr_decay_iter = 0;
  double lr_initial = 5e-5;
  double lr_final = 5e-6;
  double grad_clip = 1.0;
  int raw_patch = 128;  // sRGB patch is twice this

  KdConfig kd;
  std::string teacher_comp_path;
  std::string teacher_isp_path;

  // cascaded: "isp" trains the RAW->sRGB stage, "comp" the sRGB codec,
  // "joint" fine-tunes the ISP stage through the frozen codec.
  std::string cascade_mode = "isp";
  std::string comp_stage_path;

  std::string data_dir;
  std::string split_file;
  int synthetic_count = 0;  // > 0 trains on in-memory synthetic pairs
  int synthetic_size = 128;
  uint64_t data_seed = 7;
  int worker_count = 1;

  int64_t checkpoint_interval = 0;
  std::string out_dir = ".";

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainResult {
  std::string checkpoint_path;
  std::string loss_csv_path;
  std::string kd_csv_path;  // empty unless KD ran
  int64_t iters = 0;
  double first10_avg_total = 0;
  double last10_avg_total = 0;
  double final_total = 0;
};

TrainResult train(const TrainConfig& cfg);

// --- presets -------------------------------------------------------------------

// Latent width rule for the stock rate points: 192 at and below 0.013,
// 320 above. Unknown lambdas need an explicit width.
int latent_width_for_lambda(double lambda);

std::vector<double> preset_lambdas(SystemKind kind);

// Full-scale schedule for one system/lambda; scale multiplies the iteration
// budgets while preserving the decay point ratio.
TrainConfig train_schedule_preset(SystemKind kind, double lambda, double scale = 1.0);

}  // namespace rtb

#endif  // RAWTOBIT_TRAINING_HPP_
