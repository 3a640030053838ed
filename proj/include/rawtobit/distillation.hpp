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

#ifndef RAWTOBIT_DISTILLATION_HPP_
#define RAWTOBIT_DISTILLATION_HPP_

#include <json.hpp>

#include "rawtobit/autograd.hpp"

namespace rtb {

// Guard below which an attention map counts as dead and its loss term is 0.
constexpr double kAttentionNormFloor = 1e-12;

// Channel reduction of an activation [N,C,H,W] -> [N,1,H,W]. The default is
// the signed sum; abs_mode sums magnitudes instead (ablation only, loses the
// sign structure of pre-activation features).
Var attention_map(const Var& activation, bool abs_mode);

// Mean over batch of (1/N_j) * || m_s/||m_s|| - m_t/||m_t|| ||^2 with maps
// normalized per sample. Pass the teacher map detached.
Var attention_loss_term(const Var& map_student, const Var& map_teacher);

// alpha_0 * gamma^(k^2); schedules the handover from distillation to the
// rate-distortion objective as epochs k advance.
double decay_weight(double alpha0, double gamma, int64_t k);

struct KdGroupConfig {
  bool enabled = true;
  double alpha0 = 1e6;
  double gamma = 0.99999;
};

struct KdConfig {
  bool enabled = true;
  KdGroupConfig encoder{true, 1e6, 0.99999};
  KdGroupConfig decoder{true, 1e5, 0.99999};
  bool abs_mode = false;
  // One epoch is one pass over the training patch list unless overridden.
  int64_t iters_per_epoch_override = 0;

  nlohmann::json to_json() const;
  static KdConfig from_json(const nlohmann::json& j);
};

struct KdLosses {
  Var total;            // alpha-weighted scalar entering L_total
  double encoder_raw = 0;  // unweighted attention-loss sums, for the logs
  double decoder_raw = 0;
  double alpha_encoder = 0;
  double alpha_decoder = 0;
};

// Pairs student/teacher sites index-by-index per group and assembles the
// weighted total. Empty groups contribute nothing.
KdLosses kd_attention_losses(const std::vector<Var>& student_enc,
                             const std::vector<Var>& teacher_enc,
                             const std::vector<Var>& student_dec,
                             const std::vector<Var>& teacher_dec,
                             const KdConfig& cfg, int64_t epoch_k);

}  // namespace rtb

#endif  // RAWTOBIT_DISTILLATION_HPP_
