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

#include "rawtobit/distillation.hpp"

#include <cmath>

namespace rtb {

using nlohmann::json;

Var attention_map(const Var& activation, bool abs_mode) {
  return ops::channel_sum(abs_mode ? ops::abs(activation) : activation);
}

Var attention_loss_term(const Var& map_student, const Var& map_teacher) {
  using namespace ops;
  if (!same_shape(map_student.shape(), map_teacher.shape()))
    fail(ErrorCode::kInvalidShape, "attention maps differ in shape");
  const int batch = map_student.shape()[0];
  const double n_j = double(map_student.numel() / batch);
  Var acc;
  int contributing = 0;
  for (int n = 0; n < batch; ++n) {
    Var ms = slice_batch(map_student, n, n + 1);
    Var mt = slice_batch(map_teacher, n, n + 1);
    Var norm_s = sqrt(sum(square(ms)));
    Var norm_t = sqrt(sum(square(mt)));
    if (norm_s.item() < kAttentionNormFloor || norm_t.item() < kAttentionNormFloor)
      continue;  // dead map, contributes 0
    Var d = sub(div(ms, norm_s), div(mt, norm_t));
    Var term = mul_scalar(sum(square(d)), 1.0 / n_j);
    acc = acc.defined() ? add(acc, term) : term;
    ++contributing;
  }
  if (!acc.defined()) return Var(Tensor::scalar(0.0));
  return mul_scalar(acc, 1.0 / double(batch));
}

double decay_weight(double alpha0, double gamma, int64_t k) {
  if (k < 0) fail(ErrorCode::kInvalidArgument, "epoch index must be >= 0");
  return alpha0 * std::pow(gamma, double(k) * double(k));
}

json KdConfig::to_json() const {
  return json{{"enabled", enabled},
              {"abs_mode", abs_mode},
              {"iters_per_epoch_override", iters_per_epoch_override},
              {"encoder",
               {{"enabled", encoder.enabled},
                {"alpha0", encoder.alpha0},
                {"gamma", encoder.gamma}}},
              {"decoder",
               {{"enabled", decoder.enabled},
                {"alpha0", decoder.alpha0},
                {"gamma", decoder.gamma}}}};
}

KdConfig KdConfig::from_json(const json& j) {
  KdConfig c;
  c.enabled = j.value("enabled", c.enabled);
  c.abs_mode = j.value("abs_mode", c.abs_mode);
  c.iters_per_epoch_override =
      j.value("iters_per_epoch_override", c.iters_per_epoch_override);
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    c.encoder.enabled = e.value("enabled", c.encoder.enabled);
    c.encoder.alpha0 = e.value("alpha0", c.encoder.alpha0);
    c.encoder.gamma = e.value("gamma", c.encoder.gamma);
  }
  if (j.contains("decoder")) {
    const auto& d = j.at("decoder");
    c.decoder.enabled = d.value("enabled", c.decoder.enabled);
    c.decoder.alpha0 = d.value("alpha0", c.decoder.alpha0);
    c.decoder.gamma = d.value("gamma", c.decoder.gamma);
  }
  return c;
}

namespace {

Var group_loss(const std::vector<Var>& student, const std::vector<Var>& teacher,
               bool abs_mode) {
  if (student.size() != teacher.size())
    fail(ErrorCode::kInvalidShape, "student/teacher site count mismatch");
  Var acc;
  for (size_t j = 0; j < student.size(); ++j) {
    Var ms = attention_map(student[j], abs_mode);
    Var mt = attention_map(teacher[j].detach(), abs_mode);
    Var term = attention_loss_term(ms, mt);
    acc = acc.defined() ? ops::add(acc, term) : term;
  }
  return acc;
}

}  // namespace

KdLosses kd_attention_losses(const std::vector<Var>& student_enc,
                             const std::vector<Var>& teacher_enc,
                             const std::vector<Var>& student_dec,
                             const std::vector<Var>& teacher_dec,
                             const KdConfig& cfg, int64_t epoch_k) {
  KdLosses out;
  out.total = Var(Tensor::scalar(0.0));
  if (!cfg.enabled) return out;
  if (cfg.encoder.enabled && !student_enc.empty()) {
    Var enc = group_loss(student_enc, teacher_enc, cfg.abs_mode);
    out.encoder_raw = enc.item();
    out.alpha_encoder = decay_weight(cfg.encoder.alpha0, cfg.encoder.gamma, epoch_k);
    out.total = ops::add(out.total, ops::mul_scalar(enc, out.alpha_encoder));
  }
  if (cfg.decoder.enabled && !student_dec.empty()) {
    Var dec = group_loss(student_dec, teacher_dec, cfg.abs_mode);
    out.decoder_raw = dec.item();
    out.alpha_decoder = decay_weight(cfg.decoder.alpha0, cfg.decoder.gamma, epoch_k);
    out.total = ops::add(out.total, ops::mul_scalar(dec, out.alpha_decoder));
  }
  return out;
}

}  // namespace rtb
