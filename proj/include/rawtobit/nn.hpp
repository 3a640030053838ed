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

#ifndef RAWTOBIT_NN_HPP_
#define RAWTOBIT_NN_HPP_

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rawtobit/autograd.hpp"

namespace rtb {

// Parameter container with hierarchical names for checkpointing.
class Module {
 public:
  virtual ~Module() = default;
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  std::vector<std::pair<std::string, Var>> named_parameters() const;
  std::vector<Var> parameters() const;
  void set_requires_grad(bool rg);
  void zero_grad();

  // Sum over parameters of value bytes, used by frozen-weights checks.
  double parameter_checksum() const;

 protected:
  Var& register_param(const std::string& name, Var v);
  void register_module(const std::string& name, Module* m);

 private:
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Var>>* out) const;
  std::vector<std::pair<std::string, Var>> params_;
  std::vector<std::pair<std::string, Module*>> children_;
};

class Conv2d : public Module {
 public:
  Conv2d(int cin, int cout, int k, int stride, int pad, Rng& rng,
         bool with_bias = true);
  Var forward(const Var& x) const;
  Var weight, bias;
  int stride, pad;
};

class ConvTranspose2d : public Module {
 public:
  ConvTranspose2d(int cin, int cout, int k, int stride, int pad, int out_pad,
                  Rng& rng, bool with_bias = true);
  Var forward(const Var& x) const;
  Var weight, bias;  // weight: [cin, cout, k, k]
  int stride, pad, out_pad;
};

// Type-A masked convolution: the kernel is zeroed at the centre and all
// raster-later taps, so output (i,j) sees only already-decoded positions.
class MaskedConv2d : public Module {
 public:
  MaskedConv2d(int cin, int cout, int k, Rng& rng);
  Var forward(const Var& x) const;
  const Tensor& mask() const { return mask_; }
  Var weight, bias;
  int pad;

 private:
  Tensor mask_;
};

// Generalized divisive normalization. Effective parameters are derived from
// unconstrained storage: beta = beta_min + beta_raw^2, gamma = gamma_raw^2.
// Inverse mode multiplies by the norm pool instead of dividing.
class Gdn : public Module {
 public:
  static constexpr double kBetaMin = 1e-6;
  Gdn(int channels, bool inverse);
  Var forward(const Var& x) const;
  Var effective_beta() const;
  Var effective_gamma() const;  // [C,C,1,1]
  Var beta_raw, gamma_raw;
  bool inverse;
  int channels;
};

// gdn core on explicit effective parameters (beta: [C], gamma: [C,C,1,1]).
Var gdn_eval(const Var& x, const Var& beta, const Var& gamma, bool inverse);

// Residual channel attention block: conv-ReLU-conv, squeeze gate, residual.
class Rcab : public Module {
 public:
  Rcab(int channels, int reduction, Rng& rng);
  Var forward(const Var& x) const;
  std::unique_ptr<Conv2d> conv1, conv2, fc1, fc2;
};

class Rcag : public Module {
 public:
  Rcag(int channels, int num_blocks, int reduction, Rng& rng);
  Var forward(const Var& x) const;
  std::vector<std::unique_ptr<Rcab>> blocks;
};

// Adam with step learning-rate schedule support and global-norm clipping.
class Adam {
 public:
  Adam(std::vector<Var> params, double lr);
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  double clip_global_norm(double max_norm);
  void step();
  void zero_grad();

  // Exposes moment state for checkpointing.
  std::vector<Tensor>& m_state() { return m_; }
  std::vector<Tensor>& v_state() { return v_; }
  int64_t& step_count() { return t_; }

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
};

}  // namespace rtb

#endif  // RAWTOBIT_NN_HPP_
